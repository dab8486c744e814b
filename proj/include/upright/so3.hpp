#pragma once

#include <array>
#include <cmath>
#include <iosfwd>

#include "upright/rng.hpp"

namespace upright {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }

    /// Unit vector in the same direction. Throws for near-zero input.
    Vec3 normalized() const;

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> a{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return Mat3{}; }
    static Mat3 from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2);
    static Mat3 from_cols(const Vec3& c0, const Vec3& c1, const Vec3& c2);

    double operator()(int r, int c) const { return a[static_cast<std::size_t>(3 * r + c)]; }
    double& operator()(int r, int c) { return a[static_cast<std::size_t>(3 * r + c)]; }

    Vec3 row(int r) const { return {(*this)(r, 0), (*this)(r, 1), (*this)(r, 2)}; }
    Vec3 col(int c) const { return {(*this)(0, c), (*this)(1, c), (*this)(2, c)}; }

    Mat3 operator*(const Mat3& o) const;
    Vec3 operator*(const Vec3& v) const {
        return {row(0).dot(v), row(1).dot(v), row(2).dot(v)};
    }
    Mat3 operator+(const Mat3& o) const;
    Mat3 operator-(const Mat3& o) const;
    Mat3 operator*(double s) const;

    Mat3 transposed() const;
    double trace() const { return a[0] + a[4] + a[8]; }
    double det() const;
};

/// Max absolute entry of R*R^T - I; zero for a perfectly orthonormal matrix.
double orthonormality_error(const Mat3& m);

/// Proper rotation. Construction through from_matrix enforces orthonormality
/// within 1e-9 and det within 1e-9 of +1; composition stays unchecked because
/// products of valid rotations drift far slower than the tolerance.
class Rotation {
public:
    Rotation() = default;

    static Rotation identity() { return Rotation(); }

    /// Validates and adopts the matrix. Throws std::invalid_argument if the
    /// matrix is not a proper rotation within tolerance.
    static Rotation from_matrix(const Mat3& m);

    /// Gram-Schmidt re-orthonormalization of a numerically degraded matrix,
    /// then the same validation.
    static Rotation from_matrix_renormalized(const Mat3& m);

    const Mat3& matrix() const { return m_; }

    Vec3 operator*(const Vec3& v) const { return m_ * v; }
    Rotation operator*(const Rotation& o) const { return Rotation(m_ * o.m_); }

    Rotation inverse() const { return Rotation(m_.transposed()); }
    double trace() const { return m_.trace(); }

private:
    explicit Rotation(const Mat3& m) : m_(m) {}
    Mat3 m_;
};

struct AxisAngle {
    Vec3 axis{1, 0, 0};  // unit
    double angle = 0.0;  // radians
};

/// First two columns of the rotation matrix, column-major:
/// {r00, r10, r20, r01, r11, r21}.
struct SixD {
    std::array<double, 6> v{1, 0, 0, 0, 1, 0};
};

/// Unit quaternion, canonical sign w >= 0.
struct Quaternion {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// Intrinsic Z-Y-X: R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct EulerZYX {
    double roll = 0.0;
    double pitch = 0.0;
    double yaw = 0.0;
    bool gimbal_lock = false;
};

/// Decomposition R = tilt * Rz(twist); tilt carries no rotation about z.
struct SwingTwist {
    double twist = 0.0;
    Rotation tilt;
};

/// Rodrigues formula. The axis is normalized defensively; throws for a
/// near-zero axis.
Rotation from_axis_angle(const Vec3& axis, double angle);
Rotation from_axis_angle(const AxisAngle& aa);

/// Inverse of Rodrigues; angle in [0, pi]. Identity maps to axis x-hat.
AxisAngle to_axis_angle(const Rotation& r);

/// Rotation about +z by the given angle.
Rotation rotation_about_z(double angle);

/// Rotation angle of r, i.e. geodesic distance to identity, in [0, pi].
double rotation_angle(const Rotation& r);

/// Geodesic (angular) distance between two rotations, in [0, pi].
double geodesic_distance(const Rotation& a, const Rotation& b);

/// The shortest rotation R with R * normalize(v) = z-hat.
/// Near-upright input (cross norm below 1e-9, positive z) gives identity;
/// near-antiparallel input rotates about x-hat by convention.
/// Throws for a near-zero vector.
Rotation ground_truth_rotation(const Vec3& upright_world);

SixD to_sixd(const Rotation& r);

/// Gram-Schmidt decode. Throws std::invalid_argument when the first column
/// is near zero or the second is parallel to the first.
Rotation from_sixd(const SixD& s);

Quaternion to_quaternion(const Rotation& r);

/// Normalizes the quaternion; throws for near-zero norm.
Rotation from_quaternion(const Quaternion& q);

/// Renormalize and flip sign to the canonical hemisphere (w >= 0).
Quaternion canonicalized(const Quaternion& q);

EulerZYX to_euler_zyx(const Rotation& r);
Rotation from_euler_zyx(const EulerZYX& e);

/// Swing-twist split about the world z axis.
SwingTwist swing_twist_z(const Rotation& r);

/// Uniform point on the unit sphere.
Vec3 random_unit_vector(Rng& rng);

/// Haar-uniform rotation (Shoemake's three-uniform quaternion method).
Rotation random_rotation(Rng& rng);

inline double degrees(double radians) { return radians * (180.0 / M_PI); }
inline double radians(double degrees) { return degrees * M_PI / 180.0; }

std::ostream& operator<<(std::ostream& os, const Vec3& v);

}  // namespace upright
