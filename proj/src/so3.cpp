#include "upright/so3.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace upright {

namespace {

constexpr double kTinyNorm = 1e-12;
constexpr double kRotationTol = 1e-9;

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

Vec3 Vec3::normalized() const {
    const double n = norm();
    if (n < kTinyNorm) throw std::invalid_argument("Vec3::normalized: near-zero vector");
    return *this / n;
}

Mat3 Mat3::from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2) {
    Mat3 m;
    m.a = {r0.x, r0.y, r0.z, r1.x, r1.y, r1.z, r2.x, r2.y, r2.z};
    return m;
}

Mat3 Mat3::from_cols(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
    Mat3 m;
    m.a = {c0.x, c1.x, c2.x, c0.y, c1.y, c2.y, c0.z, c1.z, c2.z};
    return m;
}

Mat3 Mat3::operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r(i, j) = (*this)(i, 0) * o(0, j) + (*this)(i, 1) * o(1, j) + (*this)(i, 2) * o(2, j);
    return r;
}

Mat3 Mat3::operator+(const Mat3& o) const {
    Mat3 r;
    for (std::size_t i = 0; i < 9; ++i) r.a[i] = a[i] + o.a[i];
    return r;
}

Mat3 Mat3::operator-(const Mat3& o) const {
    Mat3 r;
    for (std::size_t i = 0; i < 9; ++i) r.a[i] = a[i] - o.a[i];
    return r;
}

Mat3 Mat3::operator*(double s) const {
    Mat3 r;
    for (std::size_t i = 0; i < 9; ++i) r.a[i] = a[i] * s;
    return r;
}

Mat3 Mat3::transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
}

double Mat3::det() const {
    const auto& m = *this;
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

double orthonormality_error(const Mat3& m) {
    const Mat3 g = m * m.transposed();
    double err = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            err = std::max(err, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
    return err;
}

Rotation Rotation::from_matrix(const Mat3& m) {
    if (orthonormality_error(m) > kRotationTol)
        throw std::invalid_argument("Rotation::from_matrix: matrix is not orthonormal");
    if (std::abs(m.det() - 1.0) > kRotationTol)
        throw std::invalid_argument("Rotation::from_matrix: determinant is not +1");
    return Rotation(m);
}

Rotation Rotation::from_matrix_renormalized(const Mat3& m) {
    const Vec3 c0 = m.col(0).normalized();
    Vec3 c1 = m.col(1) - c0 * c0.dot(m.col(1));
    c1 = c1.normalized();
    const Vec3 c2 = c0.cross(c1);
    return from_matrix(Mat3::from_cols(c0, c1, c2));
}

Rotation from_axis_angle(const Vec3& axis, double angle) {
    const Vec3 u = axis.normalized();
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double t = 1.0 - c;
    Mat3 m;
    m.a = {c + u.x * u.x * t,       u.x * u.y * t - u.z * s, u.x * u.z * t + u.y * s,
           u.y * u.x * t + u.z * s, c + u.y * u.y * t,       u.y * u.z * t - u.x * s,
           u.z * u.x * t - u.y * s, u.z * u.y * t + u.x * s, c + u.z * u.z * t};
    return Rotation::from_matrix(m);
}

Rotation from_axis_angle(const AxisAngle& aa) { return from_axis_angle(aa.axis, aa.angle); }

AxisAngle to_axis_angle(const Rotation& r) {
    const Quaternion q = to_quaternion(r);
    const double vec_norm = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
    AxisAngle aa;
    aa.angle = 2.0 * std::atan2(vec_norm, q.w);
    if (vec_norm < kTinyNorm) {
        aa.axis = {1, 0, 0};
        aa.angle = 0.0;
    } else {
        aa.axis = Vec3{q.x, q.y, q.z} / vec_norm;
    }
    return aa;
}

Rotation rotation_about_z(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Mat3 m;
    m.a = {c, -s, 0, s, c, 0, 0, 0, 1};
    return Rotation::from_matrix(m);
}

double rotation_angle(const Rotation& r) {
    const Mat3& m = r.matrix();
    const double c = clamp_unit((m.trace() - 1.0) * 0.5);
    if (c > 0.9) {
        // acos near +1 only resolves angles down to sqrt(eps); the chordal
        // identity |R - I|_F = 2*sqrt(2)*sin(theta/2) stays exact. Summing
        // each off-diagonal pair together keeps the total invariant under
        // transpose, so distances come out exactly symmetric.
        double f2 = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double d = m(i, i) - 1.0;
            f2 += d * d;
        }
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) f2 += m(i, j) * m(i, j) + m(j, i) * m(j, i);
        return 2.0 * std::asin(std::min(1.0, std::sqrt(f2) / (2.0 * std::sqrt(2.0))));
    }
    if (c < -0.9) {
        // Same conditioning problem at -1; the quaternion scalar part is
        // computed from off-diagonal differences and stays accurate.
        const Quaternion q = to_quaternion(r);
        const double vn = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
        return 2.0 * std::atan2(vn, q.w);
    }
    return std::acos(c);
}

double geodesic_distance(const Rotation& a, const Rotation& b) {
    return rotation_angle(a * b.inverse());
}

Rotation ground_truth_rotation(const Vec3& upright_world) {
    const Vec3 v = upright_world.normalized();
    const Vec3 zhat{0, 0, 1};
    const double angle = std::acos(clamp_unit(v.dot(zhat)));
    const Vec3 cross = v.cross(zhat);
    const double cn = cross.norm();
    if (cn < 1e-9) {
        if (v.dot(zhat) > 0.0) return Rotation::identity();
        return from_axis_angle(Vec3{1, 0, 0}, angle);  // antiparallel: x-hat by convention
    }
    return from_axis_angle(cross / cn, angle);
}

SixD to_sixd(const Rotation& r) {
    const Mat3& m = r.matrix();
    SixD s;
    s.v = {m(0, 0), m(1, 0), m(2, 0), m(0, 1), m(1, 1), m(2, 1)};
    return s;
}

Rotation from_sixd(const SixD& s) {
    const Vec3 a1{s.v[0], s.v[1], s.v[2]};
    const Vec3 a2{s.v[3], s.v[4], s.v[5]};
    const double n1 = a1.norm();
    if (n1 < 1e-9) throw std::invalid_argument("from_sixd: first column is near zero");
    const Vec3 b1 = a1 / n1;
    Vec3 b2 = a2 - b1 * b1.dot(a2);
    const double n2 = b2.norm();
    if (n2 < 1e-9) throw std::invalid_argument("from_sixd: columns are parallel");
    b2 = b2 / n2;
    const Vec3 b3 = b1.cross(b2);
    return Rotation::from_matrix(Mat3::from_cols(b1, b2, b3));
}

Quaternion to_quaternion(const Rotation& r) {
    // Shepperd's method: branch on the largest of (trace, diagonal entries).
    const Mat3& m = r.matrix();
    const double tr = m.trace();
    Quaternion q;
    if (tr > 0.0) {
        const double s = std::sqrt(tr + 1.0) * 2.0;
        q.w = 0.25 * s;
        q.x = (m(2, 1) - m(1, 2)) / s;
        q.y = (m(0, 2) - m(2, 0)) / s;
        q.z = (m(1, 0) - m(0, 1)) / s;
    } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
        const double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2.0;
        q.w = (m(2, 1) - m(1, 2)) / s;
        q.x = 0.25 * s;
        q.y = (m(0, 1) + m(1, 0)) / s;
        q.z = (m(0, 2) + m(2, 0)) / s;
    } else if (m(1, 1) > m(2, 2)) {
        const double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2.0;
        q.w = (m(0, 2) - m(2, 0)) / s;
        q.x = (m(0, 1) + m(1, 0)) / s;
        q.y = 0.25 * s;
        q.z = (m(1, 2) + m(2, 1)) / s;
    } else {
        const double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2.0;
        q.w = (m(1, 0) - m(0, 1)) / s;
        q.x = (m(0, 2) + m(2, 0)) / s;
        q.y = (m(1, 2) + m(2, 1)) / s;
        q.z = 0.25 * s;
    }
    return canonicalized(q);
}

Quaternion canonicalized(const Quaternion& q) {
    const double n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
    if (n < kTinyNorm) throw std::invalid_argument("canonicalized: near-zero quaternion");
    Quaternion r{q.w / n, q.x / n, q.y / n, q.z / n};
    const bool flip = r.w < 0.0 ||
                      (r.w == 0.0 && (r.x < 0.0 || (r.x == 0.0 && (r.y < 0.0 || (r.y == 0.0 && r.z < 0.0)))));
    if (flip) {
        r.w = -r.w;
        r.x = -r.x;
        r.y = -r.y;
        r.z = -r.z;
    }
    return r;
}

Rotation from_quaternion(const Quaternion& q_in) {
    const Quaternion q = canonicalized(q_in);
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    Mat3 m;
    m.a = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
           2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
           2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
    return Rotation::from_matrix(m);
}

EulerZYX to_euler_zyx(const Rotation& r) {
    const Mat3& m = r.matrix();
    EulerZYX e;
    e.pitch = std::asin(clamp_unit(-m(2, 0)));
    if (std::abs(std::abs(e.pitch) - M_PI / 2.0) < 1e-6) {
        // Gimbal lock: roll is absorbed into yaw by convention.
        e.gimbal_lock = true;
        e.roll = 0.0;
        e.yaw = std::atan2(-m(0, 1), m(1, 1));
    } else {
        e.roll = std::atan2(m(2, 1), m(2, 2));
        e.yaw = std::atan2(m(1, 0), m(0, 0));
    }
    return e;
}

Rotation from_euler_zyx(const EulerZYX& e) {
    const Rotation rz = rotation_about_z(e.yaw);
    const Rotation ry = from_axis_angle(Vec3{0, 1, 0}, e.pitch);
    const Rotation rx = from_axis_angle(Vec3{1, 0, 0}, e.roll);
    return rz * ry * rx;
}

SwingTwist swing_twist_z(const Rotation& r) {
    const Quaternion q = to_quaternion(r);
    SwingTwist st;
    if (std::abs(q.w) < kTinyNorm && std::abs(q.z) < kTinyNorm) {
        // Pure 180-degree swing: no twist component.
        st.twist = 0.0;
        st.tilt = r;
        return st;
    }
    st.twist = 2.0 * std::atan2(q.z, q.w);
    st.tilt = r * rotation_about_z(-st.twist);
    return st;
}

Vec3 random_unit_vector(Rng& rng) {
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, 2.0 * M_PI);
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(phi), s * std::sin(phi), z};
}

Rotation random_rotation(Rng& rng) {
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    const double u3 = rng.uniform();
    const double a = std::sqrt(1.0 - u1);
    const double b = std::sqrt(u1);
    Quaternion q;
    q.x = a * std::sin(2.0 * M_PI * u2);
    q.y = a * std::cos(2.0 * M_PI * u2);
    q.z = b * std::sin(2.0 * M_PI * u3);
    q.w = b * std::cos(2.0 * M_PI * u3);
    return from_quaternion(q);
}

std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << "(" << v.x << ", " << v.y << ", " << v.z << ")";
}

}  // namespace upright
