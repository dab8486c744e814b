#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "upright/cloud.hpp"
#include "upright/mesh.hpp"
#include "upright/objects.hpp"

namespace upright {

inline constexpr int kDepthRes = 64;
inline constexpr int kDepthPixelCount = kDepthRes * kDepthRes;

/// Pinhole depth camera. Square 64x64 image, vertical fov in degrees.
/// The basis is derived once: forward toward the target, right along
/// forward x up_hint, up completing the right-handed frame.
struct Camera {
    /// Throws std::invalid_argument when position == target, the up hint is
    /// parallel to the view direction, or fov is outside (10, 120) degrees.
    Camera(const Vec3& position, const Vec3& target, const Vec3& up_hint,
           double fov_deg = 60.0);

    Vec3 position;
    Vec3 target;
    double fov_deg;

    // orthonormal view basis, computed at construction
    Vec3 forward;
    Vec3 right;
    Vec3 up;

    /// Unit ray direction through the center of pixel (ix, iy);
    /// ix grows along `right`, iy downward (against `up`).
    Vec3 ray_dir(int ix, int iy) const;
};

/// Normalized depth image. Object pixels are min-max normalized to
/// [-0.5, 0.5] per image; background pixels hold +0.5 and background=1.
/// raw_min/raw_max are the metric depths (distance along the pixel ray, m)
/// mapped to -0.5/+0.5; both 0 for images with no object pixel.
struct DepthImage {
    std::uint32_t camera_id = 0;
    double raw_min = 0.0;
    double raw_max = 0.0;
    std::vector<double> pixels;              // 4096, row-major
    std::vector<std::uint8_t> background;    // 4096, 1 = background

    static int index(int ix, int iy) { return iy * kDepthRes + ix; }
    double at(int ix, int iy) const { return pixels[static_cast<std::size_t>(index(ix, iy))]; }
    bool is_background(int ix, int iy) const {
        return background[static_cast<std::size_t>(index(ix, iy))] != 0;
    }
    /// True when no pixel hit the object (out-of-frustum warning flag).
    bool all_background() const;
};

struct CameraRig {
    std::vector<Camera> cameras;
};

/// 1..4 cameras on the z=0 circle of the given radius around the origin,
/// added in left, front, right, back order (-x, -y, +x, +y), all aimed at
/// the origin with up hint z. Throws std::invalid_argument otherwise.
CameraRig rig_cameras(int count, double radius);

/// Six axis-aligned viewpoints (+x, -x, +y, -y, +z, -z) at the given radius,
/// aimed at the origin. Up hint is z except for the two z-axis views (y).
std::vector<Camera> baseline_cameras(double radius);

/// Ray-cast depth images of a world-frame mesh, one per camera, camera_id =
/// position in the list. Depth is the euclidean distance along the pixel ray
/// to the nearest triangle. An empty mesh (or one fully outside every
/// frustum) yields all-background images.
std::vector<DepthImage> render_depth(const TriMesh& world_mesh,
                                     const std::vector<Camera>& cameras);

/// Same, for an object posed with rotation r and translation t (x -> r*x + t).
std::vector<DepthImage> render_depth(const ObjectModel& object, const Rotation& r,
                                     const Vec3& t, const CameraRig& rig);

/// Unprojects the non-background pixels back to world points using the
/// stored raw range: p = camera.position + depth * ray_dir(ix, iy).
/// Normals are left empty. All-background images give an empty cloud.
PointCloud depth_to_point_cloud(const DepthImage& img, const Camera& camera);

/// Byte-exact image format (little endian):
///   offset  0: magic "UPRIGHTDEPTH" (12 bytes)
///   offset 12: u32 version (= 1)
///   offset 16: u32 camera_id
///   offset 20: f32 raw_min, f32 raw_max
///   offset 28: 4096 x f32 normalized pixels, row-major
///   offset 16412: 512-byte background mask, bit i of byte k = pixel 8k+i
///                 (LSB first), set = background
/// Total 16924 bytes.
inline constexpr std::size_t kDepthImageBytes = 16924;

std::vector<std::uint8_t> serialize_depth_image(const DepthImage& img);
/// Throws std::runtime_error on bad magic, version, or size.
DepthImage deserialize_depth_image(const std::uint8_t* data, std::size_t size);

void save_depth_image(const DepthImage& img, const std::string& path);
DepthImage load_depth_image(const std::string& path);

}  // namespace upright
