#include "upright/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace upright {
namespace {

constexpr double kParallelEps = 1e-15;   // triangle determinant cutoff
constexpr double kBaryEps = 1e-12;       // inclusive bound: rays through vertices/edges hit
constexpr double kNearClip = 1e-9;

struct BvhNode {
    Aabb box;
    int left = -1;
    int right = -1;
    int begin = 0;  // triangle index range for leaves
    int end = 0;
};

struct Bvh {
    std::vector<BvhNode> nodes;
    std::vector<int> order;  // triangle indices, partitioned per leaf
};

Aabb triangle_bounds(const TriMesh& mesh, int tri) {
    const auto& f = mesh.faces[static_cast<std::size_t>(tri)];
    Aabb box;
    box.min = box.max = mesh.vertices[static_cast<std::size_t>(f[0])];
    for (int k = 1; k < 3; ++k) {
        const Vec3& v = mesh.vertices[static_cast<std::size_t>(f[k])];
        box.min = {std::min(box.min.x, v.x), std::min(box.min.y, v.y), std::min(box.min.z, v.z)};
        box.max = {std::max(box.max.x, v.x), std::max(box.max.y, v.y), std::max(box.max.z, v.z)};
    }
    return box;
}

Aabb merged_box(const Aabb& a, const Aabb& b) {
    Aabb box;
    box.min = {std::min(a.min.x, b.min.x), std::min(a.min.y, b.min.y), std::min(a.min.z, b.min.z)};
    box.max = {std::max(a.max.x, b.max.x), std::max(a.max.y, b.max.y), std::max(a.max.z, b.max.z)};
    return box;
}

int build_node(Bvh& bvh, const TriMesh& mesh, const std::vector<Vec3>& centroids,
               int begin, int end) {
    BvhNode node;
    node.box = triangle_bounds(mesh, bvh.order[static_cast<std::size_t>(begin)]);
    for (int i = begin + 1; i < end; ++i)
        node.box = merged_box(node.box, triangle_bounds(mesh, bvh.order[static_cast<std::size_t>(i)]));

    const int count = end - begin;
    if (count <= 4) {
        node.begin = begin;
        node.end = end;
        bvh.nodes.push_back(node);
        return static_cast<int>(bvh.nodes.size()) - 1;
    }

    Aabb cbox;
    cbox.min = cbox.max = centroids[static_cast<std::size_t>(bvh.order[static_cast<std::size_t>(begin)])];
    for (int i = begin + 1; i < end; ++i) {
        const Vec3& c = centroids[static_cast<std::size_t>(bvh.order[static_cast<std::size_t>(i)])];
        cbox.min = {std::min(cbox.min.x, c.x), std::min(cbox.min.y, c.y), std::min(cbox.min.z, c.z)};
        cbox.max = {std::max(cbox.max.x, c.x), std::max(cbox.max.y, c.y), std::max(cbox.max.z, c.z)};
    }
    const Vec3 extent = cbox.max - cbox.min;
    int axis = 0;
    if (extent.y > extent.x) axis = 1;
    if (extent.z > extent[axis]) axis = 2;

    const int mid = begin + count / 2;
    std::nth_element(bvh.order.begin() + begin, bvh.order.begin() + mid, bvh.order.begin() + end,
                     [&](int a, int b) {
                         const Vec3& ca = centroids[static_cast<std::size_t>(a)];
                         const Vec3& cb = centroids[static_cast<std::size_t>(b)];
                         if (ca[axis] != cb[axis]) return ca[axis] < cb[axis];
                         return a < b;  // deterministic total order
                     });

    const int node_index = static_cast<int>(bvh.nodes.size());
    bvh.nodes.push_back(node);  // placeholder, children appended after
    const int left = build_node(bvh, mesh, centroids, begin, mid);
    const int right = build_node(bvh, mesh, centroids, mid, end);
    bvh.nodes[static_cast<std::size_t>(node_index)].left = left;
    bvh.nodes[static_cast<std::size_t>(node_index)].right = right;
    return node_index;
}

Bvh build_bvh(const TriMesh& mesh) {
    Bvh bvh;
    const int n = static_cast<int>(mesh.faces.size());
    if (n == 0) return bvh;
    bvh.order.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) bvh.order[static_cast<std::size_t>(i)] = i;
    std::vector<Vec3> centroids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto& f = mesh.faces[static_cast<std::size_t>(i)];
        centroids[static_cast<std::size_t>(i)] =
            (mesh.vertices[static_cast<std::size_t>(f[0])] +
             mesh.vertices[static_cast<std::size_t>(f[1])] +
             mesh.vertices[static_cast<std::size_t>(f[2])]) / 3.0;
    }
    bvh.nodes.reserve(static_cast<std::size_t>(2 * n));
    build_node(bvh, mesh, centroids, 0, n);
    return bvh;
}

bool hits_box(const Aabb& box, const Vec3& orig, const Vec3& inv_dir, double t_best) {
    double t0 = 0.0;
    double t1 = t_best;
    for (int a = 0; a < 3; ++a) {
        const double lo = (box.min[a] - orig[a]) * inv_dir[a];
        const double hi = (box.max[a] - orig[a]) * inv_dir[a];
        t0 = std::max(t0, std::min(lo, hi));
        t1 = std::min(t1, std::max(lo, hi));
    }
    return t0 <= t1;
}

// Moller-Trumbore with inclusive barycentric bounds so rays passing exactly
// through a shared vertex or edge still register on one of the triangles.
bool hit_triangle(const Vec3& orig, const Vec3& dir, const Vec3& a, const Vec3& b,
                  const Vec3& c, double& t_out) {
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 p = dir.cross(e2);
    const double det = e1.dot(p);
    if (std::abs(det) < kParallelEps) return false;
    const double inv = 1.0 / det;
    const Vec3 s = orig - a;
    const double u = s.dot(p) * inv;
    if (u < -kBaryEps || u > 1.0 + kBaryEps) return false;
    const Vec3 q = s.cross(e1);
    const double v = dir.dot(q) * inv;
    if (v < -kBaryEps || u + v > 1.0 + kBaryEps) return false;
    const double t = e2.dot(q) * inv;
    if (t <= kNearClip) return false;
    t_out = t;
    return true;
}

double nearest_hit(const TriMesh& mesh, const Bvh& bvh, const Vec3& orig, const Vec3& dir) {
    if (bvh.nodes.empty()) return -1.0;
    const Vec3 inv_dir{1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z};
    double best = std::numeric_limits<double>::infinity();
    int stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const BvhNode& node = bvh.nodes[static_cast<std::size_t>(stack[--top])];
        if (!hits_box(node.box, orig, inv_dir, best)) continue;
        if (node.left < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                const auto& f = mesh.faces[static_cast<std::size_t>(bvh.order[static_cast<std::size_t>(i)])];
                double t = 0.0;
                if (hit_triangle(orig, dir,
                                 mesh.vertices[static_cast<std::size_t>(f[0])],
                                 mesh.vertices[static_cast<std::size_t>(f[1])],
                                 mesh.vertices[static_cast<std::size_t>(f[2])], t))
                    best = std::min(best, t);
            }
        } else {
            stack[top++] = node.left;
            stack[top++] = node.right;
        }
    }
    return std::isfinite(best) ? best : -1.0;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const std::uint8_t* p) {
    const std::uint32_t bits = get_u32(p);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

constexpr char kMagic[12] = {'U', 'P', 'R', 'I', 'G', 'H', 'T', 'D', 'E', 'P', 'T', 'H'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

Camera::Camera(const Vec3& position_, const Vec3& target_, const Vec3& up_hint,
               double fov_deg_)
    : position(position_), target(target_), fov_deg(fov_deg_) {
    if (!(fov_deg > 10.0 && fov_deg < 120.0))
        throw std::invalid_argument("camera fov must lie in (10, 120) degrees");
    const Vec3 view = target - position;
    if (view.norm() < 1e-12)
        throw std::invalid_argument("camera position and target coincide");
    forward = view.normalized();
    const Vec3 side = forward.cross(up_hint);
    if (side.norm() < 1e-9)
        throw std::invalid_argument("camera up hint is parallel to the view direction");
    right = side.normalized();
    up = right.cross(forward);
}

Vec3 Camera::ray_dir(int ix, int iy) const {
    const double tan_half = std::tan(radians(fov_deg) * 0.5);
    const double u = (2.0 * (ix + 0.5) / kDepthRes - 1.0) * tan_half;
    const double v = (1.0 - 2.0 * (iy + 0.5) / kDepthRes) * tan_half;
    return (forward + right * u + up * v).normalized();
}

bool DepthImage::all_background() const {
    for (std::uint8_t b : background)
        if (b == 0) return false;
    return true;
}

CameraRig rig_cameras(int count, double radius) {
    if (count < 1 || count > 4)
        throw std::invalid_argument("rig supports 1 to 4 cameras");
    if (!(radius > 0.0))
        throw std::invalid_argument("rig radius must be positive");
    const Vec3 origin{0, 0, 0};
    const Vec3 z{0, 0, 1};
    const Vec3 spots[4] = {
        {-radius, 0, 0},  // left
        {0, -radius, 0},  // front
        {radius, 0, 0},   // right
        {0, radius, 0},   // back
    };
    CameraRig rig;
    for (int i = 0; i < count; ++i) rig.cameras.emplace_back(spots[i], origin, z);
    return rig;
}

std::vector<Camera> baseline_cameras(double radius) {
    if (!(radius > 0.0))
        throw std::invalid_argument("baseline radius must be positive");
    const Vec3 origin{0, 0, 0};
    const Vec3 z{0, 0, 1};
    const Vec3 y{0, 1, 0};
    std::vector<Camera> cams;
    cams.emplace_back(Vec3{radius, 0, 0}, origin, z);
    cams.emplace_back(Vec3{-radius, 0, 0}, origin, z);
    cams.emplace_back(Vec3{0, radius, 0}, origin, z);
    cams.emplace_back(Vec3{0, -radius, 0}, origin, z);
    cams.emplace_back(Vec3{0, 0, radius}, origin, y);
    cams.emplace_back(Vec3{0, 0, -radius}, origin, y);
    return cams;
}

std::vector<DepthImage> render_depth(const TriMesh& world_mesh,
                                     const std::vector<Camera>& cameras) {
    const Bvh bvh = build_bvh(world_mesh);
    std::vector<DepthImage> images;
    images.reserve(cameras.size());
    for (std::size_t ci = 0; ci < cameras.size(); ++ci) {
        const Camera& cam = cameras[ci];
        DepthImage img;
        img.camera_id = static_cast<std::uint32_t>(ci);
        img.pixels.assign(kDepthPixelCount, 0.5);
        img.background.assign(kDepthPixelCount, 1);

        std::vector<double> raw(kDepthPixelCount, -1.0);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (int iy = 0; iy < kDepthRes; ++iy) {
            for (int ix = 0; ix < kDepthRes; ++ix) {
                const double t = nearest_hit(world_mesh, bvh, cam.position, cam.ray_dir(ix, iy));
                if (t > 0.0) {
                    raw[static_cast<std::size_t>(DepthImage::index(ix, iy))] = t;
                    lo = std::min(lo, t);
                    hi = std::max(hi, t);
                }
            }
        }
        if (hi >= lo) {  // at least one hit
            img.raw_min = lo;
            img.raw_max = hi;
            const double span = hi - lo;
            for (int i = 0; i < kDepthPixelCount; ++i) {
                const double t = raw[static_cast<std::size_t>(i)];
                if (t < 0.0) continue;
                img.background[static_cast<std::size_t>(i)] = 0;
                img.pixels[static_cast<std::size_t>(i)] = span > 0.0 ? (t - lo) / span - 0.5 : 0.0;
            }
        }
        images.push_back(std::move(img));
    }
    return images;
}

std::vector<DepthImage> render_depth(const ObjectModel& object, const Rotation& r,
                                     const Vec3& t, const CameraRig& rig) {
    return render_depth(transformed(object.mesh, r, t), rig.cameras);
}

PointCloud depth_to_point_cloud(const DepthImage& img, const Camera& camera) {
    PointCloud cloud;
    const double span = img.raw_max - img.raw_min;
    for (int iy = 0; iy < kDepthRes; ++iy) {
        for (int ix = 0; ix < kDepthRes; ++ix) {
            if (img.is_background(ix, iy)) continue;
            const double depth = img.raw_min + (img.at(ix, iy) + 0.5) * span;
            cloud.points.push_back(camera.position + camera.ray_dir(ix, iy) * depth);
        }
    }
    return cloud;
}

std::vector<std::uint8_t> serialize_depth_image(const DepthImage& img) {
    std::vector<std::uint8_t> out;
    out.reserve(kDepthImageBytes);
    out.insert(out.end(), kMagic, kMagic + 12);
    put_u32(out, kVersion);
    put_u32(out, img.camera_id);
    put_f32(out, static_cast<float>(img.raw_min));
    put_f32(out, static_cast<float>(img.raw_max));
    for (int i = 0; i < kDepthPixelCount; ++i)
        put_f32(out, static_cast<float>(img.pixels[static_cast<std::size_t>(i)]));
    for (int byte = 0; byte < kDepthPixelCount / 8; ++byte) {
        std::uint8_t bits = 0;
        for (int bit = 0; bit < 8; ++bit)
            if (img.background[static_cast<std::size_t>(8 * byte + bit)] != 0)
                bits = static_cast<std::uint8_t>(bits | (1u << bit));
        out.push_back(bits);
    }
    return out;
}

DepthImage deserialize_depth_image(const std::uint8_t* data, std::size_t size) {
    if (size != kDepthImageBytes)
        throw std::runtime_error("depth image: expected " + std::to_string(kDepthImageBytes) +
                                 " bytes, got " + std::to_string(size));
    if (std::memcmp(data, kMagic, 12) != 0)
        throw std::runtime_error("depth image: bad magic");
    if (get_u32(data + 12) != kVersion)
        throw std::runtime_error("depth image: unsupported version " +
                                 std::to_string(get_u32(data + 12)));
    DepthImage img;
    img.camera_id = get_u32(data + 16);
    img.raw_min = get_f32(data + 20);
    img.raw_max = get_f32(data + 24);
    img.pixels.resize(kDepthPixelCount);
    for (int i = 0; i < kDepthPixelCount; ++i)
        img.pixels[static_cast<std::size_t>(i)] = get_f32(data + 28 + 4 * i);
    img.background.resize(kDepthPixelCount);
    const std::uint8_t* mask = data + 28 + 4 * kDepthPixelCount;
    for (int i = 0; i < kDepthPixelCount; ++i)
        img.background[static_cast<std::size_t>(i)] = (mask[i / 8] >> (i % 8)) & 1u;
    return img;
}

void save_depth_image(const DepthImage& img, const std::string& path) {
    const std::vector<std::uint8_t> bytes = serialize_depth_image(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

DepthImage load_depth_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize_depth_image(bytes.data(), bytes.size());
}

}  // namespace upright
