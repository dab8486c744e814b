#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "shapes.hpp"
#include "upright/render.hpp"

using namespace upright;

namespace {

double raw_depth_at(const DepthImage& img, int ix, int iy) {
    REQUIRE_FALSE(img.is_background(ix, iy));
    return img.raw_min + (img.at(ix, iy) + 0.5) * (img.raw_max - img.raw_min);
}

Camera front_camera() { return rig_cameras(2, 0.25).cameras[1]; }

}  // namespace

TEST_CASE("camera basis and validation") {
    const Camera cam = front_camera();
    CHECK(cam.position.y == doctest::Approx(-0.25));
    CHECK((cam.forward - Vec3{0, 1, 0}).norm() < 1e-12);
    CHECK((cam.right - Vec3{1, 0, 0}).norm() < 1e-12);
    CHECK((cam.up - Vec3{0, 0, 1}).norm() < 1e-12);

    // central 2x2 pixel block straddles the optical axis symmetrically
    const Vec3 d00 = cam.ray_dir(31, 31);
    const Vec3 d11 = cam.ray_dir(32, 32);
    CHECK((d00 + d11).normalized().dot(cam.forward) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(Camera(Vec3{0, 0, 0}, Vec3{0, 0, 0}, Vec3{0, 0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(Camera(Vec3{0, 0, 1}, Vec3{0, 0, 0}, Vec3{0, 0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(Camera(Vec3{0, -1, 0}, Vec3{0, 0, 0}, Vec3{0, 0, 1}, 9.0), std::invalid_argument);
    CHECK_THROWS_AS(Camera(Vec3{0, -1, 0}, Vec3{0, 0, 0}, Vec3{0, 0, 1}, 120.0), std::invalid_argument);
    CHECK_THROWS_AS(rig_cameras(0, 0.25), std::invalid_argument);
    CHECK_THROWS_AS(rig_cameras(5, 0.25), std::invalid_argument);

    const CameraRig rig = rig_cameras(4, 0.25);
    CHECK((rig.cameras[0].position - Vec3{-0.25, 0, 0}).norm() < 1e-12);  // left
    CHECK((rig.cameras[1].position - Vec3{0, -0.25, 0}).norm() < 1e-12);  // front
    CHECK((rig.cameras[2].position - Vec3{0.25, 0, 0}).norm() < 1e-12);   // right
    CHECK((rig.cameras[3].position - Vec3{0, 0.25, 0}).norm() < 1e-12);   // back
    for (int i = 0; i < 4; ++i) {
        const Vec3 a = rig.cameras[static_cast<std::size_t>(i)].forward;
        const Vec3 b = rig.cameras[static_cast<std::size_t>((i + 1) % 4)].forward;
        CHECK(std::abs(a.dot(b)) < 1e-12);  // orthogonal azimuths
    }
    CHECK(baseline_cameras(0.25).size() == 6);
}

TEST_CASE("sphere pole on a pixel ray reports the analytic depth") {
    const Camera cam = front_camera();
    const Vec3 d = cam.ray_dir(31, 31);
    const Vec3 center = cam.position + d * 0.25;
    // pole vertex faces the camera: R maps the mesh +z pole onto -d
    const Rotation pole_to_camera = ground_truth_rotation(-1.0 * d).inverse();
    const TriMesh sphere = testshapes::uv_sphere(0.05, 48, 96);
    const TriMesh world = transformed(sphere, pole_to_camera, center);

    const std::vector<DepthImage> imgs = render_depth(world, {cam});
    REQUIRE(imgs.size() == 1);
    CHECK(std::abs(raw_depth_at(imgs[0], 31, 31) - 0.20) <= 1e-6);
    // nothing in the scene is closer than the pole
    CHECK(imgs[0].raw_min == doctest::Approx(0.20).epsilon(1e-9));
}

TEST_CASE("sphere at the rig center matches the closed-form ray-sphere depth") {
    const Camera cam = front_camera();
    const TriMesh world = testshapes::uv_sphere(0.05, 48, 96);
    const std::vector<DepthImage> imgs = render_depth(world, {cam});

    const Vec3 d = cam.ray_dir(31, 31);
    const double b = cam.position.dot(d);
    const double t_exact = -b - std::sqrt(b * b - (cam.position.norm2() - 0.05 * 0.05));
    CHECK(std::abs(t_exact - 0.20) < 1e-3);
    // facet sagitta bounds the mesh-vs-sphere gap: r(1 - cos(pi/48)) ~ 1.1e-4
    CHECK(std::abs(raw_depth_at(imgs[0], 31, 31) - t_exact) <= 2e-4);
}

TEST_CASE("empty scene and out-of-frustum objects are all background") {
    const Camera cam = front_camera();

    SUBCASE("no object") {
        const std::vector<DepthImage> imgs = render_depth(TriMesh{}, {cam});
        CHECK(imgs[0].all_background());
        CHECK(imgs[0].raw_min == 0.0);
        CHECK(imgs[0].raw_max == 0.0);
        for (double p : imgs[0].pixels) CHECK(p == 0.5);
    }
    SUBCASE("object behind the camera") {
        const TriMesh world =
            transformed(testshapes::box(0.04, 0.04, 0.04), Rotation::identity(), {0, -0.6, 0});
        CHECK(render_depth(world, {cam})[0].all_background());
    }
    SUBCASE("object in frustum is seen") {
        CHECK_FALSE(render_depth(testshapes::box(0.04, 0.04, 0.04), {cam})[0].all_background());
    }
}

TEST_CASE("rotating the scene about the optical axis permutes the image") {
    const Camera cam = front_camera();
    const TriMesh box = testshapes::box(0.08, 0.05, 0.03);
    const Rotation r0 = from_axis_angle(Vec3{1, 2, 3}.normalized(), 0.7);
    const Rotation quarter = from_axis_angle(cam.forward, M_PI / 2.0);
    const Rotation r1 = quarter * r0;
    // rotate about the axis line through the camera: t' = c + quarter*(t - c)
    const Vec3 t1 = cam.position - quarter * cam.position;

    const DepthImage a = render_depth(transformed(box, r0, Vec3{0, 0, 0}), {cam})[0];
    const DepthImage b = render_depth(transformed(box, r1, t1), {cam})[0];

    CHECK(std::abs(a.raw_min - b.raw_min) < 1e-12);
    CHECK(std::abs(a.raw_max - b.raw_max) < 1e-12);
    int object_pixels = 0;
    for (int iy = 0; iy < kDepthRes; ++iy) {
        for (int ix = 0; ix < kDepthRes; ++ix) {
            // (right, up, forward) is left-handed, so a +90 degree world
            // rotation about forward turns the image by -90 degrees
            const int jx = 63 - iy;
            const int jy = ix;
            REQUIRE(a.is_background(ix, iy) == b.is_background(jx, jy));
            if (a.is_background(ix, iy)) continue;
            ++object_pixels;
            CHECK(std::abs(a.at(ix, iy) - b.at(jx, jy)) < 1e-9);
        }
    }
    CHECK(object_pixels > 100);
}

TEST_CASE("normalization pins the object range to [-0.5, 0.5]") {
    const Camera cam = front_camera();

    SUBCASE("angled box spans the full range") {
        const Rotation r = from_axis_angle(Vec3{1, 1, 0}.normalized(), 0.5);
        const DepthImage img = render_depth(transformed(testshapes::box(0.06, 0.06, 0.06), r, {0, 0, 0}), {cam})[0];
        double lo = 1.0, hi = -1.0;
        for (int i = 0; i < kDepthPixelCount; ++i) {
            if (img.background[static_cast<std::size_t>(i)] != 0) {
                CHECK(img.pixels[static_cast<std::size_t>(i)] == 0.5);
            } else {
                lo = std::min(lo, img.pixels[static_cast<std::size_t>(i)]);
                hi = std::max(hi, img.pixels[static_cast<std::size_t>(i)]);
            }
        }
        CHECK(lo == doctest::Approx(-0.5).epsilon(1e-12));
        CHECK(hi == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(img.raw_max > img.raw_min);
        CHECK(img.raw_min > 0.0);
    }

    SUBCASE("single-depth object maps to 0") {
        // one triangle small enough to cover exactly the (31,31) ray
        const Vec3 d = cam.ray_dir(31, 31);
        const double t_plane = -cam.position.y / d.y;  // y = 0 crossing
        const Vec3 c = cam.position + d * t_plane;
        TriMesh tri;
        tri.vertices = {c + Vec3{-0.0015, 0, -0.0015}, c + Vec3{0.0015, 0, -0.0015},
                        c + Vec3{0, 0, 0.0015}};
        tri.faces.push_back({0, 1, 2});
        const DepthImage img = render_depth(tri, {cam})[0];
        REQUIRE_FALSE(img.all_background());
        CHECK(img.raw_min == img.raw_max);
        CHECK(img.raw_min > 0.0);
        int hits = 0;
        for (int i = 0; i < kDepthPixelCount; ++i) {
            if (img.background[static_cast<std::size_t>(i)] != 0) continue;
            ++hits;
            CHECK(img.pixels[static_cast<std::size_t>(i)] == 0.0);
        }
        CHECK(hits == 1);
    }
}

TEST_CASE("depth image serialization is byte-exact and lossless") {
    const Camera cam = front_camera();
    const Rotation r = from_axis_angle(Vec3{0, 1, 1}.normalized(), 0.4);
    DepthImage img = render_depth(transformed(testshapes::box(0.05, 0.07, 0.04), r, {0, 0, 0.01}), {cam})[0];
    img.camera_id = 3;

    const std::vector<std::uint8_t> bytes = serialize_depth_image(img);
    REQUIRE(bytes.size() == kDepthImageBytes);
    const DepthImage back = deserialize_depth_image(bytes.data(), bytes.size());
    CHECK(back.camera_id == 3);
    CHECK(back.raw_min == static_cast<double>(static_cast<float>(img.raw_min)));
    CHECK(back.raw_max == static_cast<double>(static_cast<float>(img.raw_max)));
    for (int i = 0; i < kDepthPixelCount; ++i) {
        CHECK(back.pixels[static_cast<std::size_t>(i)] ==
              static_cast<double>(static_cast<float>(img.pixels[static_cast<std::size_t>(i)])));
        CHECK(back.background[static_cast<std::size_t>(i)] == img.background[static_cast<std::size_t>(i)]);
    }
    // a second pass through the format is the identity on bytes
    CHECK(serialize_depth_image(back) == bytes);

    const std::filesystem::path path =
        std::filesystem::temp_directory_path() / "upright_test_depth.bin";
    save_depth_image(img, path.string());
    CHECK(std::filesystem::file_size(path) == kDepthImageBytes);
    const DepthImage loaded = load_depth_image(path.string());
    CHECK(serialize_depth_image(loaded) == bytes);
    std::filesystem::remove(path);

    SUBCASE("corrupted input is rejected") {
        std::vector<std::uint8_t> bad = bytes;
        bad[0] = 'X';
        CHECK_THROWS_AS(deserialize_depth_image(bad.data(), bad.size()), std::runtime_error);
        CHECK_THROWS_AS(deserialize_depth_image(bytes.data(), bytes.size() - 1), std::runtime_error);
        std::vector<std::uint8_t> wrong_version = bytes;
        wrong_version[12] = 9;
        CHECK_THROWS_AS(deserialize_depth_image(wrong_version.data(), wrong_version.size()),
                        std::runtime_error);
        CHECK_THROWS_AS(load_depth_image("/nonexistent/depth.bin"), std::runtime_error);
    }
}

TEST_CASE("renders are deterministic") {
    const CameraRig rig = rig_cameras(3, 0.25);
    const ObjectModel obj = generate_object(Family::Mug, 7);
    const Rotation r = from_axis_angle(Vec3{2, -1, 1}.normalized(), 1.1);
    const Vec3 t = Vec3{0.002, -0.004, 0.001} - r * obj.com;
    const std::vector<DepthImage> a = render_depth(obj, r, t, rig);
    const std::vector<DepthImage> b = render_depth(obj, r, t, rig);
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].camera_id == i);
        CHECK(serialize_depth_image(a[i]) == serialize_depth_image(b[i]));
        CHECK(a[i].pixels.size() == static_cast<std::size_t>(kDepthPixelCount));
    }
}

TEST_CASE("unprojection inverts the pinhole model") {
    const Camera cam = front_camera();

    SUBCASE("single synthetic pixel") {
        DepthImage img;
        img.pixels.assign(kDepthPixelCount, 0.5);
        img.background.assign(kDepthPixelCount, 1);
        img.pixels[static_cast<std::size_t>(DepthImage::index(31, 31))] = 0.0;
        img.background[static_cast<std::size_t>(DepthImage::index(31, 31))] = 0;
        img.raw_min = img.raw_max = 0.2;
        const PointCloud cloud = depth_to_point_cloud(img, cam);
        REQUIRE(cloud.points.size() == 1);
        const Vec3 expect = cam.position + cam.ray_dir(31, 31) * 0.2;
        CHECK((cloud.points[0] - expect).norm() < 1e-15);
    }

    SUBCASE("all background gives an empty cloud") {
        DepthImage img;
        img.pixels.assign(kDepthPixelCount, 0.5);
        img.background.assign(kDepthPixelCount, 1);
        CHECK(depth_to_point_cloud(img, cam).points.empty());
    }

    SUBCASE("face-on cube unprojects onto its front plane") {
        const TriMesh cube = testshapes::box(0.08, 0.08, 0.08);
        const DepthImage img = render_depth(cube, {cam})[0];
        PointCloud cloud = depth_to_point_cloud(img, cam);
        REQUIRE(cloud.points.size() > 100);
        for (const Vec3& p : cloud.points) CHECK(std::abs(p.y + 0.04) < 1e-9);

        estimate_normals(cloud, 16);
        Rng rng(99);
        const PlaneFit fit = largest_flat_plane(cloud, 0.002, radians(10.0), 200, rng);
        CHECK(fit.inlier_count >= 100);
        CHECK(std::abs(fit.normal.y) > 0.999);
        double max_residual = 0.0;
        for (const Vec3& p : cloud.points)
            max_residual = std::max(max_residual, std::abs((p - fit.point).dot(fit.normal)));
        CHECK(max_residual <= 1e-3);
    }
}

TEST_CASE("six baseline views reconstruct every cube face") {
    const TriMesh cube = testshapes::box(0.08, 0.08, 0.08);
    const std::vector<Camera> cams = baseline_cameras(0.25);
    const std::vector<DepthImage> imgs = render_depth(cube, cams);

    PointCloud cloud;
    for (std::size_t i = 0; i < cams.size(); ++i)
        cloud = merged(cloud, depth_to_point_cloud(imgs[i], cams[i]));
    estimate_normals(cloud, 16);

    Rng rng(4);
    bool seen[6] = {false, false, false, false, false, false};
    for (int round = 0; round < 6; ++round) {
        const PlaneFit fit = largest_flat_plane(cloud, 0.002, radians(10.0), 500, rng);
        CHECK(fit.inlier_count >= 100);
        int axis = 0;
        for (int a = 1; a < 3; ++a)
            if (std::abs(fit.normal[a]) > std::abs(fit.normal[axis])) axis = a;
        CHECK(std::abs(fit.normal[axis]) > 0.996);  // within ~5 degrees of an axis
        const int slot = 2 * axis + (fit.normal[axis] > 0 ? 0 : 1);
        CHECK_FALSE(seen[slot]);
        seen[slot] = true;

        // drop this plane's inliers (same membership rule as the fit)
        PointCloud rest;
        for (std::size_t i = 0; i < cloud.points.size(); ++i) {
            const bool near_plane =
                std::abs((cloud.points[i] - fit.point).dot(fit.normal)) <= 0.002;
            const bool aligned =
                std::abs(cloud.normals[i].dot(fit.normal)) >= std::cos(radians(10.0));
            if (near_plane && aligned) continue;
            rest.points.push_back(cloud.points[i]);
            rest.normals.push_back(cloud.normals[i]);
        }
        cloud = rest;
    }
    for (bool s : seen) CHECK(s);
}
