#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "shapes.hpp"
#include "upright/cloud.hpp"
#include "upright/hull.hpp"
#include "upright/mesh.hpp"
#include "upright/objects.hpp"

using namespace upright;

TEST_CASE("mass properties match closed forms") {
    SUBCASE("box volume and centroid") {
        const TriMesh m = testshapes::box(0.2, 0.1, 0.4);
        const MassProperties mp = volume_centroid(m);
        CHECK(mp.volume == doctest::Approx(0.2 * 0.1 * 0.4).epsilon(1e-12));
        CHECK(mp.centroid.norm() < 1e-12);
    }

    SUBCASE("cone centroid sits a quarter of the way up") {
        // Holds exactly for the faceted cone too: any pyramid's centroid is
        // at h/4 above the base.
        const TriMesh m = testshapes::cone(1.0, 1.0, 32);
        const MassProperties mp = volume_centroid(m);
        CHECK(std::abs(mp.centroid.z - 0.25) < 1e-12);
        CHECK(std::abs(mp.centroid.x) < 1e-12);
        // Volume of the faceted cone is a pyramid over a regular 32-gon.
        const double base_area = 0.5 * 32 * std::sin(2.0 * M_PI / 32);
        CHECK(mp.volume == doctest::Approx(base_area / 3.0).epsilon(1e-12));
    }

    SUBCASE("translation moves the centroid, not the volume") {
        TriMesh m = testshapes::box(0.1, 0.1, 0.1);
        const Rotation r = Rotation::identity();
        const TriMesh shifted = transformed(m, r, Vec3{1, 2, 3});
        const MassProperties mp = volume_centroid(shifted);
        CHECK(mp.volume == doctest::Approx(1e-3).epsilon(1e-9));
        CHECK((mp.centroid - Vec3{1, 2, 3}).norm() < 1e-9);
    }
}

TEST_CASE("watertightness detects open and inconsistent meshes") {
    TriMesh m = testshapes::box(1, 1, 1);
    CHECK(is_watertight(m));

    SUBCASE("missing face") {
        m.faces.pop_back();
        CHECK(!is_watertight(m));
    }
    SUBCASE("flipped face breaks winding consistency") {
        std::swap(m.faces[0][0], m.faces[0][1]);
        CHECK(!is_watertight(m));
    }
    SUBCASE("degenerate face") {
        m.faces.push_back({0, 0, 1});
        CHECK(!is_watertight(m));
    }
    SUBCASE("two disjoint closed components pass") {
        TriMesh two = testshapes::box(1, 1, 1);
        const TriMesh other = transformed(testshapes::box(0.5, 0.5, 0.5), Rotation::identity(), Vec3{3, 0, 0});
        const int base = static_cast<int>(two.vertices.size());
        two.vertices.insert(two.vertices.end(), other.vertices.begin(), other.vertices.end());
        for (const auto& f : other.faces) two.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
        CHECK(is_watertight(two));
    }
}

TEST_CASE("obj files round trip") {
    const std::filesystem::path path = std::filesystem::temp_directory_path() / "upright_test_box.obj";
    const TriMesh m = testshapes::cone(0.05, 0.11, 16);
    save_obj(m, path.string());
    const TriMesh back = load_obj(path.string());
    REQUIRE(back.vertices.size() == m.vertices.size());
    REQUIRE(back.faces.size() == m.faces.size());
    for (std::size_t i = 0; i < m.vertices.size(); ++i)
        CHECK((back.vertices[i] - m.vertices[i]).norm() == 0.0);  // %.17g is lossless
    for (std::size_t i = 0; i < m.faces.size(); ++i) CHECK(back.faces[i] == m.faces[i]);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_obj("/nonexistent/path/to/mesh.obj"), std::runtime_error);
}

TEST_CASE("convex hull contains its input and is closed") {
    Rng rng(1234);
    std::vector<Vec3> pts;
    for (int i = 0; i < 100; ++i) pts.push_back(random_unit_vector(rng) * 0.07);
    // A few interior points too.
    for (int i = 0; i < 30; ++i) pts.push_back(random_unit_vector(rng) * rng.uniform(0.0, 0.05));

    const TriMesh hull = convex_hull(pts);
    CHECK(is_watertight(hull));
    CHECK(volume_centroid(hull).volume > 0.0);

    // Every input point lies on or inside every hull face plane.
    for (const Vec3& p : pts) {
        for (const auto& f : hull.faces) {
            const Vec3& a = hull.vertices[static_cast<std::size_t>(f[0])];
            const Vec3& b = hull.vertices[static_cast<std::size_t>(f[1])];
            const Vec3& c = hull.vertices[static_cast<std::size_t>(f[2])];
            const Vec3 n = (b - a).cross(c - a).normalized();
            CHECK(n.dot(p - a) < 1e-9);
        }
    }

    // All 100 sphere-surface points are extreme, so they survive as vertices.
    CHECK(hull.vertices.size() == 100);

    CHECK_THROWS_AS(convex_hull({Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}}), std::invalid_argument);
    std::vector<Vec3> flat;
    for (int i = 0; i < 10; ++i) flat.push_back({static_cast<double>(i), static_cast<double>(i * i), 0.0});
    CHECK_THROWS_AS(convex_hull(flat), std::invalid_argument);
}

namespace {

PointCloud plane_grid(int side, double pitch, double z) {
    PointCloud c;
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j)
            c.points.push_back({(i - side / 2) * pitch, (j - side / 2) * pitch, z});
    return c;
}

}  // namespace

TEST_CASE("normal estimation orients a plane consistently and a sphere outward") {
    SUBCASE("single plane, all normals come out +z") {
        PointCloud c = plane_grid(20, 0.005, 0.0);
        estimate_normals(c, 16);
        for (const Vec3& n : c.normals) {
            CHECK(std::abs(n.z) > 0.999);
            CHECK(n.z > 0.0);  // canonical tie-break: uniform sign
        }
    }

    SUBCASE("sphere surface points away from the centroid") {
        Rng rng(9);
        PointCloud c;
        for (int i = 0; i < 800; ++i) c.points.push_back(random_unit_vector(rng) * 0.06);
        estimate_normals(c, 16);
        int outward = 0;
        for (std::size_t i = 0; i < c.points.size(); ++i)
            if (c.normals[i].dot(c.points[i]) > 0) ++outward;
        CHECK(outward == static_cast<int>(c.points.size()));
    }

    SUBCASE("two parallel planes point away from each other") {
        PointCloud c = merged(plane_grid(15, 0.005, -0.02), plane_grid(15, 0.005, 0.02));
        estimate_normals(c, 16);
        for (std::size_t i = 0; i < c.points.size(); ++i) {
            const double side = c.points[i].z > 0 ? 1.0 : -1.0;
            CHECK(c.normals[i].z * side > 0.999);
        }
    }

    SUBCASE("undersized cloud is rejected") {
        PointCloud c;
        for (int i = 0; i < 10; ++i) c.points.push_back({static_cast<double>(i), 0, 0});
        CHECK_THROWS_AS(estimate_normals(c, 16), std::invalid_argument);
    }
}

TEST_CASE("plane extraction finds the dominant flat patch") {
    SUBCASE("plane with outliers recovers the normal within 2 degrees") {
        Rng rng(77);
        PointCloud c = plane_grid(20, 0.005, 0.0);
        const std::size_t plane_count = c.points.size();
        for (std::size_t i = 0; i < plane_count / 20; ++i)
            c.points.push_back(random_unit_vector(rng) * rng.uniform(0.03, 0.08));
        estimate_normals(c, 16);
        Rng ransac_rng(5);
        const PlaneFit fit = largest_flat_plane(c, 0.002, radians(10), 500, ransac_rng);
        CHECK(fit.inlier_count >= static_cast<int>(plane_count) * 9 / 10);
        CHECK(std::abs(fit.normal.z) > std::cos(radians(2.0)));
    }

    SUBCASE("box cloud picks a large face, normal along a short axis") {
        // 2x1x1 cm box: the four big faces are 2x1; their normals are y or z.
        Rng rng(31);
        PointCloud c;
        const double sx = 0.02, sy = 0.01, sz = 0.01;
        // Sample faces in proportion to their area, like a range sensor would.
        for (int i = 0; i < 2500; ++i) {
            const double pick = rng.uniform(0.0, 10.0);  // total area in cm^2
            const double u = rng.uniform(-0.5, 0.5), v = rng.uniform(-0.5, 0.5);
            if (pick < 2.0) c.points.push_back({u * sx, v * sy, sz / 2});
            else if (pick < 4.0) c.points.push_back({u * sx, v * sy, -sz / 2});
            else if (pick < 6.0) c.points.push_back({u * sx, sy / 2, v * sz});
            else if (pick < 8.0) c.points.push_back({u * sx, -sy / 2, v * sz});
            else if (pick < 9.0) c.points.push_back({sx / 2, u * sy, v * sz});
            else c.points.push_back({-sx / 2, u * sy, v * sz});
        }
        estimate_normals(c, 16);
        Rng ransac_rng(6);
        const PlaneFit fit = largest_flat_plane(c, 0.0005, radians(10), 500, ransac_rng);
        CHECK(std::abs(fit.normal.x) < 0.1);  // never the small 1x1 faces
    }

    SUBCASE("collinear cloud has no acceptable plane") {
        PointCloud c;
        for (int i = 0; i < 60; ++i) c.points.push_back({i * 0.002, 0, 0});
        estimate_normals(c, 8);
        Rng ransac_rng(7);
        CHECK_THROWS_AS(largest_flat_plane(c, 0.002, radians(10), 200, ransac_rng),
                        std::runtime_error);
    }

    SUBCASE("same seed, same fit") {
        PointCloud c = plane_grid(15, 0.004, 0.01);
        estimate_normals(c, 12);
        Rng r1(42), r2(42);
        const PlaneFit f1 = largest_flat_plane(c, 0.002, radians(10), 100, r1);
        const PlaneFit f2 = largest_flat_plane(c, 0.002, radians(10), 100, r2);
        CHECK(f1.inlier_count == f2.inlier_count);
        CHECK((f1.normal - f2.normal).norm() == 0.0);
    }
}

TEST_CASE("procedural objects are valid, deterministic and family-typed") {
    for (const Family family : all_families()) {
        for (std::uint64_t seed : {0ull, 7ull}) {
            const ObjectModel obj = generate_object(family, seed, 0.9, 1.15);
            CHECK(is_watertight(obj.mesh));
            CHECK(obj.volume > 2e-5);
            const Vec3 extent = bounds(obj.mesh).extent();
            const double longest = std::max({extent.x, extent.y, extent.z});
            CHECK(longest >= 0.06);
            CHECK(longest <= 0.20);
            CHECK(obj.name == family_name(family) + "_" + std::to_string(seed));

            // Regeneration is bit-identical.
            const ObjectModel again = generate_object(family, seed, 0.9, 1.15);
            REQUIRE(again.mesh.vertices.size() == obj.mesh.vertices.size());
            for (std::size_t i = 0; i < obj.mesh.vertices.size(); ++i)
                CHECK((again.mesh.vertices[i] - obj.mesh.vertices[i]).norm() == 0.0);
        }
    }

    const ObjectModel a = generate_object(Family::Jar, 1);
    const ObjectModel b = generate_object(Family::Jar, 2);
    const double ha = bounds(a.mesh).extent().z, hb = bounds(b.mesh).extent().z;
    CHECK(ha != hb);

    CHECK(parse_family("pitcher") == Family::Pitcher);
    CHECK_THROWS_AS(parse_family("teapot"), std::invalid_argument);
}
