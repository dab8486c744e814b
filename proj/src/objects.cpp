#include "upright/objects.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "upright/resting.hpp"
#include "upright/rng.hpp"

namespace upright {

namespace {

struct ProfilePoint {
    double r = 0.0;
    double z = 0.0;
};

// Revolve a radial profile about the z axis. The profile runs from a center
// point (r = 0) along the outside of the solid to a final center point, with
// the material on its left; cavities are expressed by running back down the
// inside. Interior points must have r > 0.
TriMesh revolve(const std::vector<ProfilePoint>& profile, int segments) {
    const int m = static_cast<int>(profile.size());
    if (m < 3 || profile.front().r != 0.0 || profile.back().r != 0.0)
        throw std::invalid_argument("revolve: profile must start and end on the axis");
    TriMesh mesh;
    mesh.vertices.push_back({0, 0, profile.front().z});
    for (int k = 1; k < m - 1; ++k) {
        if (profile[static_cast<std::size_t>(k)].r <= 0.0)
            throw std::invalid_argument("revolve: interior profile radius must be positive");
        for (int i = 0; i < segments; ++i) {
            const double a = 2.0 * M_PI * i / segments;
            mesh.vertices.push_back({profile[static_cast<std::size_t>(k)].r * std::cos(a),
                                     profile[static_cast<std::size_t>(k)].r * std::sin(a),
                                     profile[static_cast<std::size_t>(k)].z});
        }
    }
    const int apex_top = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back({0, 0, profile.back().z});

    auto ring = [&](int k, int i) { return 1 + (k - 1) * segments + (i % segments); };
    for (int i = 0; i < segments; ++i)
        mesh.faces.push_back({0, ring(1, i + 1), ring(1, i)});
    for (int k = 1; k < m - 2; ++k) {
        for (int i = 0; i < segments; ++i) {
            const int a = ring(k, i), b = ring(k, i + 1);
            const int c = ring(k + 1, i + 1), d = ring(k + 1, i);
            mesh.faces.push_back({a, b, c});
            mesh.faces.push_back({a, c, d});
        }
    }
    for (int i = 0; i < segments; ++i)
        mesh.faces.push_back({apex_top, ring(m - 2, i), ring(m - 2, i + 1)});
    return mesh;
}

// Closed tube swept along a circular arc in the xz plane; used for handles.
TriMesh arc_tube(const Vec3& center, double arc_radius, double psi0, double psi1,
                 double tube_radius, int arc_segments, int ring_segments) {
    TriMesh mesh;
    const int rings = arc_segments + 1;
    for (int s = 0; s < rings; ++s) {
        const double psi = psi0 + (psi1 - psi0) * s / arc_segments;
        const Vec3 p = center + Vec3{arc_radius * std::cos(psi), 0, arc_radius * std::sin(psi)};
        const Vec3 n{std::cos(psi), 0, std::sin(psi)};
        const Vec3 b{0, 1, 0};
        for (int j = 0; j < ring_segments; ++j) {
            const double a = 2.0 * M_PI * j / ring_segments;
            mesh.vertices.push_back(p + n * (tube_radius * std::cos(a)) + b * (tube_radius * std::sin(a)));
        }
    }
    auto ring = [&](int s, int j) { return s * ring_segments + (j % ring_segments); };
    for (int s = 0; s < arc_segments; ++s) {
        for (int j = 0; j < ring_segments; ++j) {
            const int a = ring(s, j), b = ring(s, j + 1);
            const int c = ring(s + 1, j + 1), d = ring(s + 1, j);
            mesh.faces.push_back({a, b, c});
            mesh.faces.push_back({a, c, d});
        }
    }
    const int cap0 = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(center + Vec3{arc_radius * std::cos(psi0), 0, arc_radius * std::sin(psi0)});
    const int cap1 = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(center + Vec3{arc_radius * std::cos(psi1), 0, arc_radius * std::sin(psi1)});
    for (int j = 0; j < ring_segments; ++j) {
        mesh.faces.push_back({cap0, ring(0, j + 1), ring(0, j)});
        mesh.faces.push_back({cap1, ring(arc_segments, j), ring(arc_segments, j + 1)});
    }
    // Per-face winding above is consistent; fix the global sign by volume.
    if (volume_centroid(mesh).volume < 0) {
        for (auto& f : mesh.faces) std::swap(f[1], f[2]);
    }
    return mesh;
}

void append_mesh(TriMesh& dst, const TriMesh& src) {
    const int base = static_cast<int>(dst.vertices.size());
    dst.vertices.insert(dst.vertices.end(), src.vertices.begin(), src.vertices.end());
    for (const auto& f : src.faces)
        dst.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
}

constexpr int kSegments = 32;

TriMesh build_bottle(Rng& g) {
    const double H = g.uniform(0.125, 0.168);
    const double rb = g.uniform(0.020, 0.025);
    const double body_h = H * g.uniform(0.50, 0.58);
    const double shoulder_h = H * g.uniform(0.68, 0.78);
    const double rn = g.uniform(0.0085, 0.012);
    const std::vector<ProfilePoint> profile{
        {0, 0},
        {rb, 0},
        {rb * g.uniform(1.00, 1.05), body_h * 0.5},
        {rb * g.uniform(0.95, 1.00), body_h},
        {rn * g.uniform(1.25, 1.45), shoulder_h},
        {rn, shoulder_h + 0.45 * (H - shoulder_h)},
        {rn, H},
        {0, H},
    };
    return revolve(profile, kSegments);
}

TriMesh build_jar(Rng& g) {
    const double H = g.uniform(0.075, 0.105);
    const double rb = g.uniform(0.026, 0.034);
    const double rt = rb * g.uniform(0.92, 1.04);
    const double rmid = std::max(rb, rt) * g.uniform(1.03, 1.10);
    const std::vector<ProfilePoint> profile{
        {0, 0}, {rb, 0}, {rmid, H * g.uniform(0.40, 0.52)}, {rt, H}, {0, H},
    };
    return revolve(profile, kSegments);
}

TriMesh build_pitcher(Rng& g) {
    const double H = g.uniform(0.115, 0.150);
    const double rb = g.uniform(0.020, 0.026);
    const double rt = rb * g.uniform(1.55, 1.85);
    const double bend = g.uniform(1.5, 1.9);
    auto r_at = [&](double z) { return rb + (rt - rb) * std::pow(z / H, bend); };
    const std::vector<ProfilePoint> profile{
        {0, 0}, {rb, 0}, {r_at(0.35 * H), 0.35 * H}, {r_at(0.70 * H), 0.70 * H}, {rt, H}, {0, H},
    };
    return revolve(profile, kSegments);
}

TriMesh build_mug(Rng& g) {
    const double H = g.uniform(0.105, 0.135);
    const double rb = g.uniform(0.021, 0.026);
    const double rtop = rb * g.uniform(1.00, 1.08);
    const double wall = 0.006;
    const double base_t = g.uniform(0.006, 0.009);
    const double rmid = 0.5 * (rb + rtop) * g.uniform(0.99, 1.02);
    const std::vector<ProfilePoint> profile{
        {0, 0},
        {rb, 0},
        {rmid, 0.5 * H},
        {rtop, H},
        {rtop - wall, H},
        {rmid - wall, 0.5 * H},
        {rb - wall, base_t},
        {0, base_t},
    };
    TriMesh mesh = revolve(profile, kSegments);

    const double zc = 0.5 * H;
    const double arc_r = 0.22 * H;
    const Vec3 arc_center{rmid - 0.0005, 0, zc};
    const double psi = radians(72.0);
    append_mesh(mesh, arc_tube(arc_center, arc_r, -psi, psi, 0.0045, 10, 8));
    return mesh;
}

TriMesh build_bowl(Rng& g) {
    const double h = g.uniform(0.038, 0.055);
    const double rr = g.uniform(0.055, 0.075);
    const double rf = g.uniform(0.020, 0.027);
    const double wall = 0.005;
    const double base_t = g.uniform(0.008, 0.011);
    const double r1 = rf + (rr - rf) * g.uniform(0.58, 0.68);
    const std::vector<ProfilePoint> profile{
        {0, 0},
        {rf, 0},
        {r1, 0.35 * h},
        {rr, h},
        {rr - wall, h},
        {r1 - wall, 0.42 * h},
        {0, base_t},
    };
    return revolve(profile, kSegments);
}

TriMesh build_family(Family family, Rng& g) {
    switch (family) {
        case Family::Bottle: return build_bottle(g);
        case Family::Mug: return build_mug(g);
        case Family::Bowl: return build_bowl(g);
        case Family::Jar: return build_jar(g);
        case Family::Pitcher: return build_pitcher(g);
    }
    throw std::logic_error("build_family: unknown family");
}

}  // namespace

const std::array<Family, 5>& all_families() {
    static const std::array<Family, 5> families{Family::Bottle, Family::Mug, Family::Bowl,
                                                Family::Jar, Family::Pitcher};
    return families;
}

std::string family_name(Family f) {
    switch (f) {
        case Family::Bottle: return "bottle";
        case Family::Mug: return "mug";
        case Family::Bowl: return "bowl";
        case Family::Jar: return "jar";
        case Family::Pitcher: return "pitcher";
    }
    throw std::logic_error("family_name: unknown family");
}

Family parse_family(const std::string& name) {
    for (Family f : all_families())
        if (family_name(f) == name) return f;
    throw std::invalid_argument("parse_family: unknown family '" + name + "'");
}

ObjectModel make_object(std::string name, Family family, TriMesh mesh) {
    if (!is_watertight(mesh))
        throw std::invalid_argument("make_object: mesh is not watertight: " + name);
    const MassProperties mp = volume_centroid(mesh);
    if (mp.volume < 2e-5)
        throw std::invalid_argument("make_object: implausible volume for " + name);
    ObjectModel model;
    model.name = std::move(name);
    model.family = family;
    model.mesh = std::move(mesh);
    model.upright = {0, 0, 1};
    model.com = mp.centroid;
    model.volume = mp.volume;
    return model;
}

ObjectModel generate_object(Family family, std::uint64_t seed, double scale_min,
                            double scale_max) {
    if (!(scale_min > 0.0) || scale_max < scale_min)
        throw std::invalid_argument("generate_object: bad scale range");
    const Rng base(fnv1a64(family_name(family), fnv1a64_u64(seed, kFnvOffset)));
    const std::string name = family_name(family) + "_" + std::to_string(seed);

    for (std::uint64_t attempt = 0; attempt < 24; ++attempt) {
        Rng g = base.fork("shape", attempt);
        TriMesh mesh;
        try {
            mesh = build_family(family, g);
        } catch (const std::invalid_argument&) {
            continue;
        }
        const double s = g.uniform(scale_min, scale_max);
        for (Vec3& v : mesh.vertices) v *= s;

        ObjectModel model;
        try {
            model = make_object(name, family, std::move(mesh));
        } catch (const std::invalid_argument&) {
            continue;
        }
        const Vec3 extent = bounds(model.mesh).extent();
        const double longest = std::max({extent.x, extent.y, extent.z});
        if (longest < 0.06 || longest > 0.20) continue;

        // The canonical pose must be a genuinely stable rest state.
        const RestState rest = settle(model, Rotation::identity());
        if (!rest.settled || rest.tips != 0) continue;
        if (!is_upright(model, rest.orientation)) continue;
        if (!stability_check(model, rest.orientation)) continue;
        return model;
    }
    throw std::runtime_error("generate_object: no valid candidate for " + name);
}

}  // namespace upright
