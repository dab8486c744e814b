#include "upright/hull.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>

namespace upright {

namespace {

struct Facet {
    std::array<int, 3> v{};
    Vec3 normal;
    double offset = 0.0;  // plane: normal . x = offset
    std::vector<int> outside;
    bool alive = true;
};

double plane_dist(const Facet& f, const Vec3& p) { return f.normal.dot(p) - f.offset; }

Facet make_facet(int a, int b, int c, const std::vector<Vec3>& pts) {
    Facet f;
    f.v = {a, b, c};
    const Vec3 n = (pts[static_cast<std::size_t>(b)] - pts[static_cast<std::size_t>(a)])
                       .cross(pts[static_cast<std::size_t>(c)] - pts[static_cast<std::size_t>(a)]);
    const double len = n.norm();
    f.normal = len > 0 ? n / len : Vec3{0, 0, 0};
    f.offset = f.normal.dot(pts[static_cast<std::size_t>(a)]);
    return f;
}

}  // namespace

TriMesh convex_hull(const std::vector<Vec3>& points) {
    const int n = static_cast<int>(points.size());
    if (n < 4) throw std::invalid_argument("convex_hull: need at least 4 points");

    Aabb box;
    box.min = box.max = points[0];
    for (const Vec3& p : points) {
        box.min.x = std::min(box.min.x, p.x);
        box.min.y = std::min(box.min.y, p.y);
        box.min.z = std::min(box.min.z, p.z);
        box.max.x = std::max(box.max.x, p.x);
        box.max.y = std::max(box.max.y, p.y);
        box.max.z = std::max(box.max.z, p.z);
    }
    const double scale = box.extent().norm();
    const double eps = std::max(1e-12, scale * 1e-10);

    // Initial simplex: extreme pair, then the farthest point from the line,
    // then the farthest from the plane.
    int i0 = 0, i1 = 0;
    {
        double best = -1.0;
        for (int axis = 0; axis < 3; ++axis) {
            int lo = 0, hi = 0;
            for (int i = 1; i < n; ++i) {
                if (points[static_cast<std::size_t>(i)][axis] < points[static_cast<std::size_t>(lo)][axis]) lo = i;
                if (points[static_cast<std::size_t>(i)][axis] > points[static_cast<std::size_t>(hi)][axis]) hi = i;
            }
            const double d = (points[static_cast<std::size_t>(hi)] - points[static_cast<std::size_t>(lo)]).norm();
            if (d > best) {
                best = d;
                i0 = lo;
                i1 = hi;
            }
        }
        if (best < eps) throw std::invalid_argument("convex_hull: degenerate point set");
    }
    const Vec3 dir = (points[static_cast<std::size_t>(i1)] - points[static_cast<std::size_t>(i0)]).normalized();
    int i2 = -1;
    {
        double best = eps;
        for (int i = 0; i < n; ++i) {
            const Vec3 d = points[static_cast<std::size_t>(i)] - points[static_cast<std::size_t>(i0)];
            const double dist = (d - dir * d.dot(dir)).norm();
            if (dist > best) {
                best = dist;
                i2 = i;
            }
        }
        if (i2 < 0) throw std::invalid_argument("convex_hull: collinear point set");
    }
    int i3 = -1;
    {
        const Facet base = make_facet(i0, i1, i2, points);
        double best = eps;
        for (int i = 0; i < n; ++i) {
            const double dist = std::abs(plane_dist(base, points[static_cast<std::size_t>(i)]));
            if (dist > best) {
                best = dist;
                i3 = i;
            }
        }
        if (i3 < 0) throw std::invalid_argument("convex_hull: coplanar point set");
        if (plane_dist(base, points[static_cast<std::size_t>(i3)]) > 0) std::swap(i1, i2);
    }

    std::vector<Facet> facets;
    facets.push_back(make_facet(i0, i1, i2, points));
    facets.push_back(make_facet(i0, i2, i3, points));
    facets.push_back(make_facet(i0, i3, i1, points));
    facets.push_back(make_facet(i1, i3, i2, points));

    for (int i = 0; i < n; ++i) {
        for (auto& f : facets) {
            if (plane_dist(f, points[static_cast<std::size_t>(i)]) > eps) {
                f.outside.push_back(i);
                break;
            }
        }
    }

    // Quickhull main loop: expand any facet that still sees outside points.
    for (;;) {
        int fi = -1;
        for (int i = 0; i < static_cast<int>(facets.size()); ++i) {
            if (facets[static_cast<std::size_t>(i)].alive && !facets[static_cast<std::size_t>(i)].outside.empty()) {
                fi = i;
                break;
            }
        }
        if (fi < 0) break;

        Facet& seed = facets[static_cast<std::size_t>(fi)];
        int apex = seed.outside[0];
        double best = plane_dist(seed, points[static_cast<std::size_t>(apex)]);
        for (int idx : seed.outside) {
            const double d = plane_dist(seed, points[static_cast<std::size_t>(idx)]);
            if (d > best) {
                best = d;
                apex = idx;
            }
        }

        // Visible set and horizon.
        std::vector<int> visible;
        for (int i = 0; i < static_cast<int>(facets.size()); ++i) {
            Facet& f = facets[static_cast<std::size_t>(i)];
            if (f.alive && plane_dist(f, points[static_cast<std::size_t>(apex)]) > eps) visible.push_back(i);
        }
        std::map<std::pair<int, int>, int> edge_count;
        for (int vi : visible) {
            const auto& f = facets[static_cast<std::size_t>(vi)].v;
            for (int e = 0; e < 3; ++e) {
                int a = f[static_cast<std::size_t>(e)];
                int b = f[static_cast<std::size_t>((e + 1) % 3)];
                ++edge_count[{std::min(a, b), std::max(a, b)}];
            }
        }
        std::vector<std::pair<int, int>> horizon;  // directed as in the visible facet
        for (int vi : visible) {
            const auto& f = facets[static_cast<std::size_t>(vi)].v;
            for (int e = 0; e < 3; ++e) {
                int a = f[static_cast<std::size_t>(e)];
                int b = f[static_cast<std::size_t>((e + 1) % 3)];
                if (edge_count[{std::min(a, b), std::max(a, b)}] == 1) horizon.push_back({a, b});
            }
        }

        std::vector<int> orphans;
        for (int vi : visible) {
            Facet& f = facets[static_cast<std::size_t>(vi)];
            f.alive = false;
            orphans.insert(orphans.end(), f.outside.begin(), f.outside.end());
            f.outside.clear();
        }

        for (const auto& [a, b] : horizon) {
            Facet nf = make_facet(a, b, apex, points);
            facets.push_back(std::move(nf));
        }
        for (int idx : orphans) {
            if (idx == apex) continue;
            for (auto& f : facets) {
                if (f.alive && plane_dist(f, points[static_cast<std::size_t>(idx)]) > eps) {
                    f.outside.push_back(idx);
                    break;
                }
            }
        }
    }

    // Compact: reindex the vertices actually used.
    std::vector<int> remap(static_cast<std::size_t>(n), -1);
    TriMesh hull;
    for (const Facet& f : facets) {
        if (!f.alive) continue;
        std::array<int, 3> tri{};
        for (int e = 0; e < 3; ++e) {
            const int src = f.v[static_cast<std::size_t>(e)];
            if (remap[static_cast<std::size_t>(src)] < 0) {
                remap[static_cast<std::size_t>(src)] = static_cast<int>(hull.vertices.size());
                hull.vertices.push_back(points[static_cast<std::size_t>(src)]);
            }
            tri[static_cast<std::size_t>(e)] = remap[static_cast<std::size_t>(src)];
        }
        hull.faces.push_back(tri);
    }
    return hull;
}

}  // namespace upright
