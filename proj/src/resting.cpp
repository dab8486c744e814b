#include "upright/resting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace upright {

namespace {

struct P2 {
    double x = 0.0;
    double y = 0.0;
};

double cross2(const P2& o, const P2& a, const P2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Monotone chain; returns CCW hull, collinear sets collapse to their extremes.
std::vector<P2> hull_2d(std::vector<P2> pts) {
    std::sort(pts.begin(), pts.end(), [](const P2& a, const P2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const P2& a, const P2& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    const std::size_t n = pts.size();
    if (n <= 2) return pts;
    std::vector<P2> h(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross2(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross2(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

P2 closest_on_segment(const P2& a, const P2& b, const P2& q) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((q.x - a.x) * vx + (q.y - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return {a.x + t * vx, a.y + t * vy};
}

double dist2(const P2& a, const P2& b) {
    const double dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
}

// Signed distance of q to the support region: positive inside the polygon,
// negative outside (or for degenerate point/segment supports). Also reports
// the closest boundary point.
double signed_support_distance(const std::vector<P2>& hull, const P2& q, P2& closest) {
    const std::size_t n = hull.size();
    if (n == 0) throw std::logic_error("signed_support_distance: empty support");
    if (n == 1) {
        closest = hull[0];
        return -std::sqrt(dist2(q, closest));
    }
    if (n == 2) {
        closest = closest_on_segment(hull[0], hull[1], q);
        return -std::sqrt(dist2(q, closest));
    }
    bool inside = true;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const P2& a = hull[i];
        const P2& b = hull[(i + 1) % n];
        if (cross2(a, b, q) < 0) inside = false;
        const P2 c = closest_on_segment(a, b, q);
        const double d = dist2(q, c);
        if (d < best) {
            best = d;
            closest = c;
        }
    }
    const double dist = std::sqrt(best);
    return inside ? dist : -dist;
}

}  // namespace

RestState settle(const ObjectModel& object, const Rotation& start, const SimParams& params) {
    const auto& verts = object.mesh.vertices;
    if (verts.empty()) throw std::invalid_argument("settle: object has no vertices");

    RestState st;
    st.orientation = start;
    st.min_step_drop = std::numeric_limits<double>::infinity();

    std::vector<Vec3> w(verts.size());
    std::vector<int> contacts;
    std::vector<P2> contact_xy;
    double prev_com_h = std::numeric_limits<double>::quiet_NaN();

    for (;;) {
        for (std::size_t i = 0; i < verts.size(); ++i) w[i] = st.orientation * verts[i];
        double zmin = w[0].z;
        for (const Vec3& v : w) zmin = std::min(zmin, v.z);

        contacts.clear();
        contact_xy.clear();
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (w[i].z - zmin <= params.contact_eps) {
                contacts.push_back(static_cast<int>(i));
                contact_xy.push_back({w[i].x, w[i].y});
            }
        }

        const Vec3 com_w = st.orientation * object.com;
        const double com_h = com_w.z - zmin;
        if (!std::isnan(prev_com_h)) {
            const double drop = prev_com_h - com_h;
            st.min_step_drop = std::min(st.min_step_drop, drop);
            if (drop < -1e-12) st.energy_descent_ok = false;
        }
        prev_com_h = com_h;

        const std::vector<P2> support_hull = hull_2d(contact_xy);
        P2 pivot;
        const double s = signed_support_distance(support_hull, {com_w.x, com_w.y}, pivot);
        if (s >= params.stability_margin || std::abs(s) <= 1e-12) {
            st.settled = true;
            break;
        }

        const double dx = com_w.x - pivot.x;
        const double dy = com_w.y - pivot.y;
        const double dn = std::sqrt(dx * dx + dy * dy);
        if (dn <= 1e-12) {
            st.settled = true;  // COM exactly over the boundary point
            break;
        }
        // Tip axis: horizontal, perpendicular to the lean direction, oriented
        // so a positive rotation lowers the COM on the lean side.
        const Vec3 axis = Vec3{0, 0, 1}.cross(Vec3{dx / dn, dy / dn, 0});

        // First vertex to reach the plane while rotating about the pivot
        // line: height u_z cos(phi) + (axis x u)_z sin(phi) hits zero first at
        // phi = atan2(B, u_z) + pi/2 for vertices above the plane.
        const Vec3 pivot3{pivot.x, pivot.y, zmin};
        double tip_angle = std::numeric_limits<double>::infinity();
        bool blocked = false;
        for (const Vec3& v : w) {
            const Vec3 u = v - pivot3;
            const double B = axis.cross(u).z;
            if (u.z <= params.contact_eps) {
                // Contact vertices: on or behind the pivot they lift or stay;
                // an outward-diving contact means no descending tip exists.
                if (B < -1e-9) blocked = true;
                continue;
            }
            const double root = std::atan2(B, u.z) + M_PI / 2.0;
            tip_angle = std::min(tip_angle, root);
        }
        if (blocked || !std::isfinite(tip_angle) || tip_angle <= 1e-12) {
            st.settled = true;  // resting against opposing contacts
            break;
        }
        if (st.tips >= params.max_tips) {
            st.settled = false;
            break;
        }
        st.orientation = from_axis_angle(axis, tip_angle) * st.orientation;
        ++st.tips;
    }

    st.support = contacts;
    if (!std::isfinite(st.min_step_drop)) st.min_step_drop = 0.0;
    return st;
}

double upright_angle(const ObjectModel& object, const Rotation& orientation) {
    const Vec3 up_w = (orientation * object.upright).normalized();
    // atan2 keeps full precision at both poles, unlike acos(up_w.z)
    return std::atan2(std::hypot(up_w.x, up_w.y), up_w.z);
}

bool is_upright(const ObjectModel& object, const Rotation& orientation, double tol) {
    return upright_angle(object, orientation) <= tol;
}

bool placement_quality_label(const ObjectModel& object, const Rotation& start,
                             const SimParams& params) {
    const RestState st = settle(object, start, params);
    return st.settled && is_upright(object, st.orientation, params.upright_tol);
}

bool stability_check(const ObjectModel& object, const Rotation& rest, const SimParams& params) {
    for (const Vec3 axis : {Vec3{1, 0, 0}, Vec3{0, 1, 0}}) {
        for (const double sign : {1.0, -1.0}) {
            const Rotation perturbed = from_axis_angle(axis, sign * params.perturb_angle) * rest;
            const RestState st = settle(object, perturbed, params);
            if (!st.settled) return false;
            if (geodesic_distance(st.orientation, rest) > params.upright_tol) return false;
        }
    }
    return true;
}

}  // namespace upright
