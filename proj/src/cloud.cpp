#include "upright/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace upright {

namespace {

// Jacobi eigensolver for a symmetric 3x3; returns eigenvalues ascending and
// the matching eigenvectors as rows. Fixed sweep order keeps it deterministic.
void symmetric_eigen3(const Mat3& sym, std::array<double, 3>& values, Mat3& vectors) {
    Mat3 a = sym;
    Mat3 v = Mat3::identity();
    for (int sweep = 0; sweep < 50; ++sweep) {
        double off = std::abs(a(0, 1)) + std::abs(a(0, 2)) + std::abs(a(1, 2));
        if (off < 1e-15) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                if (std::abs(a(p, q)) < 1e-18) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                Mat3 r = Mat3::identity();
                r(p, p) = c;
                r(q, q) = c;
                r(p, q) = s;
                r(q, p) = -s;
                a = r.transposed() * a * r;
                v = v * r;
            }
        }
    }
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) < a(j, j); });
    for (int i = 0; i < 3; ++i) {
        values[static_cast<std::size_t>(i)] = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
        for (int r = 0; r < 3; ++r) vectors(i, r) = v(r, order[static_cast<std::size_t>(i)]);
    }
}

std::uint64_t cell_key(std::int64_t ix, std::int64_t iy, std::int64_t iz) {
    // Pack 21 bits per axis after biasing; grids here are far smaller.
    const std::uint64_t bias = 1u << 20;
    return ((static_cast<std::uint64_t>(ix) + bias) << 42) |
           ((static_cast<std::uint64_t>(iy) + bias) << 21) |
           (static_cast<std::uint64_t>(iz) + bias);
}

class NeighborGrid {
public:
    explicit NeighborGrid(const std::vector<Vec3>& pts) : pts_(pts) {
        Vec3 lo = pts[0], hi = pts[0];
        for (const Vec3& p : pts) {
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
        }
        origin_ = lo;
        const double diag = (hi - lo).norm();
        const double target = diag / std::cbrt(static_cast<double>(pts.size()) + 1.0);
        h_ = std::max(target, diag * 1e-6);
        if (h_ <= 0.0) h_ = 1.0;  // all points coincide
        for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
            cells_[key_of(pts[static_cast<std::size_t>(i)])].push_back(i);
        }
    }

    // Exact k nearest neighbors of pts[qi], excluding qi itself.
    void knn(int qi, int k, std::vector<int>& out) const {
        const Vec3 q = pts_[static_cast<std::size_t>(qi)];
        const std::int64_t cx = coord(q.x - origin_.x);
        const std::int64_t cy = coord(q.y - origin_.y);
        const std::int64_t cz = coord(q.z - origin_.z);
        std::vector<std::pair<double, int>> best;  // (dist2, index), kept sorted
        best.reserve(static_cast<std::size_t>(k) + 1);
        for (std::int64_t ring = 0;; ++ring) {
            bool any_cell = false;
            for (std::int64_t ix = cx - ring; ix <= cx + ring; ++ix) {
                for (std::int64_t iy = cy - ring; iy <= cy + ring; ++iy) {
                    for (std::int64_t iz = cz - ring; iz <= cz + ring; ++iz) {
                        const std::int64_t cheb = std::max({std::abs(ix - cx), std::abs(iy - cy), std::abs(iz - cz)});
                        if (cheb != ring) continue;
                        auto it = cells_.find(cell_key(ix, iy, iz));
                        if (it == cells_.end()) continue;
                        any_cell = true;
                        for (int idx : it->second) {
                            if (idx == qi) continue;
                            const double d2 = (pts_[static_cast<std::size_t>(idx)] - q).norm2();
                            if (static_cast<int>(best.size()) < k || d2 < best.back().first) {
                                best.insert(std::lower_bound(best.begin(), best.end(),
                                                             std::make_pair(d2, idx)),
                                            {d2, idx});
                                if (static_cast<int>(best.size()) > k) best.pop_back();
                            }
                        }
                    }
                }
            }
            // Points in ring r+1 are at least r*h away from q.
            const double bound = static_cast<double>(ring) * h_;
            if (static_cast<int>(best.size()) >= k && best.back().first <= bound * bound) break;
            if (!any_cell && ring > span_limit()) break;  // grid exhausted
        }
        out.clear();
        for (const auto& [d2, idx] : best) out.push_back(idx);
    }

private:
    std::int64_t coord(double offset) const { return static_cast<std::int64_t>(std::floor(offset / h_)); }
    std::uint64_t key_of(const Vec3& p) const {
        return cell_key(coord(p.x - origin_.x), coord(p.y - origin_.y), coord(p.z - origin_.z));
    }
    std::int64_t span_limit() const {
        return static_cast<std::int64_t>(cells_.size()) + 2;
    }

    const std::vector<Vec3>& pts_;
    Vec3 origin_;
    double h_ = 1.0;
    std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

}  // namespace

PointCloud merged(const PointCloud& a, const PointCloud& b) {
    PointCloud out = a;
    out.points.insert(out.points.end(), b.points.begin(), b.points.end());
    if (a.has_normals() && b.has_normals()) {
        out.normals.insert(out.normals.end(), b.normals.begin(), b.normals.end());
    } else {
        out.normals.clear();
    }
    return out;
}

void estimate_normals(PointCloud& cloud, int k) {
    const int n = static_cast<int>(cloud.points.size());
    if (k < 3) throw std::invalid_argument("estimate_normals: k must be at least 3");
    if (n < k + 1) throw std::invalid_argument("estimate_normals: cloud smaller than k+1 points");

    Vec3 centroid{0, 0, 0};
    for (const Vec3& p : cloud.points) centroid += p;
    centroid = centroid / static_cast<double>(n);

    const NeighborGrid grid(cloud.points);
    cloud.normals.assign(static_cast<std::size_t>(n), Vec3{0, 0, 1});
    std::vector<int> nn;
    for (int i = 0; i < n; ++i) {
        grid.knn(i, k, nn);
        Vec3 mean = cloud.points[static_cast<std::size_t>(i)];
        for (int j : nn) mean += cloud.points[static_cast<std::size_t>(j)];
        mean = mean / static_cast<double>(nn.size() + 1);
        Mat3 cov;
        cov.a = {0, 0, 0, 0, 0, 0, 0, 0, 0};
        auto accumulate = [&](const Vec3& p) {
            const Vec3 d = p - mean;
            cov(0, 0) += d.x * d.x;
            cov(0, 1) += d.x * d.y;
            cov(0, 2) += d.x * d.z;
            cov(1, 1) += d.y * d.y;
            cov(1, 2) += d.y * d.z;
            cov(2, 2) += d.z * d.z;
        };
        accumulate(cloud.points[static_cast<std::size_t>(i)]);
        for (int j : nn) accumulate(cloud.points[static_cast<std::size_t>(j)]);
        cov(1, 0) = cov(0, 1);
        cov(2, 0) = cov(0, 2);
        cov(2, 1) = cov(1, 2);

        std::array<double, 3> evals{};
        Mat3 evecs;
        symmetric_eigen3(cov, evals, evecs);
        Vec3 normal = evecs.row(0);
        const double len = normal.norm();
        normal = len > 1e-12 ? normal / len : Vec3{0, 0, 1};

        const double outward = normal.dot(cloud.points[static_cast<std::size_t>(i)] - centroid);
        if (outward < -1e-12) {
            normal = -normal;
        } else if (outward <= 1e-12) {
            // Perpendicular tie (e.g. a lone plane through the centroid):
            // canonical sign, largest-magnitude component positive.
            const double ax = std::abs(normal.x), ay = std::abs(normal.y), az = std::abs(normal.z);
            const double lead = (ax >= ay && ax >= az) ? normal.x : (ay >= az ? normal.y : normal.z);
            if (lead < 0) normal = -normal;
        }
        cloud.normals[static_cast<std::size_t>(i)] = normal;
    }
}

PlaneFit largest_flat_plane(const PointCloud& cloud, double dist_tol, double angle_tol,
                            int iterations, Rng& rng) {
    if (!cloud.has_normals())
        throw std::invalid_argument("largest_flat_plane: cloud needs normals");
    const int n = static_cast<int>(cloud.points.size());
    const double cos_tol = std::cos(angle_tol);

    PlaneFit best;
    best.inlier_count = -1;
    std::vector<int> inliers;
    std::vector<int> best_inliers;
    for (int it = 0; it < iterations; ++it) {
        const int pick = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
        const Vec3 p0 = cloud.points[static_cast<std::size_t>(pick)];
        const Vec3 n0 = cloud.normals[static_cast<std::size_t>(pick)];
        inliers.clear();
        for (int i = 0; i < n; ++i) {
            if (std::abs((cloud.points[static_cast<std::size_t>(i)] - p0).dot(n0)) > dist_tol) continue;
            if (std::abs(cloud.normals[static_cast<std::size_t>(i)].dot(n0)) < cos_tol) continue;
            inliers.push_back(i);
        }
        if (static_cast<int>(inliers.size()) <= best.inlier_count ||
            static_cast<int>(inliers.size()) < 3)
            continue;

        // Reject rank-deficient candidates: a flat patch must have in-plane
        // extent in two directions, otherwise a collinear cloud would "fit".
        Vec3 c{0, 0, 0};
        for (int i : inliers) c += cloud.points[static_cast<std::size_t>(i)];
        c = c / static_cast<double>(inliers.size());
        Mat3 cov;
        cov.a = {0, 0, 0, 0, 0, 0, 0, 0, 0};
        for (int i : inliers) {
            const Vec3 d = cloud.points[static_cast<std::size_t>(i)] - c;
            cov(0, 0) += d.x * d.x;
            cov(0, 1) += d.x * d.y;
            cov(0, 2) += d.x * d.z;
            cov(1, 1) += d.y * d.y;
            cov(1, 2) += d.y * d.z;
            cov(2, 2) += d.z * d.z;
        }
        cov(1, 0) = cov(0, 1);
        cov(2, 0) = cov(0, 2);
        cov(2, 1) = cov(1, 2);
        std::array<double, 3> evals{};
        Mat3 evecs;
        symmetric_eigen3(cov, evals, evecs);
        const double second_extent =
            std::sqrt(std::max(0.0, evals[1] / static_cast<double>(inliers.size())));
        if (second_extent < 1e-6) continue;

        Vec3 avg{0, 0, 0};
        for (int i : inliers) {
            const Vec3& ni = cloud.normals[static_cast<std::size_t>(i)];
            avg += ni.dot(n0) >= 0 ? ni : -ni;
        }
        const double avg_len = avg.norm();
        if (avg_len < 1e-12) continue;

        best.normal = avg / avg_len;
        best.point = c;
        best.inlier_count = static_cast<int>(inliers.size());
        best_inliers = inliers;
    }
    if (best.inlier_count < 3)
        throw std::runtime_error("largest_flat_plane: no acceptable plane found");
    return best;
}

}  // namespace upright
