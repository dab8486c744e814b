#pragma once

#include <vector>

#include "upright/rng.hpp"
#include "upright/so3.hpp"

namespace upright {

struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;  // empty until estimated; unit length after

    bool has_normals() const { return normals.size() == points.size() && !points.empty(); }
};

PointCloud merged(const PointCloud& a, const PointCloud& b);

/// Per-point normals from the covariance of the k nearest neighbors (plus
/// the point itself): smallest principal direction, oriented away from the
/// cloud centroid. Points whose offset from the centroid is perpendicular to
/// the normal fall back to a fixed canonical sign, so a single plane comes
/// out uniformly oriented. Exact k-NN via a uniform grid.
/// Throws std::invalid_argument if the cloud has fewer than k + 1 points.
void estimate_normals(PointCloud& cloud, int k);

struct PlaneFit {
    Vec3 normal;     // unit
    Vec3 point;      // centroid of the inliers
    int inlier_count = 0;
};

/// Seeded RANSAC for the dominant flat patch. A hypothesis is one point and
/// its normal; inliers lie within dist_tol of the plane and align with the
/// hypothesis normal within angle_tol (sign-insensitive). Candidate planes
/// whose inliers are rank-deficient (all near one line) are rejected, so
/// degenerate clouds fail instead of fitting an arbitrary plane.
/// The returned normal is the renormalized average of the inlier normals,
/// sign-aligned with the hypothesis. Ties on inlier count keep the earliest
/// hypothesis. Throws std::runtime_error when no acceptable plane exists.
PlaneFit largest_flat_plane(const PointCloud& cloud, double dist_tol, double angle_tol,
                            int iterations, Rng& rng);

}  // namespace upright
