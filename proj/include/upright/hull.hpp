#pragma once

#include <vector>

#include "upright/mesh.hpp"

namespace upright {

/// 3D convex hull (quickhull). Returns a closed triangle mesh whose faces
/// wind outward; every input point lies inside or on the hull within a
/// tolerance proportional to the input extent. Near-coplanar input points
/// on a hull facet may be absorbed into it, so only extreme points survive.
/// Throws std::invalid_argument for fewer than four points or a degenerate
/// (flat or collinear) point set.
TriMesh convex_hull(const std::vector<Vec3>& points);

}  // namespace upright
