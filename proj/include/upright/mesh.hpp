#pragma once

#include <array>
#include <string>
#include <vector>

#include "upright/so3.hpp"

namespace upright {

/// Indexed triangle mesh. Faces wind counter-clockwise seen from outside.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
};

struct Aabb {
    Vec3 min{0, 0, 0};
    Vec3 max{0, 0, 0};
    Vec3 extent() const { return max - min; }
};

struct MassProperties {
    double volume = 0.0;  // signed; negative means inward winding
    Vec3 centroid{0, 0, 0};
};

TriMesh transformed(const TriMesh& mesh, const Rotation& r, const Vec3& translation);

Aabb bounds(const TriMesh& mesh);

/// Every undirected edge shared by exactly two faces with opposite winding,
/// and no degenerate faces. A disjoint union of closed components passes.
bool is_watertight(const TriMesh& mesh);

/// Signed volume and centroid by the divergence theorem over the surface.
/// Requires a closed mesh for a meaningful result.
MassProperties volume_centroid(const TriMesh& mesh);

/// Wavefront OBJ, vertices and faces only. Writes deterministically
/// (fixed formatting, no timestamps).
void save_obj(const TriMesh& mesh, const std::string& path);

/// Reads v/f records; f entries may carry /vt/vn suffixes which are ignored.
/// Throws std::runtime_error on malformed input or bad indices.
TriMesh load_obj(const std::string& path);

}  // namespace upright
