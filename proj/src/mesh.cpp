#include "upright/mesh.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace upright {

TriMesh transformed(const TriMesh& mesh, const Rotation& r, const Vec3& translation) {
    TriMesh out;
    out.vertices.reserve(mesh.vertices.size());
    for (const Vec3& v : mesh.vertices) out.vertices.push_back(r * v + translation);
    out.faces = mesh.faces;
    return out;
}

Aabb bounds(const TriMesh& mesh) {
    if (mesh.vertices.empty()) throw std::invalid_argument("bounds: empty mesh");
    Aabb box;
    box.min = box.max = mesh.vertices[0];
    for (const Vec3& v : mesh.vertices) {
        box.min.x = std::min(box.min.x, v.x);
        box.min.y = std::min(box.min.y, v.y);
        box.min.z = std::min(box.min.z, v.z);
        box.max.x = std::max(box.max.x, v.x);
        box.max.y = std::max(box.max.y, v.y);
        box.max.z = std::max(box.max.z, v.z);
    }
    return box;
}

bool is_watertight(const TriMesh& mesh) {
    // Closed 2-manifold: each directed edge appears exactly once and its
    // reverse exactly once, i.e. the undirected edge count map holds (1, 1).
    std::map<std::pair<int, int>, int> directed;
    for (const auto& f : mesh.faces) {
        if (f[0] == f[1] || f[1] == f[2] || f[2] == f[0]) return false;
        for (int e = 0; e < 3; ++e) {
            const int a = f[static_cast<std::size_t>(e)];
            const int b = f[static_cast<std::size_t>((e + 1) % 3)];
            if (a < 0 || b < 0 || a >= static_cast<int>(mesh.vertices.size()) ||
                b >= static_cast<int>(mesh.vertices.size()))
                return false;
            if (++directed[{a, b}] > 1) return false;
        }
    }
    if (directed.empty()) return false;
    for (const auto& [edge, count] : directed) {
        auto rev = directed.find({edge.second, edge.first});
        if (rev == directed.end() || rev->second != 1 || count != 1) return false;
    }
    return true;
}

MassProperties volume_centroid(const TriMesh& mesh) {
    // Signed tetrahedra against the origin: V = sum det/6, centroid of each
    // tet is the vertex average including the origin.
    double vol6 = 0.0;
    Vec3 weighted{0, 0, 0};
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[static_cast<std::size_t>(f[0])];
        const Vec3& b = mesh.vertices[static_cast<std::size_t>(f[1])];
        const Vec3& c = mesh.vertices[static_cast<std::size_t>(f[2])];
        const double d = a.dot(b.cross(c));
        vol6 += d;
        weighted += (a + b + c) * (d * 0.25);
    }
    MassProperties mp;
    mp.volume = vol6 / 6.0;
    if (std::abs(vol6) > 1e-300) mp.centroid = weighted / vol6;
    return mp;
}

void save_obj(const TriMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_obj: cannot open " + path);
    char line[128];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(line, sizeof(line), "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
        out << line;
    }
    for (const auto& f : mesh.faces) {
        std::snprintf(line, sizeof(line), "f %d %d %d\n", f[0] + 1, f[1] + 1, f[2] + 1);
        out << line;
    }
    if (!out) throw std::runtime_error("save_obj: write failed for " + path);
}

namespace {

int parse_face_index(const std::string& token, std::size_t vertex_count) {
    std::size_t slash = token.find('/');
    const std::string head = slash == std::string::npos ? token : token.substr(0, slash);
    int idx = 0;
    try {
        idx = std::stoi(head);
    } catch (const std::exception&) {
        throw std::runtime_error("load_obj: bad face index '" + token + "'");
    }
    if (idx < 1 || static_cast<std::size_t>(idx) > vertex_count)
        throw std::runtime_error("load_obj: face index out of range: " + head);
    return idx - 1;
}

}  // namespace

TriMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_obj: cannot open " + path);
    TriMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ss >> v.x >> v.y >> v.z))
                throw std::runtime_error("load_obj: malformed vertex: " + line);
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string token;
            while (ss >> token) idx.push_back(parse_face_index(token, mesh.vertices.size()));
            if (idx.size() < 3) throw std::runtime_error("load_obj: face with <3 vertices: " + line);
            // Fan-triangulate polygons.
            for (std::size_t i = 1; i + 1 < idx.size(); ++i)
                mesh.faces.push_back({idx[0], idx[i], idx[i + 1]});
        }
    }
    if (mesh.vertices.empty()) throw std::runtime_error("load_obj: no vertices in " + path);
    return mesh;
}

}  // namespace upright
