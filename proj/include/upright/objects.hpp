#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "upright/mesh.hpp"

namespace upright {

enum class Family { Bottle, Mug, Bowl, Jar, Pitcher };

const std::array<Family, 5>& all_families();
std::string family_name(Family f);
Family parse_family(const std::string& name);

/// A rigid object: closed mesh in its canonical (upright) frame, base on the
/// z=0 plane, canonical up direction, and solid-uniform mass properties.
struct ObjectModel {
    std::string name;
    Family family = Family::Bottle;
    TriMesh mesh;
    Vec3 upright{0, 0, 1};
    Vec3 com{0, 0, 0};
    double volume = 0.0;
};

/// Computes mass properties and validates closedness and positive volume.
ObjectModel make_object(std::string name, Family family, TriMesh mesh);

/// Deterministic procedural object: (family, seed, scale range) fully
/// determine the mesh. Every generated object is watertight, fits inside a
/// 6-20 cm bounding box, and rests stably in its canonical pose; candidates
/// violating any of that are rejected and regenerated from a derived seed.
ObjectModel generate_object(Family family, std::uint64_t seed, double scale_min = 1.0,
                            double scale_max = 1.0);

}  // namespace upright
