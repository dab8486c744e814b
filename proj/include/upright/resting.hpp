#pragma once

#include <vector>

#include "upright/objects.hpp"

namespace upright {

struct SimParams {
    double contact_eps = 1e-6;        // vertices this close to the low plane are contacts (m)
    double stability_margin = 1e-4;   // COM inset required to count as settled (m)
    int max_tips = 64;                // tip budget before flagging as unsettled
    double upright_tol = 0.2617993877991494;   // 15 degrees
    double perturb_angle = 0.05235987755982988; // 3 degrees
};

struct RestState {
    Rotation orientation;          // final orientation
    bool settled = false;          // false only when the tip budget ran out
    int tips = 0;
    bool energy_descent_ok = true; // COM height dropped strictly at every tip
    double min_step_drop = 0.0;    // smallest per-tip COM drop observed (m)
    std::vector<int> support;      // contact vertex indices at the final state
};

/// Quasi-static resting pose: starting from `start`, tip the object about the
/// support boundary nearest the COM projection until the COM projects inside
/// the support polygon with the configured margin. Position is abstracted
/// away: only orientation evolves, heights are measured against the contact
/// plane. Support and tip scans run over all mesh vertices, which is exact:
/// a convex-combination point can never reach the plane before the extreme
/// points spanning it.
RestState settle(const ObjectModel& object, const Rotation& start, const SimParams& params = {});

/// Angle between the rotated canonical up direction and world z, in
/// [0, pi]. Well conditioned at both ends of the range.
double upright_angle(const ObjectModel& object, const Rotation& orientation);

/// upright_angle within tol.
bool is_upright(const ObjectModel& object, const Rotation& orientation,
                double tol = SimParams{}.upright_tol);

/// Released from `start`, does the object settle upright?
bool placement_quality_label(const ObjectModel& object, const Rotation& start,
                             const SimParams& params = {});

/// Re-settle from four small tilts (+-perturb about x and y) of a resting
/// orientation; true iff every result stays within upright_tol geodesic of it.
bool stability_check(const ObjectModel& object, const Rotation& rest,
                     const SimParams& params = {});

}  // namespace upright
