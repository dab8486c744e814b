#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "upright/controller.hpp"
#include "upright/estimator.hpp"
#include "upright/resting.hpp"

namespace upright {

struct ObjectsConfig {
    int per_family = 5;
    double scale_min = 0.9;
    double scale_max = 1.15;
};

struct RigConfig {
    int cameras = 3;   // 1-4 cameras on the observation circle
    double radius = 0.25;
};

/// Oracle estimators consume no pixels, so rig informativeness is modeled as
/// a declared sigma multiplier per camera count. A modeling knob, not a
/// measurement; it is echoed in every report.
struct CameraStudyConfig {
    std::array<double, 4> sigma_multiplier{2.0, 1.2, 1.0, 1.05};
};

struct EvalConfig {
    int test_sets = 5;
    int objects_per_set = 5;
    int trials_per_object = 100;
    double position_jitter = 0.01;  // uniform ball around the rig center (m)
    std::uint64_t master_seed = 20260101;
};

struct DatasetConfig {
    int count = 5000;
    double near_upright_fraction = 0.3;
    double near_upright_tilt = 0.3490658503988659;  // 20 degrees
    double position_jitter = 0.01;
};

struct QualityModelConfig {
    bool enabled = false;
    int dataset_count = 3000;
    double near_upright_fraction = 0.5;
    int balanced_target = 2000;  // records kept after balancing, half per label
    double train_split = 0.8;
    int epochs = 400;
    double learning_rate = 0.002;  // stable for full-batch steps on pixel features
};

struct HarnessConfig {
    ObjectsConfig objects;
    RigConfig rig;
    SimParams sim;
    RotationEstimatorConfig rotation_estimator;
    QualityEstimatorConfig quality_estimator;
    ControllerConfig controller;  // policy is chosen per run, not per config
    CameraStudyConfig camera_study;
    EvalConfig eval;
    DatasetConfig dataset;
    QualityModelConfig quality_model;
    std::string output_dir = "out";
};

/// Strict INI: [section] headers, key = value lines, full-line # or ;
/// comments. Unknown sections or keys, duplicate keys, and malformed values
/// are errors naming the source and line. Angles are configured in degrees
/// (keys carry a _deg suffix) and held in radians.
HarnessConfig parse_config(const std::string& text, const std::string& source_name);
HarnessConfig load_config(const std::string& path);

/// Cross-field validation (ranges, camera count, split sanity). Throws
/// std::invalid_argument on the first violation.
void validate_config(const HarnessConfig& cfg);

/// Every key in a fixed order with full-precision values; re-parsing it
/// reproduces the config exactly. The fingerprint is FNV-1a64 over this
/// string with the output dir reset to its default, so it identifies the
/// experiment rather than where its artifacts land, and is stable across
/// runs and machines.
std::string canonical_config_string(const HarnessConfig& cfg);
std::uint64_t config_fingerprint(const HarnessConfig& cfg);

/// 16-digit zero-padded lowercase hex, the form used in artifacts.
std::string fingerprint_hex(std::uint64_t fingerprint);

}  // namespace upright
