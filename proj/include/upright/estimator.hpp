#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "upright/render.hpp"
#include "upright/resting.hpp"
#include "upright/rng.hpp"

namespace upright {

/// Sensor view of the scene handed to estimators. `capture` renders the
/// current scene from arbitrary cameras; `images()` is the rig view, rendered
/// once on first use. The oracle fields may be left unset: estimators declare
/// via uses_oracle_fields() whether they read them, and the non-oracle ones
/// (flat-plane baseline, learned quality) work with them absent.
class Observation {
public:
    using CaptureFn = std::function<std::vector<DepthImage>(const std::vector<Camera>&)>;

    Observation(const CameraRig* rig, CaptureFn capture, const ObjectModel* oracle_object,
                std::optional<Rotation> oracle_orientation)
        : rig_(rig),
          capture_(std::move(capture)),
          oracle_object_(oracle_object),
          oracle_orientation_(oracle_orientation) {}

    const std::vector<DepthImage>& images() const;
    std::vector<DepthImage> capture(const std::vector<Camera>& cameras) const;

    const ObjectModel* oracle_object() const { return oracle_object_; }
    const std::optional<Rotation>& oracle_orientation() const { return oracle_orientation_; }

private:
    const CameraRig* rig_;
    CaptureFn capture_;
    const ObjectModel* oracle_object_;
    std::optional<Rotation> oracle_orientation_;
    mutable bool rendered_ = false;
    mutable std::vector<DepthImage> rig_images_;
};

enum class OutputRep { SixD, Quaternion, Euler };

OutputRep parse_output_rep(const std::string& name);
std::string output_rep_name(OutputRep rep);

struct RotationEstimatorConfig {
    double sigma = 0.2617993877991494;  // 15 degrees of angular noise per estimate
    double p_flip = 0.25;               // upside-down attractor probability per round
    OutputRep output_rep = OutputRep::SixD;
};

struct QualityEstimatorConfig {
    double eta = 0.0;  // label inversion probability
    double score_high = 0.95;
    double score_low = 0.05;
};

/// One estimation round. The upside-down attractor is drawn when the round
/// begins and held fixed, so every estimate in the round steers to the same
/// target; a controller restart opens a new round.
struct RoundState {
    bool flipped = false;
};

/// Proposes world-frame corrections: executing the returned rotation
/// (premultiplying the object orientation) should bring the object upright.
/// Instances are immutable after construction; all randomness comes through
/// the caller's generator.
class RotationEstimator {
public:
    virtual ~RotationEstimator() = default;
    virtual RoundState begin_round(Rng& rng) const = 0;
    virtual Rotation estimate(const Observation& obs, const RoundState& round, Rng& rng) const = 0;
    virtual bool uses_oracle_fields() const = 0;
};

/// Scores the confidence that the currently observed pose will come to rest
/// upright when released.
class QualityEstimator {
public:
    virtual ~QualityEstimator() = default;
    virtual double score(const Observation& obs, Rng& rng) const = 0;
    virtual bool uses_oracle_fields() const = 0;
};

/// Behavioral stand-in for a learned rotation estimator: the exact
/// upright-restoring rotation, optionally steered to the upside-down
/// attractor for the round, then perturbed by a random-axis rotation with
/// angle |N(0, sigma)|, and finally round-tripped through the configured
/// output representation.
class OracleRotationEstimator : public RotationEstimator {
public:
    /// Throws std::invalid_argument for sigma < 0 or p_flip outside [0, 1].
    explicit OracleRotationEstimator(const RotationEstimatorConfig& cfg);

    RoundState begin_round(Rng& rng) const override;
    Rotation estimate(const Observation& obs, const RoundState& round, Rng& rng) const override;
    bool uses_oracle_fields() const override { return true; }

    const RotationEstimatorConfig& config() const { return cfg_; }

private:
    RotationEstimatorConfig cfg_;
};

/// Behavioral stand-in for a learned placement-quality scorer: the settle
/// oracle's label, inverted with probability eta, mapped to a fixed
/// high/low score.
class OracleQualityEstimator : public QualityEstimator {
public:
    /// Throws std::invalid_argument unless 0 <= score_low < score_high <= 1
    /// and eta is in [0, 0.5). `sim` parameterizes the settle oracle.
    explicit OracleQualityEstimator(const QualityEstimatorConfig& cfg,
                                    const SimParams& sim = {});

    double score(const Observation& obs, Rng& rng) const override;
    bool uses_oracle_fields() const override { return true; }

private:
    QualityEstimatorConfig cfg_;
    SimParams sim_;
};

/// Geometric baseline: captures six axis-aligned views, unprojects and
/// merges them, finds the largest flat patch, and proposes the rotation
/// that turns the patch's average normal straight down. Reads no oracle
/// fields. Plane-extraction failures propagate as exceptions.
class FlatPlaneEstimator : public RotationEstimator {
public:
    FlatPlaneEstimator(double view_radius = 0.25, double dist_tol = 0.002,
                       double angle_tol = 0.17453292519943295 /* 10 degrees */,
                       int ransac_iterations = 500, int normal_k = 16);

    RoundState begin_round(Rng& rng) const override;
    Rotation estimate(const Observation& obs, const RoundState& round, Rng& rng) const override;
    bool uses_oracle_fields() const override { return false; }

private:
    double view_radius_;
    double dist_tol_;
    double angle_tol_;
    int ransac_iterations_;
    int normal_k_;
};

/// Logistic regression on flattened, concatenated normalized depth pixels.
struct QualityModel {
    std::vector<double> weights;  // one per pixel feature
    double bias = 0.0;
};

struct LogisticTrainConfig {
    // Full-batch steps on [-0.5, 0.5] pixel features have curvature near
    // |x|^2 / 4 per sample; the rate stays a safe factor under that bound
    // for up to four concatenated views.
    int epochs = 400;
    double learning_rate = 0.002;
};

/// Full-batch gradient descent on cross-entropy; deterministic.
/// Requires an exactly class-balanced dataset and throws
/// std::invalid_argument naming the class counts otherwise.
QualityModel train_logistic_quality(
    const std::vector<std::pair<std::vector<DepthImage>, bool>>& dataset,
    const LogisticTrainConfig& cfg = {});

/// Sigmoid score of the concatenated pixels; throws std::invalid_argument on
/// a feature-count mismatch.
double quality_predict(const QualityModel& model, const std::vector<DepthImage>& images);

/// Model file: magic "UPQMODEL", u32 version (= 1), u32 feature count,
/// then the weights and bias as little-endian f64.
void save_quality_model(const QualityModel& model, const std::string& path);
QualityModel load_quality_model(const std::string& path);

/// Quality estimator backed by a trained QualityModel; scores the rig view.
class LearnedQualityEstimator : public QualityEstimator {
public:
    explicit LearnedQualityEstimator(QualityModel model) : model_(std::move(model)) {}

    double score(const Observation& obs, Rng& rng) const override;
    bool uses_oracle_fields() const override { return false; }

private:
    QualityModel model_;
};

}  // namespace upright
