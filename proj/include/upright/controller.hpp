#pragma once

#include <limits>
#include <vector>

#include "upright/estimator.hpp"
#include "upright/render.hpp"
#include "upright/resting.hpp"
#include "upright/rng.hpp"

namespace upright {

enum class Policy { SP, ITR, ITRQ };

struct ControllerConfig {
    int max_iter = 15;      // iterations per estimation round
    int max_restart = 3;    // total rounds (first round + restarts)
    double eps_quality = 0.2;                     // quality gate: 1 - quality < eps
    double eps_rotation = 0.17453292519943295;    // rotation gate: |proposal| < eps (10 deg)
    Policy policy = Policy::ITRQ;
    bool canonicalize = false;  // strip the world-z twist from proposals before executing
};

/// The scene a trial runs against. Orientation is the full world rotation of
/// the object; execute premultiplies it with the proposed correction.
class World {
public:
    virtual ~World() = default;
    virtual const ObjectModel& object() const = 0;
    virtual Rotation orientation() const = 0;
    virtual Observation observe() const = 0;
    virtual void execute(const Rotation& delta) = 0;
    virtual void set_orientation(const Rotation& r) = 0;
};

/// Free-space scene: the object is held with its center of mass at a fixed
/// position jitter off the rig center; only orientation evolves. Observations
/// snapshot the pose at observe() time.
class SimWorld : public World {
public:
    SimWorld(const ObjectModel& object, const CameraRig& rig, const Rotation& start,
             const Vec3& position_jitter);

    const ObjectModel& object() const override { return *object_; }
    Rotation orientation() const override { return orientation_; }
    Observation observe() const override;
    void execute(const Rotation& delta) override;
    void set_orientation(const Rotation& r) override { orientation_ = r; }

private:
    const ObjectModel* object_;
    CameraRig rig_;
    Rotation orientation_;
    Vec3 jitter_;
};

struct IterationRecord {
    int round = 0;          // estimation round (increments at each restart)
    Rotation proposed;      // executed correction (after canonicalization, if on)
    Rotation orientation;   // world orientation right after executing it
    double quality = std::numeric_limits<double>::quiet_NaN();  // scored only by ITRQ
};

struct TrialTrace {
    Rotation initial_orientation;
    std::vector<IterationRecord> records;
    int rounds = 1;
    int final_record = -1;  // index of the committed record
    Rotation final_orientation;
    RestState rest;         // settle result from final_orientation
    bool success = false;   // settled within +-15 degrees of upright
    bool stable = false;    // survives small perturbations
    double angular_error_deg = 0.0;
};

/// Runs one placement trial against an initialized world.
///   SP:   estimate once, execute, done.
///   ITR:  estimate/execute until the proposal magnitude drops under
///         eps_rotation or max_iter is hit; single round.
///   ITRQ: after each execution the quality of the new pose is scored; the
///         trial ends when the quality and rotation gates both pass. A round
///         that exhausts max_iter triggers a teleport to a fresh uniform
///         orientation and a new estimator round, up to max_restart rounds
///         total; after the last round the best-quality recorded orientation
///         (earliest on ties) is committed instead.
/// The finished trace settles the final pose (under `sim`) and carries the
/// outcome labels. quality_estimator may be null except for ITRQ. Estimator
/// exceptions propagate to the caller. Randomness forks from trial_rng into
/// fixed "rot_est" / "qual_est" / "restart" streams.
TrialTrace run_trial(World& world, const RotationEstimator& rotation_estimator,
                     const QualityEstimator* quality_estimator, const ControllerConfig& cfg,
                     const Rng& trial_rng, const SimParams& sim = {});

/// Twist-free equivalent command: R_z(phi*) * r with phi* minimizing the
/// geodesic distance to identity. The placement outcome is unchanged because
/// a world-z pre-rotation commutes with settling.
Rotation canonicalize_execution(const Rotation& r);

struct FilterResult {
    Rotation rotation;
    int frames_used = 0;
    bool agreed = false;  // a window met the agreement tolerance
};

/// Moving-window agreement filter over a rotation stream. Consumes frames in
/// order; the first window of `window` consecutive frames whose maximum
/// pairwise geodesic distance is at most agree_tol returns that window's
/// average (sign-aligned quaternion mean). If max_frames frames (or the whole
/// stream) pass without agreement, the window minimizing the sum of squared
/// pairwise distances wins, earliest on ties. Throws std::invalid_argument
/// when the stream is shorter than the window.
FilterResult filter_rotation_stream(const std::vector<Rotation>& stream, int window = 5,
                                    double agree_tol = 0.17453292519943295,
                                    int max_frames = 100);

}  // namespace upright
