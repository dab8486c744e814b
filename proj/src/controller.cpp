#include "upright/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "upright/mesh.hpp"

namespace upright {

namespace {

void validate(const ControllerConfig& cfg) {
    if (cfg.max_iter < 1) throw std::invalid_argument("controller: max_iter must be >= 1");
    if (cfg.max_restart < 1) throw std::invalid_argument("controller: max_restart must be >= 1");
    if (!(cfg.eps_quality > 0.0) || !(cfg.eps_quality < 1.0))
        throw std::invalid_argument("controller: eps_quality must be in (0, 1)");
    if (!(cfg.eps_rotation > 0.0))
        throw std::invalid_argument("controller: eps_rotation must be positive");
}

}  // namespace

SimWorld::SimWorld(const ObjectModel& object, const CameraRig& rig, const Rotation& start,
                   const Vec3& position_jitter)
    : object_(&object), rig_(rig), orientation_(start), jitter_(position_jitter) {}

Observation SimWorld::observe() const {
    const ObjectModel* obj = object_;
    const Rotation pose = orientation_;
    const Vec3 t = jitter_ - pose * obj->com;
    auto capture = [obj, pose, t](const std::vector<Camera>& cameras) {
        return render_depth(transformed(obj->mesh, pose, t), cameras);
    };
    return Observation(&rig_, std::move(capture), obj, pose);
}

void SimWorld::execute(const Rotation& delta) { orientation_ = delta * orientation_; }

TrialTrace run_trial(World& world, const RotationEstimator& rotation_estimator,
                     const QualityEstimator* quality_estimator, const ControllerConfig& cfg,
                     const Rng& trial_rng, const SimParams& sim) {
    validate(cfg);
    if (cfg.policy == Policy::ITRQ && quality_estimator == nullptr)
        throw std::invalid_argument("controller: ITRQ requires a quality estimator");

    Rng est_rng = trial_rng.fork("rot_est");
    Rng qual_rng = trial_rng.fork("qual_est");
    Rng restart_rng = trial_rng.fork("restart");

    TrialTrace trace;
    trace.initial_orientation = world.orientation();

    bool terminated = false;
    for (int round = 0; round < cfg.max_restart; ++round) {
        trace.rounds = round + 1;
        const RoundState round_state = rotation_estimator.begin_round(est_rng);
        for (int iter = 0; iter < cfg.max_iter; ++iter) {
            const Observation before = world.observe();
            Rotation proposal = rotation_estimator.estimate(before, round_state, est_rng);
            if (cfg.canonicalize) proposal = canonicalize_execution(proposal);
            world.execute(proposal);

            IterationRecord rec;
            rec.round = round;
            rec.proposed = proposal;
            rec.orientation = world.orientation();
            if (cfg.policy == Policy::ITRQ) {
                const Observation after = world.observe();
                rec.quality = quality_estimator->score(after, qual_rng);
            }
            trace.records.push_back(rec);

            if (cfg.policy == Policy::SP) {
                terminated = true;
            } else if (cfg.policy == Policy::ITR) {
                terminated = rotation_angle(proposal) < cfg.eps_rotation;
            } else {
                terminated = 1.0 - rec.quality < cfg.eps_quality &&
                             rotation_angle(proposal) < cfg.eps_rotation;
            }
            if (terminated) break;
        }
        if (terminated || cfg.policy != Policy::ITRQ) break;
        if (round + 1 < cfg.max_restart)
            world.set_orientation(random_rotation(restart_rng) * world.orientation());
    }

    if (!terminated && cfg.policy == Policy::ITRQ) {
        // every round exhausted: commit the best-quality pose seen (earliest on ties)
        int best = 0;
        for (int i = 1; i < static_cast<int>(trace.records.size()); ++i) {
            if (trace.records[static_cast<std::size_t>(i)].quality >
                trace.records[static_cast<std::size_t>(best)].quality)
                best = i;
        }
        trace.final_record = best;
        world.set_orientation(trace.records[static_cast<std::size_t>(best)].orientation);
    } else {
        trace.final_record = static_cast<int>(trace.records.size()) - 1;
    }

    trace.final_orientation = world.orientation();
    const ObjectModel& object = world.object();
    trace.rest = settle(object, trace.final_orientation, sim);
    trace.success =
        trace.rest.settled && is_upright(object, trace.rest.orientation, sim.upright_tol);
    trace.stable = trace.rest.settled && stability_check(object, trace.rest.orientation, sim);
    trace.angular_error_deg = degrees(upright_angle(object, trace.rest.orientation));
    return trace;
}

Rotation canonicalize_execution(const Rotation& r) {
    const Quaternion q = to_quaternion(r);
    const double planar = std::hypot(q.w, q.z);
    // w and z both ~0: rotation by pi about a horizontal axis; every twist
    // leaves the angle at pi, so the input is already minimal
    if (planar < 1e-12) return r;
    const double phi = 2.0 * std::atan2(-q.z, q.w);
    return rotation_about_z(phi) * r;
}

namespace {

Rotation window_mean(const std::vector<Quaternion>& qs, std::size_t begin, std::size_t count) {
    // sign-aligned quaternion mean; alignment to the first element keeps the
    // double cover from cancelling clusters that straddle w = 0
    const Quaternion& ref = qs[begin];
    double w = 0.0, x = 0.0, y = 0.0, z = 0.0;
    for (std::size_t i = begin; i < begin + count; ++i) {
        const Quaternion& q = qs[i];
        const double dot = ref.w * q.w + ref.x * q.x + ref.y * q.y + ref.z * q.z;
        const double s = dot < 0.0 ? -1.0 : 1.0;
        w += s * q.w;
        x += s * q.x;
        y += s * q.y;
        z += s * q.z;
    }
    return from_quaternion(Quaternion{w, x, y, z});
}

}  // namespace

FilterResult filter_rotation_stream(const std::vector<Rotation>& stream, int window,
                                    double agree_tol, int max_frames) {
    if (window < 2) throw std::invalid_argument("filter: window must be >= 2");
    if (max_frames < window)
        throw std::invalid_argument("filter: max_frames must be >= window");
    if (static_cast<int>(stream.size()) < window)
        throw std::invalid_argument("filter: stream shorter than the window");

    const std::size_t w = static_cast<std::size_t>(window);
    const std::size_t consumed =
        std::min(stream.size(), static_cast<std::size_t>(max_frames));

    std::vector<Quaternion> qs;
    qs.reserve(consumed);
    for (std::size_t i = 0; i < consumed; ++i) qs.push_back(to_quaternion(stream[i]));

    for (std::size_t end = w; end <= consumed; ++end) {
        const std::size_t begin = end - w;
        double max_pair = 0.0;
        for (std::size_t i = begin; i < end; ++i)
            for (std::size_t j = i + 1; j < end; ++j)
                max_pair = std::max(max_pair, geodesic_distance(stream[i], stream[j]));
        if (max_pair <= agree_tol)
            return FilterResult{window_mean(qs, begin, w), static_cast<int>(end), true};
    }

    // no agreeing window inside the frame budget: lowest-variance window wins
    std::size_t best_begin = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t begin = 0; begin + w <= consumed; ++begin) {
        double cost = 0.0;
        for (std::size_t i = begin; i < begin + w; ++i) {
            for (std::size_t j = i + 1; j < begin + w; ++j) {
                const double d = geodesic_distance(stream[i], stream[j]);
                cost += d * d;
            }
        }
        if (cost < best_cost) {
            best_cost = cost;
            best_begin = begin;
        }
    }
    return FilterResult{window_mean(qs, best_begin, w), static_cast<int>(consumed), false};
}

}  // namespace upright
