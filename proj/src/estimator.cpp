#include "upright/estimator.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace upright {
namespace {

const ObjectModel& require_oracle_object(const Observation& obs) {
    if (obs.oracle_object() == nullptr)
        throw std::logic_error("oracle estimator needs the oracle object reference");
    return *obs.oracle_object();
}

const Rotation& require_oracle_orientation(const Observation& obs) {
    if (!obs.oracle_orientation().has_value())
        throw std::logic_error("oracle estimator needs the oracle orientation");
    return *obs.oracle_orientation();
}

Rotation round_trip(const Rotation& r, OutputRep rep) {
    switch (rep) {
        case OutputRep::SixD: return from_sixd(to_sixd(r));
        case OutputRep::Quaternion: return from_quaternion(to_quaternion(r));
        case OutputRep::Euler: return from_euler_zyx(to_euler_zyx(r));
    }
    throw std::logic_error("unreachable output representation");
}

void put_u32_le(std::ofstream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(bytes, 4);
}

void put_f64_le(std::ofstream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

std::uint32_t get_u32_le(std::ifstream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) |
           (static_cast<std::uint32_t>(bytes[3]) << 24);
}

double get_f64_le(std::ifstream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

constexpr char kModelMagic[8] = {'U', 'P', 'Q', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kModelVersion = 1;

}  // namespace

const std::vector<DepthImage>& Observation::images() const {
    if (!rendered_) {
        if (rig_ == nullptr || !capture_)
            throw std::logic_error("observation has no rig to capture images from");
        rig_images_ = capture_(rig_->cameras);
        rendered_ = true;
    }
    return rig_images_;
}

std::vector<DepthImage> Observation::capture(const std::vector<Camera>& cameras) const {
    if (!capture_) throw std::logic_error("observation has no capture callback");
    return capture_(cameras);
}

OutputRep parse_output_rep(const std::string& name) {
    if (name == "sixd") return OutputRep::SixD;
    if (name == "quaternion") return OutputRep::Quaternion;
    if (name == "euler") return OutputRep::Euler;
    throw std::invalid_argument("unknown output representation: " + name);
}

std::string output_rep_name(OutputRep rep) {
    switch (rep) {
        case OutputRep::SixD: return "sixd";
        case OutputRep::Quaternion: return "quaternion";
        case OutputRep::Euler: return "euler";
    }
    throw std::logic_error("unreachable output representation");
}

OracleRotationEstimator::OracleRotationEstimator(const RotationEstimatorConfig& cfg) : cfg_(cfg) {
    if (!(cfg.sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
    if (!(cfg.p_flip >= 0.0 && cfg.p_flip <= 1.0))
        throw std::invalid_argument("p_flip must lie in [0, 1]");
}

RoundState OracleRotationEstimator::begin_round(Rng& rng) const {
    return {rng.bernoulli(cfg_.p_flip)};
}

Rotation OracleRotationEstimator::estimate(const Observation& obs, const RoundState& round,
                                           Rng& rng) const {
    const ObjectModel& object = require_oracle_object(obs);
    const Rotation& now = require_oracle_orientation(obs);

    Rotation target = ground_truth_rotation(now * object.upright);
    if (round.flipped) target = from_axis_angle(Vec3{1, 0, 0}, M_PI) * target;

    const Vec3 axis = random_unit_vector(rng);
    const double angle = std::abs(rng.normal(0.0, cfg_.sigma));
    const Rotation noisy = from_axis_angle(axis, angle) * target;
    return round_trip(noisy, cfg_.output_rep);
}

OracleQualityEstimator::OracleQualityEstimator(const QualityEstimatorConfig& cfg,
                                               const SimParams& sim)
    : cfg_(cfg), sim_(sim) {
    if (!(cfg.score_low >= 0.0 && cfg.score_low < cfg.score_high && cfg.score_high <= 1.0))
        throw std::invalid_argument("scores must satisfy 0 <= low < high <= 1");
    if (!(cfg.eta >= 0.0 && cfg.eta < 0.5))
        throw std::invalid_argument("eta must lie in [0, 0.5)");
}

double OracleQualityEstimator::score(const Observation& obs, Rng& rng) const {
    const ObjectModel& object = require_oracle_object(obs);
    const Rotation& now = require_oracle_orientation(obs);
    bool label = placement_quality_label(object, now, sim_);
    if (rng.bernoulli(cfg_.eta)) label = !label;
    return label ? cfg_.score_high : cfg_.score_low;
}

FlatPlaneEstimator::FlatPlaneEstimator(double view_radius, double dist_tol, double angle_tol,
                                       int ransac_iterations, int normal_k)
    : view_radius_(view_radius),
      dist_tol_(dist_tol),
      angle_tol_(angle_tol),
      ransac_iterations_(ransac_iterations),
      normal_k_(normal_k) {
    if (!(view_radius > 0.0)) throw std::invalid_argument("view radius must be positive");
    if (!(dist_tol > 0.0) || !(angle_tol > 0.0))
        throw std::invalid_argument("plane tolerances must be positive");
    if (ransac_iterations < 1 || normal_k < 3)
        throw std::invalid_argument("need at least 1 iteration and k >= 3");
}

RoundState FlatPlaneEstimator::begin_round(Rng&) const { return {}; }

Rotation FlatPlaneEstimator::estimate(const Observation& obs, const RoundState&, Rng& rng) const {
    const std::vector<Camera> cams = baseline_cameras(view_radius_);
    const std::vector<DepthImage> views = obs.capture(cams);

    PointCloud cloud;
    for (std::size_t i = 0; i < cams.size(); ++i)
        cloud = merged(cloud, depth_to_point_cloud(views[i], cams[i]));
    estimate_normals(cloud, normal_k_);

    const PlaneFit fit =
        largest_flat_plane(cloud, dist_tol_, angle_tol_, ransac_iterations_, rng);
    // the patch becomes the resting face: its average normal goes to -z
    return ground_truth_rotation(-1.0 * fit.normal);
}

QualityModel train_logistic_quality(
    const std::vector<std::pair<std::vector<DepthImage>, bool>>& dataset,
    const LogisticTrainConfig& cfg) {
    if (dataset.empty()) throw std::invalid_argument("quality dataset is empty");
    if (cfg.epochs < 1 || !(cfg.learning_rate > 0.0))
        throw std::invalid_argument("training needs epochs >= 1 and a positive learning rate");

    std::size_t positives = 0;
    for (const auto& [images, label] : dataset)
        if (label) ++positives;
    const std::size_t negatives = dataset.size() - positives;
    if (positives != negatives)
        throw std::invalid_argument("quality dataset must be class-balanced, got " +
                                    std::to_string(positives) + " positive vs " +
                                    std::to_string(negatives) + " negative");

    const std::size_t features = dataset.front().first.size() * kDepthPixelCount;
    if (features == 0) throw std::invalid_argument("records carry no images");
    std::vector<std::vector<double>> x(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& images = dataset[i].first;
        if (images.size() * kDepthPixelCount != features)
            throw std::invalid_argument("inconsistent image count across records");
        x[i].reserve(features);
        for (const DepthImage& img : images)
            x[i].insert(x[i].end(), img.pixels.begin(), img.pixels.end());
    }

    QualityModel model;
    model.weights.assign(features, 0.0);
    std::vector<double> grad(features);
    const double inv_m = 1.0 / static_cast<double>(dataset.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_bias = 0.0;
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            double z = model.bias;
            for (std::size_t f = 0; f < features; ++f) z += model.weights[f] * x[i][f];
            const double p = 1.0 / (1.0 + std::exp(-z));
            const double err = p - (dataset[i].second ? 1.0 : 0.0);
            for (std::size_t f = 0; f < features; ++f) grad[f] += err * x[i][f];
            grad_bias += err;
        }
        for (std::size_t f = 0; f < features; ++f)
            model.weights[f] -= cfg.learning_rate * inv_m * grad[f];
        model.bias -= cfg.learning_rate * inv_m * grad_bias;
    }
    return model;
}

double quality_predict(const QualityModel& model, const std::vector<DepthImage>& images) {
    if (images.size() * kDepthPixelCount != model.weights.size())
        throw std::invalid_argument("model expects " + std::to_string(model.weights.size()) +
                                    " pixel features, got " +
                                    std::to_string(images.size() * kDepthPixelCount));
    double z = model.bias;
    std::size_t f = 0;
    for (const DepthImage& img : images)
        for (double p : img.pixels) z += model.weights[f++] * p;
    return 1.0 / (1.0 + std::exp(-z));
}

void save_quality_model(const QualityModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(kModelMagic, 8);
    put_u32_le(out, kModelVersion);
    put_u32_le(out, static_cast<std::uint32_t>(model.weights.size()));
    for (double w : model.weights) put_f64_le(out, w);
    put_f64_le(out, model.bias);
    if (!out) throw std::runtime_error("write failed: " + path);
}

QualityModel load_quality_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kModelMagic, 8) != 0)
        throw std::runtime_error("quality model: bad magic in " + path);
    const std::uint32_t version = get_u32_le(in);
    if (version != kModelVersion)
        throw std::runtime_error("quality model: unsupported version " + std::to_string(version));
    const std::uint32_t count = get_u32_le(in);
    QualityModel model;
    model.weights.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) model.weights[i] = get_f64_le(in);
    model.bias = get_f64_le(in);
    if (!in) throw std::runtime_error("quality model: truncated file " + path);
    return model;
}

double LearnedQualityEstimator::score(const Observation& obs, Rng&) const {
    return quality_predict(model_, obs.images());
}

}  // namespace upright
