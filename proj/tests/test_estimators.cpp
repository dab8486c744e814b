#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "shapes.hpp"
#include "upright/estimator.hpp"

using namespace upright;

namespace {

Observation oracle_obs(const ObjectModel& object, const Rotation& orientation) {
    return Observation(nullptr, {}, &object, orientation);
}

// capture callback rendering the object posed with its COM at the origin
Observation::CaptureFn scene_capture(const ObjectModel& object, const Rotation& orientation,
                                     int* counter = nullptr) {
    return [&object, orientation, counter](const std::vector<Camera>& cams) {
        if (counter != nullptr) ++*counter;
        return render_depth(object, orientation, -1.0 * (orientation * object.com), CameraRig{cams});
    };
}

double up_error(const ObjectModel& object, const Rotation& r) { return upright_angle(object, r); }

}  // namespace

TEST_CASE("noise-free oracle rotation estimates are exact") {
    const ObjectModel bottle = generate_object(Family::Bottle, 1);
    const OracleRotationEstimator est({0.0, 0.0, OutputRep::SixD});
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const Rotation now = random_rotation(rng);
        Rng stream = rng.fork("est", static_cast<std::uint64_t>(i));
        const RoundState round = est.begin_round(stream);
        CHECK_FALSE(round.flipped);
        const Rotation proposal = est.estimate(oracle_obs(bottle, now), round, stream);
        CHECK(geodesic_distance(proposal, ground_truth_rotation(now * bottle.upright)) <= 1e-9);
        CHECK(up_error(bottle, proposal * now) <= 1e-9);  // executing it rights the object
    }
}

TEST_CASE("flipped rounds steer the upright vector to -z") {
    const ObjectModel jar = generate_object(Family::Jar, 2);
    const OracleRotationEstimator est({0.0, 1.0, OutputRep::SixD});
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        const Rotation now = (i == 0) ? Rotation::identity() : random_rotation(rng);
        Rng stream = rng.fork("flip", static_cast<std::uint64_t>(i));
        const RoundState round = est.begin_round(stream);
        CHECK(round.flipped);
        const Rotation proposal = est.estimate(oracle_obs(jar, now), round, stream);
        const Vec3 u = proposal * (now * jar.upright);
        CHECK(std::abs(u.z + 1.0) < 1e-9);
    }
}

TEST_CASE("estimate error follows the half-normal mean") {
    const ObjectModel mug = generate_object(Family::Mug, 3);
    const double sigma = radians(10.0);
    const OracleRotationEstimator est({sigma, 0.0, OutputRep::SixD});
    Rng rng(2024);
    const Rotation now = random_rotation(rng);
    const Rotation target = ground_truth_rotation(now * mug.upright);
    const Observation obs = oracle_obs(mug, now);

    double sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        Rng stream = rng.fork("noise", static_cast<std::uint64_t>(i));
        const RoundState round = est.begin_round(stream);
        sum += geodesic_distance(est.estimate(obs, round, stream), target);
    }
    const double mean = degrees(sum / n);
    CHECK(std::abs(mean - 10.0 * std::sqrt(2.0 / M_PI)) < 0.5);
}

TEST_CASE("flip frequency matches p_flip") {
    const OracleRotationEstimator est({radians(15.0), 0.25, OutputRep::SixD});
    Rng rng(5);
    int flips = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        Rng stream = rng.fork("round", static_cast<std::uint64_t>(i));
        if (est.begin_round(stream).flipped) ++flips;
    }
    CHECK(std::abs(flips / static_cast<double>(n) - 0.25) < 0.02);
}

TEST_CASE("output representations agree") {
    const ObjectModel bowl = generate_object(Family::Bowl, 4);
    const RotationEstimatorConfig base{radians(12.0), 0.3, OutputRep::SixD};
    RotationEstimatorConfig quat = base;
    quat.output_rep = OutputRep::Quaternion;
    RotationEstimatorConfig euler = base;
    euler.output_rep = OutputRep::Euler;
    const OracleRotationEstimator a(base), b(quat), c(euler);

    Rng rng(31);
    int checked_euler = 0;
    for (int i = 0; i < 100; ++i) {
        const Rotation now = random_rotation(rng);
        const Observation obs = oracle_obs(bowl, now);
        Rng sa = rng.fork("rep", static_cast<std::uint64_t>(i), 0);
        Rng sb = rng.fork("rep", static_cast<std::uint64_t>(i), 0);
        Rng sc = rng.fork("rep", static_cast<std::uint64_t>(i), 0);
        const Rotation ra = a.estimate(obs, a.begin_round(sa), sa);
        const Rotation rb = b.estimate(obs, b.begin_round(sb), sb);
        const Rotation rc = c.estimate(obs, c.begin_round(sc), sc);
        CHECK(geodesic_distance(ra, rb) <= 1e-9);
        if (!to_euler_zyx(ra).gimbal_lock && std::abs(std::cos(to_euler_zyx(ra).pitch)) > 0.1) {
            CHECK(geodesic_distance(ra, rc) <= 1e-9);
            ++checked_euler;
        }
    }
    CHECK(checked_euler > 90);

    SUBCASE("euler at exact gimbal lock stays on target") {
        // horizontal pose whose correction is a pure 90 degree pitch
        const Rotation now = from_axis_angle(Vec3{0, 1, 0}, -M_PI / 2.0);
        const OracleRotationEstimator clean({0.0, 0.0, OutputRep::Euler});
        Rng stream(99);
        const Rotation proposal = clean.estimate(oracle_obs(bowl, now), clean.begin_round(stream), stream);
        CHECK(to_euler_zyx(proposal).gimbal_lock);
        CHECK(up_error(bowl, proposal * now) <= 1e-6);
    }
}

TEST_CASE("estimator configs are validated") {
    CHECK_THROWS_AS(OracleRotationEstimator({-0.1, 0.0, OutputRep::SixD}), std::invalid_argument);
    CHECK_THROWS_AS(OracleRotationEstimator({0.1, 1.5, OutputRep::SixD}), std::invalid_argument);
    CHECK_THROWS_AS(OracleQualityEstimator({0.5, 0.95, 0.05}), std::invalid_argument);
    CHECK_THROWS_AS(OracleQualityEstimator({0.0, 0.05, 0.95}), std::invalid_argument);
    CHECK_THROWS_AS(OracleQualityEstimator({0.0, 1.2, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(FlatPlaneEstimator(0.0), std::invalid_argument);
    CHECK_THROWS_AS(parse_output_rep("matrix"), std::invalid_argument);
    CHECK(parse_output_rep(output_rep_name(OutputRep::Euler)) == OutputRep::Euler);
}

TEST_CASE("quality oracle scores the settle outcome") {
    const ObjectModel bottle = generate_object(Family::Bottle, 1);
    Rng rng(17);

    SUBCASE("upright pose scores high, side pose low") {
        const OracleQualityEstimator est({0.0, 0.95, 0.05});
        CHECK(est.score(oracle_obs(bottle, Rotation::identity()), rng) == 0.95);
        const Rotation side = from_axis_angle(Vec3{1, 0, 0}, M_PI / 2.0);
        CHECK(est.score(oracle_obs(bottle, side), rng) == 0.05);
    }

    SUBCASE("eta inverts the label at the configured rate") {
        const OracleQualityEstimator est({0.1, 0.95, 0.05});
        const Observation obs = oracle_obs(bottle, Rotation::identity());
        int inverted = 0;
        const int n = 10000;
        for (int i = 0; i < n; ++i) {
            Rng stream = rng.fork("eta", static_cast<std::uint64_t>(i));
            if (est.score(obs, stream) == 0.05) ++inverted;
        }
        CHECK(std::abs(inverted / static_cast<double>(n) - 0.1) < 0.01);
    }
}

TEST_CASE("flat-plane baseline lays the largest face down") {
    const int kRansacIters = 500;
    const FlatPlaneEstimator baseline(0.25, 0.002, radians(10.0), kRansacIters, 16);

    SUBCASE("8x4x4 box lands on an 8x4 face") {
        const ObjectModel box = make_object("box", Family::Jar, testshapes::box(0.08, 0.04, 0.04));
        Rng rng(41);
        for (int i = 0; i < 3; ++i) {
            const Rotation now = random_rotation(rng);
            const Observation obs(nullptr, scene_capture(box, now), nullptr, std::nullopt);
            Rng stream = rng.fork("ransac", static_cast<std::uint64_t>(i));
            const Rotation executed = baseline.estimate(obs, {}, stream) * now;
            // an 8x4 face normal (body +-y or +-z) points straight down
            double best = M_PI;
            for (const Vec3& n : {Vec3{0, 1, 0}, Vec3{0, -1, 0}, Vec3{0, 0, 1}, Vec3{0, 0, -1}}) {
                const Vec3 w = executed * n;
                best = std::min(best, std::acos(std::clamp(-w.z, -1.0, 1.0)));
            }
            CHECK(degrees(best) < 5.0);
        }
    }

    SUBCASE("flat-bottomed cone is placed upright") {
        const ObjectModel cone = make_object("cone", Family::Bottle, testshapes::cone(0.04, 0.06, 48));
        Rng rng(43);
        const Rotation now = random_rotation(rng);
        const Observation obs(nullptr, scene_capture(cone, now), nullptr, std::nullopt);
        Rng stream = rng.fork("ransac");
        const Rotation executed = baseline.estimate(obs, {}, stream) * now;
        CHECK(degrees(up_error(cone, executed)) < 5.0);
    }

    SUBCASE("oracle fields stay untouched and empty scenes fail loudly") {
        const TriMesh nothing;
        const Observation obs(
            nullptr,
            [&nothing](const std::vector<Camera>& cams) { return render_depth(nothing, cams); },
            nullptr, std::nullopt);
        Rng stream(3);
        CHECK_THROWS_AS(baseline.estimate(obs, {}, stream), std::exception);
    }
}

TEST_CASE("oracle estimators never render; learned quality renders once") {
    const ObjectModel mug = generate_object(Family::Mug, 5);
    const Rotation now = from_axis_angle(Vec3{1, 0, 1}.normalized(), 0.4);
    const CameraRig rig = rig_cameras(3, 0.25);
    int captures = 0;
    const Observation obs(&rig, scene_capture(mug, now, &captures), &mug, now);

    const OracleRotationEstimator rot({radians(15.0), 0.25, OutputRep::SixD});
    const OracleQualityEstimator qual({0.0, 0.95, 0.05});
    Rng rng(8);
    RoundState round = rot.begin_round(rng);
    (void)rot.estimate(obs, round, rng);
    (void)qual.score(obs, rng);
    CHECK(captures == 0);

    QualityModel model;
    model.weights.assign(3 * static_cast<std::size_t>(kDepthPixelCount), 0.0);
    const LearnedQualityEstimator learned(model);
    CHECK(learned.score(obs, rng) == 0.5);
    CHECK(learned.score(obs, rng) == 0.5);
    CHECK(captures == 1);  // rig view cached after the first render
}

TEST_CASE("logistic quality training") {
    auto blob_image = [](double left, double right, double jitter) {
        DepthImage img;
        img.pixels.assign(kDepthPixelCount, 0.0);
        img.background.assign(kDepthPixelCount, 0);
        img.raw_min = 0.2;
        img.raw_max = 0.3;
        for (int iy = 0; iy < kDepthRes; ++iy)
            for (int ix = 0; ix < kDepthRes; ++ix)
                img.pixels[static_cast<std::size_t>(DepthImage::index(ix, iy))] =
                    (ix < 32 ? left : right) + jitter;
        return img;
    };

    SUBCASE("separable classes train to high accuracy") {
        std::vector<std::pair<std::vector<DepthImage>, bool>> data;
        Rng rng(13);
        for (int i = 0; i < 60; ++i) {
            const double j = rng.uniform(-0.05, 0.05);
            data.push_back({{blob_image(-0.4, 0.4, j)}, true});
            data.push_back({{blob_image(0.4, -0.4, j)}, false});
        }
        const QualityModel model = train_logistic_quality(data, {100, 1.0});
        int correct = 0;
        for (const auto& [images, label] : data)
            if ((quality_predict(model, images) > 0.5) == label) ++correct;
        CHECK(correct >= static_cast<int>(data.size() * 99 / 100));
    }

    SUBCASE("unbalanced datasets are rejected with counts") {
        std::vector<std::pair<std::vector<DepthImage>, bool>> data;
        data.push_back({{blob_image(0.1, 0.2, 0)}, true});
        data.push_back({{blob_image(0.1, 0.2, 0)}, true});
        data.push_back({{blob_image(0.1, 0.2, 0)}, false});
        try {
            train_logistic_quality(data, {10, 0.5});
            FAIL("expected a balance error");
        } catch (const std::invalid_argument& e) {
            const std::string msg = e.what();
            CHECK(msg.find("2 positive") != std::string::npos);
            CHECK(msg.find("1 negative") != std::string::npos);
        }
    }

    SUBCASE("model files round-trip") {
        QualityModel model;
        model.weights = {0.25, -1.5, 3.0};
        model.bias = -0.75;
        const std::filesystem::path path =
            std::filesystem::temp_directory_path() / "upright_test_model.bin";
        save_quality_model(model, path.string());
        const QualityModel back = load_quality_model(path.string());
        CHECK(back.weights == model.weights);
        CHECK(back.bias == model.bias);
        std::filesystem::remove(path);

        CHECK_THROWS_AS(load_quality_model("/nonexistent/model.bin"), std::runtime_error);
        const std::filesystem::path junk =
            std::filesystem::temp_directory_path() / "upright_test_model_junk.bin";
        std::ofstream(junk.string(), std::ios::binary) << "NOTAMODELFILE";
        CHECK_THROWS_AS(load_quality_model(junk.string()), std::runtime_error);
        std::filesystem::remove(junk);
    }

    SUBCASE("prediction validates the feature count") {
        QualityModel model;
        model.weights.assign(kDepthPixelCount, 0.0);
        CHECK_THROWS_AS(quality_predict(model, {}), std::invalid_argument);
    }
}
