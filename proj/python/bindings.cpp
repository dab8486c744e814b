#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "upright/cloud.hpp"
#include "upright/config.hpp"
#include "upright/controller.hpp"
#include "upright/estimator.hpp"
#include "upright/harness.hpp"
#include "upright/objects.hpp"
#include "upright/render.hpp"
#include "upright/resting.hpp"
#include "upright/rng.hpp"
#include "upright/so3.hpp"

namespace py = pybind11;
using namespace upright;

namespace {

Vec3 vec3_from_sequence(const py::sequence& s) {
    if (py::len(s) != 3) throw py::value_error("expected a sequence of 3 numbers");
    return Vec3{s[0].cast<double>(), s[1].cast<double>(), s[2].cast<double>()};
}

py::array_t<double> matrix_array(const Rotation& r) {
    py::array_t<double> out({3, 3});
    auto view = out.mutable_unchecked<2>();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) view(i, j) = r.matrix()(i, j);
    return out;
}

Rotation rotation_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& m) {
    if (m.ndim() != 2 || m.shape(0) != 3 || m.shape(1) != 3)
        throw py::value_error("expected a 3x3 matrix");
    Mat3 mat;
    auto view = m.unchecked<2>();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) mat(i, j) = view(i, j);
    return Rotation::from_matrix(mat);
}

py::array_t<double> pixels_array(const DepthImage& img) {
    py::array_t<double> out({kDepthRes, kDepthRes});
    auto view = out.mutable_unchecked<2>();
    for (int iy = 0; iy < kDepthRes; ++iy)
        for (int ix = 0; ix < kDepthRes; ++ix) view(iy, ix) = img.at(ix, iy);
    return out;
}

py::array_t<bool> background_array(const DepthImage& img) {
    py::array_t<bool> out({kDepthRes, kDepthRes});
    auto view = out.mutable_unchecked<2>();
    for (int iy = 0; iy < kDepthRes; ++iy)
        for (int ix = 0; ix < kDepthRes; ++ix) view(iy, ix) = img.is_background(ix, iy);
    return out;
}

EvalOptions options_from(const py::object& methods) {
    EvalOptions opts;
    if (!methods.is_none()) opts.methods = methods.cast<std::vector<Method>>();
    return opts;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Upright placement stack: rotation math, procedural objects, resting "
              "simulation, depth rendering and the evaluation harness.";
    m.attr("__version__") = "0.1.0";

    // --- random source ---
    py::class_<Rng>(m, "Rng", "Deterministic random source with named substreams.")
        .def(py::init<std::uint64_t>(), py::arg("seed"))
        .def_property_readonly("seed", &Rng::seed)
        .def(
            "fork",
            [](const Rng& rng, const std::string& name, std::uint64_t a, std::uint64_t b,
               std::uint64_t c) { return rng.fork(name, a, b, c); },
            py::arg("name"), py::arg("a") = 0, py::arg("b") = 0, py::arg("c") = 0,
            "Independent substream; consumes no draws from the parent.")
        .def("uniform", py::overload_cast<>(&Rng::uniform), "Uniform in [0, 1).")
        .def("uniform", py::overload_cast<double, double>(&Rng::uniform), py::arg("lo"),
             py::arg("hi"))
        .def("uniform_index", &Rng::uniform_index, py::arg("n"), "Uniform integer in [0, n).")
        .def("bernoulli", &Rng::bernoulli, py::arg("p"))
        .def("normal", py::overload_cast<>(&Rng::normal), "Standard normal.");

    // --- vectors and rotations ---
    py::class_<Vec3>(m, "Vec3")
        .def(py::init<double, double, double>(), py::arg("x"), py::arg("y"), py::arg("z"))
        .def(py::init(&vec3_from_sequence))
        .def_readwrite("x", &Vec3::x)
        .def_readwrite("y", &Vec3::y)
        .def_readwrite("z", &Vec3::z)
        .def("norm", &Vec3::norm)
        .def("__len__", [](const Vec3&) { return 3; })
        .def("__getitem__",
             [](const Vec3& v, int i) {
                 switch (i) {
                     case 0: return v.x;
                     case 1: return v.y;
                     case 2: return v.z;
                     default: throw py::index_error();
                 }
             })
        .def("__repr__", [](const Vec3& v) {
            std::ostringstream s;
            s << "Vec3(" << v.x << ", " << v.y << ", " << v.z << ")";
            return s.str();
        });
    py::implicitly_convertible<py::sequence, Vec3>();

    py::class_<Rotation>(m, "Rotation", "Proper rotation held as an orthonormal matrix.")
        .def(py::init<>())
        .def_static("identity", &Rotation::identity)
        .def_static("from_matrix", &rotation_from_array, py::arg("matrix"))
        .def("matrix", &matrix_array, "3x3 matrix as a numpy array.")
        .def("inverse", &Rotation::inverse)
        .def("__mul__", [](const Rotation& a, const Rotation& b) { return a * b; })
        .def("apply", [](const Rotation& r, const Vec3& v) { return r * v; }, py::arg("v"))
        .def("__repr__", [](const Rotation& r) {
            std::ostringstream s;
            s.precision(6);
            s << "Rotation([";
            for (int i = 0; i < 3; ++i) {
                s << (i ? ", [" : "[");
                for (int j = 0; j < 3; ++j) s << (j ? ", " : "") << r.matrix()(i, j);
                s << "]";
            }
            s << "])";
            return s.str();
        });

    m.def("from_axis_angle",
          [](const Vec3& axis, double angle) { return from_axis_angle(axis, angle); },
          py::arg("axis"), py::arg("angle"), "Rodrigues rotation; angle in radians.");
    m.def("to_axis_angle",
          [](const Rotation& r) {
              const AxisAngle aa = to_axis_angle(r);
              return py::make_tuple(aa.axis, aa.angle);
          },
          py::arg("rotation"), "(axis, angle) with angle in [0, pi].");
    m.def("rotation_about_z", &rotation_about_z, py::arg("angle"));
    m.def("rotation_angle", &rotation_angle, py::arg("rotation"),
          "Geodesic distance to identity, in [0, pi].");
    m.def("geodesic_distance", &geodesic_distance, py::arg("a"), py::arg("b"));
    m.def("ground_truth_rotation", &ground_truth_rotation, py::arg("upright_world"),
          "Shortest rotation mapping the given direction onto +z.");
    m.def("to_sixd",
          [](const Rotation& r) {
              const SixD s = to_sixd(r);
              py::array_t<double> out(6);
              auto view = out.mutable_unchecked<1>();
              for (int i = 0; i < 6; ++i) view(i) = s.v[static_cast<std::size_t>(i)];
              return out;
          },
          py::arg("rotation"), "First two matrix columns, column-major.");
    m.def("from_sixd",
          [](const py::sequence& s) {
              if (py::len(s) != 6) throw py::value_error("expected 6 numbers");
              SixD sd;
              for (int i = 0; i < 6; ++i)
                  sd.v[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i)].cast<double>();
              return from_sixd(sd);
          },
          py::arg("sixd"), "Gram-Schmidt decode of the 6D representation.");
    m.def("to_quaternion",
          [](const Rotation& r) {
              const Quaternion q = to_quaternion(r);
              return py::make_tuple(q.w, q.x, q.y, q.z);
          },
          py::arg("rotation"), "(w, x, y, z) with w >= 0.");
    m.def("from_quaternion",
          [](double w, double x, double y, double z) {
              return from_quaternion(Quaternion{w, x, y, z});
          },
          py::arg("w"), py::arg("x"), py::arg("y"), py::arg("z"));
    m.def("random_rotation", &random_rotation, py::arg("rng"), "Haar-uniform rotation.");
    m.def("radians", &radians, py::arg("degrees"));
    m.def("degrees", &degrees, py::arg("radians"));

    // --- objects ---
    py::enum_<Family>(m, "Family")
        .value("Bottle", Family::Bottle)
        .value("Mug", Family::Mug)
        .value("Bowl", Family::Bowl)
        .value("Jar", Family::Jar)
        .value("Pitcher", Family::Pitcher);

    py::class_<ObjectModel>(m, "ObjectModel", "Watertight mesh with canonical-pose metadata.")
        .def_readonly("name", &ObjectModel::name)
        .def_readonly("family", &ObjectModel::family)
        .def_readonly("upright", &ObjectModel::upright)
        .def_readonly("com", &ObjectModel::com)
        .def_readonly("volume", &ObjectModel::volume)
        .def_property_readonly("vertices",
                               [](const ObjectModel& o) {
                                   const auto n = static_cast<py::ssize_t>(o.mesh.vertices.size());
                                   py::array_t<double> out({n, static_cast<py::ssize_t>(3)});
                                   auto view = out.mutable_unchecked<2>();
                                   for (py::ssize_t i = 0; i < n; ++i) {
                                       const Vec3& v = o.mesh.vertices[static_cast<std::size_t>(i)];
                                       view(i, 0) = v.x;
                                       view(i, 1) = v.y;
                                       view(i, 2) = v.z;
                                   }
                                   return out;
                               })
        .def_property_readonly("faces",
                               [](const ObjectModel& o) {
                                   const auto n = static_cast<py::ssize_t>(o.mesh.faces.size());
                                   py::array_t<int> out({n, static_cast<py::ssize_t>(3)});
                                   auto view = out.mutable_unchecked<2>();
                                   for (py::ssize_t i = 0; i < n; ++i)
                                       for (py::ssize_t j = 0; j < 3; ++j)
                                           view(i, j) = o.mesh.faces[static_cast<std::size_t>(i)]
                                                                    [static_cast<std::size_t>(j)];
                                   return out;
                               })
        .def("__repr__", [](const ObjectModel& o) {
            std::ostringstream s;
            s << "ObjectModel(" << o.name << ", " << o.mesh.vertices.size() << " vertices)";
            return s.str();
        });

    m.def("generate_object", &generate_object, py::arg("family"), py::arg("seed"),
          py::arg("scale_min") = 1.0, py::arg("scale_max") = 1.0,
          "Deterministic watertight object, 6-20 cm, stable in its canonical pose.");

    // --- resting simulation ---
    py::class_<SimParams>(m, "SimParams")
        .def(py::init<>())
        .def_readwrite("contact_eps", &SimParams::contact_eps)
        .def_readwrite("stability_margin", &SimParams::stability_margin)
        .def_readwrite("max_tips", &SimParams::max_tips)
        .def_readwrite("upright_tol", &SimParams::upright_tol)
        .def_readwrite("perturb_angle", &SimParams::perturb_angle);

    py::class_<RestState>(m, "RestState")
        .def_readonly("orientation", &RestState::orientation)
        .def_readonly("settled", &RestState::settled)
        .def_readonly("tips", &RestState::tips)
        .def_readonly("energy_descent_ok", &RestState::energy_descent_ok)
        .def_readonly("min_step_drop", &RestState::min_step_drop)
        .def_readonly("support", &RestState::support);

    m.def("settle", &settle, py::arg("object"), py::arg("start"),
          py::arg("params") = SimParams{},
          "Quasi-static resting pose from the given start orientation.");
    m.def("upright_angle", &upright_angle, py::arg("object"), py::arg("orientation"),
          "Angle between the rotated canonical up direction and world z.");
    m.def("is_upright", &is_upright, py::arg("object"), py::arg("orientation"),
          py::arg("tol") = SimParams{}.upright_tol);
    m.def("placement_quality_label", &placement_quality_label, py::arg("object"),
          py::arg("start"), py::arg("params") = SimParams{},
          "Released from start, does the object settle upright?");
    m.def("stability_check", &stability_check, py::arg("object"), py::arg("rest"),
          py::arg("params") = SimParams{},
          "Does the resting pose survive small perturbations?");

    // --- rendering ---
    py::class_<Camera>(m, "Camera")
        .def(py::init<const Vec3&, const Vec3&, const Vec3&, double>(), py::arg("position"),
             py::arg("target"), py::arg("up_hint"), py::arg("fov_deg") = 60.0)
        .def_readonly("position", &Camera::position)
        .def_readonly("target", &Camera::target)
        .def_readonly("fov_deg", &Camera::fov_deg)
        .def("ray_dir", &Camera::ray_dir, py::arg("ix"), py::arg("iy"));

    py::class_<CameraRig>(m, "CameraRig").def_readonly("cameras", &CameraRig::cameras);

    py::class_<DepthImage>(m, "DepthImage", "Normalized 64x64 depth image.")
        .def_readonly("camera_id", &DepthImage::camera_id)
        .def_readonly("raw_min", &DepthImage::raw_min)
        .def_readonly("raw_max", &DepthImage::raw_max)
        .def_property_readonly("pixels", &pixels_array, "(64, 64) array, row-major, iy first.")
        .def_property_readonly("background", &background_array, "(64, 64) bool array.")
        .def("all_background", &DepthImage::all_background);

    m.def("rig_cameras", &rig_cameras, py::arg("count"), py::arg("radius"),
          "1-4 cameras on the z=0 circle, aimed at the origin.");
    m.def("render_depth",
          [](const ObjectModel& object, const Rotation& r, const Vec3& t, const CameraRig& rig) {
              return render_depth(object, r, t, rig);
          },
          py::arg("object"), py::arg("rotation"), py::arg("translation"), py::arg("rig"),
          "Ray-cast depth images of the posed object, one per camera.");

    // --- controller helpers ---
    py::class_<FilterResult>(m, "FilterResult")
        .def_readonly("rotation", &FilterResult::rotation)
        .def_readonly("frames_used", &FilterResult::frames_used)
        .def_readonly("agreed", &FilterResult::agreed);

    m.def("filter_rotation_stream", &filter_rotation_stream, py::arg("stream"),
          py::arg("window") = 5, py::arg("agree_tol") = 0.17453292519943295,
          py::arg("max_frames") = 100,
          "Moving-window agreement filter over a rotation stream.");
    m.def("canonicalize_execution", &canonicalize_execution, py::arg("rotation"),
          "Twist-free equivalent command.");

    // --- configuration ---
    py::enum_<OutputRep>(m, "OutputRep")
        .value("SixD", OutputRep::SixD)
        .value("Quaternion", OutputRep::Quaternion)
        .value("Euler", OutputRep::Euler);

    py::enum_<Policy>(m, "Policy")
        .value("SP", Policy::SP)
        .value("ITR", Policy::ITR)
        .value("ITRQ", Policy::ITRQ);

    py::class_<ObjectsConfig>(m, "ObjectsConfig")
        .def(py::init<>())
        .def_readwrite("per_family", &ObjectsConfig::per_family)
        .def_readwrite("scale_min", &ObjectsConfig::scale_min)
        .def_readwrite("scale_max", &ObjectsConfig::scale_max);

    py::class_<RigConfig>(m, "RigConfig")
        .def(py::init<>())
        .def_readwrite("cameras", &RigConfig::cameras)
        .def_readwrite("radius", &RigConfig::radius);

    py::class_<CameraStudyConfig>(m, "CameraStudyConfig")
        .def(py::init<>())
        .def_property(
            "sigma_multiplier",
            [](const CameraStudyConfig& c) {
                return std::vector<double>(c.sigma_multiplier.begin(), c.sigma_multiplier.end());
            },
            [](CameraStudyConfig& c, const std::vector<double>& v) {
                if (v.size() != 4) throw py::value_error("expected 4 multipliers");
                std::copy(v.begin(), v.end(), c.sigma_multiplier.begin());
            });

    py::class_<RotationEstimatorConfig>(m, "RotationEstimatorConfig")
        .def(py::init<>())
        .def_readwrite("sigma", &RotationEstimatorConfig::sigma)
        .def_readwrite("p_flip", &RotationEstimatorConfig::p_flip)
        .def_readwrite("output_rep", &RotationEstimatorConfig::output_rep);

    py::class_<QualityEstimatorConfig>(m, "QualityEstimatorConfig")
        .def(py::init<>())
        .def_readwrite("eta", &QualityEstimatorConfig::eta)
        .def_readwrite("score_high", &QualityEstimatorConfig::score_high)
        .def_readwrite("score_low", &QualityEstimatorConfig::score_low);

    py::class_<ControllerConfig>(m, "ControllerConfig")
        .def(py::init<>())
        .def_readwrite("max_iter", &ControllerConfig::max_iter)
        .def_readwrite("max_restart", &ControllerConfig::max_restart)
        .def_readwrite("eps_quality", &ControllerConfig::eps_quality)
        .def_readwrite("eps_rotation", &ControllerConfig::eps_rotation)
        .def_readwrite("policy", &ControllerConfig::policy)
        .def_readwrite("canonicalize", &ControllerConfig::canonicalize);

    py::class_<EvalConfig>(m, "EvalConfig")
        .def(py::init<>())
        .def_readwrite("test_sets", &EvalConfig::test_sets)
        .def_readwrite("objects_per_set", &EvalConfig::objects_per_set)
        .def_readwrite("trials_per_object", &EvalConfig::trials_per_object)
        .def_readwrite("position_jitter", &EvalConfig::position_jitter)
        .def_readwrite("master_seed", &EvalConfig::master_seed);

    py::class_<DatasetConfig>(m, "DatasetConfig")
        .def(py::init<>())
        .def_readwrite("count", &DatasetConfig::count)
        .def_readwrite("near_upright_fraction", &DatasetConfig::near_upright_fraction)
        .def_readwrite("near_upright_tilt", &DatasetConfig::near_upright_tilt)
        .def_readwrite("position_jitter", &DatasetConfig::position_jitter);

    py::class_<QualityModelConfig>(m, "QualityModelConfig")
        .def(py::init<>())
        .def_readwrite("enabled", &QualityModelConfig::enabled)
        .def_readwrite("dataset_count", &QualityModelConfig::dataset_count)
        .def_readwrite("near_upright_fraction", &QualityModelConfig::near_upright_fraction)
        .def_readwrite("balanced_target", &QualityModelConfig::balanced_target)
        .def_readwrite("train_split", &QualityModelConfig::train_split)
        .def_readwrite("epochs", &QualityModelConfig::epochs)
        .def_readwrite("learning_rate", &QualityModelConfig::learning_rate);

    py::class_<HarnessConfig>(m, "HarnessConfig")
        .def(py::init<>())
        .def_readwrite("objects", &HarnessConfig::objects)
        .def_readwrite("rig", &HarnessConfig::rig)
        .def_readwrite("sim", &HarnessConfig::sim)
        .def_readwrite("rotation_estimator", &HarnessConfig::rotation_estimator)
        .def_readwrite("quality_estimator", &HarnessConfig::quality_estimator)
        .def_readwrite("controller", &HarnessConfig::controller)
        .def_readwrite("camera_study", &HarnessConfig::camera_study)
        .def_readwrite("eval", &HarnessConfig::eval)
        .def_readwrite("dataset", &HarnessConfig::dataset)
        .def_readwrite("quality_model", &HarnessConfig::quality_model)
        .def_readwrite("output_dir", &HarnessConfig::output_dir);

    m.def("parse_config", &parse_config, py::arg("text"), py::arg("source_name") = "<string>",
          "Strict INI parser; errors name the source and line.");
    m.def("load_config", &load_config, py::arg("path"));
    m.def("validate_config", &validate_config, py::arg("config"));
    m.def("canonical_config_string", &canonical_config_string, py::arg("config"),
          "Every key in a fixed order; re-parsing reproduces the config exactly.");
    m.def("config_fingerprint",
          [](const HarnessConfig& cfg) { return fingerprint_hex(config_fingerprint(cfg)); },
          py::arg("config"), "16-hex-digit experiment identity (ignores the output dir).");

    // --- evaluation harness ---
    py::enum_<Method>(m, "Method")
        .value("Baseline", Method::Baseline)
        .value("SP", Method::SP)
        .value("ITR", Method::ITR)
        .value("ITRQ", Method::ITRQ);

    py::class_<TrialStep>(m, "TrialStep")
        .def_readonly("round", &TrialStep::round)
        .def_readonly("proposal_deg", &TrialStep::proposal_deg)
        .def_readonly("error_deg", &TrialStep::error_deg)
        .def_readonly("quality", &TrialStep::quality);

    py::class_<TrialRow>(m, "TrialRow")
        .def_readonly("method", &TrialRow::method)
        .def_readonly("set", &TrialRow::set)
        .def_readonly("object", &TrialRow::object)
        .def_readonly("object_name", &TrialRow::object_name)
        .def_readonly("trial", &TrialRow::trial)
        .def_readonly("failed", &TrialRow::failed)
        .def_readonly("success", &TrialRow::success)
        .def_readonly("stable", &TrialRow::stable)
        .def_readonly("angular_error_deg", &TrialRow::angular_error_deg)
        .def_readonly("iterations", &TrialRow::iterations)
        .def_readonly("rounds", &TrialRow::rounds)
        .def_readonly("steps", &TrialRow::steps);

    py::class_<EvalResult>(m, "EvalResult")
        .def_property_readonly(
            "fingerprint", [](const EvalResult& r) { return fingerprint_hex(r.fingerprint); })
        .def_readonly("object_names", &EvalResult::object_names)
        .def_readonly("object_families", &EvalResult::object_families)
        .def_readonly("test_sets", &EvalResult::test_sets)
        .def_readonly("rows", &EvalResult::rows);

    py::class_<DatasetRecord>(m, "DatasetRecord")
        .def_readonly("object", &DatasetRecord::object)
        .def_readonly("pose", &DatasetRecord::pose)
        .def_readonly("translation", &DatasetRecord::translation)
        .def_readonly("ground_truth", &DatasetRecord::ground_truth)
        .def_readonly("quality", &DatasetRecord::quality)
        .def_readonly("images", &DatasetRecord::images);

    py::class_<QualityModelReport>(m, "QualityModelReport")
        .def_readonly("train_count", &QualityModelReport::train_count)
        .def_readonly("test_count", &QualityModelReport::test_count)
        .def_readonly("accuracy", &QualityModelReport::accuracy);

    m.def("build_object_set", &build_object_set, py::arg("config"),
          "The full object pool for a config, in family order.");
    m.def("evaluate",
          [](const HarnessConfig& cfg, const py::object& methods) {
              return evaluate(cfg, options_from(methods));
          },
          py::arg("config"), py::arg("methods") = py::none(),
          "Run the evaluation grid in memory; trials are independent of method selection.");
    m.def("run_eval",
          [](const HarnessConfig& cfg, const std::string& out_dir, const py::object& methods) {
              run_eval(cfg, out_dir, options_from(methods));
          },
          py::arg("config"), py::arg("out_dir"), py::arg("methods") = py::none(),
          "evaluate() plus byte-deterministic artifacts under <out_dir>/eval.");
    m.def("gen_objects", &gen_objects, py::arg("config"), py::arg("out_dir"),
          "Write the object pool as OBJ meshes plus a manifest.");
    m.def("gen_dataset", &gen_dataset, py::arg("config"), py::arg("out_dir"),
          "Write the pose-labeled training dataset and its balanced subset.");
    m.def("load_dataset",
          [](const std::string& path) {
              std::uint64_t fp = 0;
              std::vector<DatasetRecord> records = load_dataset(path, &fp);
              return py::make_tuple(std::move(records), fingerprint_hex(fp));
          },
          py::arg("path"), "Read a dataset file: (records, config_fingerprint).");
    m.def("load_traces",
          [](const std::string& path) {
              std::uint64_t fp = 0;
              std::vector<TrialRow> rows = load_traces(path, &fp);
              return py::make_tuple(std::move(rows), fingerprint_hex(fp));
          },
          py::arg("path"), "Read a traces file: (rows, config_fingerprint).");
    m.def("write_report", &write_report, py::arg("results_dir"), py::arg("out_dir"),
          "Cross-check stored metrics against the traces, then write report tables.");
    m.def("train_quality_model",
          [](const HarnessConfig& cfg) { return train_quality_model(cfg); }, py::arg("config"),
          "Train the logistic quality scorer on a balanced rendered set.");
}
