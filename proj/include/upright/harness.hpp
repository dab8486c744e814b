#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "upright/config.hpp"
#include "upright/estimator.hpp"
#include "upright/objects.hpp"
#include "upright/render.hpp"
#include "upright/so3.hpp"

namespace upright {

/// Placement methods compared by the evaluation harness. Indices are stable
/// and define the RNG substream per method, so reordering would silently
/// change every result.
enum class Method { Baseline = 0, SP = 1, ITR = 2, ITRQ = 3 };

const std::vector<Method>& all_methods();
std::string method_name(Method m);
/// Accepts the method_name strings, case-insensitive; throws
/// std::invalid_argument otherwise.
Method parse_method(const std::string& name);

/// The full object pool for a config: per_family objects of each family, in
/// family order, named <family>_<two-digit index>. Object i of family f is
/// generated from master("objects", f, i) where master seeds from
/// eval.master_seed, so the pool depends only on the config.
std::vector<ObjectModel> build_object_set(const HarnessConfig& cfg);

/// Partitions a shuffled 0..object_count-1 into eval.test_sets consecutive
/// chunks of eval.objects_per_set (indices sorted within each set). The
/// shuffle is a Fisher-Yates draw from master("test_sets").
std::vector<std::vector<int>> build_test_sets(const HarnessConfig& cfg, int object_count);

/// Writes <out_dir>/objects/<name>.obj for the whole pool plus a
/// manifest.jsonl whose first record carries the config fingerprint.
void gen_objects(const HarnessConfig& cfg, const std::string& out_dir);

/// One pose-labeled training sample: the rig images of an object dropped at
/// `pose` (plus positional jitter), the rotation that would restore upright,
/// and the settle oracle's would-it-land-upright label.
struct DatasetRecord {
    std::string object;
    Rotation pose;
    Vec3 translation;       // world COM offset applied when rendering
    Rotation ground_truth;  // ground_truth * (pose * upright) == +z
    SixD ground_truth_6d;
    bool quality = false;
    std::vector<DepthImage> images;
};

/// Writes <out_dir>/dataset/dataset.bin, balanced.bin (first-k-per-class
/// subset) and dataset_summary.json. Record i draws everything from
/// master("dataset", i), so the file depends only on the config.
void gen_dataset(const HarnessConfig& cfg, const std::string& out_dir);

/// Reads a dataset.bin/balanced.bin file back. Throws std::runtime_error on
/// malformed framing. `fingerprint_out`, if given, receives the config
/// fingerprint stamped in the header.
std::vector<DatasetRecord> load_dataset(const std::string& path,
                                        std::uint64_t* fingerprint_out = nullptr);

/// One controller step of one trial as recorded in the traces.
struct TrialStep {
    int round = 0;
    double proposal_deg = 0.0;  // executed correction magnitude
    double error_deg = 0.0;     // upright angle after executing
    double quality = 0.0;       // NaN unless the method scores quality
};

/// Outcome of one trial. `failed` marks an estimator exception; failed
/// trials keep success = stable = false and a NaN angular error, and stay in
/// the success/stability denominators but out of the angular means.
struct TrialRow {
    Method method = Method::Baseline;
    int set = 0;
    int object = 0;  // index into the object pool
    std::string object_name;
    int trial = 0;
    bool failed = false;
    bool success = false;
    bool stable = false;
    double angular_error_deg = 0.0;  // settled pose vs upright, NaN if failed
    int iterations = 0;
    int rounds = 0;
    std::vector<TrialStep> steps;
};

struct EvalResult {
    std::uint64_t fingerprint = 0;
    std::vector<std::string> object_names;
    std::vector<Family> object_families;
    std::vector<std::vector<int>> test_sets;
    std::vector<TrialRow> rows;  // ordered by (method, set, object, trial)
};

struct EvalOptions {
    std::vector<Method> methods;  // empty = all methods
};

/// Pure computation of the full evaluation grid. Trial t of object o under
/// method m runs from master("trial", int(m), o, t); trials are independent
/// of each other and of which methods were selected.
EvalResult evaluate(const HarnessConfig& cfg, const EvalOptions& opts = {});

/// evaluate() plus artifacts under <out_dir>/eval: traces.jsonl, metrics.csv,
/// summary.csv, summary.txt and config_used.ini, all byte-deterministic for
/// a given config. When quality_model.enabled it also trains the learned
/// quality scorer and writes quality_model.bin / quality_model.json.
void run_eval(const HarnessConfig& cfg, const std::string& out_dir, const EvalOptions& opts = {});

/// Reads a traces.jsonl written by run_eval. `fingerprint_out`, if given,
/// receives the fingerprint from the header record.
std::vector<TrialRow> load_traces(const std::string& path,
                                  std::uint64_t* fingerprint_out = nullptr);

/// Recomputes metrics.csv and summary.csv from the traces in results_dir and
/// refuses to write anything if they do not match the stored files exactly;
/// then writes table.csv, table.txt and iteration_series.csv under
/// <out_dir>/report.
void write_report(const std::string& results_dir, const std::string& out_dir);

struct QualityModelReport {
    int train_count = 0;
    int test_count = 0;
    double accuracy = 0.0;  // held-out fraction correct
};

/// Builds a class-balanced rendered dataset of quality_model.balanced_target
/// samples (candidate i drawn from master("quality_model", i)), trains the
/// logistic scorer on the train split and scores the held-out remainder.
/// Throws std::runtime_error if the class quotas cannot be filled within
/// quality_model.dataset_count candidates.
QualityModelReport train_quality_model(const HarnessConfig& cfg,
                                       QualityModel* model_out = nullptr);

}  // namespace upright
