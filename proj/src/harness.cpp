#include "upright/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "upright/controller.hpp"
#include "upright/mesh.hpp"
#include "upright/resting.hpp"
#include "upright/rng.hpp"

namespace upright {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kRadToDeg = 57.29577951308232;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char kDatasetMagic[] = "UPRIGHTDATA1";  // 12 bytes, no terminator on disk
constexpr std::uint32_t kDatasetVersion = 1;
constexpr std::size_t kDatasetHeaderBytes = 12 + 4 + 4 + 8;

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    if (!in.good() && !in.eof()) throw std::runtime_error("failed reading " + path.string());
    return out.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

void append_u32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_u64(std::string& s, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t read_u32(std::istream& in, const std::string& what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("truncated " + what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t read_u64(std::istream& in, const std::string& what) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("truncated " + what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

std::array<double, 9> rotation_to_array(const Rotation& r) { return r.matrix().a; }

Rotation rotation_from_array(const std::array<double, 9>& a) {
    Mat3 m;
    m.a = a;
    return Rotation::from_matrix(m);
}

std::array<double, 3> vec_to_array(const Vec3& v) { return {v.x, v.y, v.z}; }

/// Uniform point in the closed ball of the given radius.
Vec3 jitter_offset(Rng& rng, double radius) {
    if (radius <= 0.0) return {0, 0, 0};
    const Vec3 dir = random_unit_vector(rng);
    return dir * (radius * std::cbrt(rng.uniform()));
}

/// Tilt about a uniform horizontal axis by uniform(0, max_tilt), then a
/// uniform spin about z. Covers the near-upright basin evenly in azimuth.
Rotation near_upright_pose(Rng& rng, double max_tilt) {
    const double az = rng.uniform() * 2.0 * M_PI;
    const Vec3 axis{std::cos(az), std::sin(az), 0.0};
    const double tilt = rng.uniform() * max_tilt;
    const double spin = rng.uniform() * 2.0 * M_PI;
    return from_axis_angle(axis, tilt) * rotation_about_z(spin);
}

/// Rig view of an object held with its COM at `com_offset`.
std::vector<DepthImage> render_pose(const ObjectModel& obj, const CameraRig& rig,
                                    const Rotation& pose, const Vec3& com_offset) {
    return render_depth(obj, pose, com_offset - pose * obj.com, rig);
}

struct SeededObject {
    ObjectModel object;
    std::uint64_t seed = 0;
};

std::vector<SeededObject> build_seeded_objects(const HarnessConfig& cfg) {
    const Rng master(cfg.eval.master_seed);
    std::vector<SeededObject> out;
    out.reserve(static_cast<std::size_t>(all_families().size()) *
                static_cast<std::size_t>(cfg.objects.per_family));
    for (std::size_t f = 0; f < all_families().size(); ++f) {
        const Family family = all_families()[f];
        for (int i = 0; i < cfg.objects.per_family; ++i) {
            const std::uint64_t seed = master.fork("objects", f, static_cast<std::uint64_t>(i)).seed();
            ObjectModel obj =
                generate_object(family, seed, cfg.objects.scale_min, cfg.objects.scale_max);
            char name[64];
            std::snprintf(name, sizeof(name), "%s_%02d", family_name(family).c_str(), i);
            obj.name = name;
            out.push_back({std::move(obj), seed});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// metric aggregation, shared between run_eval and the report cross-check

struct Group {
    Method method = Method::Baseline;
    int set = 0;
    int object = 0;
    std::string name;
    int trials = 0;
    int failures = 0;
    int successes = 0;
    int stables = 0;
    double err_sum = 0.0;
    int err_n = 0;
};

std::vector<Group> group_rows(const std::vector<TrialRow>& rows) {
    std::vector<Group> out;
    for (const TrialRow& r : rows) {
        if (out.empty() || out.back().method != r.method || out.back().set != r.set ||
            out.back().object != r.object) {
            Group g;
            g.method = r.method;
            g.set = r.set;
            g.object = r.object;
            g.name = r.object_name;
            out.push_back(std::move(g));
        }
        Group& g = out.back();
        g.trials += 1;
        if (r.failed) g.failures += 1;
        if (r.success) g.successes += 1;
        if (r.stable) g.stables += 1;
        if (!r.failed && std::isfinite(r.angular_error_deg)) {
            g.err_sum += r.angular_error_deg;
            g.err_n += 1;
        }
    }
    return out;
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return kNaN;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

/// Sample std of n indicator values scaled to percent, k of them set.
double indicator_std(int k, int n) {
    if (n < 2) return kNaN;
    const double mean = 100.0 * k / n;
    const double ss = k * (100.0 - mean) * (100.0 - mean) + (n - k) * mean * mean;
    return std::sqrt(ss / static_cast<double>(n - 1));
}

struct MethodSummary {
    Method method = Method::Baseline;
    int trials = 0;
    int failures = 0;
    double success_rate = 0.0;  // percent, pooled over all trials
    double success_std_sets = 0.0;
    double success_std_trials = 0.0;
    double stability_rate = 0.0;
    double stability_std_sets = 0.0;
    double stability_std_trials = 0.0;
    double err_mean = 0.0;  // degrees, over non-failed trials
    double err_std_sets = 0.0;
    double err_std_trials = 0.0;
};

std::vector<MethodSummary> summarize(const std::vector<TrialRow>& rows) {
    struct SetTally {
        int trials = 0, successes = 0, stables = 0;
        double err_sum = 0.0;
        int err_n = 0;
    };
    struct Acc {
        Method method = Method::Baseline;
        std::vector<int> set_order;
        std::vector<SetTally> sets;  // parallel to set_order
        int trials = 0, failures = 0, successes = 0, stables = 0;
        std::vector<double> errs;  // pooled, row order
    };
    std::vector<Acc> accs;
    for (const TrialRow& r : rows) {
        if (accs.empty() || accs.back().method != r.method) {
            Acc a;
            a.method = r.method;
            accs.push_back(std::move(a));
        }
        Acc& a = accs.back();
        if (a.set_order.empty() || a.set_order.back() != r.set) {
            a.set_order.push_back(r.set);
            a.sets.emplace_back();
        }
        SetTally& s = a.sets.back();
        s.trials += 1;
        a.trials += 1;
        if (r.failed) a.failures += 1;
        if (r.success) {
            s.successes += 1;
            a.successes += 1;
        }
        if (r.stable) {
            s.stables += 1;
            a.stables += 1;
        }
        if (!r.failed && std::isfinite(r.angular_error_deg)) {
            s.err_sum += r.angular_error_deg;
            s.err_n += 1;
            a.errs.push_back(r.angular_error_deg);
        }
    }

    std::vector<MethodSummary> out;
    for (const Acc& a : accs) {
        MethodSummary m;
        m.method = a.method;
        m.trials = a.trials;
        m.failures = a.failures;
        m.success_rate = a.trials ? 100.0 * a.successes / a.trials : kNaN;
        m.stability_rate = a.trials ? 100.0 * a.stables / a.trials : kNaN;
        std::vector<double> succ_sets, stab_sets, err_sets;
        for (const SetTally& s : a.sets) {
            if (s.trials == 0) continue;
            succ_sets.push_back(100.0 * s.successes / s.trials);
            stab_sets.push_back(100.0 * s.stables / s.trials);
            if (s.err_n > 0) err_sets.push_back(s.err_sum / s.err_n);
        }
        m.success_std_sets = sample_std(succ_sets);
        m.stability_std_sets = sample_std(stab_sets);
        m.err_std_sets = sample_std(err_sets);
        m.success_std_trials = indicator_std(a.successes, a.trials);
        m.stability_std_trials = indicator_std(a.stables, a.trials);
        m.err_mean = a.errs.empty()
                         ? kNaN
                         : std::accumulate(a.errs.begin(), a.errs.end(), 0.0) /
                               static_cast<double>(a.errs.size());
        m.err_std_trials = sample_std(a.errs);
        out.push_back(m);
    }
    return out;
}

std::string fingerprint_comment(std::uint64_t fp) {
    return "# config_fingerprint=" + fingerprint_hex(fp) + "\n";
}

std::string build_metrics_csv(const std::vector<TrialRow>& rows, std::uint64_t fp) {
    std::ostringstream out;
    out << fingerprint_comment(fp)
        << "method,set,object,trials,failures,successes,stables,success_rate,stability_rate,"
           "angular_error_mean_deg\n";
    for (const Group& g : group_rows(rows)) {
        const double err = g.err_n ? g.err_sum / g.err_n : kNaN;
        out << method_name(g.method) << ',' << g.set << ',' << g.name << ',' << g.trials << ','
            << g.failures << ',' << g.successes << ',' << g.stables << ','
            << fmt_double(100.0 * g.successes / g.trials) << ','
            << fmt_double(100.0 * g.stables / g.trials) << ',' << fmt_double(err) << '\n';
    }
    return out.str();
}

std::string build_summary_csv(const std::vector<TrialRow>& rows, std::uint64_t fp) {
    std::ostringstream out;
    out << fingerprint_comment(fp)
        << "method,trials,failures,success_rate,success_std_sets,success_std_trials,"
           "stability_rate,stability_std_sets,stability_std_trials,angular_error_mean_deg,"
           "angular_error_std_sets,angular_error_std_trials\n";
    for (const MethodSummary& m : summarize(rows)) {
        out << method_name(m.method) << ',' << m.trials << ',' << m.failures << ','
            << fmt_double(m.success_rate) << ',' << fmt_double(m.success_std_sets) << ','
            << fmt_double(m.success_std_trials) << ',' << fmt_double(m.stability_rate) << ','
            << fmt_double(m.stability_std_sets) << ',' << fmt_double(m.stability_std_trials)
            << ',' << fmt_double(m.err_mean) << ',' << fmt_double(m.err_std_sets) << ','
            << fmt_double(m.err_std_trials) << '\n';
    }
    return out.str();
}

std::string method_table_text(const std::vector<TrialRow>& rows, bool with_counts) {
    std::ostringstream out;
    char line[256];
    if (with_counts) {
        std::snprintf(line, sizeof(line), "%-10s %7s %7s   %-16s %-16s %-16s\n", "method",
                      "trials", "failed", "success %", "stable %", "mean error (deg)");
    } else {
        std::snprintf(line, sizeof(line), "%-10s %-16s %-16s %-16s\n", "method", "success %",
                      "stable %", "mean error (deg)");
    }
    out << line;
    for (const MethodSummary& m : summarize(rows)) {
        char succ[32], stab[32], err[32];
        std::snprintf(succ, sizeof(succ), "%5.1f +/- %4.1f", m.success_rate, m.success_std_sets);
        std::snprintf(stab, sizeof(stab), "%5.1f +/- %4.1f", m.stability_rate,
                      m.stability_std_sets);
        std::snprintf(err, sizeof(err), "%5.1f +/- %4.1f", m.err_mean, m.err_std_sets);
        if (with_counts) {
            std::snprintf(line, sizeof(line), "%-10s %7d %7d   %-16s %-16s %-16s\n",
                          method_name(m.method).c_str(), m.trials, m.failures, succ, stab, err);
        } else {
            std::snprintf(line, sizeof(line), "%-10s %-16s %-16s %-16s\n",
                          method_name(m.method).c_str(), succ, stab, err);
        }
        out << line;
    }
    return out.str();
}

json row_to_json(const TrialRow& r) {
    json steps = json::array();
    for (const TrialStep& s : r.steps) {
        json js;
        js["round"] = s.round;
        js["proposal_deg"] = s.proposal_deg;
        js["error_deg"] = s.error_deg;
        if (std::isfinite(s.quality)) {
            js["quality"] = s.quality;
        } else {
            js["quality"] = nullptr;
        }
        steps.push_back(std::move(js));
    }
    json j;
    j["method"] = method_name(r.method);
    j["set"] = r.set;
    j["object"] = r.object_name;
    j["object_index"] = r.object;
    j["trial"] = r.trial;
    j["failed"] = r.failed;
    j["success"] = r.success;
    j["stable"] = r.stable;
    if (std::isfinite(r.angular_error_deg)) {
        j["angular_error_deg"] = r.angular_error_deg;
    } else {
        j["angular_error_deg"] = nullptr;
    }
    j["iterations"] = r.iterations;
    j["rounds"] = r.rounds;
    j["steps"] = std::move(steps);
    return j;
}

TrialRow row_from_json(const json& j) {
    TrialRow r;
    r.method = parse_method(j.at("method").get<std::string>());
    r.set = j.at("set").get<int>();
    r.object = j.at("object_index").get<int>();
    r.object_name = j.at("object").get<std::string>();
    r.trial = j.at("trial").get<int>();
    r.failed = j.at("failed").get<bool>();
    r.success = j.at("success").get<bool>();
    r.stable = j.at("stable").get<bool>();
    const json& err = j.at("angular_error_deg");
    r.angular_error_deg = err.is_null() ? kNaN : err.get<double>();
    r.iterations = j.at("iterations").get<int>();
    r.rounds = j.at("rounds").get<int>();
    for (const json& js : j.at("steps")) {
        TrialStep s;
        s.round = js.at("round").get<int>();
        s.proposal_deg = js.at("proposal_deg").get<double>();
        s.error_deg = js.at("error_deg").get<double>();
        const json& q = js.at("quality");
        s.quality = q.is_null() ? kNaN : q.get<double>();
        r.steps.push_back(s);
    }
    return r;
}

std::string dataset_header(std::uint32_t count, std::uint64_t fp) {
    std::string out(kDatasetMagic, 12);
    append_u32(out, kDatasetVersion);
    append_u32(out, count);
    append_u64(out, fp);
    return out;
}

std::string encode_dataset_record(const DatasetRecord& rec) {
    json meta;
    meta["object"] = rec.object;
    meta["pose"] = rotation_to_array(rec.pose);
    meta["translation"] = vec_to_array(rec.translation);
    meta["ground_truth"] = rotation_to_array(rec.ground_truth);
    meta["ground_truth_6d"] = rec.ground_truth_6d.v;
    meta["quality"] = rec.quality;
    const std::string js = meta.dump();
    std::string out;
    append_u32(out, static_cast<std::uint32_t>(js.size()));
    out += js;
    out.push_back(static_cast<char>(static_cast<unsigned char>(rec.images.size())));
    for (const DepthImage& img : rec.images) {
        const std::vector<std::uint8_t> bytes = serialize_depth_image(img);
        out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    }
    return out;
}

}  // namespace

const std::vector<Method>& all_methods() {
    static const std::vector<Method> methods{Method::Baseline, Method::SP, Method::ITR,
                                             Method::ITRQ};
    return methods;
}

std::string method_name(Method m) {
    switch (m) {
        case Method::Baseline: return "baseline";
        case Method::SP: return "sp";
        case Method::ITR: return "itr";
        case Method::ITRQ: return "itrq";
    }
    throw std::invalid_argument("method_name: unknown method");
}

Method parse_method(const std::string& name) {
    std::string low = name;
    std::transform(low.begin(), low.end(), low.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (Method m : all_methods()) {
        if (method_name(m) == low) return m;
    }
    throw std::invalid_argument("unknown method '" + name +
                                "' (expected baseline, sp, itr or itrq)");
}

std::vector<ObjectModel> build_object_set(const HarnessConfig& cfg) {
    std::vector<ObjectModel> out;
    for (SeededObject& s : build_seeded_objects(cfg)) out.push_back(std::move(s.object));
    return out;
}

std::vector<std::vector<int>> build_test_sets(const HarnessConfig& cfg, int object_count) {
    const int need = cfg.eval.test_sets * cfg.eval.objects_per_set;
    if (need > object_count) {
        throw std::invalid_argument("test sets need " + std::to_string(need) +
                                    " objects but the pool has " + std::to_string(object_count));
    }
    std::vector<int> idx(static_cast<std::size_t>(object_count));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = Rng(cfg.eval.master_seed).fork("test_sets");
    for (int i = object_count - 1; i > 0; --i) {
        const std::uint64_t j = rng.uniform_index(static_cast<std::uint64_t>(i) + 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    std::vector<std::vector<int>> sets;
    for (int s = 0; s < cfg.eval.test_sets; ++s) {
        std::vector<int> set(idx.begin() + static_cast<std::ptrdiff_t>(s) * cfg.eval.objects_per_set,
                             idx.begin() +
                                 static_cast<std::ptrdiff_t>(s + 1) * cfg.eval.objects_per_set);
        std::sort(set.begin(), set.end());
        sets.push_back(std::move(set));
    }
    return sets;
}

void gen_objects(const HarnessConfig& cfg, const std::string& out_dir) {
    validate_config(cfg);
    const fs::path dir = fs::path(out_dir) / "objects";
    fs::create_directories(dir);
    const std::vector<SeededObject> objects = build_seeded_objects(cfg);

    std::ostringstream manifest;
    json header;
    header["kind"] = "objects";
    header["version"] = 1;
    header["config_fingerprint"] = fingerprint_hex(config_fingerprint(cfg));
    header["count"] = objects.size();
    manifest << header.dump() << '\n';

    for (const SeededObject& s : objects) {
        const ObjectModel& obj = s.object;
        save_obj(obj.mesh, (dir / (obj.name + ".obj")).string());
        json j;
        j["name"] = obj.name;
        j["family"] = family_name(obj.family);
        j["seed"] = s.seed;
        j["vertices"] = obj.mesh.vertices.size();
        j["faces"] = obj.mesh.faces.size();
        j["volume"] = obj.volume;
        j["com"] = vec_to_array(obj.com);
        j["upright"] = vec_to_array(obj.upright);
        manifest << j.dump() << '\n';
    }
    write_file(dir / "manifest.jsonl", manifest.str());
}

void gen_dataset(const HarnessConfig& cfg, const std::string& out_dir) {
    validate_config(cfg);
    const std::vector<ObjectModel> objects = build_object_set(cfg);
    const CameraRig rig = rig_cameras(cfg.rig.cameras, cfg.rig.radius);
    const fs::path dir = fs::path(out_dir) / "dataset";
    fs::create_directories(dir);
    const std::uint64_t fp = config_fingerprint(cfg);
    const Rng master(cfg.eval.master_seed);

    const fs::path bin_path = dir / "dataset.bin";
    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) throw std::runtime_error("cannot open " + bin_path.string() + " for writing");
    const std::string header = dataset_header(static_cast<std::uint32_t>(cfg.dataset.count), fp);
    bin.write(header.data(), static_cast<std::streamsize>(header.size()));

    struct RecordInfo {
        std::uint64_t offset = 0;
        std::uint32_t length = 0;
        bool quality = false;
    };
    std::vector<RecordInfo> infos;
    infos.reserve(static_cast<std::size_t>(cfg.dataset.count));
    std::vector<int> obj_count(objects.size(), 0), obj_pos(objects.size(), 0);
    std::uint64_t offset = header.size();

    for (int i = 0; i < cfg.dataset.count; ++i) {
        Rng rng = master.fork("dataset", static_cast<std::uint64_t>(i));
        const std::size_t oi = rng.uniform_index(objects.size());
        const ObjectModel& obj = objects[oi];
        const bool near = rng.bernoulli(cfg.dataset.near_upright_fraction);
        DatasetRecord rec;
        rec.object = obj.name;
        rec.pose = near ? near_upright_pose(rng, cfg.dataset.near_upright_tilt)
                        : random_rotation(rng);
        rec.translation = jitter_offset(rng, cfg.dataset.position_jitter);
        rec.ground_truth = ground_truth_rotation(rec.pose * obj.upright);
        rec.ground_truth_6d = to_sixd(rec.ground_truth);
        rec.quality = placement_quality_label(obj, rec.pose, cfg.sim);
        rec.images = render_pose(obj, rig, rec.pose, rec.translation);

        const std::string bytes = encode_dataset_record(rec);
        bin.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        infos.push_back({offset, static_cast<std::uint32_t>(bytes.size()), rec.quality});
        offset += bytes.size();
        obj_count[oi] += 1;
        if (rec.quality) obj_pos[oi] += 1;
    }
    bin.close();
    if (!bin) throw std::runtime_error("failed writing " + bin_path.string());

    int positives = 0;
    for (const RecordInfo& info : infos) positives += info.quality ? 1 : 0;
    const int negatives = cfg.dataset.count - positives;
    const int k = std::min(positives, negatives);

    // first k of each class, kept in record order
    const fs::path bal_path = dir / "balanced.bin";
    {
        std::ifstream src(bin_path, std::ios::binary);
        if (!src) throw std::runtime_error("cannot reopen " + bin_path.string());
        std::ofstream bal(bal_path, std::ios::binary);
        if (!bal) throw std::runtime_error("cannot open " + bal_path.string() + " for writing");
        const std::string bal_header = dataset_header(static_cast<std::uint32_t>(2 * k), fp);
        bal.write(bal_header.data(), static_cast<std::streamsize>(bal_header.size()));
        int pos_taken = 0, neg_taken = 0;
        std::vector<char> buf;
        for (const RecordInfo& info : infos) {
            int& taken = info.quality ? pos_taken : neg_taken;
            if (taken >= k) continue;
            taken += 1;
            buf.resize(info.length);
            src.seekg(static_cast<std::streamoff>(info.offset));
            if (!src.read(buf.data(), info.length)) {
                throw std::runtime_error("failed reading back " + bin_path.string());
            }
            bal.write(buf.data(), info.length);
        }
        bal.close();
        if (!bal) throw std::runtime_error("failed writing " + bal_path.string());
    }

    json summary;
    summary["kind"] = "dataset_summary";
    summary["config_fingerprint"] = fingerprint_hex(fp);
    summary["count"] = cfg.dataset.count;
    summary["positives"] = positives;
    summary["negatives"] = negatives;
    summary["balanced_count"] = 2 * k;
    json per_object = json::object();
    for (std::size_t i = 0; i < objects.size(); ++i) {
        json j;
        j["count"] = obj_count[i];
        j["positive"] = obj_pos[i];
        per_object[objects[i].name] = std::move(j);
    }
    summary["objects"] = std::move(per_object);
    json warnings = json::array();
    for (std::size_t i = 0; i < objects.size(); ++i) {
        if (obj_count[i] == 0) warnings.push_back("object " + objects[i].name + " drew no samples");
    }
    if (k == 0) warnings.push_back("balanced subset is empty: one class has no samples");
    summary["warnings"] = std::move(warnings);
    write_file(dir / "dataset_summary.json", summary.dump(2) + "\n");
}

std::vector<DatasetRecord> load_dataset(const std::string& path, std::uint64_t* fingerprint_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[12];
    if (!in.read(magic, 12) || std::string(magic, 12) != std::string(kDatasetMagic, 12)) {
        throw std::runtime_error(path + ": not a dataset file");
    }
    const std::uint32_t version = read_u32(in, "dataset header");
    if (version != kDatasetVersion) {
        throw std::runtime_error(path + ": unsupported dataset version " + std::to_string(version));
    }
    const std::uint32_t count = read_u32(in, "dataset header");
    const std::uint64_t fp = read_u64(in, "dataset header");
    if (fingerprint_out) *fingerprint_out = fp;

    std::vector<DatasetRecord> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t json_len = read_u32(in, "record header");
        std::string js(json_len, '\0');
        if (!in.read(js.data(), json_len)) throw std::runtime_error(path + ": truncated record");
        json meta;
        try {
            meta = json::parse(js);
        } catch (const json::exception& e) {
            throw std::runtime_error(path + ": bad record metadata: " + e.what());
        }
        DatasetRecord rec;
        try {
            rec.object = meta.at("object").get<std::string>();
            rec.pose = rotation_from_array(meta.at("pose").get<std::array<double, 9>>());
            const auto t = meta.at("translation").get<std::array<double, 3>>();
            rec.translation = {t[0], t[1], t[2]};
            rec.ground_truth =
                rotation_from_array(meta.at("ground_truth").get<std::array<double, 9>>());
            rec.ground_truth_6d.v = meta.at("ground_truth_6d").get<std::array<double, 6>>();
            rec.quality = meta.at("quality").get<bool>();
        } catch (const json::exception& e) {
            throw std::runtime_error(path + ": bad record metadata: " + e.what());
        }
        unsigned char n_images = 0;
        if (!in.read(reinterpret_cast<char*>(&n_images), 1)) {
            throw std::runtime_error(path + ": truncated record");
        }
        std::vector<std::uint8_t> buf(kDepthImageBytes);
        for (unsigned char im = 0; im < n_images; ++im) {
            if (!in.read(reinterpret_cast<char*>(buf.data()),
                         static_cast<std::streamsize>(buf.size()))) {
                throw std::runtime_error(path + ": truncated image data");
            }
            rec.images.push_back(deserialize_depth_image(buf.data(), buf.size()));
        }
        out.push_back(std::move(rec));
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw std::runtime_error(path + ": trailing bytes after last record");
    }
    return out;
}

EvalResult evaluate(const HarnessConfig& cfg, const EvalOptions& opts) {
    validate_config(cfg);
    EvalResult res;
    res.fingerprint = config_fingerprint(cfg);
    const std::vector<ObjectModel> objects = build_object_set(cfg);
    for (const ObjectModel& obj : objects) {
        res.object_names.push_back(obj.name);
        res.object_families.push_back(obj.family);
    }
    res.test_sets = build_test_sets(cfg, static_cast<int>(objects.size()));

    const CameraRig rig = rig_cameras(cfg.rig.cameras, cfg.rig.radius);
    RotationEstimatorConfig rcfg = cfg.rotation_estimator;
    rcfg.sigma *= cfg.camera_study.sigma_multiplier[static_cast<std::size_t>(cfg.rig.cameras - 1)];
    const OracleRotationEstimator oracle(rcfg);
    const FlatPlaneEstimator flat(cfg.rig.radius);
    const OracleQualityEstimator quality(cfg.quality_estimator, cfg.sim);
    const Rng master(cfg.eval.master_seed);

    std::vector<Method> methods = opts.methods.empty() ? all_methods() : opts.methods;
    {
        // canonical order, duplicates dropped
        std::vector<Method> ordered;
        for (Method m : all_methods()) {
            if (std::find(methods.begin(), methods.end(), m) != methods.end()) {
                ordered.push_back(m);
            }
        }
        methods = std::move(ordered);
    }

    for (Method m : methods) {
        ControllerConfig ctl = cfg.controller;
        ctl.policy = m == Method::ITR   ? Policy::ITR
                     : m == Method::ITRQ ? Policy::ITRQ
                                         : Policy::SP;
        const RotationEstimator& estimator =
            m == Method::Baseline ? static_cast<const RotationEstimator&>(flat) : oracle;
        const QualityEstimator* quality_estimator = m == Method::ITRQ ? &quality : nullptr;
        for (std::size_t s = 0; s < res.test_sets.size(); ++s) {
            for (int o : res.test_sets[s]) {
                const ObjectModel& obj = objects[static_cast<std::size_t>(o)];
                for (int t = 0; t < cfg.eval.trials_per_object; ++t) {
                    const Rng trial_rng =
                        master.fork("trial", static_cast<std::uint64_t>(m),
                                    static_cast<std::uint64_t>(o), static_cast<std::uint64_t>(t));
                    Rng pose_rng = trial_rng.fork("pose");
                    const Rotation start = random_rotation(pose_rng);
                    Rng jitter_rng = trial_rng.fork("jitter");
                    const Vec3 jitter = jitter_offset(jitter_rng, cfg.eval.position_jitter);

                    TrialRow row;
                    row.method = m;
                    row.set = static_cast<int>(s);
                    row.object = o;
                    row.object_name = obj.name;
                    row.trial = t;
                    SimWorld world(obj, rig, start, jitter);
                    try {
                        const TrialTrace trace =
                            run_trial(world, estimator, quality_estimator, ctl, trial_rng, cfg.sim);
                        row.success = trace.success;
                        row.stable = trace.stable;
                        row.angular_error_deg = trace.angular_error_deg;
                        row.iterations = static_cast<int>(trace.records.size());
                        row.rounds = trace.rounds;
                        for (const IterationRecord& rec : trace.records) {
                            TrialStep step;
                            step.round = rec.round;
                            step.proposal_deg = rotation_angle(rec.proposed) * kRadToDeg;
                            step.error_deg = upright_angle(obj, rec.orientation) * kRadToDeg;
                            step.quality = rec.quality;
                            row.steps.push_back(step);
                        }
                    } catch (const std::exception&) {
                        row.failed = true;
                        row.angular_error_deg = kNaN;
                    }
                    res.rows.push_back(std::move(row));
                }
            }
        }
    }
    return res;
}

void run_eval(const HarnessConfig& cfg, const std::string& out_dir, const EvalOptions& opts) {
    const EvalResult res = evaluate(cfg, opts);
    const fs::path dir = fs::path(out_dir) / "eval";
    fs::create_directories(dir);

    std::ostringstream traces;
    json header;
    header["kind"] = "traces";
    header["version"] = 1;
    header["config_fingerprint"] = fingerprint_hex(res.fingerprint);
    traces << header.dump() << '\n';
    for (const TrialRow& row : res.rows) traces << row_to_json(row).dump() << '\n';
    write_file(dir / "traces.jsonl", traces.str());

    write_file(dir / "metrics.csv", build_metrics_csv(res.rows, res.fingerprint));
    write_file(dir / "summary.csv", build_summary_csv(res.rows, res.fingerprint));

    std::ostringstream txt;
    const double mult =
        cfg.camera_study.sigma_multiplier[static_cast<std::size_t>(cfg.rig.cameras - 1)];
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "upright placement evaluation\nconfig fingerprint: %s\n"
                  "cameras: %d (sigma multiplier %g, effective sigma %.4g deg)\n"
                  "objects: %d | test sets: %d x %d | trials per object per method: %d\n\n",
                  fingerprint_hex(res.fingerprint).c_str(), cfg.rig.cameras, mult,
                  cfg.rotation_estimator.sigma * mult * kRadToDeg,
                  static_cast<int>(res.object_names.size()), cfg.eval.test_sets,
                  cfg.eval.objects_per_set, cfg.eval.trials_per_object);
    txt << buf << method_table_text(res.rows, true)
        << "\n+/- is the sample std across test sets; per-trial stds are in summary.csv.\n";
    write_file(dir / "summary.txt", txt.str());

    write_file(dir / "config_used.ini", canonical_config_string(cfg));

    if (cfg.quality_model.enabled) {
        QualityModel model;
        const QualityModelReport report = train_quality_model(cfg, &model);
        save_quality_model(model, (dir / "quality_model.bin").string());
        json j;
        j["kind"] = "quality_model";
        j["config_fingerprint"] = fingerprint_hex(res.fingerprint);
        j["train_count"] = report.train_count;
        j["test_count"] = report.test_count;
        j["accuracy"] = report.accuracy;
        write_file(dir / "quality_model.json", j.dump(2) + "\n");
    }
}

std::vector<TrialRow> load_traces(const std::string& path, std::uint64_t* fingerprint_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<TrialRow> rows;
    std::string line;
    bool header_seen = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        line_no += 1;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        try {
            if (!header_seen) {
                if (j.value("kind", "") != "traces") {
                    throw std::runtime_error(path + ": first record is not a traces header");
                }
                if (fingerprint_out) {
                    *fingerprint_out =
                        std::stoull(j.at("config_fingerprint").get<std::string>(), nullptr, 16);
                }
                header_seen = true;
                continue;
            }
            rows.push_back(row_from_json(j));
        } catch (const json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!header_seen) throw std::runtime_error(path + ": missing traces header record");
    return rows;
}

void write_report(const std::string& results_dir, const std::string& out_dir) {
    const fs::path results(results_dir);
    const fs::path traces_path = results / "traces.jsonl";
    const fs::path metrics_path = results / "metrics.csv";
    const fs::path summary_path = results / "summary.csv";
    for (const fs::path& p : {traces_path, metrics_path, summary_path}) {
        if (!fs::exists(p)) throw std::runtime_error("report: missing " + p.string());
    }
    std::uint64_t fp = 0;
    const std::vector<TrialRow> rows = load_traces(traces_path.string(), &fp);
    if (rows.empty()) throw std::runtime_error("report: no trials in " + traces_path.string());

    // the stored per-object and per-method tables must be exactly reproducible
    // from the traces, or something edited one of them
    if (build_metrics_csv(rows, fp) != read_file(metrics_path)) {
        throw std::runtime_error("report: " + metrics_path.string() +
                                 " does not match traces.jsonl; refusing to report");
    }
    if (build_summary_csv(rows, fp) != read_file(summary_path)) {
        throw std::runtime_error("report: " + summary_path.string() +
                                 " does not match traces.jsonl; refusing to report");
    }

    const fs::path dir = fs::path(out_dir) / "report";
    fs::create_directories(dir);

    std::ostringstream table_csv;
    table_csv << fingerprint_comment(fp)
              << "method,success_rate,success_std_sets,success_std_trials,stability_rate,"
                 "stability_std_sets,stability_std_trials,angular_error_mean_deg,"
                 "angular_error_std_sets,angular_error_std_trials\n";
    for (const MethodSummary& m : summarize(rows)) {
        table_csv << method_name(m.method) << ',' << fmt_double(m.success_rate) << ','
                  << fmt_double(m.success_std_sets) << ',' << fmt_double(m.success_std_trials)
                  << ',' << fmt_double(m.stability_rate) << ',' << fmt_double(m.stability_std_sets)
                  << ',' << fmt_double(m.stability_std_trials) << ',' << fmt_double(m.err_mean)
                  << ',' << fmt_double(m.err_std_sets) << ',' << fmt_double(m.err_std_trials)
                  << '\n';
    }
    write_file(dir / "table.csv", table_csv.str());

    std::ostringstream table_txt;
    table_txt << "placement results\nconfig fingerprint: " << fingerprint_hex(fp) << "\n\n"
              << method_table_text(rows, false)
              << "\n+/- is the sample std across test sets; table.csv carries per-trial stds "
                 "too.\n";
    write_file(dir / "table.txt", table_txt.str());

    std::ostringstream series;
    series << fingerprint_comment(fp)
           << "method,set,object,trial,iteration,round,proposal_deg,error_deg,quality\n";
    for (const TrialRow& r : rows) {
        for (std::size_t i = 0; i < r.steps.size(); ++i) {
            const TrialStep& s = r.steps[i];
            series << method_name(r.method) << ',' << r.set << ',' << r.object_name << ','
                   << r.trial << ',' << i << ',' << s.round << ',' << fmt_double(s.proposal_deg)
                   << ',' << fmt_double(s.error_deg) << ','
                   << (std::isfinite(s.quality) ? fmt_double(s.quality) : "") << '\n';
        }
    }
    write_file(dir / "iteration_series.csv", series.str());
}

QualityModelReport train_quality_model(const HarnessConfig& cfg, QualityModel* model_out) {
    validate_config(cfg);
    const std::vector<ObjectModel> objects = build_object_set(cfg);
    const CameraRig rig = rig_cameras(cfg.rig.cameras, cfg.rig.radius);
    const QualityModelConfig& qm = cfg.quality_model;
    const std::size_t pairs = static_cast<std::size_t>(qm.balanced_target / 2);
    const std::size_t train_pairs =
        static_cast<std::size_t>(qm.train_split * static_cast<double>(pairs));
    if (train_pairs == 0 || train_pairs >= pairs) {
        throw std::runtime_error("quality model: train split leaves an empty train or test side");
    }

    using Sample = std::vector<DepthImage>;
    std::vector<Sample> pos, neg;
    pos.reserve(pairs);
    neg.reserve(pairs);
    const Rng master(cfg.eval.master_seed);
    for (int i = 0; i < qm.dataset_count && (pos.size() < pairs || neg.size() < pairs); ++i) {
        Rng rng = master.fork("quality_model", static_cast<std::uint64_t>(i));
        const std::size_t oi = rng.uniform_index(objects.size());
        const ObjectModel& obj = objects[oi];
        const bool near = rng.bernoulli(qm.near_upright_fraction);
        const Rotation pose = near ? near_upright_pose(rng, cfg.dataset.near_upright_tilt)
                                   : random_rotation(rng);
        const bool label = placement_quality_label(obj, pose, cfg.sim);
        std::vector<Sample>& bucket = label ? pos : neg;
        if (bucket.size() >= pairs) continue;
        const Vec3 jitter = jitter_offset(rng, cfg.dataset.position_jitter);
        bucket.push_back(render_pose(obj, rig, pose, jitter));
    }
    if (pos.size() < pairs || neg.size() < pairs) {
        throw std::runtime_error(
            "quality model: could not balance " + std::to_string(qm.balanced_target) +
            " samples within " + std::to_string(qm.dataset_count) + " candidates (positives " +
            std::to_string(pos.size()) + ", negatives " + std::to_string(neg.size()) + ")");
    }

    std::vector<std::pair<Sample, bool>> train, test;
    for (std::size_t i = 0; i < pairs; ++i) {
        auto& side = i < train_pairs ? train : test;
        side.emplace_back(std::move(pos[i]), true);
        side.emplace_back(std::move(neg[i]), false);
    }

    LogisticTrainConfig tcfg;
    tcfg.epochs = qm.epochs;
    tcfg.learning_rate = qm.learning_rate;
    const QualityModel model = train_logistic_quality(train, tcfg);

    int correct = 0;
    for (const auto& [images, label] : test) {
        const bool predicted = quality_predict(model, images) >= 0.5;
        if (predicted == label) correct += 1;
    }
    QualityModelReport report;
    report.train_count = static_cast<int>(train.size());
    report.test_count = static_cast<int>(test.size());
    report.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    if (model_out) *model_out = model;
    return report;
}

}  // namespace upright
