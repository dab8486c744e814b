#include "upright/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "upright/objects.hpp"

namespace upright {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

int to_int(const std::string& v) {
    int out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw std::invalid_argument("expected an integer, got '" + v + "'");
    return out;
}

std::uint64_t to_u64(const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw std::invalid_argument("expected an unsigned integer, got '" + v + "'");
    return out;
}

double to_double(const std::string& v) {
    if (v.empty()) throw std::invalid_argument("expected a number, got ''");
    char* end = nullptr;
    const double out = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size())
        throw std::invalid_argument("expected a number, got '" + v + "'");
    return out;
}

bool to_bool(const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw std::invalid_argument("expected true or false, got '" + v + "'");
}

using Setter = std::function<void(HarnessConfig&, const std::string&)>;

struct KeyEntry {
    const char* section;
    const char* key;
    Setter set;
};

const std::vector<KeyEntry>& key_table() {
    static const std::vector<KeyEntry> table = {
        {"objects", "per_family",
         [](HarnessConfig& c, const std::string& v) { c.objects.per_family = to_int(v); }},
        {"objects", "scale_min",
         [](HarnessConfig& c, const std::string& v) { c.objects.scale_min = to_double(v); }},
        {"objects", "scale_max",
         [](HarnessConfig& c, const std::string& v) { c.objects.scale_max = to_double(v); }},

        {"rig", "cameras",
         [](HarnessConfig& c, const std::string& v) { c.rig.cameras = to_int(v); }},
        {"rig", "radius",
         [](HarnessConfig& c, const std::string& v) { c.rig.radius = to_double(v); }},

        {"sim", "contact_eps",
         [](HarnessConfig& c, const std::string& v) { c.sim.contact_eps = to_double(v); }},
        {"sim", "stability_margin",
         [](HarnessConfig& c, const std::string& v) { c.sim.stability_margin = to_double(v); }},
        {"sim", "max_tips",
         [](HarnessConfig& c, const std::string& v) { c.sim.max_tips = to_int(v); }},
        {"sim", "upright_tol_deg",
         [](HarnessConfig& c, const std::string& v) { c.sim.upright_tol = radians(to_double(v)); }},
        {"sim", "perturb_angle_deg",
         [](HarnessConfig& c, const std::string& v) {
             c.sim.perturb_angle = radians(to_double(v));
         }},

        {"rotation_estimator", "sigma_deg",
         [](HarnessConfig& c, const std::string& v) {
             c.rotation_estimator.sigma = radians(to_double(v));
         }},
        {"rotation_estimator", "p_flip",
         [](HarnessConfig& c, const std::string& v) { c.rotation_estimator.p_flip = to_double(v); }},
        {"rotation_estimator", "output_rep",
         [](HarnessConfig& c, const std::string& v) {
             c.rotation_estimator.output_rep = parse_output_rep(v);
         }},

        {"quality_estimator", "eta",
         [](HarnessConfig& c, const std::string& v) { c.quality_estimator.eta = to_double(v); }},
        {"quality_estimator", "score_high",
         [](HarnessConfig& c, const std::string& v) {
             c.quality_estimator.score_high = to_double(v);
         }},
        {"quality_estimator", "score_low",
         [](HarnessConfig& c, const std::string& v) {
             c.quality_estimator.score_low = to_double(v);
         }},

        {"controller", "max_iter",
         [](HarnessConfig& c, const std::string& v) { c.controller.max_iter = to_int(v); }},
        {"controller", "max_restart",
         [](HarnessConfig& c, const std::string& v) { c.controller.max_restart = to_int(v); }},
        {"controller", "eps_quality",
         [](HarnessConfig& c, const std::string& v) { c.controller.eps_quality = to_double(v); }},
        {"controller", "eps_rotation_deg",
         [](HarnessConfig& c, const std::string& v) {
             c.controller.eps_rotation = radians(to_double(v));
         }},
        {"controller", "canonicalize",
         [](HarnessConfig& c, const std::string& v) { c.controller.canonicalize = to_bool(v); }},

        {"camera_study", "sigma_multiplier_1",
         [](HarnessConfig& c, const std::string& v) {
             c.camera_study.sigma_multiplier[0] = to_double(v);
         }},
        {"camera_study", "sigma_multiplier_2",
         [](HarnessConfig& c, const std::string& v) {
             c.camera_study.sigma_multiplier[1] = to_double(v);
         }},
        {"camera_study", "sigma_multiplier_3",
         [](HarnessConfig& c, const std::string& v) {
             c.camera_study.sigma_multiplier[2] = to_double(v);
         }},
        {"camera_study", "sigma_multiplier_4",
         [](HarnessConfig& c, const std::string& v) {
             c.camera_study.sigma_multiplier[3] = to_double(v);
         }},

        {"eval", "test_sets",
         [](HarnessConfig& c, const std::string& v) { c.eval.test_sets = to_int(v); }},
        {"eval", "objects_per_set",
         [](HarnessConfig& c, const std::string& v) { c.eval.objects_per_set = to_int(v); }},
        {"eval", "trials_per_object",
         [](HarnessConfig& c, const std::string& v) { c.eval.trials_per_object = to_int(v); }},
        {"eval", "position_jitter",
         [](HarnessConfig& c, const std::string& v) { c.eval.position_jitter = to_double(v); }},
        {"eval", "master_seed",
         [](HarnessConfig& c, const std::string& v) { c.eval.master_seed = to_u64(v); }},

        {"dataset", "count",
         [](HarnessConfig& c, const std::string& v) { c.dataset.count = to_int(v); }},
        {"dataset", "near_upright_fraction",
         [](HarnessConfig& c, const std::string& v) {
             c.dataset.near_upright_fraction = to_double(v);
         }},
        {"dataset", "near_upright_tilt_deg",
         [](HarnessConfig& c, const std::string& v) {
             c.dataset.near_upright_tilt = radians(to_double(v));
         }},
        {"dataset", "position_jitter",
         [](HarnessConfig& c, const std::string& v) { c.dataset.position_jitter = to_double(v); }},

        {"quality_model", "enabled",
         [](HarnessConfig& c, const std::string& v) { c.quality_model.enabled = to_bool(v); }},
        {"quality_model", "dataset_count",
         [](HarnessConfig& c, const std::string& v) { c.quality_model.dataset_count = to_int(v); }},
        {"quality_model", "near_upright_fraction",
         [](HarnessConfig& c, const std::string& v) {
             c.quality_model.near_upright_fraction = to_double(v);
         }},
        {"quality_model", "balanced_target",
         [](HarnessConfig& c, const std::string& v) {
             c.quality_model.balanced_target = to_int(v);
         }},
        {"quality_model", "train_split",
         [](HarnessConfig& c, const std::string& v) { c.quality_model.train_split = to_double(v); }},
        {"quality_model", "epochs",
         [](HarnessConfig& c, const std::string& v) { c.quality_model.epochs = to_int(v); }},
        {"quality_model", "learning_rate",
         [](HarnessConfig& c, const std::string& v) {
             c.quality_model.learning_rate = to_double(v);
         }},

        {"output", "dir",
         [](HarnessConfig& c, const std::string& v) { c.output_dir = v; }},
    };
    return table;
}

[[noreturn]] void fail_at(const std::string& source, int line, const std::string& what) {
    throw std::invalid_argument(source + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

HarnessConfig parse_config(const std::string& text, const std::string& source_name) {
    HarnessConfig cfg;
    std::unordered_set<std::string> known_sections;
    for (const KeyEntry& e : key_table()) known_sections.insert(e.section);

    std::unordered_set<std::string> seen;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail_at(source_name, line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (known_sections.find(section) == known_sections.end())
                fail_at(source_name, line_no, "unknown section [" + section + "]");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail_at(source_name, line_no, "expected key = value, got '" + line + "'");
        if (section.empty()) fail_at(source_name, line_no, "key outside any [section]");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail_at(source_name, line_no, "empty key");

        const KeyEntry* entry = nullptr;
        for (const KeyEntry& e : key_table()) {
            if (section == e.section && key == e.key) {
                entry = &e;
                break;
            }
        }
        if (entry == nullptr)
            fail_at(source_name, line_no, "unknown key '" + key + "' in [" + section + "]");
        if (!seen.insert(section + "." + key).second)
            fail_at(source_name, line_no, "duplicate key '" + key + "' in [" + section + "]");
        try {
            entry->set(cfg, value);
        } catch (const std::invalid_argument& err) {
            fail_at(source_name, line_no, std::string(err.what()) + " for key '" + key + "'");
        }
    }
    validate_config(cfg);
    return cfg;
}

HarnessConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

void validate_config(const HarnessConfig& cfg) {
    auto need = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("config: ") + what);
    };
    need(cfg.objects.per_family >= 1, "objects.per_family must be >= 1");
    need(cfg.objects.scale_min > 0.0, "objects.scale_min must be positive");
    need(cfg.objects.scale_max >= cfg.objects.scale_min,
         "objects.scale_max must be >= scale_min");
    need(cfg.rig.cameras >= 1 && cfg.rig.cameras <= 4, "rig.cameras must be in 1..4");
    need(cfg.rig.radius > 0.0, "rig.radius must be positive");
    need(cfg.sim.contact_eps > 0.0, "sim.contact_eps must be positive");
    need(cfg.sim.stability_margin > 0.0, "sim.stability_margin must be positive");
    need(cfg.sim.max_tips >= 1, "sim.max_tips must be >= 1");
    need(cfg.sim.upright_tol > 0.0 && cfg.sim.upright_tol < M_PI,
         "sim.upright_tol_deg must be in (0, 180)");
    need(cfg.sim.perturb_angle > 0.0 && cfg.sim.perturb_angle < M_PI / 2,
         "sim.perturb_angle_deg must be in (0, 90)");
    need(cfg.rotation_estimator.sigma >= 0.0, "rotation_estimator.sigma_deg must be >= 0");
    need(cfg.rotation_estimator.p_flip >= 0.0 && cfg.rotation_estimator.p_flip <= 1.0,
         "rotation_estimator.p_flip must be in [0, 1]");
    need(cfg.quality_estimator.eta >= 0.0 && cfg.quality_estimator.eta < 0.5,
         "quality_estimator.eta must be in [0, 0.5)");
    need(cfg.quality_estimator.score_low >= 0.0 &&
             cfg.quality_estimator.score_low < cfg.quality_estimator.score_high &&
             cfg.quality_estimator.score_high <= 1.0,
         "quality_estimator scores must satisfy 0 <= low < high <= 1");
    need(cfg.controller.max_iter >= 1, "controller.max_iter must be >= 1");
    need(cfg.controller.max_restart >= 1, "controller.max_restart must be >= 1");
    need(cfg.controller.eps_quality > 0.0 && cfg.controller.eps_quality < 1.0,
         "controller.eps_quality must be in (0, 1)");
    need(cfg.controller.eps_rotation > 0.0, "controller.eps_rotation_deg must be positive");
    for (const double m : cfg.camera_study.sigma_multiplier)
        need(m > 0.0, "camera_study multipliers must be positive");
    need(cfg.eval.test_sets >= 1, "eval.test_sets must be >= 1");
    need(cfg.eval.objects_per_set >= 1, "eval.objects_per_set must be >= 1");
    need(cfg.eval.trials_per_object >= 1, "eval.trials_per_object must be >= 1");
    need(cfg.eval.position_jitter >= 0.0, "eval.position_jitter must be >= 0");
    const int total_objects =
        static_cast<int>(all_families().size()) * cfg.objects.per_family;
    need(cfg.eval.test_sets * cfg.eval.objects_per_set <= total_objects,
         "eval test sets need more objects than [objects] generates");
    need(cfg.dataset.count >= 1, "dataset.count must be >= 1");
    need(cfg.dataset.near_upright_fraction >= 0.0 && cfg.dataset.near_upright_fraction <= 1.0,
         "dataset.near_upright_fraction must be in [0, 1]");
    need(cfg.dataset.near_upright_tilt > 0.0 && cfg.dataset.near_upright_tilt <= M_PI / 2,
         "dataset.near_upright_tilt_deg must be in (0, 90]");
    need(cfg.dataset.position_jitter >= 0.0, "dataset.position_jitter must be >= 0");
    need(cfg.quality_model.dataset_count >= 2, "quality_model.dataset_count must be >= 2");
    need(cfg.quality_model.near_upright_fraction >= 0.0 &&
             cfg.quality_model.near_upright_fraction <= 1.0,
         "quality_model.near_upright_fraction must be in [0, 1]");
    need(cfg.quality_model.balanced_target >= 2 && cfg.quality_model.balanced_target % 2 == 0,
         "quality_model.balanced_target must be an even count >= 2");
    need(cfg.quality_model.train_split > 0.0 && cfg.quality_model.train_split < 1.0,
         "quality_model.train_split must be in (0, 1)");
    need(cfg.quality_model.epochs >= 1, "quality_model.epochs must be >= 1");
    need(cfg.quality_model.learning_rate > 0.0, "quality_model.learning_rate must be positive");
    need(!cfg.output_dir.empty(), "output.dir must not be empty");
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_deg(double radians_value) { return fmt_double(degrees(radians_value)); }

}  // namespace

std::string canonical_config_string(const HarnessConfig& cfg) {
    std::ostringstream out;
    out << "[objects]\n"
        << "per_family = " << cfg.objects.per_family << "\n"
        << "scale_min = " << fmt_double(cfg.objects.scale_min) << "\n"
        << "scale_max = " << fmt_double(cfg.objects.scale_max) << "\n"
        << "\n[rig]\n"
        << "cameras = " << cfg.rig.cameras << "\n"
        << "radius = " << fmt_double(cfg.rig.radius) << "\n"
        << "\n[sim]\n"
        << "contact_eps = " << fmt_double(cfg.sim.contact_eps) << "\n"
        << "stability_margin = " << fmt_double(cfg.sim.stability_margin) << "\n"
        << "max_tips = " << cfg.sim.max_tips << "\n"
        << "upright_tol_deg = " << fmt_deg(cfg.sim.upright_tol) << "\n"
        << "perturb_angle_deg = " << fmt_deg(cfg.sim.perturb_angle) << "\n"
        << "\n[rotation_estimator]\n"
        << "sigma_deg = " << fmt_deg(cfg.rotation_estimator.sigma) << "\n"
        << "p_flip = " << fmt_double(cfg.rotation_estimator.p_flip) << "\n"
        << "output_rep = " << output_rep_name(cfg.rotation_estimator.output_rep) << "\n"
        << "\n[quality_estimator]\n"
        << "eta = " << fmt_double(cfg.quality_estimator.eta) << "\n"
        << "score_high = " << fmt_double(cfg.quality_estimator.score_high) << "\n"
        << "score_low = " << fmt_double(cfg.quality_estimator.score_low) << "\n"
        << "\n[controller]\n"
        << "max_iter = " << cfg.controller.max_iter << "\n"
        << "max_restart = " << cfg.controller.max_restart << "\n"
        << "eps_quality = " << fmt_double(cfg.controller.eps_quality) << "\n"
        << "eps_rotation_deg = " << fmt_deg(cfg.controller.eps_rotation) << "\n"
        << "canonicalize = " << (cfg.controller.canonicalize ? "true" : "false") << "\n"
        << "\n[camera_study]\n"
        << "sigma_multiplier_1 = " << fmt_double(cfg.camera_study.sigma_multiplier[0]) << "\n"
        << "sigma_multiplier_2 = " << fmt_double(cfg.camera_study.sigma_multiplier[1]) << "\n"
        << "sigma_multiplier_3 = " << fmt_double(cfg.camera_study.sigma_multiplier[2]) << "\n"
        << "sigma_multiplier_4 = " << fmt_double(cfg.camera_study.sigma_multiplier[3]) << "\n"
        << "\n[eval]\n"
        << "test_sets = " << cfg.eval.test_sets << "\n"
        << "objects_per_set = " << cfg.eval.objects_per_set << "\n"
        << "trials_per_object = " << cfg.eval.trials_per_object << "\n"
        << "position_jitter = " << fmt_double(cfg.eval.position_jitter) << "\n"
        << "master_seed = " << cfg.eval.master_seed << "\n"
        << "\n[dataset]\n"
        << "count = " << cfg.dataset.count << "\n"
        << "near_upright_fraction = " << fmt_double(cfg.dataset.near_upright_fraction) << "\n"
        << "near_upright_tilt_deg = " << fmt_deg(cfg.dataset.near_upright_tilt) << "\n"
        << "position_jitter = " << fmt_double(cfg.dataset.position_jitter) << "\n"
        << "\n[quality_model]\n"
        << "enabled = " << (cfg.quality_model.enabled ? "true" : "false") << "\n"
        << "dataset_count = " << cfg.quality_model.dataset_count << "\n"
        << "near_upright_fraction = " << fmt_double(cfg.quality_model.near_upright_fraction)
        << "\n"
        << "balanced_target = " << cfg.quality_model.balanced_target << "\n"
        << "train_split = " << fmt_double(cfg.quality_model.train_split) << "\n"
        << "epochs = " << cfg.quality_model.epochs << "\n"
        << "learning_rate = " << fmt_double(cfg.quality_model.learning_rate) << "\n"
        << "\n[output]\n"
        << "dir = " << cfg.output_dir << "\n";
    return out.str();
}

std::uint64_t config_fingerprint(const HarnessConfig& cfg) {
    HarnessConfig keyed = cfg;
    keyed.output_dir = HarnessConfig{}.output_dir;
    return fnv1a64(canonical_config_string(keyed));
}

std::string fingerprint_hex(std::uint64_t fingerprint) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fingerprint));
    return buf;
}

}  // namespace upright
