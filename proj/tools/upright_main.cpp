#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "upright/config.hpp"
#include "upright/harness.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    unsigned long long seed = 0;
    bool seed_set = false;
    std::string out;
    bool out_set = false;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
    sub->add_option("--config", opts.config_path, "INI config file (defaults built in)")
        ->check(CLI::ExistingFile);
    sub->add_option_function<unsigned long long>(
           "--seed",
           [&opts](unsigned long long v) {
               opts.seed = v;
               opts.seed_set = true;
           },
           "override the master seed from the config");
    sub->add_option_function<std::string>(
           "--out",
           [&opts](const std::string& v) {
               opts.out = v;
               opts.out_set = true;
           },
           "output directory (UPRIGHT_OUT overrides this too)");
}

upright::HarnessConfig resolve_config(CommonOpts& opts) {
    upright::HarnessConfig cfg = opts.config_path.empty()
                                     ? upright::HarnessConfig{}
                                     : upright::load_config(opts.config_path);
    if (opts.seed_set) cfg.eval.master_seed = opts.seed;
    if (opts.out_set) cfg.output_dir = opts.out;
    if (const char* env = std::getenv("UPRIGHT_OUT"); env && *env) cfg.output_dir = env;
    upright::validate_config(cfg);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"procedural upright-placement benchmark"};
    app.require_subcommand(1);

    CommonOpts gen_objects_opts;
    CLI::App* gen_objects = app.add_subcommand("gen-objects", "write the object pool as OBJ files");
    add_common(gen_objects, gen_objects_opts);

    CommonOpts gen_dataset_opts;
    CLI::App* gen_dataset =
        app.add_subcommand("gen-dataset", "render the pose-labeled training dataset");
    add_common(gen_dataset, gen_dataset_opts);

    CommonOpts run_eval_opts;
    std::string policy;
    CLI::App* run_eval = app.add_subcommand("run-eval", "run the placement evaluation grid");
    add_common(run_eval, run_eval_opts);
    run_eval->add_option("--policy", policy,
                         "single method to run: baseline, sp, itr or itrq (default: all)");

    CommonOpts report_opts;
    std::string results_dir;
    CLI::App* report = app.add_subcommand("report", "summarize stored evaluation results");
    add_common(report, report_opts);
    report->add_option("--results", results_dir,
                       "directory holding traces.jsonl and the metric CSVs "
                       "(default: <out>/eval)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_objects->parsed()) {
            const upright::HarnessConfig cfg = resolve_config(gen_objects_opts);
            upright::gen_objects(cfg, cfg.output_dir);
            std::cout << "objects written to " << cfg.output_dir << "/objects (fingerprint "
                      << upright::fingerprint_hex(upright::config_fingerprint(cfg)) << ")\n";
        } else if (gen_dataset->parsed()) {
            const upright::HarnessConfig cfg = resolve_config(gen_dataset_opts);
            upright::gen_dataset(cfg, cfg.output_dir);
            std::cout << "dataset written to " << cfg.output_dir << "/dataset (fingerprint "
                      << upright::fingerprint_hex(upright::config_fingerprint(cfg)) << ")\n";
        } else if (run_eval->parsed()) {
            const upright::HarnessConfig cfg = resolve_config(run_eval_opts);
            upright::EvalOptions opts;
            if (!policy.empty()) opts.methods.push_back(upright::parse_method(policy));
            upright::run_eval(cfg, cfg.output_dir, opts);
            std::cout << "results written to " << cfg.output_dir << "/eval\n";
        } else if (report->parsed()) {
            const upright::HarnessConfig cfg = resolve_config(report_opts);
            const std::string results =
                results_dir.empty() ? cfg.output_dir + "/eval" : results_dir;
            upright::write_report(results, cfg.output_dir);
            std::cout << "report written to " << cfg.output_dir << "/report\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
