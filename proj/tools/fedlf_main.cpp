// fedlf command line: run one experiment, sweep an ablation matrix, or
// verify the analytic gradients numerically.

#include <cstdio>
#include <exception>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedlf/config.hpp"
#include "fedlf/experiment.hpp"
#include "fedlf/grad_check.hpp"
#include "fedlf/gradient_suite.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out;
    std::string format;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "key=value config file");
    cmd->add_option("--set", args.sets,
                    "override, key=value (repeatable)");
    cmd->add_option("--out", args.out, "report output path");
    cmd->add_option("--format", args.format, "report format: csv or jsonl");
}

fedlf::ExperimentConfig load_config(const CommonArgs& args) {
    std::vector<std::string> overrides = args.sets;
    if (!args.out.empty()) overrides.push_back("out=" + args.out);
    if (!args.format.empty()) overrides.push_back("format=" + args.format);
    return fedlf::parse_config(args.config_path, overrides);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FedLF federated-learning simulator"};
    app.require_subcommand(1);

    CommonArgs run_args;
    CLI::App* run_cmd = app.add_subcommand("run", "run one experiment");
    add_common(run_cmd, run_args);

    CommonArgs abl_args;
    fedlf::AblationSpec abl_spec;
    CLI::App* abl_cmd = app.add_subcommand("ablate", "run an ablation matrix");
    add_common(abl_cmd, abl_args);
    abl_cmd->add_option("--lambdas", abl_spec.lambdas,
                        "center-loss weights to sweep")
        ->delimiter(',');
    abl_cmd->add_option("--gammas", abl_spec.gammas,
                        "decorrelation weights to sweep")
        ->delimiter(',');
    abl_cmd->add_option("--lc", abl_spec.lc_toggles,
                        "center-loss toggles, e.g. 0,1")
        ->delimiter(',');
    abl_cmd->add_option("--ld", abl_spec.ld_toggles,
                        "decorrelation toggles, e.g. 0,1")
        ->delimiter(',');
    abl_cmd->add_option("--seeds", abl_spec.seeds, "seeds to median over")
        ->delimiter(',');
    abl_cmd->add_option("--dir", abl_spec.out_dir, "ablation output directory");

    int gc_trials = 20;
    double gc_epsilon = 1e-5;
    double gc_tolerance = 1e-4;
    std::uint64_t gc_seed = 1;
    CLI::App* gc_cmd =
        app.add_subcommand("gradcheck", "finite-difference gradient suite");
    gc_cmd->add_option("--trials", gc_trials, "random instances per loss");
    gc_cmd->add_option("--epsilon", gc_epsilon, "finite-difference step");
    gc_cmd->add_option("--tolerance", gc_tolerance,
                       "max acceptable relative error");
    gc_cmd->add_option("--seed", gc_seed, "suite seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            fedlf::run_experiment(load_config(run_args));
            return 0;
        }
        if (abl_cmd->parsed()) {
            const auto cells =
                fedlf::run_ablation(load_config(abl_args), abl_spec);
            for (const fedlf::AblationCell& cell : cells)
                if (!cell.ok) return 1;
            return 0;
        }
        // gradcheck
        const fedlf::GradientSuiteReport report =
            fedlf::run_gradient_suite(gc_trials, gc_epsilon, gc_seed);
        std::printf("gradient suite: %d checks, worst rel error %.3e (%s)\n",
                    report.checks, report.worst_rel_error,
                    report.worst_case.c_str());
        if (report.worst_rel_error >= gc_tolerance) {
            std::fprintf(stderr, "gradcheck: above tolerance %.3e\n",
                         gc_tolerance);
            return 1;
        }
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
