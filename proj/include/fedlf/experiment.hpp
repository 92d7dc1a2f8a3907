// End-to-end experiment pipeline (data -> partition -> training -> reports)
// and the ablation matrix runner.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedlf/config.hpp"
#include "fedlf/data.hpp"
#include "fedlf/federation.hpp"
#include "fedlf/metrics.hpp"

namespace fedlf {

struct ExperimentData {
    LabeledDataset train;  // long-tailed
    LabeledDataset eval;   // balanced
    std::vector<ClientShard> shards;
    GroupSpec groups;
};

// Deterministic dataset/partition construction for the configured source.
ExperimentData build_experiment_data(const ExperimentConfig& config);

struct ExperimentOutcome {
    std::vector<RoundReport> reports;
    std::string report_file;
    std::string checkpoint_file;
};

// Full pipeline; writes the report file and final checkpoint, prints a
// one-line summary unless quiet. Throws on failure after removing partial
// outputs.
ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 bool quiet = false);

struct AblationSpec {
    std::vector<double> lambdas;         // empty: base config value
    std::vector<double> gammas;          // empty: base config value
    std::vector<int> lc_toggles;         // 0/1; empty: {1}
    std::vector<int> ld_toggles;         // 0/1; empty: {1}
    std::vector<std::uint64_t> seeds;    // empty: base seed only
    std::string out_dir = "ablation";
};

struct AblationCell {
    double lambda = 0.0;
    double gamma = 0.0;
    bool lc_on = true;
    bool ld_on = true;
    GroupAccuracies median;  // final-round accuracies, median over seeds
    bool ok = false;
    std::string error;
};

// Cross-product of the spec lists; cells run independently and one failure
// does not abort the rest. Writes per-run report files plus summary.csv in
// out_dir.
std::vector<AblationCell> run_ablation(const ExperimentConfig& base,
                                       const AblationSpec& spec,
                                       bool quiet = false);

}  // namespace fedlf
