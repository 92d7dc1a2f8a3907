// Experiment configuration: plain key=value files plus command-line
// overrides, validated as a whole so every problem is reported at once.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedlf/federation.hpp"

namespace fedlf {

enum class DatasetKind { kSynthetic, kCifar10 };

struct ExperimentConfig {
    // data
    DatasetKind dataset = DatasetKind::kSynthetic;
    std::string data_path;  // cifar10 train batches, ';'-separated
    std::string eval_path;  // cifar10 test batch
    int num_classes = 10;
    int input_dim = 16;
    long n_max = 500;
    double imbalance_factor = 100.0;
    double class_spread = 3.0;
    long test_per_class = 100;

    // partition
    int num_clients = 20;
    double dirichlet_alpha = 0.5;

    // federation
    int num_rounds = 200;
    double online_rate = 0.4;
    int local_epochs = 5;
    int batch_size = 32;
    double learning_rate = 0.1;
    Method method = Method::kFedLf;
    double focal_gamma = 2.0;
    double prox_mu = 0.01;

    // fedlf loss
    double lambda = 0.01;
    double gamma = 0.01;
    double smoothing_factor = 0.25;
    double tau = 100.0;
    bool decorrelation_exclude_diagonal = true;

    // model
    std::vector<int> hidden_widths{64};
    int feature_dim = 32;
    Activation activation = Activation::kRelu;

    // metrics
    long head_threshold = 1500;
    long tail_threshold = 200;

    // run
    std::uint64_t seed = 1;
    std::string out = "results.csv";
    ReportFormat format = ReportFormat::kCsv;
    std::string checkpoint;  // empty: out path with a .ckpt extension

    bool operator==(const ExperimentConfig&) const = default;
};

// All parse and constraint problems, collected and reported together.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::vector<std::string>& problems);
    const std::vector<std::string>& problems() const { return problems_; }

  private:
    std::vector<std::string> problems_;
};

// `path` may be empty (defaults only); overrides are "key=value" strings
// applied after the file.
ExperimentConfig parse_config(const std::string& path,
                              const std::vector<std::string>& overrides = {});
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::string>& overrides = {});

std::string serialize_config(const ExperimentConfig& config);

// Derived views.
FLConfig to_fl_config(const ExperimentConfig& config);
std::string checkpoint_path(const ExperimentConfig& config);

}  // namespace fedlf
