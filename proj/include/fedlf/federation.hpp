// Round orchestration: client sampling, local multi-epoch SGD, and weighted
// server aggregation. Client updates inside a round are independent and run
// in parallel; every random draw comes from a stream keyed by
// (seed, round, client), so the trajectory is reproducible bit for bit.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "fedlf/baselines.hpp"
#include "fedlf/data.hpp"
#include "fedlf/losses.hpp"
#include "fedlf/metrics.hpp"
#include "fedlf/model.hpp"

namespace fedlf {

struct FLConfig {
    int num_rounds = 200;
    int num_clients = 20;
    double online_rate = 0.4;
    int local_epochs = 5;
    int batch_size = 32;
    double learning_rate = 0.1;
    BaselineConfig method;
    FedlfLossConfig loss;
    ModelArch arch;
    std::uint64_t seed = 1;
};

// Uniform subset of size round(online_rate * K), at least one client,
// returned sorted.
std::vector<int> sample_clients(int num_clients, double online_rate,
                                std::mt19937_64& rng);

struct LocalResult {
    ModelParams params;
    std::vector<LossBreakdown> trail;  // one mean breakdown per epoch
};

// One client's round: copy the global model, train E epochs of mini-batch
// SGD on the shard. A trailing partial batch is dropped unless the whole
// shard is smaller than one batch. FedLF additionally builds the logit
// adjustment from the shard label distribution and trainable class centers,
// both discarded when the round ends. The global params are never mutated.
LocalResult local_update(const ModelParams& global_params,
                         const ClientShard& shard,
                         const LabeledDataset& dataset, const FLConfig& config,
                         int round);

struct ClientUpload {
    ModelParams params;
    long size = 0;  // |D_k|
};

// Size-weighted average of the uploads. A single upload comes back
// bit-identical, as does a list of identical uploads.
ModelParams aggregate(const std::vector<ClientUpload>& uploads);

// Argmax class per row of the raw classifier scores (ties to the lowest id).
std::vector<int> predict(const ModelParams& params, const ModelArch& arch,
                         const Matrix& samples);

// T rounds of sample -> local updates -> aggregate -> evaluate. Returns one
// report per round; `global_out`, when non-null, receives the final model.
std::vector<RoundReport> run_training(const FLConfig& config,
                                      const LabeledDataset& dataset,
                                      const std::vector<ClientShard>& shards,
                                      const LabeledDataset& eval_set,
                                      const GroupSpec& groups,
                                      ModelParams* global_out = nullptr);

}  // namespace fedlf
