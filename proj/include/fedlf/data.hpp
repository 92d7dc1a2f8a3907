// Dataset construction: long-tailed class profiles, per-class subsampling,
// Dirichlet partitioning across clients, the CIFAR-10 binary reader, and a
// synthetic Gaussian stand-in for desk-scale runs.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedlf/losses.hpp"
#include "fedlf/matrix.hpp"

namespace fedlf {

struct LabeledDataset {
    Matrix samples;           // (N, input_dim)
    std::vector<int> labels;  // values in [0, num_classes)
    int num_classes = 0;

    int size() const { return samples.rows; }
    const std::vector<long>& class_counts() const;  // lazily cached

  private:
    mutable std::vector<long> counts_cache_;
};

struct ClientShard {
    int client_id = 0;
    std::vector<int> sample_indices;  // into the global dataset
    LabelDistribution dist;
};

struct PartitionSpec {
    int num_clients = 1;
    double dirichlet_alpha = 0.5;
    double imbalance_factor = 1.0;
    std::uint64_t seed = 0;
};

// Geometric decay from n_max down to ~n_max/IF, rounded half-up.
std::vector<long> longtail_counts(long n_max, int num_classes,
                                  double imbalance_factor);

// Uniform per-class subsample without replacement; deterministic given seed.
LabeledDataset subsample_longtail(const LabeledDataset& dataset,
                                  const std::vector<long>& counts,
                                  std::uint64_t seed);

// Per class, draw client proportions from a symmetric Dirichlet and allocate
// samples with largest-remainder rounding so every sample lands in exactly
// one shard.
std::vector<ClientShard> dirichlet_partition(const LabeledDataset& dataset,
                                             const PartitionSpec& spec);

// One CIFAR-10 binary batch file: 3073-byte records, label byte then 3072
// pixel bytes scaled to [0,1].
LabeledDataset load_cifar10_binary(const std::string& path);
LabeledDataset load_cifar10_files(const std::vector<std::string>& paths);

// Isotropic Gaussian blobs around seeded unit-norm class means scaled by
// class_spread.
LabeledDataset synth_gaussians(int num_classes, int input_dim,
                               const std::vector<long>& counts,
                               double class_spread, std::uint64_t seed);

// Dataset container in the checkpoint file format.
void save_dataset(const LabeledDataset& ds, const std::string& path);
LabeledDataset load_dataset(const std::string& path);

}  // namespace fedlf
