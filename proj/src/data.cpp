#include "fedlf/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fedlf/checkpoint.hpp"
#include "fedlf/rng.hpp"

namespace fedlf {

const std::vector<long>& LabeledDataset::class_counts() const {
    if (counts_cache_.empty() && num_classes > 0) {
        counts_cache_.assign(num_classes, 0);
        for (int y : labels) {
            if (y < 0 || y >= num_classes)
                throw std::invalid_argument("dataset: label " + std::to_string(y) +
                                            " outside [0," +
                                            std::to_string(num_classes) + ")");
            ++counts_cache_[y];
        }
    }
    return counts_cache_;
}

std::vector<long> longtail_counts(long n_max, int num_classes,
                                  double imbalance_factor) {
    if (imbalance_factor < 1.0)
        throw std::invalid_argument("longtail_counts: imbalance_factor must be >= 1");
    if (num_classes < 2)
        throw std::invalid_argument("longtail_counts: need at least 2 classes");
    if (n_max < 1)
        throw std::invalid_argument("longtail_counts: n_max must be >= 1");

    std::vector<long> counts(num_classes);
    for (int c = 0; c < num_classes; ++c) {
        double x = static_cast<double>(n_max) *
                   std::pow(imbalance_factor,
                            -static_cast<double>(c) / (num_classes - 1));
        counts[c] = static_cast<long>(std::floor(x + 0.5));  // round half-up
    }
    return counts;
}

LabeledDataset subsample_longtail(const LabeledDataset& dataset,
                                  const std::vector<long>& counts,
                                  std::uint64_t seed) {
    if (static_cast<int>(counts.size()) != dataset.num_classes)
        throw std::invalid_argument("subsample_longtail: counts length " +
                                    std::to_string(counts.size()) +
                                    " != num_classes " +
                                    std::to_string(dataset.num_classes));

    std::vector<std::vector<int>> by_class(dataset.num_classes);
    for (int i = 0; i < dataset.size(); ++i) by_class[dataset.labels[i]].push_back(i);

    std::vector<int> selected;
    for (int c = 0; c < dataset.num_classes; ++c) {
        if (counts[c] < 0 ||
            counts[c] > static_cast<long>(by_class[c].size()))
            throw std::invalid_argument(
                "subsample_longtail: class " + std::to_string(c) + " has " +
                std::to_string(by_class[c].size()) + " samples, requested " +
                std::to_string(counts[c]));
        auto rng = make_stream(seed, StreamTag::kSubsample, c);
        std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
        selected.insert(selected.end(), by_class[c].begin(),
                        by_class[c].begin() + counts[c]);
    }
    // Keep the original dataset order so a full-population subsample is the
    // identity, not just a permutation.
    std::sort(selected.begin(), selected.end());

    LabeledDataset out;
    out.num_classes = dataset.num_classes;
    out.samples = Matrix::zeros(static_cast<int>(selected.size()),
                                dataset.samples.cols);
    out.labels.resize(selected.size());
    for (std::size_t r = 0; r < selected.size(); ++r) {
        const int src = selected[r];
        for (int j = 0; j < dataset.samples.cols; ++j)
            out.samples(static_cast<int>(r), j) = dataset.samples(src, j);
        out.labels[r] = dataset.labels[src];
    }
    return out;
}

std::vector<ClientShard> dirichlet_partition(const LabeledDataset& dataset,
                                             const PartitionSpec& spec) {
    if (spec.num_clients < 1)
        throw std::invalid_argument("dirichlet_partition: num_clients must be >= 1");
    if (!(spec.dirichlet_alpha > 0.0))
        throw std::invalid_argument("dirichlet_partition: dirichlet_alpha must be > 0");
    if (spec.num_clients > dataset.size())
        throw std::invalid_argument("dirichlet_partition: " +
                                    std::to_string(spec.num_clients) +
                                    " clients exceed " +
                                    std::to_string(dataset.size()) + " samples");

    const int K = spec.num_clients;
    std::vector<std::vector<int>> shard_indices(K);

    for (int c = 0; c < dataset.num_classes; ++c) {
        std::vector<int> members;
        for (int i = 0; i < dataset.size(); ++i)
            if (dataset.labels[i] == c) members.push_back(i);
        const long n_c = static_cast<long>(members.size());
        if (n_c == 0) continue;

        auto rng = make_stream(spec.seed, StreamTag::kPartition, c);
        std::gamma_distribution<double> gamma(spec.dirichlet_alpha, 1.0);
        std::vector<double> props(K);
        double total = 0.0;
        for (int k = 0; k < K; ++k) {
            props[k] = gamma(rng);
            total += props[k];
        }
        if (total <= 0.0) {
            // All gamma draws underflowed (tiny alpha); fall back to uniform.
            std::fill(props.begin(), props.end(), 1.0 / K);
        } else {
            for (double& p : props) p /= total;
        }

        // Largest-remainder rounding: floors first, then one extra sample to
        // the largest fractional parts until the class total is exact.
        std::vector<long> quota(K);
        std::vector<double> frac(K);
        long assigned = 0;
        for (int k = 0; k < K; ++k) {
            const double q = props[k] * static_cast<double>(n_c);
            quota[k] = static_cast<long>(std::floor(q));
            frac[k] = q - static_cast<double>(quota[k]);
            assigned += quota[k];
        }
        std::vector<int> order(K);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (frac[a] != frac[b]) return frac[a] > frac[b];
            return a < b;
        });
        for (long r = 0; r < n_c - assigned; ++r) ++quota[order[r % K]];

        std::shuffle(members.begin(), members.end(), rng);
        std::size_t offset = 0;
        for (int k = 0; k < K; ++k) {
            shard_indices[k].insert(shard_indices[k].end(),
                                    members.begin() + offset,
                                    members.begin() + offset + quota[k]);
            offset += quota[k];
        }
        if (offset != members.size())
            throw std::logic_error("dirichlet_partition: allocation mismatch");
    }

    std::vector<ClientShard> shards(K);
    for (int k = 0; k < K; ++k) {
        std::sort(shard_indices[k].begin(), shard_indices[k].end());
        shards[k].client_id = k;
        shards[k].sample_indices = std::move(shard_indices[k]);
        std::vector<int> shard_labels;
        shard_labels.reserve(shards[k].sample_indices.size());
        for (int idx : shards[k].sample_indices)
            shard_labels.push_back(dataset.labels[idx]);
        shards[k].dist = LabelDistribution::from_labels(shard_labels,
                                                        dataset.num_classes);
    }
    return shards;
}

LabeledDataset load_cifar10_binary(const std::string& path) {
    constexpr int kRecordBytes = 3073;
    constexpr int kPixelBytes = 3072;

    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cifar10: cannot open " + path);
    std::string blob((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());

    if (blob.size() % kRecordBytes != 0) {
        const std::size_t offset = (blob.size() / kRecordBytes) * kRecordBytes;
        throw std::runtime_error("cifar10: truncated record at byte offset " +
                                 std::to_string(offset) + " in " + path);
    }

    const int n = static_cast<int>(blob.size() / kRecordBytes);
    LabeledDataset ds;
    ds.num_classes = 10;
    ds.samples = Matrix::zeros(n, kPixelBytes);
    ds.labels.resize(n);
    const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
    for (int r = 0; r < n; ++r) {
        const std::size_t base = static_cast<std::size_t>(r) * kRecordBytes;
        const unsigned label = bytes[base];
        if (label >= 10)
            throw std::runtime_error("cifar10: label byte " +
                                     std::to_string(label) +
                                     " at byte offset " + std::to_string(base) +
                                     " in " + path);
        ds.labels[r] = static_cast<int>(label);
        for (int j = 0; j < kPixelBytes; ++j)
            ds.samples(r, j) = static_cast<double>(bytes[base + 1 + j]) / 255.0;
    }
    return ds;
}

LabeledDataset load_cifar10_files(const std::vector<std::string>& paths) {
    if (paths.empty())
        throw std::invalid_argument("cifar10: no input files");
    LabeledDataset all = load_cifar10_binary(paths[0]);
    for (std::size_t i = 1; i < paths.size(); ++i) {
        LabeledDataset part = load_cifar10_binary(paths[i]);
        Matrix merged = Matrix::zeros(all.samples.rows + part.samples.rows,
                                      all.samples.cols);
        std::copy(all.samples.data.begin(), all.samples.data.end(),
                  merged.data.begin());
        std::copy(part.samples.data.begin(), part.samples.data.end(),
                  merged.data.begin() + all.samples.data.size());
        all.samples = std::move(merged);
        all.labels.insert(all.labels.end(), part.labels.begin(),
                          part.labels.end());
    }
    return all;
}

LabeledDataset synth_gaussians(int num_classes, int input_dim,
                               const std::vector<long>& counts,
                               double class_spread, std::uint64_t seed) {
    if (input_dim < 1)
        throw std::invalid_argument("synth_gaussians: input_dim must be >= 1");
    if (num_classes < 1)
        throw std::invalid_argument("synth_gaussians: num_classes must be >= 1");
    if (static_cast<int>(counts.size()) != num_classes)
        throw std::invalid_argument("synth_gaussians: counts length " +
                                    std::to_string(counts.size()) +
                                    " != num_classes " +
                                    std::to_string(num_classes));

    // Class means: unit-norm directions scaled by class_spread, one rng
    // stream per class so changing one count never shifts another class.
    Matrix means = Matrix::zeros(num_classes, input_dim);
    for (int c = 0; c < num_classes; ++c) {
        auto rng = make_stream(seed, StreamTag::kSynthData, c, 0);
        std::normal_distribution<double> normal(0.0, 1.0);
        double norm2 = 0.0;
        for (int j = 0; j < input_dim; ++j) {
            means(c, j) = normal(rng);
            norm2 += means(c, j) * means(c, j);
        }
        const double norm = std::sqrt(norm2);
        const double scale = norm > 0.0 ? class_spread / norm : 0.0;
        for (int j = 0; j < input_dim; ++j) means(c, j) *= scale;
    }

    long total = 0;
    for (long n : counts) {
        if (n < 0) throw std::invalid_argument("synth_gaussians: negative count");
        total += n;
    }

    LabeledDataset ds;
    ds.num_classes = num_classes;
    ds.samples = Matrix::zeros(static_cast<int>(total), input_dim);
    ds.labels.resize(total);
    int row = 0;
    for (int c = 0; c < num_classes; ++c) {
        auto rng = make_stream(seed, StreamTag::kSynthData, c, 1);
        std::normal_distribution<double> noise(0.0, 1.0);
        for (long i = 0; i < counts[c]; ++i) {
            for (int j = 0; j < input_dim; ++j)
                ds.samples(row, j) = means(c, j) + noise(rng);
            ds.labels[row] = c;
            ++row;
        }
    }
    return ds;
}

void save_dataset(const LabeledDataset& ds, const std::string& path) {
    Checkpoint ckpt;
    ckpt.names = {"samples", "labels"};
    Matrix labels = Matrix::zeros(ds.size(), 1);
    for (int i = 0; i < ds.size(); ++i) labels(i, 0) = ds.labels[i];
    ckpt.values = {ds.samples, std::move(labels)};
    ckpt.meta["num_classes"] = std::to_string(ds.num_classes);
    save_checkpoint(ckpt, path);
}

LabeledDataset load_dataset(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    const int si = ckpt.find("samples");
    const int li = ckpt.find("labels");
    if (si < 0 || li < 0)
        throw std::runtime_error("dataset: missing samples/labels in " + path);
    auto meta = ckpt.meta.find("num_classes");
    if (meta == ckpt.meta.end())
        throw std::runtime_error("dataset: missing num_classes meta in " + path);

    LabeledDataset ds;
    ds.num_classes = std::stoi(meta->second);
    ds.samples = std::move(ckpt.values[si]);
    const Matrix& labels = ckpt.values[li];
    if (labels.rows != ds.samples.rows || labels.cols != 1)
        throw std::runtime_error("dataset: labels shape mismatch in " + path);
    ds.labels.resize(labels.rows);
    for (int i = 0; i < labels.rows; ++i) {
        const double v = labels(i, 0);
        const int y = static_cast<int>(v);
        if (v != static_cast<double>(y) || y < 0 || y >= ds.num_classes)
            throw std::runtime_error("dataset: bad label value at row " +
                                     std::to_string(i) + " in " + path);
        ds.labels[i] = y;
    }
    return ds;
}

}  // namespace fedlf
