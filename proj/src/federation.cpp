#include "fedlf/federation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <stdexcept>

#include "fedlf/rng.hpp"

namespace fedlf {
namespace {

Matrix gather_rows(const Matrix& samples, const std::vector<int>& indices,
                   std::size_t begin, std::size_t end) {
    Matrix out(static_cast<int>(end - begin), samples.cols);
    for (std::size_t r = begin; r < end; ++r)
        for (int j = 0; j < samples.cols; ++j)
            out(static_cast<int>(r - begin), j) = samples(indices[r], j);
    return out;
}

LossBreakdown mean_breakdown(const std::vector<LossBreakdown>& parts) {
    LossBreakdown mean;
    if (parts.empty()) return mean;
    for (const LossBreakdown& b : parts) {
        mean.l_a += b.l_a;
        mean.l_c += b.l_c;
        mean.l_d += b.l_d;
        mean.total += b.total;
        mean.q_used += b.q_used;
    }
    const double inv = 1.0 / static_cast<double>(parts.size());
    mean.l_a *= inv;
    mean.l_c *= inv;
    mean.l_d *= inv;
    mean.total *= inv;
    mean.q_used *= inv;
    return mean;
}

// Loss and gradient for the baseline methods (everything but FedLF) on one
// batch. FedProx adds the proximal pull toward the round's global snapshot.
LossBreakdown baseline_batch(const Matrix& batch,
                             const std::vector<int>& labels,
                             const ModelParams& local,
                             const ModelParams& global_ref,
                             const FLConfig& config, ModelParams& grads) {
    ForwardCache cache;
    const Matrix features =
        forward_features(local, config.arch, batch, &cache);
    const Matrix scores = classifier_scores(features, local.classifier());

    Matrix grad_scores;
    LossBreakdown out;
    switch (config.method.method) {
        case Method::kFedAvg:
            out.l_a = loss_cross_entropy(scores, labels, &grad_scores);
            out.total = out.l_a;
            break;
        case Method::kFocal:
            out.l_a = loss_focal(scores, labels, config.method.focal_gamma,
                                 &grad_scores);
            out.total = out.l_a;
            break;
        case Method::kFedProx: {
            out.l_a = loss_cross_entropy(scores, labels, &grad_scores);
            const double prox =
                prox_term(local, global_ref, config.method.prox_mu, &grads);
            out.total = out.l_a + prox;
            break;
        }
        case Method::kFedLf:
            throw std::logic_error("baseline_batch: fedlf handled elsewhere");
    }

    add_scaled_inplace(grads.classifier(), matmul_tn(grad_scores, features),
                       1.0);
    const Matrix grad_h = matmul(grad_scores, local.classifier());
    backward_features(local, config.arch, cache, grad_h, grads);
    return out;
}

}  // namespace

std::vector<int> sample_clients(int num_clients, double online_rate,
                                std::mt19937_64& rng) {
    if (num_clients < 1)
        throw std::invalid_argument("sample_clients: need at least one client");
    if (!(online_rate > 0.0) || online_rate > 1.0)
        throw std::invalid_argument("sample_clients: online_rate must be in (0,1]");

    long m = std::llround(online_rate * num_clients);
    m = std::max(1L, std::min(m, static_cast<long>(num_clients)));

    std::vector<int> ids(num_clients);
    std::iota(ids.begin(), ids.end(), 0);
    for (long i = 0; i < m; ++i) {
        std::uniform_int_distribution<int> pick(static_cast<int>(i),
                                                num_clients - 1);
        std::swap(ids[i], ids[pick(rng)]);
    }
    ids.resize(m);
    std::sort(ids.begin(), ids.end());
    return ids;
}

LocalResult local_update(const ModelParams& global_params,
                         const ClientShard& shard,
                         const LabeledDataset& dataset, const FLConfig& config,
                         int round) {
    if (shard.sample_indices.empty())
        throw std::invalid_argument("local_update: empty shard for client " +
                                    std::to_string(shard.client_id));
    if (config.local_epochs < 0 || config.batch_size < 1)
        throw std::invalid_argument("local_update: bad epochs/batch_size");

    LocalResult result;
    result.params = global_params;
    ModelParams& local = result.params;
    const bool fedlf = config.method.method == Method::kFedLf;

    AdjustmentVector adist;
    ClassCenters centers;
    if (fedlf) {
        adist = adjustment_vector(normalize_distribution(shard.dist),
                                  config.loss.smoothing_factor);
        // Centers start as the per-class feature means under the round's
        // incoming model, then train alongside the local parameters.
        const Matrix all_rows = gather_rows(dataset.samples,
                                            shard.sample_indices, 0,
                                            shard.sample_indices.size());
        std::vector<int> all_labels(shard.sample_indices.size());
        for (std::size_t i = 0; i < shard.sample_indices.size(); ++i)
            all_labels[i] = dataset.labels[shard.sample_indices[i]];
        const Matrix features = forward_features(local, config.arch, all_rows);
        centers = init_class_centers(features, all_labels, dataset.num_classes);
    }

    auto rng = make_stream(config.seed, StreamTag::kLocalShuffle,
                           static_cast<std::uint64_t>(round),
                           static_cast<std::uint64_t>(shard.client_id));
    std::vector<int> order = shard.sample_indices;
    const std::size_t n = order.size();
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);

    // Trailing partial batches are dropped: batch-statistics terms are
    // meaningless on a couple of rows. A shard smaller than one batch
    // trains on its single short batch instead of doing nothing.
    const std::size_t usable = n < batch ? n : n - n % batch;

    for (int epoch = 0; epoch < config.local_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<LossBreakdown> batch_losses;
        for (std::size_t start = 0; start < usable; start += batch) {
            const std::size_t stop = std::min(usable, start + batch);
            const Matrix x = gather_rows(dataset.samples, order, start, stop);
            std::vector<int> y(stop - start);
            for (std::size_t i = start; i < stop; ++i)
                y[i - start] = dataset.labels[order[i]];

            if (fedlf) {
                TotalLossGrads grads;
                batch_losses.push_back(total_loss(x, y, local, config.arch,
                                                  centers, adist, config.loss,
                                                  &grads));
                local.add_scaled(grads.params, -config.learning_rate);
                add_scaled_inplace(centers.centers, grads.centers,
                                   -config.learning_rate);
            } else {
                ModelParams grads = local.zeros_like();
                batch_losses.push_back(baseline_batch(x, y, local,
                                                      global_params, config,
                                                      grads));
                local.add_scaled(grads, -config.learning_rate);
            }
        }
        result.trail.push_back(mean_breakdown(batch_losses));
    }
    return result;
}

ModelParams aggregate(const std::vector<ClientUpload>& uploads) {
    if (uploads.empty())
        throw std::invalid_argument("aggregate: no uploads");
    long total = 0;
    for (const ClientUpload& u : uploads) {
        if (u.size < 0)
            throw std::invalid_argument("aggregate: negative upload size");
        if (!u.params.same_layout(uploads[0].params))
            throw std::invalid_argument("aggregate: upload shape mismatch");
        total += u.size;
    }
    if (total <= 0)
        throw std::invalid_argument("aggregate: zero total size");

    // Anchor on the first upload and accumulate weighted differences: a lone
    // upload and a list of identical uploads both come back bit-identical.
    ModelParams out = uploads[0].params;
    const double inv_total = 1.0 / static_cast<double>(total);
    for (std::size_t p = 0; p < out.values.size(); ++p) {
        const std::size_t n = out.values[p].data.size();
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            const double base = uploads[0].params.values[p].data[i];
            double acc = 0.0;
            for (std::size_t k = 1; k < uploads.size(); ++k) {
                const double w = static_cast<double>(uploads[k].size) * inv_total;
                acc += w * (uploads[k].params.values[p].data[i] - base);
            }
            if (acc != 0.0) out.values[p].data[i] = base + acc;
        }
    }
    return out;
}

std::vector<int> predict(const ModelParams& params, const ModelArch& arch,
                         const Matrix& samples) {
    const Matrix features = forward_features(params, arch, samples);
    const Matrix scores = classifier_scores(features, params.classifier());
    std::vector<int> labels(scores.rows);
    for (int i = 0; i < scores.rows; ++i) {
        int best = 0;
        for (int j = 1; j < scores.cols; ++j)
            if (scores(i, j) > scores(i, best)) best = j;
        labels[i] = best;
    }
    return labels;
}

std::vector<RoundReport> run_training(const FLConfig& config,
                                      const LabeledDataset& dataset,
                                      const std::vector<ClientShard>& shards,
                                      const LabeledDataset& eval_set,
                                      const GroupSpec& groups,
                                      ModelParams* global_out) {
    if (static_cast<int>(shards.size()) != config.num_clients)
        throw std::invalid_argument("run_training: " +
                                    std::to_string(shards.size()) +
                                    " shards for " +
                                    std::to_string(config.num_clients) +
                                    " clients");
    if (config.num_rounds < 0)
        throw std::invalid_argument("run_training: negative num_rounds");

    ModelParams global = init_params(config.arch, config.seed);
    std::vector<RoundReport> reports;
    reports.reserve(config.num_rounds);

    for (int t = 0; t < config.num_rounds; ++t) {
        auto sampler = make_stream(config.seed, StreamTag::kClientSampling,
                                   static_cast<std::uint64_t>(t));
        const std::vector<int> ids =
            sample_clients(config.num_clients, config.online_rate, sampler);

        // A Dirichlet split can leave a client with nothing; such a client
        // would carry zero aggregation weight anyway, so it sits the round out.
        std::vector<int> active;
        for (int id : ids)
            if (!shards[id].sample_indices.empty()) active.push_back(id);

        const int m = static_cast<int>(active.size());
        std::vector<LocalResult> results(m);
        std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic)
        for (int j = 0; j < m; ++j) {
            try {
                results[j] =
                    local_update(global, shards[active[j]], dataset, config, t);
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);

        std::vector<LossBreakdown> client_means;
        if (m > 0) {
            std::vector<ClientUpload> uploads;
            uploads.reserve(m);
            for (int j = 0; j < m; ++j) {
                uploads.push_back(
                    {std::move(results[j].params),
                     static_cast<long>(shards[active[j]].sample_indices.size())});
                client_means.push_back(mean_breakdown(results[j].trail));
            }
            global = aggregate(uploads);
        }

        RoundReport report;
        report.round = t;
        report.client_ids = ids;
        report.mean_loss = mean_breakdown(client_means);
        report.acc = group_accuracies(predict(global, config.arch,
                                              eval_set.samples),
                                      eval_set.labels, groups);
        reports.push_back(std::move(report));
    }

    if (global_out) *global_out = std::move(global);
    return reports;
}

}  // namespace fedlf
