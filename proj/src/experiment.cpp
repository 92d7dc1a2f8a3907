#include "fedlf/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fedlf/checkpoint.hpp"

namespace fedlf {
namespace {

std::vector<std::string> split_paths(const std::string& joined) {
    std::vector<std::string> out;
    std::stringstream ss(joined);
    std::string item;
    while (std::getline(ss, item, ';'))
        if (!item.empty()) out.push_back(item);
    return out;
}

// Synthetic draws share one generator call so train and eval use the same
// class means; the first counts[c] rows of each class form the training side.
void split_synthetic(const LabeledDataset& full, const std::vector<long>& counts,
                     LabeledDataset& train, LabeledDataset& eval_set) {
    const int dim = full.samples.cols;
    long train_n = 0;
    for (long n : counts) train_n += n;
    const long eval_n = full.size() - train_n;

    train.num_classes = full.num_classes;
    eval_set.num_classes = full.num_classes;
    train.samples = Matrix::zeros(static_cast<int>(train_n), dim);
    eval_set.samples = Matrix::zeros(static_cast<int>(eval_n), dim);
    train.labels.reserve(train_n);
    eval_set.labels.reserve(eval_n);

    std::vector<long> seen(full.num_classes, 0);
    int ti = 0, ei = 0;
    for (int i = 0; i < full.size(); ++i) {
        const int y = full.labels[i];
        const bool to_train = seen[y] < counts[y];
        ++seen[y];
        Matrix& dst = to_train ? train.samples : eval_set.samples;
        const int row = to_train ? ti++ : ei++;
        for (int j = 0; j < dim; ++j) dst(row, j) = full.samples(i, j);
        (to_train ? train.labels : eval_set.labels).push_back(y);
    }
}

std::string format_weight(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string fixed6_or_nan(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

double median_finite(std::vector<double> values) {
    values.erase(std::remove_if(values.begin(), values.end(),
                                [](double v) { return std::isnan(v); }),
                 values.end());
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

ExperimentData build_experiment_data(const ExperimentConfig& config) {
    ExperimentData data;

    if (config.dataset == DatasetKind::kSynthetic) {
        const std::vector<long> counts = longtail_counts(
            config.n_max, config.num_classes, config.imbalance_factor);
        std::vector<long> combined = counts;
        for (long& n : combined) n += config.test_per_class;
        const LabeledDataset full =
            synth_gaussians(config.num_classes, config.input_dim, combined,
                            config.class_spread, config.seed);
        split_synthetic(full, counts, data.train, data.eval);
    } else {
        const LabeledDataset full = load_cifar10_files(split_paths(config.data_path));
        const std::vector<long> counts = longtail_counts(
            config.n_max, config.num_classes, config.imbalance_factor);
        data.train = subsample_longtail(full, counts, config.seed);
        data.eval = load_cifar10_binary(config.eval_path);
    }

    data.groups = classify_groups(data.train.class_counts(),
                                  config.head_threshold, config.tail_threshold);

    PartitionSpec part;
    part.num_clients = config.num_clients;
    part.dirichlet_alpha = config.dirichlet_alpha;
    part.imbalance_factor = config.imbalance_factor;
    part.seed = config.seed;
    data.shards = dirichlet_partition(data.train, part);
    return data;
}

ExperimentOutcome run_experiment(const ExperimentConfig& config, bool quiet) {
    ExperimentOutcome outcome;
    outcome.report_file = config.out;
    outcome.checkpoint_file = checkpoint_path(config);

    try {
        ExperimentData data = build_experiment_data(config);

        FLConfig fl = to_fl_config(config);
        fl.arch.input_dim = data.train.samples.cols;  // data defines the width

        ModelParams final_model;
        outcome.reports = run_training(fl, data.train, data.shards, data.eval,
                                       data.groups, &final_model);

        emit_reports(outcome.reports, outcome.report_file, config.format);
        save_params(final_model, outcome.checkpoint_file);
    } catch (...) {
        std::remove(outcome.report_file.c_str());
        std::remove(outcome.checkpoint_file.c_str());
        throw;
    }

    if (!quiet) {
        if (outcome.reports.empty()) {
            std::printf("no rounds run; reports=%s checkpoint=%s\n",
                        outcome.report_file.c_str(),
                        outcome.checkpoint_file.c_str());
        } else {
            const RoundReport& last = outcome.reports.back();
            std::printf(
                "round %d: acc_all=%s head=%s middle=%s tail=%s "
                "reports=%s checkpoint=%s\n",
                last.round, fixed6_or_nan(last.acc.all).c_str(),
                fixed6_or_nan(last.acc.head).c_str(),
                fixed6_or_nan(last.acc.middle).c_str(),
                fixed6_or_nan(last.acc.tail).c_str(),
                outcome.report_file.c_str(), outcome.checkpoint_file.c_str());
        }
        std::fflush(stdout);
    }
    return outcome;
}

std::vector<AblationCell> run_ablation(const ExperimentConfig& base,
                                       const AblationSpec& spec, bool quiet) {
    const std::vector<double> lambdas =
        spec.lambdas.empty() ? std::vector<double>{base.lambda} : spec.lambdas;
    const std::vector<double> gammas =
        spec.gammas.empty() ? std::vector<double>{base.gamma} : spec.gammas;
    const std::vector<int> lcs =
        spec.lc_toggles.empty() ? std::vector<int>{1} : spec.lc_toggles;
    const std::vector<int> lds =
        spec.ld_toggles.empty() ? std::vector<int>{1} : spec.ld_toggles;
    const std::vector<std::uint64_t> seeds =
        spec.seeds.empty() ? std::vector<std::uint64_t>{base.seed} : spec.seeds;

    std::filesystem::create_directories(spec.out_dir);
    const char* ext = base.format == ReportFormat::kCsv ? ".csv" : ".jsonl";

    std::vector<AblationCell> cells;
    for (double lam : lambdas)
        for (double gam : gammas)
            for (int lc : lcs)
                for (int ld : lds) {
                    AblationCell cell;
                    cell.lambda = lam;
                    cell.gamma = gam;
                    cell.lc_on = lc != 0;
                    cell.ld_on = ld != 0;

                    const std::string stem = spec.out_dir + "/lam" +
                                             format_weight(lam) + "_gam" +
                                             format_weight(gam) + "_lc" +
                                             std::to_string(lc != 0) + "_ld" +
                                             std::to_string(ld != 0);
                    std::vector<double> head, middle, tail, all;
                    cell.ok = true;
                    for (std::uint64_t seed : seeds) {
                        ExperimentConfig cfg = base;
                        cfg.lambda = cell.lc_on ? lam : 0.0;
                        cfg.gamma = cell.ld_on ? gam : 0.0;
                        cfg.seed = seed;
                        cfg.out = stem + "_seed" + std::to_string(seed) + ext;
                        cfg.checkpoint =
                            stem + "_seed" + std::to_string(seed) + ".ckpt";
                        try {
                            ExperimentOutcome out = run_experiment(cfg, true);
                            if (!out.reports.empty()) {
                                const GroupAccuracies& a =
                                    out.reports.back().acc;
                                head.push_back(a.head);
                                middle.push_back(a.middle);
                                tail.push_back(a.tail);
                                all.push_back(a.all);
                            }
                        } catch (const std::exception& e) {
                            cell.ok = false;
                            cell.error = e.what();
                            break;
                        }
                    }
                    if (cell.ok) {
                        cell.median.head = median_finite(head);
                        cell.median.middle = median_finite(middle);
                        cell.median.tail = median_finite(tail);
                        cell.median.all = median_finite(all);
                    }
                    if (!quiet) {
                        const std::string status =
                            cell.ok ? "acc_all=" + fixed6_or_nan(cell.median.all)
                                    : cell.error;
                        std::printf("ablate lam=%s gam=%s lc=%d ld=%d %s\n",
                                    format_weight(lam).c_str(),
                                    format_weight(gam).c_str(), lc != 0,
                                    ld != 0, status.c_str());
                        std::fflush(stdout);
                    }
                    cells.push_back(std::move(cell));
                }

    // Summary table, one row per cell in cross-product order.
    std::string body =
        "lambda,gamma,lc,ld,acc_head,acc_middle,acc_tail,acc_all,status\n";
    for (const AblationCell& cell : cells) {
        body += format_weight(cell.lambda) + "," + format_weight(cell.gamma) +
                "," + std::to_string(cell.lc_on) + "," +
                std::to_string(cell.ld_on) + ",";
        body += fixed6_or_nan(cell.median.head) + "," +
                fixed6_or_nan(cell.median.middle) + "," +
                fixed6_or_nan(cell.median.tail) + "," +
                fixed6_or_nan(cell.median.all) + ",";
        if (cell.ok) {
            body += "ok";
        } else {
            std::string msg = cell.error;
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            body += "error: " + msg;
        }
        body += "\n";
    }
    const std::string summary = spec.out_dir + "/summary.csv";
    const std::string tmp = summary + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("ablation: cannot open " + tmp);
        out.write(body.data(), static_cast<std::streamsize>(body.size()));
        if (!out) throw std::runtime_error("ablation: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), summary.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("ablation: rename failed for " + summary);
    }
    return cells;
}

}  // namespace fedlf
