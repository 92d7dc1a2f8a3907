// Acceptance gate for the whole framework. Each criterion prints one
// PASS/FAIL line with the numbers it measured; the exit code is nonzero if
// anything failed. The training-based criteria share one dataset per seed so
// the full run stays a few minutes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "fedlf/baselines.hpp"
#include "fedlf/config.hpp"
#include "fedlf/data.hpp"
#include "fedlf/experiment.hpp"
#include "fedlf/federation.hpp"
#include "fedlf/gradient_suite.hpp"
#include "fedlf/losses.hpp"
#include "fedlf/matrix.hpp"
#include "fedlf/metrics.hpp"
#include "fedlf/model.hpp"

namespace {

using namespace fedlf;

int g_failures = 0;

void line(int id, const char* name, bool ok, const std::string& detail) {
    if (!ok) ++g_failures;
    std::printf("%s  %d %-22s %s\n", ok ? "PASS" : "FAIL", id, name,
                detail.c_str());
    std::fflush(stdout);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double median5(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// 1. Finite-difference verification of every analytic gradient path.

void criterion_gradients() {
    const GradientSuiteReport r = run_gradient_suite(20, 1e-5, 1);
    const bool ok =
        r.checks >= 20 && r.worst_rel_error < 1e-4 && r.seconds < 30.0;
    line(1, "gradient checks", ok,
         std::to_string(r.checks) + " checks, worst rel err " +
             fmt(r.worst_rel_error) + " (" + r.worst_case + "), " +
             fmt(r.seconds) + "s");
}

// ---------------------------------------------------------------------------
// 2. Library results match independent brute-force reimplementations within
//    1e-10 on 100 random small inputs per function.

void criterion_oracles() {
    std::mt19937_64 rng(2026);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> sym(-2.0, 2.0);
    double worst = 0.0;

    for (int t = 0; t < 100; ++t) {
        // adjustment vector from raw counts
        const int ca = 2 + static_cast<int>(rng() % 7);
        LabelDistribution dist;
        dist.counts.resize(ca);
        dist.total = 0;
        for (int c = 0; c < ca; ++c) {
            dist.counts[c] = static_cast<long>(rng() % 50);
            dist.total += dist.counts[c];
        }
        if (dist.total == 0) {
            dist.counts[0] = 1;
            dist.total = 1;
        }
        const double alpha = unit(rng);
        const AdjustmentVector av =
            adjustment_vector(normalize_distribution(dist), alpha);
        double mx = 0.0;
        for (int c = 0; c < ca; ++c)
            mx = std::max(mx, static_cast<double>(dist.counts[c]) /
                                  static_cast<double>(dist.total));
        for (int c = 0; c < ca; ++c) {
            const double nd = static_cast<double>(dist.counts[c]) /
                              static_cast<double>(dist.total);
            const double want = nd / mx * (1.0 - alpha) + alpha;
            worst = std::max(worst, std::fabs(av.adist[c] - want));
        }

        // adjusted loss against an unstabilized log-sum-exp
        const int b = 1 + static_cast<int>(rng() % 6);
        const int cl = 2 + static_cast<int>(rng() % 4);
        Matrix z(b, cl);
        std::vector<int> y(b);
        for (int i = 0; i < b; ++i) {
            y[i] = static_cast<int>(rng() % cl);
            for (int c = 0; c < cl; ++c) z(i, c) = sym(rng);
        }
        double want_la = 0.0;
        for (int i = 0; i < b; ++i) {
            double s = 0.0;
            for (int c = 0; c < cl; ++c) s += std::exp(z(i, c));
            want_la += std::log(s) - z(i, y[i]);
        }
        want_la /= b;
        worst = std::max(worst, std::fabs(loss_adaptive(z, y) - want_la));

        // correlation matrix against a triple loop
        const int bc = 2 + static_cast<int>(rng() % 7);
        const int dc = 1 + static_cast<int>(rng() % 6);
        Matrix xn(bc, dc);
        for (int i = 0; i < bc; ++i)
            for (int j = 0; j < dc; ++j) xn(i, j) = sym(rng);
        const Matrix cor = correlation_matrix(xn);
        for (int i = 0; i < dc; ++i)
            for (int j = 0; j < dc; ++j) {
                double s = 0.0;
                for (int k = 0; k < bc; ++k) s += xn(k, i) * xn(k, j);
                worst = std::max(worst, std::fabs(cor(i, j) - s / bc));
            }

        // decorrelation penalty against a double loop, both diagonal modes
        const int dd = 1 + static_cast<int>(rng() % 6);
        Matrix cm(dd, dd);
        for (int i = 0; i < dd; ++i)
            for (int j = 0; j < dd; ++j)
                cm(i, j) = 2.0 * unit(rng) - 1.0;
        double want_full = 0.0;
        double want_off = 0.0;
        for (int i = 0; i < dd; ++i)
            for (int j = 0; j < dd; ++j) {
                want_full += cm(i, j) * cm(i, j);
                if (i != j) want_off += cm(i, j) * cm(i, j);
            }
        worst = std::max(
            worst, std::fabs(loss_decorrelation(cm, false) - want_full));
        worst = std::max(
            worst, std::fabs(loss_decorrelation(cm, true) - want_off));
    }

    line(2, "closed-form oracles", worst <= 1e-10,
         "100 inputs per function, worst abs diff " + fmt(worst));
}

// ---------------------------------------------------------------------------
// 3. Degenerate-setting identities hold exactly (zero difference).

// Plain contrastive center loss with no margin term, mirroring the library's
// accumulation order so the q=0 comparison can demand bitwise equality.
double contrastive_reference(const Matrix& f, const std::vector<int>& y,
                             const ClassCenters& cen) {
    const int b = f.rows;
    const int nc = cen.centers.rows;
    const int d = f.cols;
    double total = 0.0;
    for (int i = 0; i < b; ++i) {
        std::vector<double> dist(nc, 0.0);
        double max_x = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < nc; ++c) {
            if (!cen.present[c]) continue;
            double s = 0.0;
            for (int k = 0; k < d; ++k) {
                const double diff = f(i, k) - cen.centers(c, k);
                s += diff * diff;
            }
            dist[c] = std::sqrt(s + 1e-24);
            max_x = std::max(max_x, -dist[c]);
        }
        double sum = 0.0;
        for (int c = 0; c < nc; ++c) {
            if (!cen.present[c]) continue;
            sum += std::exp(-dist[c] - max_x);
        }
        total += dist[y[i]] + (max_x + std::log(sum));
    }
    return total;
}

void criterion_identities() {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> gauss(0.0, 1.5);
    int checks = 0;
    int fails = 0;

    for (int t = 0; t < 50; ++t) {
        const int b = 1 + static_cast<int>(rng() % 6);
        const int nc = 2 + static_cast<int>(rng() % 4);
        Matrix scores(b, nc);
        std::vector<int> y(b);
        for (int i = 0; i < b; ++i) {
            y[i] = static_cast<int>(rng() % nc);
            for (int c = 0; c < nc; ++c) scores(i, c) = gauss(rng);
        }

        // all-ones adjustment leaves the loss equal to plain cross-entropy
        AdjustmentVector ones;
        ones.adist.assign(nc, 1.0);
        const double ce = loss_cross_entropy(scores, y);
        ++checks;
        if (loss_adaptive(apply_adjustment(scores, ones), y) != ce) ++fails;

        // focal loss with zero focusing parameter is cross-entropy
        ++checks;
        if (loss_focal(scores, y, 0.0) != ce) ++fails;

        // zero lambda and gamma reduce the combined loss to the adjusted part
        ModelArch arch;
        arch.input_dim = 3;
        arch.hidden_widths = {4};
        arch.feature_dim = 3;
        arch.num_classes = nc;
        arch.activation = Activation::kTanh;
        const ModelParams params = init_params(arch, 100 + t);
        Matrix batch(b, 3);
        for (int i = 0; i < b; ++i)
            for (int j = 0; j < 3; ++j) batch(i, j) = gauss(rng);
        const Matrix feats = forward_features(params, arch, batch);
        const ClassCenters cen = init_class_centers(feats, y, nc);
        AdjustmentVector av;
        av.adist.resize(nc);
        for (int c = 0; c < nc; ++c) av.adist[c] = 0.3 + gauss(rng) * 0.1;
        FedlfLossConfig cfg;
        cfg.lambda = 0.0;
        cfg.gamma = 0.0;
        cfg.tau = 1.0;
        const LossBreakdown bd =
            total_loss(batch, y, params, arch, cen, av, cfg);
        ++checks;
        if (bd.total != bd.l_a) ++fails;

        // zero margin reduces the margin loss to the plain contrastive one
        const int d = 1 + static_cast<int>(rng() % 5);
        Matrix f2(b, d);
        for (int i = 0; i < b; ++i)
            for (int k = 0; k < d; ++k) f2(i, k) = gauss(rng);
        const ClassCenters cen2 = init_class_centers(f2, y, nc);
        ++checks;
        if (loss_center(f2, y, cen2, 0.0) != contrastive_reference(f2, y, cen2))
            ++fails;

        // aggregating a single upload returns it bit for bit
        const ModelParams p2 = init_params(arch, 900 + t);
        std::vector<ClientUpload> ups;
        ups.push_back(ClientUpload{p2, static_cast<long>(1 + rng() % 100)});
        const ModelParams agg = aggregate(ups);
        ++checks;
        for (std::size_t m = 0; m < p2.values.size(); ++m)
            if (max_abs_diff(agg.values[m], p2.values[m]) != 0.0) {
                ++fails;
                break;
            }
    }

    line(3, "reduction identities", fails == 0,
         std::to_string(checks) + " exact checks, " + std::to_string(fails) +
             " mismatches");
}

// ---------------------------------------------------------------------------
// 4. Dirichlet shards exactly partition the dataset and conserve per-class
//    counts over 50 random configurations.

void criterion_partition() {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int bad = 0;

    for (int t = 0; t < 50; ++t) {
        const int k = 1 + static_cast<int>(rng() % 12);
        const double alpha = std::exp(std::log(0.05) +
                                      unit(rng) * std::log(10.0 / 0.05));
        const double imb = std::exp(unit(rng) * std::log(100.0));
        const int nc = 2 + static_cast<int>(rng() % 9);
        const long n_max = 40 + static_cast<long>(rng() % 360);

        const std::vector<long> counts = longtail_counts(n_max, nc, imb);
        const LabeledDataset ds =
            synth_gaussians(nc, 2, counts, 1.5, 900 + t);
        PartitionSpec spec;
        spec.num_clients = k;
        spec.dirichlet_alpha = alpha;
        spec.imbalance_factor = imb;
        spec.seed = 7000 + t;
        const std::vector<ClientShard> shards = dirichlet_partition(ds, spec);

        std::vector<int> seen(ds.size(), 0);
        std::vector<long> per_class(nc, 0);
        bool ok = static_cast<int>(shards.size()) == k;
        for (const ClientShard& sh : shards) {
            std::vector<long> local(nc, 0);
            for (int idx : sh.sample_indices) {
                if (idx < 0 || idx >= ds.size()) {
                    ok = false;
                    break;
                }
                ++seen[idx];
                ++per_class[ds.labels[idx]];
                ++local[ds.labels[idx]];
            }
            ok = ok && local == sh.dist.counts &&
                 sh.dist.total ==
                     static_cast<long>(sh.sample_indices.size());
        }
        for (int s : seen) ok = ok && s == 1;
        ok = ok && per_class == ds.class_counts();
        if (!ok) ++bad;
    }

    line(4, "partition conservation", bad == 0,
         "50 random configs, " + std::to_string(bad) + " violations");
}

// ---------------------------------------------------------------------------
// 5. Two runs of the quickstart config produce byte-identical reports.

void criterion_determinism() {
    const std::string cfg_path = FEDLF_SOURCE_DIR "/configs/quickstart.cfg";
    const auto run_once = [&](const std::string& tag) {
        const ExperimentConfig cfg = parse_config(
            cfg_path, {"out=acceptance_determinism_" + tag + ".csv"});
        const ExperimentOutcome out = run_experiment(cfg, true);
        const std::string body = slurp(out.report_file);
        std::remove(out.report_file.c_str());
        std::remove(out.checkpoint_file.c_str());
        return body;
    };
    const std::string a = run_once("a");
    const std::string b = run_once("b");
    line(5, "determinism", !a.empty() && a == b,
         a == b ? std::to_string(a.size()) + " byte reports identical"
                : "reports differ");
}

// ---------------------------------------------------------------------------
// 6-8. Training-based criteria on the quickstart benchmark, 5 seeds each:
// direction of the tail-accuracy effect vs fedavg, the ablation direction,
// and the decorrelation effect on evaluation features.

double mean_abs_offdiag(const Matrix& cor) {
    double s = 0.0;
    int n = 0;
    for (int i = 0; i < cor.rows; ++i)
        for (int j = 0; j < cor.cols; ++j)
            if (i != j) {
                s += std::fabs(cor(i, j));
                ++n;
            }
    return n ? s / n : 0.0;
}

void criteria_training() {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig base =
        parse_config(FEDLF_SOURCE_DIR "/configs/quickstart.cfg");

    std::vector<double> avg_tail, avg_all, full_tail, full_all, la_all;
    std::vector<double> off_g0, off_g01;

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ExperimentConfig cfg = base;
        cfg.seed = seed;
        const ExperimentData data = build_experiment_data(cfg);

        const auto train_with = [&](Method m, double lambda, double gamma,
                                    ModelParams* global_out) {
            ExperimentConfig c = cfg;
            c.method = m;
            c.lambda = lambda;
            c.gamma = gamma;
            FLConfig fl = to_fl_config(c);
            fl.arch.input_dim = data.train.samples.cols;
            const std::vector<RoundReport> reps = run_training(
                fl, data.train, data.shards, data.eval, data.groups,
                global_out);
            return reps.back().acc;
        };

        const GroupAccuracies a =
            train_with(Method::kFedAvg, base.lambda, base.gamma, nullptr);
        const GroupAccuracies f =
            train_with(Method::kFedLf, 0.01, 0.01, nullptr);
        const GroupAccuracies l = train_with(Method::kFedLf, 0.0, 0.0, nullptr);
        avg_tail.push_back(a.tail);
        avg_all.push_back(a.all);
        full_tail.push_back(f.tail);
        full_all.push_back(f.all);
        la_all.push_back(l.all);

        ModelArch arch = to_fl_config(cfg).arch;
        arch.input_dim = data.train.samples.cols;
        for (const double gamma : {0.0, 0.1}) {
            ModelParams global;
            train_with(Method::kFedLf, 0.01, gamma, &global);
            const Matrix feats =
                forward_features(global, arch, data.eval.samples);
            const Matrix cor = correlation_matrix(standardize_features(feats));
            (gamma == 0.0 ? off_g0 : off_g01)
                .push_back(mean_abs_offdiag(cor));
        }
        std::fprintf(stderr, "  benchmark seed %llu done\n",
                     static_cast<unsigned long long>(seed));
    }

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    const double mt_full = median5(full_tail);
    const double mt_avg = median5(avg_tail);
    const double ma_full = median5(full_all);
    const double ma_avg = median5(avg_all);
    const bool ok6 = mt_full > mt_avg && ma_full >= ma_avg - 0.01 &&
                     seconds < 1800.0;
    line(6, "tail-accuracy direction", ok6,
         "median tail " + fmt(mt_full) + " vs fedavg " + fmt(mt_avg) +
             ", median all " + fmt(ma_full) + " vs " + fmt(ma_avg) + ", " +
             fmt(seconds) + "s for all 25 runs");

    const double ma_la = median5(la_all);
    line(7, "ablation direction", ma_full >= ma_la,
         "median all " + fmt(ma_full) + " with both terms vs " + fmt(ma_la) +
             " adjusted-only");

    const double off_hi = median5(off_g0);
    const double off_lo = median5(off_g01);
    line(8, "decorrelation effect", off_lo < off_hi,
         "median mean |offdiag| " + fmt(off_lo) + " at gamma 0.1 vs " +
             fmt(off_hi) + " at gamma 0");
}

// ---------------------------------------------------------------------------
// 9. CIFAR-10 binary loader: bit-exact parse of a hand-built fixture,
//    truncation and bad labels rejected with the right byte offsets.

void criterion_cifar() {
    constexpr int kRec = 3073;
    const int labels[3] = {7, 0, 9};
    std::vector<unsigned char> bytes(3 * kRec);
    for (int r = 0; r < 3; ++r) {
        bytes[static_cast<std::size_t>(r) * kRec] =
            static_cast<unsigned char>(labels[r]);
        for (int j = 0; j < kRec - 1; ++j)
            bytes[static_cast<std::size_t>(r) * kRec + 1 + j] =
                static_cast<unsigned char>((r * 31 + j * 7 + 3) % 256);
    }

    const auto dump = [](const std::string& path,
                         const std::vector<unsigned char>& buf,
                         std::size_t n) {
        std::ofstream out(path, std::ios::binary);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(n));
    };

    bool ok = true;
    std::string note;

    const std::string good = "acceptance_cifar3.bin";
    dump(good, bytes, bytes.size());
    try {
        const LabeledDataset ds = load_cifar10_binary(good);
        ok = ds.size() == 3 && ds.samples.cols == kRec - 1 &&
             ds.num_classes == 10;
        for (int r = 0; ok && r < 3; ++r) {
            if (ds.labels[r] != labels[r]) ok = false;
            for (int j = 0; ok && j < kRec - 1; ++j) {
                const double want =
                    static_cast<double>((r * 31 + j * 7 + 3) % 256) / 255.0;
                if (ds.samples(r, j) != want) ok = false;
            }
        }
        if (!ok) note = "parsed fixture does not match";
    } catch (const std::exception& e) {
        ok = false;
        note = std::string("unexpected parse failure: ") + e.what();
    }

    const auto expect_reject = [&](const std::string& path, std::size_t n,
                                   const std::string& needle) {
        dump(path, bytes, n);
        try {
            load_cifar10_binary(path);
            ok = false;
            note = path + " accepted";
        } catch (const std::exception& e) {
            if (std::string(e.what()).find(needle) == std::string::npos) {
                ok = false;
                note = path + " rejected without '" + needle + "': " +
                       e.what();
            }
        }
    };
    expect_reject("acceptance_cifar_trunc.bin", 2 * kRec + 100,
                  "byte offset 6146");
    expect_reject("acceptance_cifar_short.bin", 50, "byte offset 0");

    std::vector<unsigned char> badlab(bytes.begin(), bytes.begin() + 2 * kRec);
    badlab[kRec] = 12;
    dump("acceptance_cifar_badlabel.bin", badlab, badlab.size());
    try {
        load_cifar10_binary("acceptance_cifar_badlabel.bin");
        ok = false;
        note = "bad label accepted";
    } catch (const std::exception& e) {
        const std::string msg = e.what();
        if (msg.find("label byte 12") == std::string::npos ||
            msg.find("byte offset 3073") == std::string::npos) {
            ok = false;
            note = "bad label rejected without offset: " + msg;
        }
    }

    for (const char* path :
         {"acceptance_cifar3.bin", "acceptance_cifar_trunc.bin",
          "acceptance_cifar_short.bin", "acceptance_cifar_badlabel.bin"})
        std::remove(path);

    line(9, "cifar10 loader", ok,
         ok ? "3-record fixture bit-exact, truncation and bad labels "
              "rejected with offsets"
            : note);
}

}  // namespace

int main() {
    std::fprintf(stderr,
                 "acceptance: criteria 6-8 train 25 models, takes a few "
                 "minutes\n");
    criterion_gradients();
    criterion_oracles();
    criterion_identities();
    criterion_partition();
    criterion_determinism();
    criteria_training();
    criterion_cifar();
    std::printf("%d/9 criteria passed\n", 9 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
