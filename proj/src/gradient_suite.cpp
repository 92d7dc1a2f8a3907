#include "fedlf/gradient_suite.hpp"

#include <chrono>
#include <random>
#include <stdexcept>
#include <vector>

#include "fedlf/grad_check.hpp"
#include "fedlf/losses.hpp"
#include "fedlf/model.hpp"
#include "fedlf/rng.hpp"

namespace fedlf {
namespace {

// Model parameters plus the class centers as one flat list, so grad_check
// can probe both.
ModelParams pack(const ModelParams& model, const Matrix& centers) {
    ModelParams p = model;
    p.names.push_back("centers");
    p.values.push_back(centers);
    return p;
}

ModelParams model_part(const ModelParams& packed) {
    ModelParams m = packed;
    m.names.pop_back();
    m.values.pop_back();
    return m;
}

struct Instance {
    ModelArch arch;
    ModelParams params;
    Matrix batch;
    std::vector<int> labels;
    ClassCenters centers;
    AdjustmentVector adist;
    double tau = 0.0;
    FedlfLossConfig cfg;
};

Instance make_instance(std::uint64_t seed, int trial) {
    auto rng = make_stream(seed, StreamTag::kGradSuite, trial);
    auto pick = [&rng](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    std::normal_distribution<double> normal(0.0, 1.0);

    Instance inst;
    inst.arch.input_dim = pick(2, 6);
    if (pick(0, 1)) inst.arch.hidden_widths = {pick(2, 6)};
    inst.arch.feature_dim = pick(2, 8);
    inst.arch.num_classes = pick(2, 5);
    // relu kinks make finite differences unreliable; the suite runs on tanh
    // and relu correctness is covered by fixed-value tests elsewhere
    inst.arch.activation = Activation::kTanh;

    inst.params = init_params(inst.arch, mix_seed(seed, 17, trial));

    const int B = pick(2, 8);
    const int C = inst.arch.num_classes;
    inst.batch = Matrix(B, inst.arch.input_dim);
    for (double& v : inst.batch.data) v = normal(rng);
    inst.labels.resize(B);
    for (int& y : inst.labels) y = pick(0, C - 1);

    inst.centers.centers = Matrix(C, inst.arch.feature_dim);
    for (double& v : inst.centers.centers.data) v = 1.5 * normal(rng);
    inst.centers.present.assign(C, 1);

    std::vector<double> ndist(C);
    double total = 0.0;
    for (double& p : ndist) {
        p = 1.0 + pick(0, 49);
        total += p;
    }
    for (double& p : ndist) p /= total;
    inst.adist = adjustment_vector(ndist, 0.25);

    // Alternate between an active margin path and a capped (constant) one.
    inst.tau = (trial % 2 == 0) ? 1e6 : 0.5;
    inst.cfg.tau = inst.tau;
    inst.cfg.lambda = (trial % 3 == 0) ? 0.5 : 0.01;
    inst.cfg.gamma = (trial % 3 == 1) ? 0.5 : 0.01;
    inst.cfg.smoothing_factor = 0.25;
    inst.cfg.decorrelation_exclude_diagonal = trial % 4 == 3;
    return inst;
}

void absorb(GradientSuiteReport& report, const GradCheckReport& check,
            int trial, const std::string& name) {
    ++report.checks;
    if (check.max_rel_error > report.worst_rel_error) {
        report.worst_rel_error = check.max_rel_error;
        report.worst_case = "trial " + std::to_string(trial) + " " + name +
                            " (" + check.worst_param + "[" +
                            std::to_string(check.worst_index) + "])";
    }
}

}  // namespace

GradientSuiteReport run_gradient_suite(int trials, double epsilon,
                                       std::uint64_t seed) {
    if (trials < 1)
        throw std::invalid_argument("gradient suite: trials must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();

    GradientSuiteReport report;
    for (int trial = 0; trial < trials; ++trial) {
        const Instance inst = make_instance(seed, trial);

        // Adjusted cross-entropy alone, gradients w.r.t. model parameters.
        {
            FedlfLossConfig cfg = inst.cfg;
            cfg.lambda = 0.0;
            cfg.gamma = 0.0;
            LossHandle handle = [&](const ModelParams& p, ModelParams* g) {
                TotalLossGrads grads;
                const LossBreakdown out =
                    total_loss(inst.batch, inst.labels, p, inst.arch,
                               inst.centers, inst.adist, cfg,
                               g ? &grads : nullptr);
                if (g) *g = std::move(grads.params);
                return out.total;
            };
            absorb(report, grad_check(handle, inst.params, epsilon), trial,
                   "l_a");
        }

        // Center loss, margin disabled (q = 0), w.r.t. model and centers.
        {
            LossHandle handle = [&](const ModelParams& p, ModelParams* g) {
                const ModelParams model = model_part(p);
                ClassCenters centers = inst.centers;
                centers.centers = p.values.back();
                ForwardCache cache;
                const Matrix features =
                    forward_features(model, inst.arch, inst.batch, &cache);
                Matrix gf, gc;
                const double value =
                    loss_center(features, inst.labels, centers, 0.0,
                                g ? &gf : nullptr, g ? &gc : nullptr);
                if (g) {
                    ModelParams mg = model.zeros_like();
                    backward_features(model, inst.arch, cache, gf, mg);
                    *g = pack(mg, gc);
                }
                return value;
            };
            absorb(report,
                   grad_check(handle, pack(inst.params, inst.centers.centers),
                              epsilon),
                   trial, "l_c_q0");
        }

        // Center loss with the margin recomputed from the centers.
        {
            LossHandle handle = [&](const ModelParams& p, ModelParams* g) {
                const ModelParams model = model_part(p);
                ClassCenters centers = inst.centers;
                centers.centers = p.values.back();
                ForwardCache cache;
                const Matrix features =
                    forward_features(model, inst.arch, inst.batch, &cache);
                Matrix gf, gc;
                const double value = loss_center_margin(
                    features, inst.labels, centers, inst.tau,
                    g ? &gf : nullptr, g ? &gc : nullptr);
                if (g) {
                    ModelParams mg = model.zeros_like();
                    backward_features(model, inst.arch, cache, gf, mg);
                    *g = pack(mg, gc);
                }
                return value;
            };
            absorb(report,
                   grad_check(handle, pack(inst.params, inst.centers.centers),
                              epsilon),
                   trial, "l_c_margin");
        }

        // Decorrelation penalty, w.r.t. model parameters.
        {
            const bool excl = inst.cfg.decorrelation_exclude_diagonal;
            LossHandle handle = [&, excl](const ModelParams& p,
                                          ModelParams* g) {
                ForwardCache cache;
                const Matrix features =
                    forward_features(p, inst.arch, inst.batch, &cache);
                StandardizeStats stats;
                const Matrix xn = standardize_features(features, &stats);
                const Matrix cor = correlation_matrix(xn);
                Matrix grad_cor;
                const double value =
                    loss_decorrelation(cor, excl, g ? &grad_cor : nullptr);
                if (g) {
                    const Matrix grad_xn = correlation_backward(xn, grad_cor);
                    const Matrix gf = standardize_backward(stats, xn, grad_xn);
                    *g = p.zeros_like();
                    backward_features(p, inst.arch, cache, gf, *g);
                }
                return value;
            };
            absorb(report, grad_check(handle, inst.params, epsilon), trial,
                   "l_d");
        }

        // Combined objective, all paths live, w.r.t. model and centers.
        {
            LossHandle handle = [&](const ModelParams& p, ModelParams* g) {
                const ModelParams model = model_part(p);
                ClassCenters centers = inst.centers;
                centers.centers = p.values.back();
                TotalLossGrads grads;
                const LossBreakdown out =
                    total_loss(inst.batch, inst.labels, model, inst.arch,
                               centers, inst.adist, inst.cfg,
                               g ? &grads : nullptr);
                if (g) *g = pack(grads.params, grads.centers);
                return out.total;
            };
            absorb(report,
                   grad_check(handle, pack(inst.params, inst.centers.centers),
                              epsilon),
                   trial, "total");
        }
    }

    report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return report;
}

}  // namespace fedlf
