// Local-training objective: adaptively adjusted cross-entropy, margin-based
// class-center contrast, and feature decorrelation, combined with weights
// lambda and gamma. Every piece exposes analytic gradients.

#pragma once

#include <vector>

#include "fedlf/matrix.hpp"
#include "fedlf/model.hpp"

namespace fedlf {

struct LabelDistribution {
    std::vector<long> counts;  // per-class sample counts
    long total = 0;

    static LabelDistribution from_labels(const std::vector<int>& labels,
                                         int num_classes);
};

struct AdjustmentVector {
    std::vector<double> adist;
    double smoothing_factor = 0.0;
};

struct ClassCenters {
    Matrix centers;              // (C, d)
    std::vector<char> present;   // class has local samples

    int num_present() const;
};

struct LossBreakdown {
    double l_a = 0.0;
    double l_c = 0.0;
    double l_d = 0.0;
    double total = 0.0;
    double q_used = 0.0;
};

struct FedlfLossConfig {
    double smoothing_factor = 0.25;
    double tau = 100.0;
    double lambda = 0.01;
    double gamma = 0.01;
    // The diagonal of the correlation matrix would be identically 1 under
    // exact standardization; with the variance floor it becomes a spurious
    // shrink-every-feature force, so training excludes it.
    bool decorrelation_exclude_diagonal = true;
};

std::vector<double> normalize_distribution(const LabelDistribution& dist);

AdjustmentVector adjustment_vector(const std::vector<double>& ndist,
                                   double smoothing_factor);

// Per-class column scaling of the raw score matrix.
Matrix adjusted_logits(const Matrix& features, const Matrix& w,
                       const AdjustmentVector& adist);
Matrix apply_adjustment(const Matrix& scores, const AdjustmentVector& adist);

// Mean negative log-softmax of the true class. grad_z, when non-null, gets
// dLoss/dz.
double loss_adaptive(const Matrix& z, const std::vector<int>& labels,
                     Matrix* grad_z = nullptr);

ClassCenters init_class_centers(const Matrix& features,
                                const std::vector<int>& labels,
                                int num_classes);

// min(tau, max pairwise distance among present centers); 0 when fewer than
// two classes are present.
double margin_q(const ClassCenters& centers, double tau);

// Same computation, also reporting which center pair attains the maximum and
// whether the tau cap is active (needed to differentiate through q).
struct MarginQInfo {
    double q = 0.0;
    int arg_a = -1;
    int arg_b = -1;
    bool capped = false;
    bool degenerate = false;  // fewer than two present classes
};
MarginQInfo margin_q_info(const ClassCenters& centers, double tau);

// Margin-contrastive center loss, summed over samples. Negatives range over
// present classes only. Gradients flow to both features and centers;
// grad_loss_q, when requested, gets dLoss/dq.
double loss_center(const Matrix& features, const std::vector<int>& labels,
                   const ClassCenters& centers, double q,
                   Matrix* grad_features = nullptr,
                   Matrix* grad_centers = nullptr,
                   double* grad_loss_q = nullptr);

// loss_center with q recomputed from the centers themselves (capped by tau).
// While the cap is inactive, q's dependence on the extreme center pair is
// part of grad_centers.
double loss_center_margin(const Matrix& features,
                          const std::vector<int>& labels,
                          const ClassCenters& centers, double tau,
                          Matrix* grad_features = nullptr,
                          Matrix* grad_centers = nullptr,
                          double* q_used = nullptr);

struct StandardizeStats {
    std::vector<double> mu;
    std::vector<double> sigma;     // sqrt(population variance + eps)
};

// Column-wise (x - mu) / sigma with sigma = sqrt(var + 1e-4), population
// variance (divisor B). The variance floor keeps gradients bounded for
// near-constant columns; exactly constant columns standardize to zero.
Matrix standardize_features(const Matrix& x, StandardizeStats* stats = nullptr);

// Backprop through standardization; mu and sigma are differentiable functions
// of the batch.
Matrix standardize_backward(const StandardizeStats& stats, const Matrix& x_norm,
                            const Matrix& grad_xnorm);

// (1/B) X_norm^T X_norm
Matrix correlation_matrix(const Matrix& x_norm);

// dLoss/dX_norm given dLoss/dCor.
Matrix correlation_backward(const Matrix& x_norm, const Matrix& grad_cor);

// Sum of squared correlation entries (diagonal included unless excluded).
double loss_decorrelation(const Matrix& cor, bool exclude_diagonal = false,
                          Matrix* grad_cor = nullptr);

struct TotalLossGrads {
    ModelParams params;
    Matrix centers;
};

// Combined objective L_A + lambda*L_C + gamma*L_D over one batch. Features
// are computed once and shared across the three components. Component values
// are always reported; gradient work for a component is skipped when its
// weight is zero. Batches with a single sample skip L_D (no batch statistics
// to standardize) and report l_d = 0.
LossBreakdown total_loss(const Matrix& batch, const std::vector<int>& labels,
                         const ModelParams& params, const ModelArch& arch,
                         const ClassCenters& centers,
                         const AdjustmentVector& adist,
                         const FedlfLossConfig& cfg,
                         TotalLossGrads* grads = nullptr);

}  // namespace fedlf
