// Comparison objectives: plain cross-entropy, focal loss, and the proximal
// regularizer that keeps local updates near the global model.

#pragma once

#include <vector>

#include "fedlf/matrix.hpp"
#include "fedlf/model.hpp"

namespace fedlf {

enum class Method { kFedAvg, kFedProx, kFocal, kFedLf };

struct BaselineConfig {
    Method method = Method::kFedLf;
    double focal_gamma = 2.0;
    double prox_mu = 0.01;
};

// Mean negative log-softmax of the true class.
double loss_cross_entropy(const Matrix& scores, const std::vector<int>& labels,
                          Matrix* grad_scores = nullptr);

// Mean of -(1 - p_t)^gamma * log(p_t).
double loss_focal(const Matrix& scores, const std::vector<int>& labels,
                  double focal_gamma, Matrix* grad_scores = nullptr);

// (mu/2) * sum over parameters of ||local - global||^2; gradient w.r.t. the
// local parameters is accumulated into `grads` when non-null.
double prox_term(const ModelParams& local, const ModelParams& global_ref,
                 double prox_mu, ModelParams* grads = nullptr);

}  // namespace fedlf
