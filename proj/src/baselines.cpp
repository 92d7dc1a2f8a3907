#include "fedlf/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace fedlf {

namespace {
void check_labels(const std::vector<int>& labels, const Matrix& scores,
                  const char* who) {
    if (static_cast<int>(labels.size()) != scores.rows)
        throw std::invalid_argument(std::string(who) +
                                    ": labels length does not match rows");
    for (int y : labels)
        if (y < 0 || y >= scores.cols)
            throw std::invalid_argument(std::string(who) +
                                        ": label out of range: " +
                                        std::to_string(y));
}
}  // namespace

double loss_cross_entropy(const Matrix& scores, const std::vector<int>& labels,
                          Matrix* grad_scores) {
    check_labels(labels, scores, "loss_cross_entropy");
    const Matrix logp = softmax_log_probs(scores);
    const double inv_n = 1.0 / scores.rows;
    double loss = 0.0;
    for (int i = 0; i < scores.rows; ++i) loss -= logp(i, labels[i]);
    loss *= inv_n;

    if (grad_scores) {
        *grad_scores = Matrix(scores.rows, scores.cols);
        for (int i = 0; i < scores.rows; ++i)
            for (int j = 0; j < scores.cols; ++j)
                (*grad_scores)(i, j) =
                    inv_n * (std::exp(logp(i, j)) -
                             (j == labels[i] ? 1.0 : 0.0));
    }
    return loss;
}

double loss_focal(const Matrix& scores, const std::vector<int>& labels,
                  double focal_gamma, Matrix* grad_scores) {
    if (focal_gamma < 0.0)
        throw std::invalid_argument("loss_focal: focal_gamma must be >= 0");
    check_labels(labels, scores, "loss_focal");

    const Matrix logp = softmax_log_probs(scores);
    const double inv_n = 1.0 / scores.rows;
    if (grad_scores) *grad_scores = Matrix(scores.rows, scores.cols);

    double loss = 0.0;
    for (int i = 0; i < scores.rows; ++i) {
        const int y = labels[i];
        const double lp_t = logp(i, y);
        const double p_t = std::exp(lp_t);
        const double om = std::max(0.0, 1.0 - p_t);
        const double w = focal_gamma == 0.0 ? 1.0 : std::pow(om, focal_gamma);
        loss -= w * lp_t;

        if (grad_scores) {
            // d/ds_j of -(1-p_t)^g log p_t
            //   = [g om^{g-1} lp_t p_t - om^g] (delta_{jy} - p_j)
            double coef;
            if (focal_gamma == 0.0) {
                coef = -1.0;
            } else if (om <= 0.0) {
                coef = 0.0;  // p_t == 1: gradient vanishes
            } else {
                coef = focal_gamma * std::pow(om, focal_gamma - 1.0) * lp_t *
                           p_t -
                       w;
            }
            for (int j = 0; j < scores.cols; ++j) {
                const double p_j = std::exp(logp(i, j));
                const double delta = (j == y) ? 1.0 : 0.0;
                (*grad_scores)(i, j) = inv_n * coef * (delta - p_j);
            }
        }
    }
    return loss * inv_n;
}

double prox_term(const ModelParams& local, const ModelParams& global_ref,
                 double prox_mu, ModelParams* grads) {
    if (prox_mu < 0.0)
        throw std::invalid_argument("prox_term: prox_mu must be >= 0");
    if (!local.same_layout(global_ref))
        throw std::invalid_argument("prox_term: parameter layout mismatch");
    double sq = 0.0;
    for (std::size_t p = 0; p < local.values.size(); ++p) {
        const Matrix& a = local.values[p];
        const Matrix& b = global_ref.values[p];
        for (std::size_t i = 0; i < a.data.size(); ++i) {
            const double diff = a.data[i] - b.data[i];
            sq += diff * diff;
            if (grads && prox_mu > 0.0)
                grads->values[p].data[i] += prox_mu * diff;
        }
    }
    return 0.5 * prox_mu * sq;
}

}  // namespace fedlf
