#include "fedlf/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fedlf {

namespace {
constexpr double kDistEps2 = 1e-24;  // smoothing inside Euclidean distances
constexpr double kStdEps = 1e-4;     // variance floor inside standardization

double smoothed_distance(const double* u, const double* v, int d) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) {
        const double diff = u[k] - v[k];
        s += diff * diff;
    }
    return std::sqrt(s + kDistEps2);
}

void check_labels(const std::vector<int>& labels, int num_classes,
                  int expected_rows, const char* who) {
    if (static_cast<int>(labels.size()) != expected_rows)
        throw std::invalid_argument(std::string(who) +
                                    ": labels length does not match rows");
    for (int y : labels)
        if (y < 0 || y >= num_classes)
            throw std::invalid_argument(std::string(who) +
                                        ": label out of range: " +
                                        std::to_string(y));
}
}  // namespace

LabelDistribution LabelDistribution::from_labels(const std::vector<int>& labels,
                                                 int num_classes) {
    LabelDistribution d;
    d.counts.assign(num_classes, 0);
    for (int y : labels) {
        if (y < 0 || y >= num_classes)
            throw std::invalid_argument("LabelDistribution: label out of range");
        ++d.counts[y];
    }
    d.total = static_cast<long>(labels.size());
    return d;
}

int ClassCenters::num_present() const {
    int n = 0;
    for (char p : present) n += p ? 1 : 0;
    return n;
}

std::vector<double> normalize_distribution(const LabelDistribution& dist) {
    if (dist.total < 1)
        throw std::invalid_argument("normalize_distribution: empty distribution");
    std::vector<double> ndist(dist.counts.size());
    for (std::size_t c = 0; c < dist.counts.size(); ++c)
        ndist[c] = static_cast<double>(dist.counts[c]) /
                   static_cast<double>(dist.total);
    return ndist;
}

AdjustmentVector adjustment_vector(const std::vector<double>& ndist,
                                   double smoothing_factor) {
    if (smoothing_factor < 0.0 || smoothing_factor > 1.0)
        throw std::invalid_argument("adjustment_vector: smoothing factor not in [0,1]");
    double max_nd = 0.0;
    for (double v : ndist) {
        if (v < 0.0)
            throw std::invalid_argument("adjustment_vector: negative entry");
        max_nd = std::max(max_nd, v);
    }
    if (max_nd <= 0.0)
        throw std::invalid_argument("adjustment_vector: all-zero distribution");

    AdjustmentVector out;
    out.smoothing_factor = smoothing_factor;
    out.adist.resize(ndist.size());
    for (std::size_t c = 0; c < ndist.size(); ++c)
        out.adist[c] =
            ndist[c] / max_nd * (1.0 - smoothing_factor) + smoothing_factor;
    return out;
}

Matrix apply_adjustment(const Matrix& scores, const AdjustmentVector& adist) {
    if (static_cast<int>(adist.adist.size()) != scores.cols)
        throw std::invalid_argument("apply_adjustment: adist length " +
                                    std::to_string(adist.adist.size()) +
                                    " vs " + std::to_string(scores.cols) +
                                    " classes");
    Matrix z = scores;
    for (int i = 0; i < z.rows; ++i)
        for (int j = 0; j < z.cols; ++j) z(i, j) *= adist.adist[j];
    return z;
}

Matrix adjusted_logits(const Matrix& features, const Matrix& w,
                       const AdjustmentVector& adist) {
    return apply_adjustment(classifier_scores(features, w), adist);
}

double loss_adaptive(const Matrix& z, const std::vector<int>& labels,
                     Matrix* grad_z) {
    check_labels(labels, z.cols, z.rows, "loss_adaptive");
    const Matrix logp = softmax_log_probs(z);
    const double inv_n = 1.0 / z.rows;
    double loss = 0.0;
    for (int i = 0; i < z.rows; ++i) loss -= logp(i, labels[i]);
    loss *= inv_n;

    if (grad_z) {
        *grad_z = Matrix(z.rows, z.cols);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < z.rows; ++i) {
            for (int j = 0; j < z.cols; ++j) {
                const double p = std::exp(logp(i, j));
                (*grad_z)(i, j) =
                    inv_n * (p - (j == labels[i] ? 1.0 : 0.0));
            }
        }
    }
    return loss;
}

ClassCenters init_class_centers(const Matrix& features,
                                const std::vector<int>& labels,
                                int num_classes) {
    check_labels(labels, num_classes, features.rows, "init_class_centers");
    ClassCenters cc;
    cc.centers = Matrix(num_classes, features.cols);
    cc.present.assign(num_classes, 0);
    std::vector<long> counts(num_classes, 0);
    for (int i = 0; i < features.rows; ++i) {
        const int c = labels[i];
        ++counts[c];
        for (int k = 0; k < features.cols; ++k)
            cc.centers(c, k) += features(i, k);
    }
    for (int c = 0; c < num_classes; ++c) {
        if (counts[c] > 0) {
            cc.present[c] = 1;
            const double inv = 1.0 / static_cast<double>(counts[c]);
            for (int k = 0; k < features.cols; ++k) cc.centers(c, k) *= inv;
        }
    }
    return cc;
}

MarginQInfo margin_q_info(const ClassCenters& centers, double tau) {
    if (tau <= 0.0) throw std::invalid_argument("margin_q: tau must be positive");
    MarginQInfo info;
    if (centers.num_present() < 2) {
        info.degenerate = true;
        return info;
    }
    const int C = centers.centers.rows;
    const int d = centers.centers.cols;
    double max_dist = -1.0;
    for (int a = 0; a < C; ++a) {
        if (!centers.present[a]) continue;
        for (int b = a + 1; b < C; ++b) {
            if (!centers.present[b]) continue;
            double s = 0.0;
            for (int k = 0; k < d; ++k) {
                const double diff = centers.centers(a, k) - centers.centers(b, k);
                s += diff * diff;
            }
            const double dist = std::sqrt(s);
            if (dist > max_dist) {
                max_dist = dist;
                info.arg_a = a;
                info.arg_b = b;
            }
        }
    }
    if (max_dist >= tau) {
        info.q = tau;
        info.capped = true;
    } else {
        info.q = max_dist;
    }
    return info;
}

double margin_q(const ClassCenters& centers, double tau) {
    return margin_q_info(centers, tau).q;
}

double loss_center(const Matrix& features, const std::vector<int>& labels,
                   const ClassCenters& centers, double q,
                   Matrix* grad_features, Matrix* grad_centers,
                   double* grad_loss_q) {
    const int B = features.rows;
    const int C = centers.centers.rows;
    const int d = features.cols;
    if (q < 0.0) throw std::invalid_argument("loss_center: q must be >= 0");
    if (centers.centers.cols != d)
        throw std::invalid_argument("loss_center: feature dim mismatch");
    check_labels(labels, C, B, "loss_center");
    for (int i = 0; i < B; ++i)
        if (!centers.present[labels[i]])
            throw std::invalid_argument(
                "loss_center: sample of class " + std::to_string(labels[i]) +
                " has no center");

    if (grad_features) *grad_features = Matrix(B, d);
    if (grad_centers) *grad_centers = Matrix(C, d);
    if (grad_loss_q) *grad_loss_q = 0.0;

    // Pass 1 (parallel over samples): distances, softmax weights, per-sample
    // loss, and feature gradients. Weights are kept so that center gradients
    // can be accumulated per-center afterwards.
    Matrix dist(B, C);     // smoothed distance to every present center
    Matrix weight(B, C);   // exp(x_c - lse); 0 for absent centers
    std::vector<double> loss_i(B, 0.0);
    std::vector<double> dq_i(B, 0.0);

#pragma omp parallel for schedule(static)
    for (int i = 0; i < B; ++i) {
        const int y = labels[i];
        const double* h = &features.data[static_cast<std::size_t>(i) * d];
        double max_x = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < C; ++c) {
            if (!centers.present[c]) continue;
            const double dc = smoothed_distance(
                h, &centers.centers.data[static_cast<std::size_t>(c) * d], d);
            dist(i, c) = dc;
            const double x = (c == y) ? -(dc + q) : -dc;
            max_x = std::max(max_x, x);
        }
        double sum = 0.0;
        for (int c = 0; c < C; ++c) {
            if (!centers.present[c]) continue;
            const double x = (c == y) ? -(dist(i, c) + q) : -dist(i, c);
            sum += std::exp(x - max_x);
        }
        const double lse = max_x + std::log(sum);
        loss_i[i] = (dist(i, y) + q) + lse;

        double w_pos = 0.0;
        for (int c = 0; c < C; ++c) {
            if (!centers.present[c]) continue;
            const double x = (c == y) ? -(dist(i, c) + q) : -dist(i, c);
            weight(i, c) = std::exp(x - lse);
            if (c == y) w_pos = weight(i, c);
        }
        dq_i[i] = 1.0 - w_pos;

        if (grad_features) {
            double* gh = &grad_features->data[static_cast<std::size_t>(i) * d];
            for (int c = 0; c < C; ++c) {
                if (!centers.present[c]) continue;
                // dl/ddist: positive term 1 - w_pos, negative terms -w_c
                const double coef =
                    ((c == y) ? (1.0 - weight(i, c)) : -weight(i, c)) /
                    dist(i, c);
                const double* p =
                    &centers.centers.data[static_cast<std::size_t>(c) * d];
                for (int k = 0; k < d; ++k) gh[k] += coef * (h[k] - p[k]);
            }
        }
    }

    // Pass 2 (parallel over centers): accumulate center gradients in fixed
    // sample order.
    if (grad_centers) {
#pragma omp parallel for schedule(static)
        for (int c = 0; c < C; ++c) {
            if (!centers.present[c]) continue;
            double* gp = &grad_centers->data[static_cast<std::size_t>(c) * d];
            const double* p =
                &centers.centers.data[static_cast<std::size_t>(c) * d];
            for (int i = 0; i < B; ++i) {
                const double coef =
                    ((c == labels[i]) ? (1.0 - weight(i, c)) : -weight(i, c)) /
                    dist(i, c);
                const double* h = &features.data[static_cast<std::size_t>(i) * d];
                for (int k = 0; k < d; ++k) gp[k] -= coef * (h[k] - p[k]);
            }
        }
    }

    double loss = 0.0;
    for (int i = 0; i < B; ++i) loss += loss_i[i];
    if (grad_loss_q)
        for (int i = 0; i < B; ++i) *grad_loss_q += dq_i[i];
    return loss;
}

double loss_center_margin(const Matrix& features,
                          const std::vector<int>& labels,
                          const ClassCenters& centers, double tau,
                          Matrix* grad_features, Matrix* grad_centers,
                          double* q_used) {
    const MarginQInfo qinfo = margin_q_info(centers, tau);
    if (q_used) *q_used = qinfo.q;

    double dlc_dq = 0.0;
    const double value =
        loss_center(features, labels, centers, qinfo.q, grad_features,
                    grad_centers, grad_centers ? &dlc_dq : nullptr);

    // q itself moves with the extreme center pair while the cap is inactive.
    if (grad_centers && !qinfo.degenerate && !qinfo.capped && dlc_dq != 0.0) {
        const int d = centers.centers.cols;
        const double* pa =
            &centers.centers.data[static_cast<std::size_t>(qinfo.arg_a) * d];
        const double* pb =
            &centers.centers.data[static_cast<std::size_t>(qinfo.arg_b) * d];
        const double dd = smoothed_distance(pa, pb, d);
        const double s = dlc_dq / dd;
        for (int k = 0; k < d; ++k) {
            const double diff = pa[k] - pb[k];
            (*grad_centers)(qinfo.arg_a, k) += s * diff;
            (*grad_centers)(qinfo.arg_b, k) -= s * diff;
        }
    }
    return value;
}

Matrix standardize_features(const Matrix& x, StandardizeStats* stats) {
    const int B = x.rows, d = x.cols;
    if (B < 2)
        throw std::invalid_argument(
            "standardize_features: need at least two rows");
    StandardizeStats local;
    StandardizeStats& st = stats ? *stats : local;
    st.mu.assign(d, 0.0);
    st.sigma.assign(d, 0.0);

    Matrix xn(B, d);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < d; ++j) {
        double mu = 0.0;
        for (int i = 0; i < B; ++i) mu += x(i, j);
        mu /= B;
        double var = 0.0;
        for (int i = 0; i < B; ++i) {
            const double diff = x(i, j) - mu;
            var += diff * diff;
        }
        var /= B;  // population variance
        const double sigma = std::sqrt(var + kStdEps);
        st.mu[j] = mu;
        st.sigma[j] = sigma;
        for (int i = 0; i < B; ++i) xn(i, j) = (x(i, j) - mu) / sigma;
    }
    return xn;
}

Matrix standardize_backward(const StandardizeStats& stats, const Matrix& x_norm,
                            const Matrix& grad_xnorm) {
    const int B = x_norm.rows, d = x_norm.cols;
    if (!x_norm.same_shape(grad_xnorm))
        throw std::invalid_argument("standardize_backward: shape mismatch");
    Matrix gx(B, d);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < d; ++j) {
        double mean_g = 0.0, mean_gxn = 0.0;
        for (int i = 0; i < B; ++i) {
            mean_g += grad_xnorm(i, j);
            mean_gxn += grad_xnorm(i, j) * x_norm(i, j);
        }
        mean_g /= B;
        mean_gxn /= B;
        const double inv_sigma = 1.0 / stats.sigma[j];
        for (int i = 0; i < B; ++i)
            gx(i, j) = (grad_xnorm(i, j) - mean_g -
                        x_norm(i, j) * mean_gxn) *
                       inv_sigma;
    }
    return gx;
}

Matrix correlation_matrix(const Matrix& x_norm) {
    return scale(matmul_tn(x_norm, x_norm), 1.0 / x_norm.rows);
}

Matrix correlation_backward(const Matrix& x_norm, const Matrix& grad_cor) {
    if (grad_cor.rows != x_norm.cols || grad_cor.cols != x_norm.cols)
        throw std::invalid_argument("correlation_backward: shape mismatch");
    // dL/dXn = (1/B) Xn (G + G^T)
    Matrix sym = add(grad_cor, transpose(grad_cor));
    return scale(matmul(x_norm, sym), 1.0 / x_norm.rows);
}

double loss_decorrelation(const Matrix& cor, bool exclude_diagonal,
                          Matrix* grad_cor) {
    if (cor.rows != cor.cols)
        throw std::invalid_argument("loss_decorrelation: matrix not square");
    double loss = 0.0;
    for (int i = 0; i < cor.rows; ++i)
        for (int j = 0; j < cor.cols; ++j) {
            if (exclude_diagonal && i == j) continue;
            loss += cor(i, j) * cor(i, j);
        }
    if (grad_cor) {
        *grad_cor = Matrix(cor.rows, cor.cols);
        for (int i = 0; i < cor.rows; ++i)
            for (int j = 0; j < cor.cols; ++j) {
                if (exclude_diagonal && i == j) continue;
                (*grad_cor)(i, j) = 2.0 * cor(i, j);
            }
    }
    return loss;
}

LossBreakdown total_loss(const Matrix& batch, const std::vector<int>& labels,
                         const ModelParams& params, const ModelArch& arch,
                         const ClassCenters& centers,
                         const AdjustmentVector& adist,
                         const FedlfLossConfig& cfg, TotalLossGrads* grads) {
    if (cfg.lambda < 0.0 || cfg.gamma < 0.0)
        throw std::invalid_argument("total_loss: lambda and gamma must be >= 0");

    ForwardCache cache;
    const Matrix features = forward_features(params, arch, batch, &cache);
    const Matrix& w = params.classifier();
    const Matrix scores = classifier_scores(features, w);
    const Matrix z = apply_adjustment(scores, adist);

    LossBreakdown out;
    const bool want_grads = grads != nullptr;
    Matrix grad_z;
    out.l_a = loss_adaptive(z, labels, want_grads ? &grad_z : nullptr);

    const bool need_c_grads = want_grads && cfg.lambda > 0.0;
    Matrix grad_h_c, grad_centers_c;
    out.l_c = loss_center_margin(features, labels, centers, cfg.tau,
                                 need_c_grads ? &grad_h_c : nullptr,
                                 need_c_grads ? &grad_centers_c : nullptr,
                                 &out.q_used);

    const bool need_d_grads = want_grads && cfg.gamma > 0.0;
    Matrix grad_h_d;
    if (batch.rows >= 2) {
        StandardizeStats stats;
        const Matrix xn = standardize_features(features, &stats);
        const Matrix cor = correlation_matrix(xn);
        Matrix grad_cor;
        out.l_d = loss_decorrelation(cor, cfg.decorrelation_exclude_diagonal,
                                     need_d_grads ? &grad_cor : nullptr);
        if (need_d_grads) {
            const Matrix grad_xn = correlation_backward(xn, grad_cor);
            grad_h_d = standardize_backward(stats, xn, grad_xn);
        }
    }

    out.total = out.l_a + cfg.lambda * out.l_c + cfg.gamma * out.l_d;

    if (want_grads) {
        grads->params = params.zeros_like();
        grads->centers = Matrix(centers.centers.rows, centers.centers.cols);

        // adjusted CE: through the column scaling into scores, then W and h
        Matrix grad_scores = grad_z;
        for (int i = 0; i < grad_scores.rows; ++i)
            for (int j = 0; j < grad_scores.cols; ++j)
                grad_scores(i, j) *= adist.adist[j];
        add_scaled_inplace(grads->params.classifier(),
                           matmul_tn(grad_scores, features), 1.0);
        Matrix grad_h = matmul(grad_scores, w);

        if (need_c_grads) {
            add_scaled_inplace(grad_h, grad_h_c, cfg.lambda);
            add_scaled_inplace(grads->centers, grad_centers_c, cfg.lambda);
        }
        if (need_d_grads && grad_h_d.rows > 0)
            add_scaled_inplace(grad_h, grad_h_d, cfg.gamma);

        backward_features(params, arch, cache, grad_h, grads->params);
    }
    return out;
}

}  // namespace fedlf
