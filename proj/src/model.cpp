#include "fedlf/model.hpp"

#include <cmath>
#include <stdexcept>

#include "fedlf/rng.hpp"

namespace fedlf {

std::size_t ModelParams::total_entries() const {
    std::size_t n = 0;
    for (const auto& m : values) n += m.size();
    return n;
}

bool ModelParams::same_layout(const ModelParams& o) const {
    if (names != o.names || values.size() != o.values.size()) return false;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!values[i].same_shape(o.values[i])) return false;
    return true;
}

ModelParams ModelParams::zeros_like() const {
    ModelParams z;
    z.names = names;
    z.values.reserve(values.size());
    for (const auto& m : values) z.values.emplace_back(m.rows, m.cols);
    return z;
}

void ModelParams::add_scaled(const ModelParams& g, double s) {
    if (!same_layout(g))
        throw std::invalid_argument("ModelParams::add_scaled: layout mismatch");
    for (std::size_t i = 0; i < values.size(); ++i)
        add_scaled_inplace(values[i], g.values[i], s);
}

void ModelParams::scale_all(double s) {
    for (auto& m : values)
        for (double& v : m.data) v *= s;
}

static void validate_arch(const ModelArch& arch) {
    if (arch.input_dim < 1) throw std::invalid_argument("arch: input_dim < 1");
    if (arch.feature_dim < 1)
        throw std::invalid_argument("arch: feature_dim < 1");
    if (arch.num_classes < 2)
        throw std::invalid_argument("arch: num_classes < 2");
    for (int w : arch.hidden_widths)
        if (w < 1) throw std::invalid_argument("arch: zero hidden width");
}

ModelParams init_params(const ModelArch& arch, std::uint64_t seed) {
    validate_arch(arch);
    ModelParams p;
    std::vector<int> dims;
    dims.push_back(arch.input_dim);
    for (int w : arch.hidden_widths) dims.push_back(w);
    dims.push_back(arch.feature_dim);

    // Glorot-uniform: scale by combined fan of each layer.
    int layer = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l, ++layer) {
        const int fan_in = dims[l], fan_out = dims[l + 1];
        Matrix w(fan_in, fan_out);
        auto rng = make_stream(seed, StreamTag::kModelInit,
                               static_cast<std::uint64_t>(layer));
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& v : w.data) v = dist(rng);
        p.names.push_back("extractor." + std::to_string(layer) + ".w");
        p.values.push_back(std::move(w));
    }

    Matrix w(arch.num_classes, arch.feature_dim);
    auto rng = make_stream(seed, StreamTag::kModelInit,
                           static_cast<std::uint64_t>(layer));
    const double bound = std::sqrt(6.0 / (arch.feature_dim + arch.num_classes));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : w.data) v = dist(rng);
    p.names.push_back("classifier.w");
    p.values.push_back(std::move(w));
    return p;
}

static double activate(Activation a, double x) {
    return a == Activation::kRelu ? (x > 0.0 ? x : 0.0) : std::tanh(x);
}

// derivative expressed through the activation output
static double activate_grad(Activation a, double y) {
    return a == Activation::kRelu ? (y > 0.0 ? 1.0 : 0.0) : 1.0 - y * y;
}

Matrix forward_features(const ModelParams& params, const ModelArch& arch,
                        const Matrix& batch, ForwardCache* cache) {
    if (batch.cols != arch.input_dim)
        throw std::invalid_argument("forward_features: batch has " +
                                    std::to_string(batch.cols) +
                                    " columns, arch expects " +
                                    std::to_string(arch.input_dim));
    const int n_extractor = static_cast<int>(params.values.size()) - 1;
    if (cache) cache->layer_inputs.clear();

    Matrix act = batch;
    for (int l = 0; l < n_extractor; ++l) {
        if (cache) cache->layer_inputs.push_back(act);
        Matrix z = matmul(act, params.values[l]);
        if (l + 1 < n_extractor) {  // hidden layer: apply activation
            for (double& v : z.data) v = activate(arch.activation, v);
        }
        act = std::move(z);
    }
    if (cache) cache->features = act;
    return act;
}

void backward_features(const ModelParams& params, const ModelArch& arch,
                       const ForwardCache& cache, const Matrix& grad_features,
                       ModelParams& grads) {
    const int n_extractor = static_cast<int>(params.values.size()) - 1;
    Matrix g = grad_features;  // dLoss/d(output of layer l)
    for (int l = n_extractor - 1; l >= 0; --l) {
        // Hidden layers were stored post-activation in layer_inputs[l+1];
        // the final extractor layer is linear so g passes straight through.
        if (l + 1 < n_extractor) {
            const Matrix& post = cache.layer_inputs[l + 1];
            for (std::size_t i = 0; i < g.data.size(); ++i)
                g.data[i] *= activate_grad(arch.activation, post.data[i]);
        }
        const Matrix& in = cache.layer_inputs[l];
        add_scaled_inplace(grads.values[l], matmul_tn(in, g), 1.0);
        if (l > 0) g = matmul_nt(g, params.values[l]);  // g * M^T
    }
}

Matrix classifier_scores(const Matrix& features, const Matrix& w) {
    if (features.cols != w.cols)
        throw std::invalid_argument("classifier_scores: feature dim " +
                                    std::to_string(features.cols) +
                                    " vs classifier dim " +
                                    std::to_string(w.cols));
    return matmul_nt(features, w);
}

}  // namespace fedlf
