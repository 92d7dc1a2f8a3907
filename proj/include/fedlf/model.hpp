// Classification model: an MLP feature extractor followed by a bias-free
// linear classifier. Parameters are a flat named list so that federated
// averaging and gradient checking can treat them uniformly.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedlf/matrix.hpp"

namespace fedlf {

enum class Activation { kRelu, kTanh };

struct ModelArch {
    int input_dim = 0;
    std::vector<int> hidden_widths;
    int feature_dim = 0;
    int num_classes = 0;
    Activation activation = Activation::kRelu;
};

// Named ordered parameter list. Extractor layer weights come first
// ("extractor.<l>.w", shape (in, out)); the classifier weight "classifier.w"
// (num_classes, feature_dim) is always last. Hidden layers apply the
// configured activation; the final extractor layer is linear, and no layer
// carries a bias.
struct ModelParams {
    std::vector<std::string> names;
    std::vector<Matrix> values;

    int classifier_index() const { return static_cast<int>(values.size()) - 1; }
    const Matrix& classifier() const { return values.back(); }
    Matrix& classifier() { return values.back(); }

    std::size_t total_entries() const;
    bool same_layout(const ModelParams& o) const;

    ModelParams zeros_like() const;
    void add_scaled(const ModelParams& g, double s);  // this += s*g
    void scale_all(double s);
};

ModelParams init_params(const ModelArch& arch, std::uint64_t seed);

// Per-batch activations cached by the forward pass for the backward pass.
struct ForwardCache {
    std::vector<Matrix> layer_inputs;  // input to each extractor layer
    Matrix features;
};

Matrix forward_features(const ModelParams& params, const ModelArch& arch,
                        const Matrix& batch, ForwardCache* cache = nullptr);

// Gradient of some scalar loss w.r.t. the extractor parameters, given
// dLoss/dfeatures. Returns grads shaped like `params` (classifier slot
// zero-filled); optionally accumulates into an existing grad struct.
void backward_features(const ModelParams& params, const ModelArch& arch,
                       const ForwardCache& cache, const Matrix& grad_features,
                       ModelParams& grads);

// (B, C) score matrix = features * w^T, no bias.
Matrix classifier_scores(const Matrix& features, const Matrix& w);

}  // namespace fedlf
