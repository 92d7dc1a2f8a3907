// Central-finite-difference verification of analytic gradients. Every loss in
// the project exposes value + gradients through a LossHandle so it can be
// checked here.

#pragma once

#include <functional>
#include <string>

#include "fedlf/model.hpp"

namespace fedlf {

// Evaluates the loss at `params`; when `grads` is non-null, also fills it
// (same layout as params) with the analytic gradient.
using LossHandle =
    std::function<double(const ModelParams& params, ModelParams* grads)>;

struct GradCheckReport {
    double max_abs_error = 0.0;
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
};

// Compares the analytic gradient against (f(x+eps) - f(x-eps)) / (2 eps) for
// every parameter entry. Throws on non-finite loss values, naming the probe.
GradCheckReport grad_check(const LossHandle& loss, const ModelParams& params,
                           double epsilon = 1e-5);

}  // namespace fedlf
