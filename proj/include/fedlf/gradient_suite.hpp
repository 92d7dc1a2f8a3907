// Randomized finite-difference verification of every analytic gradient path:
// the adjusted cross-entropy, the center loss with and without its margin,
// the decorrelation penalty, and the combined objective.

#pragma once

#include <cstdint>
#include <string>

namespace fedlf {

struct GradientSuiteReport {
    int checks = 0;
    double worst_rel_error = 0.0;
    std::string worst_case;
    double seconds = 0.0;
};

// `trials` random tiny instances (B<=8, feature dim<=8, C<=5, tanh); every
// instance runs five independent checks. Deterministic given seed.
GradientSuiteReport run_gradient_suite(int trials, double epsilon,
                                       std::uint64_t seed);

}  // namespace fedlf
