#include "fedlf/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace fedlf {

namespace {
void require_finite(double v, const std::string& name, std::size_t idx,
                    const char* where) {
    if (!std::isfinite(v))
        throw std::runtime_error("grad_check: non-finite loss at " +
                                 std::string(where) + " probe of " + name +
                                 "[" + std::to_string(idx) + "]");
}
}  // namespace

GradCheckReport grad_check(const LossHandle& loss, const ModelParams& params,
                           double epsilon) {
    if (epsilon <= 0.0)
        throw std::invalid_argument("grad_check: epsilon must be positive");

    ModelParams analytic = params.zeros_like();
    const double base = loss(params, &analytic);
    if (!std::isfinite(base))
        throw std::runtime_error("grad_check: non-finite loss at base point");

    GradCheckReport report;
    ModelParams probe = params;
    for (std::size_t p = 0; p < probe.values.size(); ++p) {
        Matrix& m = probe.values[p];
        for (std::size_t i = 0; i < m.data.size(); ++i) {
            const double saved = m.data[i];
            m.data[i] = saved + epsilon;
            const double f_plus = loss(probe, nullptr);
            require_finite(f_plus, probe.names[p], i, "+");
            m.data[i] = saved - epsilon;
            const double f_minus = loss(probe, nullptr);
            require_finite(f_minus, probe.names[p], i, "-");
            m.data[i] = saved;

            const double fd = (f_plus - f_minus) / (2.0 * epsilon);
            const double g = analytic.values[p].data[i];
            const double abs_err = std::abs(g - fd);
            const double denom =
                std::max({std::abs(g), std::abs(fd), 1e-6});
            const double rel_err = abs_err / denom;
            if (abs_err > report.max_abs_error) report.max_abs_error = abs_err;
            if (rel_err > report.max_rel_error) {
                report.max_rel_error = rel_err;
                report.worst_param = probe.names[p];
                report.worst_index = i;
            }
        }
    }
    return report;
}

}  // namespace fedlf
