// Plain serial versions of the parallel kernels. Tests assert bit-identical
// agreement with the OpenMP kernels; the benchmark target times both.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fedlf/matrix.hpp"

namespace fedlf::reference {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("reference::matmul: inner dimensions");
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            for (int j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols)
        throw std::invalid_argument("reference::matmul_nt: inner dimensions");
    Matrix c(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.rows; ++j) {
            double acc = 0.0;
            for (int k = 0; k < a.cols; ++k) acc += a(i, k) * b(j, k);
            c(i, j) = acc;
        }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows)
        throw std::invalid_argument("reference::matmul_tn: inner dimensions");
    Matrix c(a.cols, b.cols);
    for (int i = 0; i < a.cols; ++i)
        for (int k = 0; k < a.rows; ++k) {
            const double aki = a(k, i);
            for (int j = 0; j < b.cols; ++j) c(i, j) += aki * b(k, j);
        }
    return c;
}

Matrix softmax_log_probs(const Matrix& logits) {
    if (logits.rows < 1 || logits.cols < 1)
        throw std::invalid_argument("reference::softmax_log_probs: empty matrix");
    Matrix out(logits.rows, logits.cols);
    for (int i = 0; i < logits.rows; ++i) {
        double m = logits(i, 0);
        for (int j = 1; j < logits.cols; ++j) m = std::max(m, logits(i, j));
        double sum = 0.0;
        for (int j = 0; j < logits.cols; ++j) sum += std::exp(logits(i, j) - m);
        const double lse = m + std::log(sum);
        for (int j = 0; j < logits.cols; ++j) out(i, j) = logits(i, j) - lse;
    }
    return out;
}

}  // namespace fedlf::reference
