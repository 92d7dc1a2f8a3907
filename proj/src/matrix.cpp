#include "fedlf/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedlf {

Matrix::Matrix(int r, int c) : rows(r), cols(c) {
    if (r < 0 || c < 0)
        throw std::invalid_argument("Matrix: negative dimensions");
    data.assign(static_cast<std::size_t>(r) * c, 0.0);
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> init) {
    rows = static_cast<int>(init.size());
    cols = rows > 0 ? static_cast<int>(init.begin()->size()) : 0;
    data.reserve(static_cast<std::size_t>(rows) * cols);
    for (const auto& row : init) {
        if (static_cast<int>(row.size()) != cols)
            throw std::invalid_argument("Matrix: ragged initializer");
        data.insert(data.end(), row.begin(), row.end());
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: inner dimensions " +
                                    std::to_string(a.cols) + " vs " +
                                    std::to_string(b.rows));
    Matrix c(a.rows, b.cols);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = &a.data[static_cast<std::size_t>(i) * a.cols];
        double* crow = &c.data[static_cast<std::size_t>(i) * c.cols];
        for (int k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = &b.data[static_cast<std::size_t>(k) * b.cols];
            for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols)
        throw std::invalid_argument("matmul_nt: inner dimensions " +
                                    std::to_string(a.cols) + " vs " +
                                    std::to_string(b.cols));
    Matrix c(a.rows, b.rows);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = &a.data[static_cast<std::size_t>(i) * a.cols];
        double* crow = &c.data[static_cast<std::size_t>(i) * c.cols];
        for (int j = 0; j < b.rows; ++j) {
            const double* brow = &b.data[static_cast<std::size_t>(j) * b.cols];
            double acc = 0.0;
            for (int k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            crow[j] = acc;
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows)
        throw std::invalid_argument("matmul_tn: inner dimensions " +
                                    std::to_string(a.rows) + " vs " +
                                    std::to_string(b.rows));
    Matrix c(a.cols, b.cols);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.cols; ++i) {
        double* crow = &c.data[static_cast<std::size_t>(i) * c.cols];
        for (int k = 0; k < a.rows; ++k) {
            const double aki = a(k, i);
            const double* brow = &b.data[static_cast<std::size_t>(k) * b.cols];
            for (int j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

Matrix softmax_log_probs(const Matrix& logits) {
    if (logits.rows < 1 || logits.cols < 1)
        throw std::invalid_argument("softmax_log_probs: empty matrix");
    Matrix out(logits.rows, logits.cols);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < logits.rows; ++i) {
        const double* row = &logits.data[static_cast<std::size_t>(i) * logits.cols];
        double* orow = &out.data[static_cast<std::size_t>(i) * out.cols];
        double m = row[0];
        for (int j = 1; j < logits.cols; ++j) m = std::max(m, row[j]);
        double sum = 0.0;
        for (int j = 0; j < logits.cols; ++j) sum += std::exp(row[j] - m);
        const double lse = m + std::log(sum);
        for (int j = 0; j < logits.cols; ++j) orow[j] = row[j] - lse;
    }
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("add: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("sub: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
    return c;
}

Matrix scale(const Matrix& a, double s) {
    Matrix c = a;
    for (double& v : c.data) v *= s;
    return c;
}

void add_scaled_inplace(Matrix& a, const Matrix& b, double s) {
    if (!a.same_shape(b))
        throw std::invalid_argument("add_scaled_inplace: shape mismatch");
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += s * b.data[i];
}

bool all_finite(const Matrix& a) {
    for (double v : a.data)
        if (!std::isfinite(v)) return false;
    return true;
}

void check_finite(const Matrix& a, const std::string& what) {
    if (!all_finite(a))
        throw std::runtime_error("non-finite values in " + what);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

}  // namespace fedlf
