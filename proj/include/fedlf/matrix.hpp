// Dense row-major matrix type and the numeric kernels used everywhere else.
// Kernels are OpenMP-parallel over independent output slots; each output
// element is accumulated in a fixed serial order, so results are bit-identical
// to the serial reference implementations in fedlf::reference regardless of
// thread count.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace fedlf {

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;  // length rows*cols, row-major

    Matrix() = default;
    Matrix(int r, int c);
    Matrix(std::initializer_list<std::initializer_list<double>> init);

    static Matrix zeros(int r, int c) { return Matrix(r, c); }

    double& operator()(int i, int j) {
        return data[static_cast<std::size_t>(i) * cols + j];
    }
    double operator()(int i, int j) const {
        return data[static_cast<std::size_t>(i) * cols + j];
    }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Matrix& o) const {
        return rows == o.rows && cols == o.cols;
    }
};

// a (m,k) * b (k,n) -> (m,n)
Matrix matmul(const Matrix& a, const Matrix& b);
// a (m,k) * b(n,k)^T -> (m,n)
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// a(m,k)^T * b (m,n) -> (k,n)
Matrix matmul_tn(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

// row-wise log-softmax, stabilized by per-row max subtraction
Matrix softmax_log_probs(const Matrix& logits);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
void add_scaled_inplace(Matrix& a, const Matrix& b, double s);  // a += s*b

bool all_finite(const Matrix& a);
void check_finite(const Matrix& a, const std::string& what);

double max_abs_diff(const Matrix& a, const Matrix& b);

// Serial reference kernels, kept for tests and the kernel benchmark.
namespace reference {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix softmax_log_probs(const Matrix& logits);
}  // namespace reference

}  // namespace fedlf
