#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "fedlf/matrix.hpp"

using namespace fedlf;

namespace {

Matrix random_matrix(int r, int c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    Matrix m(r, c);
    for (double& v : m.data) v = dist(rng);
    return m;
}

}  // namespace

TEST_CASE("matrix construction and element access") {
    Matrix z(2, 3);
    CHECK(z.rows == 2);
    CHECK(z.cols == 3);
    CHECK(z.size() == 6);
    for (double v : z.data) CHECK(v == 0.0);

    Matrix m{{1.0, 2.0}, {3.0, 4.0}};
    CHECK(m(0, 1) == 2.0);
    CHECK(m(1, 0) == 3.0);
    m(1, 1) = 9.0;
    CHECK(m.data[3] == 9.0);

    CHECK(m.same_shape(Matrix(2, 2)));
    CHECK_FALSE(m.same_shape(z));
}

TEST_CASE("matmul matches hand result and is bilinear") {
    const Matrix a{{1.0, 2.0}, {3.0, 4.0}};
    const Matrix b{{5.0, 6.0}, {7.0, 8.0}};
    const Matrix ab = matmul(a, b);
    CHECK(ab(0, 0) == 19.0);
    CHECK(ab(0, 1) == 22.0);
    CHECK(ab(1, 0) == 43.0);
    CHECK(ab(1, 1) == 50.0);

    const Matrix x = random_matrix(4, 3, 1);
    const Matrix y = random_matrix(3, 5, 2);
    const Matrix z = random_matrix(3, 5, 3);
    const Matrix lhs = matmul(x, add(y, z));
    const Matrix rhs = add(matmul(x, y), matmul(x, z));
    CHECK(max_abs_diff(lhs, rhs) < 1e-10);

    const Matrix ls = matmul(scale(x, 3.5), y);
    const Matrix rs = scale(matmul(x, y), 3.5);
    CHECK(max_abs_diff(ls, rs) < 1e-10);
}

TEST_CASE("transposed products agree with explicit transpose") {
    const Matrix a = random_matrix(4, 3, 10);
    const Matrix b = random_matrix(5, 3, 11);
    CHECK(max_abs_diff(matmul_nt(a, b), matmul(a, transpose(b))) == 0.0);

    const Matrix c = random_matrix(4, 5, 12);
    CHECK(max_abs_diff(matmul_tn(a, c), matmul(transpose(a), c)) == 0.0);

    const Matrix t = transpose(a);
    CHECK(t.rows == 3);
    CHECK(t.cols == 4);
    CHECK(t(2, 1) == a(1, 2));
    CHECK(max_abs_diff(transpose(t), a) == 0.0);
}

TEST_CASE("shape mismatches are rejected") {
    const Matrix a = random_matrix(2, 3, 20);
    const Matrix b = random_matrix(2, 3, 21);
    CHECK_THROWS_AS(matmul(a, b), std::invalid_argument);
    CHECK_THROWS_AS(add(a, transpose(b)), std::invalid_argument);
    CHECK_THROWS_AS(max_abs_diff(a, transpose(b)), std::invalid_argument);
}

TEST_CASE("softmax log probabilities") {
    const Matrix logits{{1.0, 2.0, 3.0}};
    const Matrix lp = softmax_log_probs(logits);
    CHECK(lp(0, 0) == doctest::Approx(-2.40760596444438).epsilon(1e-12));
    CHECK(lp(0, 1) == doctest::Approx(-1.4076059644443801).epsilon(1e-12));
    CHECK(lp(0, 2) == doctest::Approx(-0.40760596444438013).epsilon(1e-12));

    SUBCASE("rows are normalized and shift invariant") {
        const Matrix z = random_matrix(5, 4, 30);
        const Matrix p = softmax_log_probs(z);
        for (int i = 0; i < p.rows; ++i) {
            double sum = 0.0;
            for (int j = 0; j < p.cols; ++j) sum += std::exp(p(i, j));
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
        Matrix shifted = z;
        for (int i = 0; i < z.rows; ++i)
            for (int j = 0; j < z.cols; ++j) shifted(i, j) += 100.0;
        CHECK(max_abs_diff(softmax_log_probs(shifted), p) < 1e-9);
    }

    SUBCASE("extreme logits stay finite") {
        const Matrix z{{1000.0, -1000.0}};
        const Matrix p = softmax_log_probs(z);
        CHECK(all_finite(p));
        CHECK(p(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(p(0, 1) == doctest::Approx(-2000.0).epsilon(1e-12));
    }
}

TEST_CASE("elementwise helpers") {
    const Matrix a{{1.0, -2.0}};
    const Matrix b{{0.5, 4.0}};
    const Matrix s = sub(a, b);
    CHECK(s(0, 0) == 0.5);
    CHECK(s(0, 1) == -6.0);

    Matrix acc = a;
    add_scaled_inplace(acc, b, 2.0);
    CHECK(acc(0, 0) == 2.0);
    CHECK(acc(0, 1) == 6.0);

    CHECK(max_abs_diff(a, b) == 6.0);
}

TEST_CASE("finiteness checks") {
    Matrix m{{1.0, 2.0}};
    CHECK(all_finite(m));
    CHECK_NOTHROW(check_finite(m, "probe"));
    m(0, 1) = std::nan("");
    CHECK_FALSE(all_finite(m));
    CHECK_THROWS_AS(check_finite(m, "probe"), std::runtime_error);
    m(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_FALSE(all_finite(m));
}

TEST_CASE("parallel kernels match the serial reference bit for bit") {
    const Matrix a = random_matrix(17, 9, 40);
    const Matrix b = random_matrix(9, 13, 41);
    const Matrix bt = random_matrix(13, 9, 42);
    const Matrix c = random_matrix(17, 13, 43);

    CHECK(max_abs_diff(matmul(a, b), reference::matmul(a, b)) == 0.0);
    CHECK(max_abs_diff(matmul_nt(a, bt), reference::matmul_nt(a, bt)) == 0.0);
    CHECK(max_abs_diff(matmul_tn(a, c), reference::matmul_tn(a, c)) == 0.0);
    CHECK(max_abs_diff(softmax_log_probs(c),
                       reference::softmax_log_probs(c)) == 0.0);
}
