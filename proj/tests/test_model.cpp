#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "fedlf/grad_check.hpp"
#include "fedlf/matrix.hpp"
#include "fedlf/model.hpp"

using namespace fedlf;

namespace {

ModelArch small_arch() {
    ModelArch arch;
    arch.input_dim = 3;
    arch.hidden_widths = {4};
    arch.feature_dim = 2;
    arch.num_classes = 3;
    arch.activation = Activation::kTanh;
    return arch;
}

Matrix random_matrix(int r, int c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix m(r, c);
    for (double& v : m.data) v = dist(rng);
    return m;
}

}  // namespace

TEST_CASE("parameter layout and naming") {
    const ModelArch arch = small_arch();
    const ModelParams p = init_params(arch, 7);
    REQUIRE(p.values.size() == 3);
    CHECK(p.names[0] == "extractor.0.w");
    CHECK(p.names[1] == "extractor.1.w");
    CHECK(p.names[2] == "classifier.w");
    CHECK(p.values[0].rows == 3);
    CHECK(p.values[0].cols == 4);
    CHECK(p.values[1].rows == 4);
    CHECK(p.values[1].cols == 2);
    CHECK(p.classifier().rows == 3);
    CHECK(p.classifier().cols == 2);
    CHECK(p.total_entries() == 12 + 8 + 6);

    SUBCASE("no hidden layers means one linear extractor layer") {
        ModelArch flat = arch;
        flat.hidden_widths.clear();
        const ModelParams q = init_params(flat, 7);
        REQUIRE(q.values.size() == 2);
        CHECK(q.names[0] == "extractor.0.w");
        CHECK(q.names[1] == "classifier.w");
    }
}

TEST_CASE("initialization is deterministic in the seed") {
    const ModelArch arch = small_arch();
    const ModelParams a = init_params(arch, 42);
    const ModelParams b = init_params(arch, 42);
    const ModelParams c = init_params(arch, 43);
    REQUIRE(a.same_layout(b));
    for (std::size_t i = 0; i < a.values.size(); ++i)
        CHECK(max_abs_diff(a.values[i], b.values[i]) == 0.0);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        diff = std::max(diff, max_abs_diff(a.values[i], c.values[i]));
    CHECK(diff > 0.0);
}

TEST_CASE("forward pass reduces to hand arithmetic") {
    // one linear extractor layer: features = batch * W
    ModelArch arch;
    arch.input_dim = 2;
    arch.feature_dim = 2;
    arch.num_classes = 2;
    ModelParams p;
    p.names = {"extractor.0.w", "classifier.w"};
    p.values.push_back(Matrix{{1.0, 2.0}, {3.0, 4.0}});
    p.values.push_back(Matrix{{1.0, 0.0}, {0.0, 1.0}});

    const Matrix batch{{1.0, 1.0}, {2.0, 0.0}};
    const Matrix f = forward_features(p, arch, batch);
    CHECK(f(0, 0) == 4.0);
    CHECK(f(0, 1) == 6.0);
    CHECK(f(1, 0) == 2.0);
    CHECK(f(1, 1) == 4.0);

    // identity classifier: scores equal features
    const Matrix s = classifier_scores(f, p.classifier());
    CHECK(max_abs_diff(s, f) == 0.0);

    SUBCASE("relu zeroes negative hidden activations") {
        ModelArch deep;
        deep.input_dim = 1;
        deep.hidden_widths = {2};
        deep.feature_dim = 1;
        deep.num_classes = 2;
        deep.activation = Activation::kRelu;
        ModelParams q;
        q.names = {"extractor.0.w", "extractor.1.w", "classifier.w"};
        q.values.push_back(Matrix{{1.0, -1.0}});
        q.values.push_back(Matrix{{1.0}, {1.0}});
        q.values.push_back(Matrix{{1.0}, {2.0}});
        // x=3: hidden pre-act (3,-3) -> relu (3,0) -> feature 3
        const Matrix out = forward_features(q, deep, Matrix{{3.0}});
        CHECK(out(0, 0) == 3.0);
        // x=-3: hidden (-3,3) -> relu (0,3) -> feature 3
        const Matrix out2 = forward_features(q, deep, Matrix{{-3.0}});
        CHECK(out2(0, 0) == 3.0);
    }
}

TEST_CASE("rows pass through the network independently") {
    const ModelArch arch = small_arch();
    const ModelParams p = init_params(arch, 5);
    const Matrix batch = random_matrix(6, 3, 99);
    const Matrix full = forward_features(p, arch, batch);
    for (int i = 0; i < batch.rows; ++i) {
        Matrix row(1, 3);
        for (int j = 0; j < 3; ++j) row(0, j) = batch(i, j);
        const Matrix one = forward_features(p, arch, row);
        for (int j = 0; j < arch.feature_dim; ++j)
            CHECK(one(0, j) == full(i, j));
    }
}

TEST_CASE("input width is validated") {
    const ModelArch arch = small_arch();
    const ModelParams p = init_params(arch, 5);
    CHECK_THROWS_AS(forward_features(p, arch, Matrix(2, 4)),
                    std::invalid_argument);
    ModelArch bad = arch;
    bad.feature_dim = 0;
    CHECK_THROWS_AS(init_params(bad, 5), std::invalid_argument);
}

TEST_CASE("extractor backprop matches finite differences") {
    for (const Activation act : {Activation::kTanh, Activation::kRelu}) {
        ModelArch arch = small_arch();
        arch.activation = act;
        const ModelParams p = init_params(arch, 11);
        const Matrix batch = random_matrix(4, 3, 12);
        const Matrix gf = random_matrix(4, 2, 13);

        // scalar probe: sum(gf .* features)
        const auto loss = [&](const ModelParams& q, ModelParams* g) {
            ForwardCache cache;
            const Matrix f = forward_features(q, arch, batch, &cache);
            if (g) backward_features(q, arch, cache, gf, *g);
            double s = 0.0;
            for (std::size_t i = 0; i < f.data.size(); ++i)
                s += gf.data[i] * f.data[i];
            return s;
        };
        const GradCheckReport r = grad_check(loss, p, 1e-6);
        CHECK(r.max_rel_error < 1e-6);
    }
}

TEST_CASE("parameter container arithmetic") {
    const ModelArch arch = small_arch();
    ModelParams p = init_params(arch, 3);
    const ModelParams g = init_params(arch, 4);
    const ModelParams before = p;

    p.add_scaled(g, 0.5);
    for (std::size_t m = 0; m < p.values.size(); ++m)
        for (std::size_t i = 0; i < p.values[m].data.size(); ++i)
            CHECK(p.values[m].data[i] ==
                  doctest::Approx(before.values[m].data[i] +
                                  0.5 * g.values[m].data[i])
                      .epsilon(1e-15));

    ModelParams z = p.zeros_like();
    CHECK(z.same_layout(p));
    for (const Matrix& m : z.values)
        for (double v : m.data) CHECK(v == 0.0);

    p.scale_all(0.0);
    for (const Matrix& m : p.values)
        for (double v : m.data) CHECK(v == 0.0);

    ModelParams other = init_params(small_arch(), 3);
    other.values[0] = Matrix(1, 1);
    CHECK_FALSE(other.same_layout(g));
    CHECK_THROWS_AS(p.add_scaled(other, 1.0), std::invalid_argument);
}
