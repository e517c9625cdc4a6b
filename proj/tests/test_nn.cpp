// Copyright (c) 2026 SWAE Authors
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "swae/nn.hpp"

using namespace swae;

TEST_CASE("init_params zeroes biases and bounds weights by the glorot limit") {
    MlpSpec spec{{100, 100}, Activation::LeakyRelu, Activation::Identity};
    auto params = init_params(spec, 7);
    REQUIRE(params.layers.size() == 1);
    for (double b : params.layers[0].bias->data) CHECK(b == 0.0);

    const double limit = std::sqrt(6.0 / 200.0);
    double sum = 0.0;
    for (double w : params.layers[0].weight->data) {
        CHECK(std::fabs(w) < limit);
        sum += w;
    }
    const double mean = sum / params.layers[0].weight->numel();
    CHECK(mean > -0.01);
    CHECK(mean < 0.01);
}

TEST_CASE("init_params is deterministic per seed and varies across seeds") {
    MlpSpec spec{{2, 4}, Activation::LeakyRelu, Activation::Identity};
    auto a = init_params(spec, 42);
    auto b = init_params(spec, 42);
    CHECK(swae_test::bitwise_equal(a, b));
    auto c = init_params(spec, 43);
    CHECK_FALSE(swae_test::bitwise_equal(a, c));
}

TEST_CASE("mlp_forward on zero parameters yields zero output") {
    MlpSpec spec{{3, 4, 2}, Activation::LeakyRelu, Activation::Identity};
    ParamSet params;
    params.layers.push_back({zeros({4, 3}, true), zeros({4}, true)});
    params.layers.push_back({zeros({2, 4}, true), zeros({2}, true)});
    auto x = tensor({2, 3}, {1, 2, 3, 4, 5, 6});
    auto y = mlp_forward(nullptr, params, spec, x);
    for (double v : y->data) CHECK(v == 0.0);
}

TEST_CASE("single identity layer with tanh output maps zero to zero") {
    MlpSpec spec{{2, 2}, Activation::LeakyRelu, Activation::Tanh};
    ParamSet params;
    params.layers.push_back({tensor({2, 2}, {1, 0, 0, 1}, true), zeros({2}, true)});
    auto y = mlp_forward(nullptr, params, spec, tensor({1, 2}, {0, 0}));
    CHECK(y->data == std::vector<double>{0, 0});
}

TEST_CASE("batched forward equals row-wise concatenation of single forwards") {
    MlpSpec spec{{3, 8, 4}, Activation::LeakyRelu, Activation::Tanh};
    auto params = init_params(spec, 12);
    Rng rng(5);
    auto x1 = swae_test::random_tensor({1, 3}, rng);
    auto x2 = swae_test::random_tensor({1, 3}, rng);
    auto batch = concat(nullptr, {x1, x2}, 0);
    auto yb = mlp_forward(nullptr, params, spec, batch);
    auto y1 = mlp_forward(nullptr, params, spec, x1);
    auto y2 = mlp_forward(nullptr, params, spec, x2);
    for (int j = 0; j < 4; ++j) {
        CHECK(yb->at(0, j) == y1->at(0, j));
        CHECK(yb->at(1, j) == y2->at(0, j));
    }
}

TEST_CASE("mlp_forward rejects wrong input width") {
    MlpSpec spec{{3, 2}, Activation::LeakyRelu, Activation::Identity};
    auto params = init_params(spec, 1);
    CHECK_THROWS_AS(mlp_forward(nullptr, params, spec, tensor({1, 4}, {0, 0, 0, 0})), ShapeError);
}

TEST_CASE("adam zero-gradient step leaves parameters bit-identical") {
    MlpSpec spec{{2, 3}, Activation::LeakyRelu, Activation::Identity};
    auto params = init_params(spec, 3);
    auto before = swae_test::clone_params(params);
    auto state = AdamState::for_params(params, 0.1);
    params.zero_grad();
    adam_step(state, params);
    CHECK(swae_test::bitwise_equal(params, before));
    CHECK(state.t == 1);
}

TEST_CASE("single adam step matches the closed form to 1e-12") {
    // theta=1, g=2, lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8, t=1.
    MlpSpec spec{{1, 1}, Activation::LeakyRelu, Activation::Identity};
    ParamSet params;
    params.layers.push_back({tensor({1, 1}, {1.0}, true), zeros({1}, true)});
    AdamState state;
    state.lr = 0.1;
    state.beta1 = 0.9;
    state.beta2 = 0.999;
    state.eps = 1e-8;
    state.m.assign(2, 0.0);
    state.v.assign(2, 0.0);
    params.layers[0].weight->grad[0] = 2.0;

    adam_step(state, params);

    // Hand-evaluated closed form in extended precision:
    // m = 0.1*2, v = 0.001*4; mhat = 2, vhat = 4; theta' = 1 - 0.1*2/(2+1e-8).
    const long double expected = 1.0L - 0.1L * 2.0L / (std::sqrt(4.0L) + 1e-8L);
    CHECK(std::fabs(params.layers[0].weight->data[0] - static_cast<double>(expected)) < 1e-12);
    // Bias had zero gradient; untouched.
    CHECK(params.layers[0].bias->data[0] == 0.0);
}

TEST_CASE("per-step adam displacement is bounded by lr*(1+1e-6)") {
    MlpSpec spec{{1, 1}, Activation::LeakyRelu, Activation::Identity};
    for (double g : {2.0, 0.5, 13.7, 1e-3}) {
        ParamSet params;
        params.layers.push_back({tensor({1, 1}, {1.0}, true), zeros({1}, true)});
        AdamState state;
        state.lr = 0.05;
        state.beta1 = 0.9;
        state.beta2 = 0.999;
        state.m.assign(2, 0.0);
        state.v.assign(2, 0.0);
        double prev = params.layers[0].weight->data[0];
        for (int t = 0; t < 2; ++t) {
            params.layers[0].weight->grad[0] = g;
            params.layers[0].bias->grad[0] = 0.0;
            adam_step(state, params);
            const double cur = params.layers[0].weight->data[0];
            CHECK(std::fabs(cur - prev) <= state.lr * (1.0 + 1e-6));
            prev = cur;
        }
    }
}

TEST_CASE("adam is deterministic given identical state and gradients") {
    MlpSpec spec{{4, 4}, Activation::LeakyRelu, Activation::Identity};
    auto p1 = init_params(spec, 9);
    auto p2 = swae_test::clone_params(p1);
    auto s1 = AdamState::for_params(p1, 1e-3);
    auto s2 = AdamState::for_params(p2, 1e-3);
    Rng rng(2);
    for (int step = 0; step < 3; ++step) {
        for (auto* p : {&p1, &p2}) {
            int k = 0;
            p->for_each_tensor([&](const TensorPtr& t) { (void)t; ++k; });
        }
        // identical pseudo-gradients on both copies
        std::vector<double> g;
        p1.for_each_tensor([&](const TensorPtr& t) {
            for (std::size_t i = 0; i < t->numel(); ++i) g.push_back(rng.uniform(-1, 1));
        });
        std::size_t off = 0;
        p1.for_each_tensor([&](const TensorPtr& t) {
            for (std::size_t i = 0; i < t->numel(); ++i) t->grad[i] = g[off++];
        });
        off = 0;
        p2.for_each_tensor([&](const TensorPtr& t) {
            for (std::size_t i = 0; i < t->numel(); ++i) t->grad[i] = g[off++];
        });
        adam_step(s1, p1);
        adam_step(s2, p2);
    }
    CHECK(swae_test::bitwise_equal(p1, p2));
}

TEST_CASE("adam rejects non-finite gradients") {
    MlpSpec spec{{1, 1}, Activation::LeakyRelu, Activation::Identity};
    auto params = init_params(spec, 0);
    auto state = AdamState::for_params(params, 1e-3);
    params.layers[0].weight->grad[0] = std::nan("");
    CHECK_THROWS_AS(adam_step(state, params), OptimizerError);
}
