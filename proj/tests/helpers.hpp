// Copyright (c) 2026 SWAE Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared test utilities: finite-difference gradient oracle and small
// numeric helpers. Oracles here are independent of the library's backward
// implementation; they only reuse forward evaluation.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "swae/nn.hpp"
#include "swae/tensor.hpp"

namespace swae_test {

// Central finite differences per tracked input entry, compared against the
// analytic gradients produced by one backward() sweep. `loss` must rebuild
// the computation from scratch on every call (fresh tape, same inputs).
// Returns the max relative error, with denominator floored at 1e-4 so that
// genuinely tiny gradients are compared absolutely.
inline double max_grad_rel_error(const std::function<double()>& loss_value,
                                 const std::vector<swae::TensorPtr>& tracked,
                                 const std::vector<std::vector<double>>& analytic,
                                 double eps = 1e-5) {
    double worst = 0.0;
    for (std::size_t t = 0; t < tracked.size(); ++t) {
        auto& x = tracked[t]->data;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double keep = x[i];
            x[i] = keep + eps;
            const double up = loss_value();
            x[i] = keep - eps;
            const double dn = loss_value();
            x[i] = keep;
            const double numeric = (up - dn) / (2.0 * eps);
            const double a = analytic[t][i];
            const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-4});
            worst = std::max(worst, std::fabs(a - numeric) / denom);
        }
    }
    return worst;
}

// Runs forward once on a fresh tape, backward, and snapshots gradients; then
// delegates to the finite-difference comparison.
inline double check_gradients(const std::function<swae::TensorPtr(swae::Tape*)>& build,
                              const std::vector<swae::TensorPtr>& tracked, double eps = 1e-5) {
    for (const auto& t : tracked) {
        t->requires_grad = true;
        t->zero_grad();
    }
    swae::Tape tape;
    auto out = build(&tape);
    tape.backward(out);
    std::vector<std::vector<double>> analytic;
    for (const auto& t : tracked) analytic.push_back(t->grad);

    auto loss_value = [&]() {
        swae::Tape fresh;
        return build(&fresh)->data[0];
    };
    return max_grad_rel_error(loss_value, tracked, analytic, eps);
}

inline swae::TensorPtr random_tensor(std::vector<int> shape, swae::Rng& rng, double lo = -1.0,
                                     double hi = 1.0, bool requires_grad = false) {
    std::vector<double> d(swae::detail::shape_numel(shape));
    for (double& v : d) v = rng.uniform(lo, hi);
    return swae::tensor(std::move(shape), std::move(d), requires_grad);
}

inline std::vector<swae::TensorPtr> param_tensors(const swae::ParamSet& p) {
    std::vector<swae::TensorPtr> out;
    p.for_each_tensor([&](const swae::TensorPtr& t) { out.push_back(t); });
    return out;
}

inline bool bitwise_equal(const swae::ParamSet& a, const swae::ParamSet& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        if (a.layers[i].weight->data != b.layers[i].weight->data) return false;
        if (a.layers[i].bias->data != b.layers[i].bias->data) return false;
    }
    return true;
}

inline swae::ParamSet clone_params(const swae::ParamSet& p) {
    swae::ParamSet out;
    for (const auto& l : p.layers)
        out.layers.push_back({swae::tensor(l.weight->shape, l.weight->data, true),
                              swae::tensor(l.bias->shape, l.bias->data, true)});
    return out;
}

}  // namespace swae_test
