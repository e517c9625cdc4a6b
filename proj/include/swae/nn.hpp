// Copyright (c) 2026 SWAE Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "swae/rng.hpp"
#include "swae/tensor.hpp"

namespace swae {

enum class Activation { LeakyRelu, Tanh, Sigmoid, Identity };

inline std::string to_string(Activation a) {
    switch (a) {
        case Activation::LeakyRelu: return "leaky_relu";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Identity: return "identity";
    }
    return "?";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "leaky_relu") return Activation::LeakyRelu;
    if (s == "tanh") return Activation::Tanh;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "identity") return Activation::Identity;
    throw std::invalid_argument("unknown activation: " + s);
}

struct MlpSpec {
    std::vector<int> layer_widths;  // input, hidden..., output; at least 2 entries
    Activation hidden_activation = Activation::LeakyRelu;
    Activation output_activation = Activation::Identity;
    double leaky_slope = 0.2;

    int input_dim() const { return layer_widths.front(); }
    int output_dim() const { return layer_widths.back(); }
    int layer_count() const { return static_cast<int>(layer_widths.size()) - 1; }

    void validate() const {
        if (layer_widths.size() < 2) throw std::invalid_argument("MlpSpec: need at least 2 widths");
        for (int w : layer_widths)
            if (w < 1) throw std::invalid_argument("MlpSpec: widths must be positive");
    }
};

// Per-layer weight (out, in) and bias (out), all tracked for gradients.
struct ParamSet {
    struct Layer {
        TensorPtr weight;
        TensorPtr bias;
    };
    std::vector<Layer> layers;

    std::size_t total_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.weight->numel() + l.bias->numel();
        return n;
    }

    void zero_grad() {
        for (auto& l : layers) {
            l.weight->zero_grad();
            l.bias->zero_grad();
        }
    }

    template <typename Fn>
    void for_each_tensor(Fn fn) const {
        for (const auto& l : layers) {
            fn(l.weight);
            fn(l.bias);
        }
    }
};

// Temporarily clears requires_grad on a ParamSet. Ops capture the flag at
// record time, so a forward recorded under this guard never routes gradients
// into the frozen parameters, no matter when backward() runs.
class FreezeGuard {
public:
    explicit FreezeGuard(const ParamSet& params) {
        params.for_each_tensor([this](const TensorPtr& t) {
            frozen_.push_back(t);
            t->requires_grad = false;
        });
    }
    ~FreezeGuard() {
        for (auto& t : frozen_) t->requires_grad = true;
    }
    FreezeGuard(const FreezeGuard&) = delete;
    FreezeGuard& operator=(const FreezeGuard&) = delete;

private:
    std::vector<TensorPtr> frozen_;
};

// Glorot-uniform weights, zero biases, deterministic per seed.
inline ParamSet init_params(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    ParamSet params;
    for (int l = 0; l < spec.layer_count(); ++l) {
        const int fan_in = spec.layer_widths[l];
        const int fan_out = spec.layer_widths[l + 1];
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        std::vector<double> w(static_cast<std::size_t>(fan_out) * fan_in);
        for (double& v : w) v = rng.uniform(-a, a);
        params.layers.push_back({tensor({fan_out, fan_in}, std::move(w), true),
                                 zeros({fan_out}, true)});
    }
    return params;
}

inline TensorPtr apply_activation(Tape* tape, const TensorPtr& x, Activation act,
                                  double leaky_slope) {
    switch (act) {
        case Activation::LeakyRelu: return leaky_relu(tape, x, leaky_slope);
        case Activation::Tanh: return tanh_act(tape, x);
        case Activation::Sigmoid: return sigmoid(tape, x);
        case Activation::Identity: return x;
    }
    throw std::logic_error("unreachable");
}

// x is (batch, in); affine layers y = x W^T + b with the hidden activation
// between layers and the output activation after the last.
inline TensorPtr mlp_forward(Tape* tape, const ParamSet& params, const MlpSpec& spec,
                             const TensorPtr& x) {
    if (x->shape.size() != 2 || x->shape[1] != spec.input_dim())
        detail::shape_fail("mlp_forward", {x.get()},
                           "input width " + std::to_string(spec.input_dim()) + " expected");
    if (static_cast<int>(params.layers.size()) != spec.layer_count())
        throw std::invalid_argument("mlp_forward: params/spec layer count mismatch");
    TensorPtr h = x;
    for (int l = 0; l < spec.layer_count(); ++l) {
        h = matmul(tape, h, params.layers[l].weight, false, true);
        h = add_bias(tape, h, params.layers[l].bias);
        const bool last = (l == spec.layer_count() - 1);
        h = apply_activation(tape, h, last ? spec.output_activation : spec.hidden_activation,
                             spec.leaky_slope);
    }
    return h;
}

// Adam with bias correction over the flattened parameter vector.
struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.5;  // adversarial-training default
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;
    std::vector<double> m;
    std::vector<double> v;

    static AdamState for_params(const ParamSet& params, double lr) {
        AdamState s;
        s.lr = lr;
        s.m.assign(params.total_count(), 0.0);
        s.v.assign(params.total_count(), 0.0);
        return s;
    }
};

struct OptimizerError : std::runtime_error {
    explicit OptimizerError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void adam_step(AdamState& state, ParamSet& params) {
    if (state.m.size() != params.total_count())
        throw OptimizerError("adam_step: state size does not match parameter count");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    std::size_t off = 0;
    for (auto& layer : params.layers) {
        for (TensorPtr t : {layer.weight, layer.bias}) {
            t->ensure_grad();
            for (std::size_t i = 0; i < t->data.size(); ++i, ++off) {
                const double g = t->grad[i];
                if (!std::isfinite(g))
                    throw OptimizerError("adam_step: non-finite gradient at offset " +
                                         std::to_string(off));
                state.m[off] = state.beta1 * state.m[off] + (1.0 - state.beta1) * g;
                state.v[off] = state.beta2 * state.v[off] + (1.0 - state.beta2) * g * g;
                const double mhat = state.m[off] / bc1;
                const double vhat = state.v[off] / bc2;
                t->data[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
            }
        }
    }
}

}  // namespace swae
