// Copyright (c) 2026 SWAE Authors
// SPDX-License-Identifier: Apache-2.0
//
// The stacked adversarial autoencoder.
//
// Stage 1 (data space): E1 encodes x to h0, G1 decodes back, and D1
// discriminates real x from reconstructions G1(E1(x)).
//
// Stage 2 (latent space, one head per prior): E2 maps h0 to z, G2 maps z back
// to h0, and D2 discriminates prior draws z from encoded Ez = E2(h0).  At
// convergence E2 pushes the encoded distribution onto the head's prior, so
// fresh data is sampled as G1(G2(z)) with z drawn from that prior.
//
// All adversarial terms use the non-saturating convention: every update is a
// descent step, and the generator side minimizes bce(D(fake), 1) rather than
// ascending log(1 - D(fake)).
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "swae/nn.hpp"
#include "swae/rng.hpp"
#include "swae/tensor.hpp"

namespace swae {

enum class PriorKind { Gaussian, Uniform };

inline std::string to_string(PriorKind k) {
    return k == PriorKind::Gaussian ? "gaussian" : "uniform";
}

inline PriorKind prior_from_string(const std::string& s) {
    if (s == "gaussian") return PriorKind::Gaussian;
    if (s == "uniform") return PriorKind::Uniform;
    throw std::invalid_argument("unknown prior: " + s + " (expected gaussian|uniform)");
}

// Reconstruction pairing for the stage-2 loss. Encoder reconstructs h0 from
// its own code G2(E2(h0)); Prior pairs h0 against a decoded prior draw G2(z).
enum class Stage2ReconSource { Encoder, Prior };

struct NetBundle {
    MlpSpec spec;
    ParamSet params;
};

struct HeadConfig {
    PriorKind prior = PriorKind::Gaussian;
    int z_dim = 4;
    std::vector<int> hidden = {64, 64};
};

struct ModelConfig {
    int data_dim = 2;
    int h_dim = 8;
    std::vector<int> e1_hidden = {128, 128};
    std::vector<int> g1_hidden = {128, 128};
    std::vector<int> d1_hidden = {128, 128};
    // One head per supported prior, so a stock run exercises both.
    std::vector<HeadConfig> heads = {{PriorKind::Gaussian, 4, {64, 64}},
                                     {PriorKind::Uniform, 4, {64, 64}}};

    void validate() const {
        if (data_dim < 1 || h_dim < 1) throw std::invalid_argument("model: bad dimensions");
        if (heads.empty()) throw std::invalid_argument("model: needs at least one head");
        for (const auto& h : heads)
            if (h.z_dim < 1) throw std::invalid_argument("model: bad head z_dim");
    }
};

struct Head {
    PriorKind prior = PriorKind::Gaussian;
    NetBundle e2, g2, d2;

    int z_dim() const { return e2.spec.output_dim(); }
};

struct SwaeModel {
    ModelConfig config;
    NetBundle e1, g1, d1;
    std::vector<Head> heads;

    int data_dim() const { return config.data_dim; }
    int h_dim() const { return config.h_dim; }
};

// Head identifier used in logs, CSVs, and the CLI: prior initial + index
// ("g0", "u1", ...).
inline std::string head_name(const SwaeModel& m, int head_idx) {
    const Head& h = m.heads.at(head_idx);
    return (h.prior == PriorKind::Gaussian ? "g" : "u") + std::to_string(head_idx);
}

inline int head_index_by_name(const SwaeModel& m, const std::string& name) {
    for (int i = 0; i < static_cast<int>(m.heads.size()); ++i)
        if (head_name(m, i) == name) return i;
    throw std::invalid_argument("unknown head: " + name);
}

namespace detail {

inline MlpSpec layer_spec(int in, const std::vector<int>& hidden, int out, Activation out_act) {
    MlpSpec spec;
    spec.layer_widths.push_back(in);
    spec.layer_widths.insert(spec.layer_widths.end(), hidden.begin(), hidden.end());
    spec.layer_widths.push_back(out);
    spec.output_activation = out_act;
    return spec;
}

inline NetBundle make_net(int in, const std::vector<int>& hidden, int out, Activation out_act,
                          std::uint64_t seed) {
    NetBundle net;
    net.spec = layer_spec(in, hidden, out, out_act);
    net.params = init_params(net.spec, seed);
    return net;
}

}  // namespace detail

inline SwaeModel make_model(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    SwaeModel m;
    m.config = cfg;
    // G1 ends in tanh because data lives in [-1, 1]; discriminators emit raw
    // logits; the latent maps are unbounded.
    m.e1 = detail::make_net(cfg.data_dim, cfg.e1_hidden, cfg.h_dim, Activation::Identity,
                            Rng::derive(seed, "init/e1"));
    m.g1 = detail::make_net(cfg.h_dim, cfg.g1_hidden, cfg.data_dim, Activation::Tanh,
                            Rng::derive(seed, "init/g1"));
    m.d1 = detail::make_net(cfg.data_dim, cfg.d1_hidden, 1, Activation::Identity,
                            Rng::derive(seed, "init/d1"));
    for (std::size_t i = 0; i < cfg.heads.size(); ++i) {
        const HeadConfig& hc = cfg.heads[i];
        Head head;
        head.prior = hc.prior;
        head.e2 = detail::make_net(cfg.h_dim, hc.hidden, hc.z_dim, Activation::Identity,
                                   Rng::derive(seed, "init/e2", i));
        head.g2 = detail::make_net(hc.z_dim, hc.hidden, cfg.h_dim, Activation::Identity,
                                   Rng::derive(seed, "init/g2", i));
        head.d2 = detail::make_net(hc.z_dim, hc.hidden, 1, Activation::Identity,
                                   Rng::derive(seed, "init/d2", i));
        m.heads.push_back(std::move(head));
    }
    return m;
}

inline TensorPtr net_forward(Tape* tape, const NetBundle& net, const TensorPtr& x) {
    return mlp_forward(tape, net.params, net.spec, x);
}

inline TensorPtr encode1(Tape* tape, const SwaeModel& m, const TensorPtr& x) {
    return net_forward(tape, m.e1, x);
}

inline TensorPtr decode1(Tape* tape, const SwaeModel& m, const TensorPtr& h) {
    return net_forward(tape, m.g1, h);
}

inline TensorPtr reconstruct1(const SwaeModel& m, const TensorPtr& x) {
    return decode1(nullptr, m, encode1(nullptr, m, x));
}

inline TensorPtr encode2(Tape* tape, const Head& head, const TensorPtr& h) {
    return net_forward(tape, head.e2, h);
}

inline TensorPtr decode2(Tape* tape, const Head& head, const TensorPtr& z) {
    return net_forward(tape, head.g2, z);
}

inline TensorPtr prior_sample(PriorKind kind, int n, int z_dim, Rng& rng) {
    TensorPtr z = zeros({n, z_dim});
    if (kind == PriorKind::Gaussian)
        for (double& v : z->data) v = rng.normal();
    else
        for (double& v : z->data) v = rng.uniform(-1.0, 1.0);
    return z;
}

// Fresh data from one head: z ~ prior, x = G1(G2(z)).
inline TensorPtr sample(const SwaeModel& m, int head_idx, int n, std::uint64_t seed) {
    const Head& head = m.heads.at(head_idx);
    Rng rng(Rng::derive(seed, "sample/prior", static_cast<std::uint64_t>(head_idx)));
    TensorPtr z = prior_sample(head.prior, n, head.z_dim(), rng);
    return net_forward(nullptr, m.g1, net_forward(nullptr, head.g2, z));
}

// Scalar loss plus its component values (components are plain doubles, for
// logging; only `total` carries gradients).
struct DiscLoss {
    TensorPtr total;
    double real_term = 0.0;
    double fake_term = 0.0;
};

struct EgLoss {
    TensorPtr total;
    double recon_term = 0.0;
    double adv_term = 0.0;
};

// D1: real data against detached reconstructions. The generator pass runs
// untracked so only D1 parameters receive gradients.
inline DiscLoss stage1_d_loss(Tape* tape, const SwaeModel& m, const TensorPtr& x) {
    TensorPtr fake = reconstruct1(m, x);
    TensorPtr real_bce = bce_with_logits(tape, net_forward(tape, m.d1, x), 1);
    TensorPtr fake_bce = bce_with_logits(tape, net_forward(tape, m.d1, fake), 0);
    DiscLoss loss;
    loss.real_term = real_bce->data[0];
    loss.fake_term = fake_bce->data[0];
    loss.total = add(tape, real_bce, fake_bce);
    return loss;
}

// E1/G1: reconstruction plus lambda-weighted non-saturating adversarial term.
// D1 is frozen for the adversarial forward, so it shapes the loss surface but
// takes no gradient. With scale_recon_by_lambda the reconstruction term is
// multiplied by lambda as well.
inline EgLoss stage1_eg_loss(Tape* tape, const SwaeModel& m, const TensorPtr& x, double lambda,
                             bool scale_recon_by_lambda = false) {
    TensorPtr recon = decode1(tape, m, encode1(tape, m, x));
    TensorPtr rec = mse_loss(tape, recon, x);
    TensorPtr adv;
    {
        FreezeGuard freeze(m.d1.params);
        adv = bce_with_logits(tape, net_forward(tape, m.d1, recon), 1);
    }
    EgLoss loss;
    loss.recon_term = rec->data[0];
    loss.adv_term = adv->data[0];
    TensorPtr rec_part = scale_recon_by_lambda ? scale(tape, rec, lambda) : rec;
    loss.total = add(tape, rec_part, scale(tape, adv, lambda));
    return loss;
}

// D2: prior draws z (real) against detached encodings E2(h0) (fake). h0 must
// already be detached from stage 1; the E2 pass runs untracked.
inline DiscLoss stage2_d_loss(Tape* tape, const Head& head, const TensorPtr& h0,
                              const TensorPtr& z) {
    TensorPtr ez = net_forward(nullptr, head.e2, h0);
    TensorPtr real_bce = bce_with_logits(tape, net_forward(tape, head.d2, z), 1);
    TensorPtr fake_bce = bce_with_logits(tape, net_forward(tape, head.d2, ez), 0);
    DiscLoss loss;
    loss.real_term = real_bce->data[0];
    loss.fake_term = fake_bce->data[0];
    loss.total = add(tape, real_bce, fake_bce);
    return loss;
}

// E2/G2: latent reconstruction plus an unweighted adversarial push of the
// encoded distribution toward the prior (through a frozen D2). The stage-1
// trade-off lambda does not apply here; both terms enter at full strength.
// The prior draw z is only consumed when recon_source is Prior.
inline EgLoss stage2_eg_loss(Tape* tape, const Head& head, const TensorPtr& h0,
                             Stage2ReconSource recon_source = Stage2ReconSource::Encoder,
                             const TensorPtr& z = nullptr) {
    TensorPtr ez = encode2(tape, head, h0);
    TensorPtr recon;
    if (recon_source == Stage2ReconSource::Encoder) {
        recon = decode2(tape, head, ez);
    } else {
        if (!z) throw std::invalid_argument("stage2_eg_loss: Prior recon source needs z");
        recon = decode2(tape, head, z);
    }
    TensorPtr rec = mse_loss(tape, recon, h0);
    TensorPtr adv;
    {
        FreezeGuard freeze(head.d2.params);
        adv = bce_with_logits(tape, net_forward(tape, head.d2, ez), 1);
    }
    EgLoss loss;
    loss.recon_term = rec->data[0];
    loss.adv_term = adv->data[0];
    loss.total = add(tape, rec, adv);
    return loss;
}

}  // namespace swae
