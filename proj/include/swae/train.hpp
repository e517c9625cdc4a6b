// Copyright (c) 2026 SWAE Authors
// SPDX-License-Identifier: Apache-2.0
//
// The training loop. Per outer minibatch:
//   1. D1 step (real data vs detached reconstructions),
//   2. E1/G1 step (reconstruction + lambda * adversarial),
//   3. per head, k rounds of { D2 step, E2/G2 step }, each on a freshly drawn
//      inner minibatch (and fresh prior draws for D2).
// Epochs shuffle the training set with a stateless per-epoch permutation;
// the prior and inner-minibatch streams are stateful and serialized in
// checkpoints, so a resumed run replays bit-exactly.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "swae/checkpoint.hpp"
#include "swae/config.hpp"
#include "swae/data.hpp"
#include "swae/model.hpp"
#include "swae/nn.hpp"

namespace swae {

enum class TrainStatus { Completed, EarlyStopped, NanAbort };

inline const char* to_string(TrainStatus s) {
    switch (s) {
        case TrainStatus::Completed: return "completed";
        case TrainStatus::EarlyStopped: return "early_stopped";
        case TrainStatus::NanAbort: return "nan_abort";
    }
    return "?";
}

struct UpdateEvent {
    enum class Kind { D1, EG1, D2, EG2 };
    Kind kind = Kind::D1;
    int head = -1;  // -1 for stage-1 updates
    long long outer_step = 0;
};

inline const char* to_string(UpdateEvent::Kind k) {
    switch (k) {
        case UpdateEvent::Kind::D1: return "d1";
        case UpdateEvent::Kind::EG1: return "eg1";
        case UpdateEvent::Kind::D2: return "d2";
        case UpdateEvent::Kind::EG2: return "eg2";
    }
    return "?";
}

struct TrainHooks {
    std::function<void(const UpdateEvent&)> on_update;
    std::function<void(const SwaeModel&, long long)> on_eval;  // model, outer_step
    std::function<void(const SwaeModel&, long long, double)> on_epoch_end;  // epoch, val mse
};

// Per-epoch loss averages. wall_seconds is kept for interactive display but
// never serialized, so repeated runs produce byte-identical logs.
struct EpochLog {
    long long epoch = 0;
    double d1 = std::numeric_limits<double>::quiet_NaN();
    double eg1_recon = std::numeric_limits<double>::quiet_NaN();
    double eg1_adv = std::numeric_limits<double>::quiet_NaN();
    double d2 = std::numeric_limits<double>::quiet_NaN();
    double eg2_recon = std::numeric_limits<double>::quiet_NaN();
    double val_mse = std::numeric_limits<double>::quiet_NaN();
    double wall_seconds = 0.0;
};

struct TrainLog {
    std::vector<EpochLog> epochs;

    void write_csv(std::ostream& os) const {
        os << "epoch,d1,eg1_recon,eg1_adv,d2,eg2_recon,val_mse\n";
        for (const auto& e : epochs) {
            os << e.epoch << ',' << format_double(e.d1) << ',' << format_double(e.eg1_recon)
               << ',' << format_double(e.eg1_adv) << ',' << format_double(e.d2) << ','
               << format_double(e.eg2_recon) << ',' << format_double(e.val_mse) << '\n';
        }
    }
};

struct TrainResult {
    TrainStatus status = TrainStatus::Completed;
    Checkpoint checkpoint;  // final state; last good epoch snapshot on NaN abort
    TrainLog log;
};

inline ParamSet clone_params_deep(const ParamSet& p) {
    ParamSet out;
    for (const auto& l : p.layers)
        out.layers.push_back({tensor(l.weight->shape, l.weight->data, true),
                              tensor(l.bias->shape, l.bias->data, true)});
    return out;
}

inline Checkpoint clone_checkpoint(const Checkpoint& ck) {
    Checkpoint out = ck;  // counters, optimizer vectors, rng states copy by value
    out.model.e1.params = clone_params_deep(ck.model.e1.params);
    out.model.g1.params = clone_params_deep(ck.model.g1.params);
    out.model.d1.params = clone_params_deep(ck.model.d1.params);
    for (std::size_t i = 0; i < ck.model.heads.size(); ++i) {
        out.model.heads[i].e2.params = clone_params_deep(ck.model.heads[i].e2.params);
        out.model.heads[i].g2.params = clone_params_deep(ck.model.heads[i].g2.params);
        out.model.heads[i].d2.params = clone_params_deep(ck.model.heads[i].d2.params);
    }
    return out;
}

inline double validate_mse(const SwaeModel& m, const Dataset& ds) {
    TensorPtr loss = mse_loss(nullptr, reconstruct1(m, ds.samples), ds.samples);
    return loss->data[0];
}

namespace detail {

inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v))
        throw OptimizerError(std::string("non-finite ") + what + " loss");
}

}  // namespace detail

inline TrainResult train(Checkpoint ck, const Dataset& train_set, const Dataset& val_set,
                         const TrainHooks& hooks = {}) {
    ck.config.validate();
    const TrainConfig& tc = ck.config.train;
    SwaeModel& model = ck.model;
    Optimizers& opt = ck.opt;
    const int n = train_set.n();

    Rng prior_rng(0), inner_rng(0);
    prior_rng.set_state(ck.prior_rng);
    inner_rng.set_state(ck.inner_rng);
    const auto sync_rng = [&] {
        ck.prior_rng = prior_rng.state();
        ck.inner_rng = inner_rng.state();
    };

    TrainResult out;
    Checkpoint last_good = clone_checkpoint(ck);
    const auto draw_inner = [&] {
        std::vector<int> rows(tc.batch);
        for (int& r : rows) r = static_cast<int>(inner_rng.below(static_cast<std::uint64_t>(n)));
        return gather_rows(train_set.samples, rows);
    };

    bool stop = false;
    try {
        while (ck.counters.epoch < tc.max_epochs && !stop) {
            const auto plan = batch_indices(n, tc.batch, tc.seed, static_cast<int>(ck.counters.epoch));
            EpochLog elog;
            elog.epoch = ck.counters.epoch;
            const auto t0 = std::chrono::steady_clock::now();
            double acc_d1 = 0, acc_rec1 = 0, acc_adv1 = 0, acc_d2 = 0, acc_rec2 = 0;
            long long n_s1 = 0, n_s2 = 0;

            while (ck.counters.outer_index < static_cast<long long>(plan.size())) {
                const TensorPtr x =
                    gather_rows(train_set.samples, plan[ck.counters.outer_index]);
                const long long step = ck.counters.outer_step;
                const bool stage1_frozen =
                    tc.freeze_stage1_after > 0 && step >= tc.freeze_stage1_after;

                if (!stage1_frozen) {
                    {
                        model.d1.params.zero_grad();
                        Tape tape;
                        const DiscLoss d = stage1_d_loss(&tape, model, x);
                        detail::require_finite(d.total->data[0], "d1");
                        tape.backward(d.total);
                        adam_step(opt.d1, model.d1.params);
                        acc_d1 += d.total->data[0];
                        if (hooks.on_update)
                            hooks.on_update({UpdateEvent::Kind::D1, -1, step});
                    }
                    {
                        model.e1.params.zero_grad();
                        model.g1.params.zero_grad();
                        Tape tape;
                        const EgLoss eg = stage1_eg_loss(&tape, model, x, tc.lambda,
                                                         tc.scale_recon_by_lambda);
                        detail::require_finite(eg.total->data[0], "eg1");
                        tape.backward(eg.total);
                        adam_step(opt.e1, model.e1.params);
                        adam_step(opt.g1, model.g1.params);
                        acc_rec1 += eg.recon_term;
                        acc_adv1 += eg.adv_term;
                        if (hooks.on_update)
                            hooks.on_update({UpdateEvent::Kind::EG1, -1, step});
                    }
                    ++n_s1;
                }

                for (int h = 0; h < static_cast<int>(model.heads.size()); ++h) {
                    Head& head = model.heads[h];
                    for (int j = 0; j < tc.k; ++j) {
                        {
                            const TensorPtr xi = draw_inner();
                            const TensorPtr h0 = encode1(nullptr, model, xi);
                            const TensorPtr z =
                                prior_sample(head.prior, tc.batch, head.z_dim(), prior_rng);
                            head.d2.params.zero_grad();
                            Tape tape;
                            const DiscLoss d = stage2_d_loss(&tape, head, h0, z);
                            detail::require_finite(d.total->data[0], "d2");
                            tape.backward(d.total);
                            adam_step(opt.heads[h].d2, head.d2.params);
                            acc_d2 += d.total->data[0];
                            if (hooks.on_update)
                                hooks.on_update({UpdateEvent::Kind::D2, h, step});
                        }
                        {
                            const TensorPtr xi = draw_inner();
                            const TensorPtr h0 = encode1(nullptr, model, xi);
                            TensorPtr z;
                            if (tc.stage2_recon == Stage2ReconSource::Prior)
                                z = prior_sample(head.prior, tc.batch, head.z_dim(), prior_rng);
                            head.e2.params.zero_grad();
                            head.g2.params.zero_grad();
                            Tape tape;
                            const EgLoss eg = stage2_eg_loss(&tape, head, h0, tc.stage2_recon, z);
                            detail::require_finite(eg.total->data[0], "eg2");
                            tape.backward(eg.total);
                            adam_step(opt.heads[h].e2, head.e2.params);
                            adam_step(opt.heads[h].g2, head.g2.params);
                            acc_rec2 += eg.recon_term;
                            if (hooks.on_update)
                                hooks.on_update({UpdateEvent::Kind::EG2, h, step});
                        }
                        ++n_s2;
                    }
                }

                ck.counters.outer_step += 1;
                ck.counters.outer_index += 1;
                if (tc.eval_every > 0 && hooks.on_eval &&
                    ck.counters.outer_step % tc.eval_every == 0)
                    hooks.on_eval(model, ck.counters.outer_step);
                if (tc.max_outer_steps > 0 && ck.counters.outer_step >= tc.max_outer_steps) {
                    stop = true;
                    break;
                }
            }

            if (ck.counters.outer_index == static_cast<long long>(plan.size())) {
                // Epoch complete: validate, early-stop bookkeeping, snapshot.
                if (n_s1 > 0) {
                    elog.d1 = acc_d1 / n_s1;
                    elog.eg1_recon = acc_rec1 / n_s1;
                    elog.eg1_adv = acc_adv1 / n_s1;
                }
                if (n_s2 > 0) {
                    elog.d2 = acc_d2 / n_s2;
                    elog.eg2_recon = acc_rec2 / n_s2;
                }
                elog.val_mse = validate_mse(model, val_set);
                elog.wall_seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                out.log.epochs.push_back(elog);
                if (hooks.on_epoch_end)
                    hooks.on_epoch_end(model, ck.counters.epoch, elog.val_mse);

                if (elog.val_mse < ck.counters.best_val) {
                    ck.counters.best_val = elog.val_mse;
                    ck.counters.epochs_since_best = 0;
                } else {
                    ck.counters.epochs_since_best += 1;
                }
                ck.counters.epoch += 1;
                ck.counters.outer_index = 0;
                sync_rng();
                last_good = clone_checkpoint(ck);
                if (tc.patience > 0 && ck.counters.epochs_since_best >= tc.patience) {
                    out.status = TrainStatus::EarlyStopped;
                    stop = true;
                }
            }
        }
    } catch (const OptimizerError&) {
        out.status = TrainStatus::NanAbort;
        out.checkpoint = std::move(last_good);
        return out;
    }

    sync_rng();
    out.checkpoint = std::move(ck);
    return out;
}

}  // namespace swae
