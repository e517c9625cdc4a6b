// Copyright (c) 2026 SWAE Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line workbench: training runs, sampling, reconstruction,
// interpolation, attribute manipulation, and metric reports.
//
// Exit codes: 0 success; 2 invalid arguments, config, or data; 3 training
// aborted on a non-finite loss (the last good checkpoint is still written).
// Every command is deterministic in its arguments: rerunning overwrites
// outputs with byte-identical content, and no command mutates a checkpoint
// it reads.
#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "swae/image.hpp"
#include "swae/latent.hpp"
#include "swae/metrics.hpp"
#include "swae/train.hpp"

namespace fs = std::filesystem;
using namespace swae;

namespace {

struct DataSplits {
    Dataset train, val;
};

// Materializes the splits described by the config. File-backed datasets
// carry no split markers, so the same rows serve as train and validation.
DataSplits make_datasets(const RunConfig& cfg) {
    if (cfg.data.kind == "ring")
        return {gen_gauss_ring(cfg.data.n, cfg.data.modes, cfg.data.radius, cfg.data.sigma,
                               cfg.train.seed, Split::Train),
                gen_gauss_ring(cfg.data.val_n, cfg.data.modes, cfg.data.radius, cfg.data.sigma,
                               cfg.train.seed, Split::Val)};
    if (cfg.data.kind == "glyphs")
        return {gen_glyphs(cfg.data.n, cfg.train.seed, Split::Train),
                gen_glyphs(cfg.data.val_n, cfg.train.seed, Split::Val)};
    Dataset d = import_dataset(cfg.data.path);
    return {d, d};
}

bool scatter_data(const RunConfig& cfg) { return cfg.model.data_dim == 2; }

int image_side(const RunConfig& cfg) {
    const int side = static_cast<int>(std::lround(std::sqrt(cfg.model.data_dim)));
    if (side * side != cfg.model.data_dim)
        throw ImageError("data_dim " + std::to_string(cfg.model.data_dim) +
                         " is not a perfect square; image output unavailable");
    return side;
}

std::ofstream open_text(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    return os;
}

int resolve_head(const SwaeModel& m, const std::string& name) {
    if (name.empty()) return 0;
    for (int i = 0; i < static_cast<int>(m.heads.size()); ++i)
        if (head_name(m, i) == name) return i;
    std::string names;
    for (int i = 0; i < static_cast<int>(m.heads.size()); ++i)
        names += (i ? ", " : "") + head_name(m, i);
    throw ConfigError("unknown head '" + name + "' (available: " + names + ")");
}

std::vector<int> first_rows(int n) {
    std::vector<int> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

// Generated samples for one head: a square PGM grid for image data, or a
// scatter CSV for 2-d data (with the validation points as context when
// available). Returns the path written.
std::string write_sample_artifact(const RunConfig& cfg, const SwaeModel& m, int head,
                                  const Dataset* real, int n, std::uint64_t seed,
                                  const std::string& base) {
    const TensorPtr gen = sample(m, head, n, seed);
    if (scatter_data(cfg)) {
        auto os = open_text(base + ".csv");
        write_scatter_header(os);
        if (real) write_scatter_rows(os, real->samples, "real");
        write_scatter_rows(os, gen, "sample");
        return base + ".csv";
    }
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    write_pgm(base + ".pgm", render_grid(gen, image_side(cfg), cols));
    return base + ".pgm";
}

// Shared metric context: the ring geometry for coverage, or the toy
// classifier (plus precomputed real-feature moments) for FID and ICP.
struct EvalContext {
    const RunConfig* cfg = nullptr;
    const Dataset* val = nullptr;
    std::optional<RingInfo> ring;
    std::optional<Classifier> clf;
    std::optional<FeatureMoments> real_feats;
};

MetricsRow eval_head(const EvalContext& ctx, const SwaeModel& m, int head, long long step,
                     double mse) {
    MetricsRow row;
    row.step = step;
    row.head = head_name(m, head);
    row.mse = mse;
    const std::uint64_t tag = static_cast<std::uint64_t>(step) * 64 + static_cast<std::uint64_t>(head);
    const TensorPtr gen =
        sample(m, head, ctx.val->n(), Rng::derive(ctx.cfg->train.seed, "eval/sample", tag));
    if (ctx.ring) {
        const CoverageReport cov = mode_coverage(gen, *ctx.ring);
        row.modes_hit = cov.modes_hit;
        row.hq_fraction = cov.hq_fraction;
    }
    if (ctx.clf) {
        row.fid = fid(*ctx.real_feats, moments_of(classifier_features(*ctx.clf, gen)));
        row.icp = icp(classifier_probs(*ctx.clf, gen));
    }
    return row;
}

int sample_grid_n(const RunConfig& cfg) {
    return scatter_data(cfg) ? std::min(cfg.data.val_n, 512) : 16;
}

int cmd_train(const std::string& config_path, const std::string& out_override) {
    RunConfig cfg = load_config_file(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    for (const auto& w : config_warnings(cfg)) std::cerr << "warning: " << w << '\n';
    const std::string out = cfg.out_dir;
    fs::create_directories(out);
    // Resolved config (defaults applied, overrides folded in) for the record;
    // feeding it back in reproduces the run.
    open_text(out + "/config_used.cfg") << serialize_config(cfg);
    const DataSplits data = make_datasets(cfg);

    EvalContext ctx;
    ctx.cfg = &cfg;
    ctx.val = &data.val;
    if (cfg.data.kind == "ring")
        ctx.ring = gauss_ring_info(cfg.data.modes, cfg.data.radius, cfg.data.sigma);
    if (cfg.data.kind == "glyphs") {
        std::cerr << "training toy metric classifier\n";
        ctx.clf = train_toy_classifier(data.train, cfg.train.seed);
        ctx.real_feats = moments_of(classifier_features(*ctx.clf, data.val.samples));
        save_classifier(*ctx.clf, out + "/toy_classifier.ckpt");
    }

    std::vector<MetricsRow> metrics;
    TrainHooks hooks;
    hooks.on_eval = [&](const SwaeModel& m, long long step) {
        const double mse = validate_mse(m, data.val);
        for (int h = 0; h < static_cast<int>(m.heads.size()); ++h) {
            metrics.push_back(eval_head(ctx, m, h, step, mse));
            const std::uint64_t tag =
                static_cast<std::uint64_t>(step) * 64 + static_cast<std::uint64_t>(h);
            write_sample_artifact(cfg, m, h, &data.val, sample_grid_n(cfg),
                                  Rng::derive(cfg.train.seed, "sample/grid", tag),
                                  out + "/samples_" + std::to_string(step) + "_" + head_name(m, h));
        }
    };
    hooks.on_epoch_end = [&](const SwaeModel&, long long epoch, double val_mse) {
        std::cerr << "epoch " << epoch << " val_mse " << format_double(val_mse) << '\n';
    };

    const TrainResult res = train(make_checkpoint(cfg), data.train, data.val, hooks);
    {
        auto os = open_text(out + "/log.csv");
        res.log.write_csv(os);
    }
    if (res.status == TrainStatus::NanAbort) {
        const std::string path = out + "/last_good.ckpt";
        save_checkpoint(res.checkpoint, path);
        std::cerr << "non-finite loss; aborted at outer step "
                  << res.checkpoint.counters.outer_step << ", last good checkpoint: " << path
                  << '\n';
        return 3;
    }
    save_checkpoint(res.checkpoint, out + "/final.ckpt");
    const double mse = validate_mse(res.checkpoint.model, data.val);
    const long long final_step = res.checkpoint.counters.outer_step;
    // Skip duplicate rows when a periodic eval already covered the final step.
    const bool have_final = !metrics.empty() && metrics.back().step == final_step;
    for (int h = 0; h < static_cast<int>(res.checkpoint.model.heads.size()); ++h) {
        const long long step = final_step;
        if (!have_final) metrics.push_back(eval_head(ctx, res.checkpoint.model, h, step, mse));
        const std::uint64_t tag =
            static_cast<std::uint64_t>(step) * 64 + static_cast<std::uint64_t>(h);
        write_sample_artifact(cfg, res.checkpoint.model, h, &data.val, sample_grid_n(cfg),
                              Rng::derive(cfg.train.seed, "sample/grid", tag),
                              out + "/samples_final_" + head_name(res.checkpoint.model, h));
    }
    {
        auto os = open_text(out + "/metrics.csv");
        write_metrics_csv(os, metrics);
    }
    std::cout << to_string(res.status) << " after " << res.checkpoint.counters.outer_step
              << " outer steps, val mse " << format_double(mse) << ", checkpoint " << out
              << "/final.ckpt\n";
    return 0;
}

int cmd_sample(const std::string& ck_path, const std::string& head, int n, std::uint64_t seed,
               const std::string& out) {
    const Checkpoint ck = load_checkpoint(ck_path);
    const int h = resolve_head(ck.model, head);
    fs::create_directories(out);
    std::cout << write_sample_artifact(ck.config, ck.model, h, nullptr, n, seed,
                                       out + "/sample_" + head_name(ck.model, h))
              << '\n';
    return 0;
}

int cmd_reconstruct(const std::string& ck_path, int n, const std::string& out) {
    const Checkpoint ck = load_checkpoint(ck_path);
    const DataSplits data = make_datasets(ck.config);
    n = std::min(n, data.val.n());
    const TensorPtr x = gather_rows(data.val.samples, first_rows(n));
    const TensorPtr xr = reconstruct1(ck.model, x);
    fs::create_directories(out);
    if (scatter_data(ck.config)) {
        auto os = open_text(out + "/reconstruct.csv");
        write_scatter_header(os);
        write_scatter_rows(os, x, "real");
        write_scatter_rows(os, xr, "recon");
        std::cout << out << "/reconstruct.csv\n";
        return 0;
    }
    // Originals across the top row, reconstructions aligned beneath them.
    write_pgm(out + "/reconstruct.pgm",
              render_grid(concat(nullptr, {x, xr}), image_side(ck.config), n));
    std::cout << out << "/reconstruct.pgm\n";
    return 0;
}

int cmd_interpolate(const std::string& ck_path, int idx1, int idx2, int steps,
                    const std::string& head, std::uint64_t seed, const std::string& out) {
    const Checkpoint ck = load_checkpoint(ck_path);
    const SwaeModel& m = ck.model;
    TensorPtr decoded;
    if (!head.empty()) {
        // Prior mode: interpolate between two draws from the head's prior
        // and decode through G2 then G1.
        const int h = resolve_head(m, head);
        Rng rng(Rng::derive(seed, "interp/prior", static_cast<std::uint64_t>(h)));
        const TensorPtr z = prior_sample(m.heads[static_cast<std::size_t>(h)].prior, 2,
                                         m.heads[static_cast<std::size_t>(h)].z_dim(), rng);
        const auto path = interpolate(row_of(z, 0), row_of(z, 1), steps);
        decoded = decode1(nullptr, m,
                          decode2(nullptr, m.heads[static_cast<std::size_t>(h)], stack_rows(path)));
    } else {
        const DataSplits data = make_datasets(ck.config);
        if (idx1 < 0 || idx2 < 0 || idx1 >= data.val.n() || idx2 >= data.val.n())
            throw ConfigError("sample index out of range (validation split has " +
                              std::to_string(data.val.n()) + " rows)");
        const TensorPtr h0 = encode1(nullptr, m, gather_rows(data.val.samples, {idx1, idx2}));
        const auto path = interpolate(row_of(h0, 0), row_of(h0, 1), steps);
        decoded = decode1(nullptr, m, stack_rows(path));
    }
    fs::create_directories(out);
    if (scatter_data(ck.config)) {
        auto os = open_text(out + "/interpolate.csv");
        write_scatter_header(os);
        write_scatter_rows(os, decoded, "interp");
        std::cout << out << "/interpolate.csv\n";
        return 0;
    }
    write_pgm(out + "/interpolate.pgm", render_grid(decoded, image_side(ck.config), steps));
    std::cout << out << "/interpolate.pgm\n";
    return 0;
}

int cmd_manipulate(const std::string& ck_path, const std::string& attr,
                   std::optional<double> lambda_h, int n, const std::string& out) {
    const Checkpoint ck = load_checkpoint(ck_path);
    const DataSplits data = make_datasets(ck.config);
    const AttributeDirection dir = glyph_attribute(ck.model, data.train, attr);
    n = std::min(n, data.val.n());
    const TensorPtr h0 = encode1(nullptr, ck.model, gather_rows(data.val.samples, first_rows(n)));
    const std::vector<double> sweep =
        lambda_h ? std::vector<double>{*lambda_h} : std::vector<double>{-2, -1, 0, 1, 2};
    std::vector<TensorPtr> rows;
    for (int i = 0; i < n; ++i)
        for (double l : sweep) rows.push_back(manipulate(ck.model, row_of(h0, i), dir, l));
    fs::create_directories(out);
    {
        auto os = open_text(out + "/attr_" + attr + ".csv");
        write_attribute_csv(os, dir);
    }
    // One row per base glyph, one column per strength in the sweep.
    write_pgm(out + "/manipulate_" + attr + ".pgm",
              render_grid(concat(nullptr, rows), image_side(ck.config),
                          static_cast<int>(sweep.size())));
    std::cout << out << "/manipulate_" << attr << ".pgm\n";
    return 0;
}

int cmd_eval(const std::string& ck_path, const std::string& out) {
    const Checkpoint ck = load_checkpoint(ck_path);
    const DataSplits data = make_datasets(ck.config);
    EvalContext ctx;
    ctx.cfg = &ck.config;
    ctx.val = &data.val;
    if (ck.config.data.kind == "ring")
        ctx.ring = gauss_ring_info(ck.config.data.modes, ck.config.data.radius,
                                   ck.config.data.sigma);
    if (ck.config.data.kind == "glyphs") {
        const fs::path clf_path = fs::path(ck_path).parent_path() / "toy_classifier.ckpt";
        if (!fs::exists(clf_path))
            throw ConfigError("no classifier at " + clf_path.string() +
                              "; glyph FID/ICP need one. `swae train` writes it next to "
                              "final.ckpt, or copy a classifier checkpoint there.");
        ctx.clf = load_classifier(clf_path.string());
        ctx.real_feats = moments_of(classifier_features(*ctx.clf, data.val.samples));
    }

    const double mse = validate_mse(ck.model, data.val);
    const int heads = static_cast<int>(ck.model.heads.size());
    std::vector<MetricsRow> rows(static_cast<std::size_t>(heads));
    int threads = 1;
    if (const char* env = std::getenv("SWAE_THREADS")) threads = std::max(1, std::atoi(env));
    threads = std::min(threads, heads);
    if (threads <= 1) {
        for (int h = 0; h < heads; ++h)
            rows[static_cast<std::size_t>(h)] =
                eval_head(ctx, ck.model, h, ck.counters.outer_step, mse);
    } else {
        // Heads are independent read-only evaluations; rows keep the fixed
        // head order regardless of completion order.
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (int h = next.fetch_add(1); h < heads; h = next.fetch_add(1))
                    rows[static_cast<std::size_t>(h)] =
                        eval_head(ctx, ck.model, h, ck.counters.outer_step, mse);
            });
        for (auto& t : pool) t.join();
    }
    fs::create_directories(out);
    {
        auto os = open_text(out + "/report.csv");
        write_metrics_csv(os, rows);
    }
    std::cout << out << "/report.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stacked adversarial autoencoder workbench"};
    app.require_subcommand(1);

    std::string config_path, ck_path, out = "out", head, attr;
    int n = 16, steps = 8, idx1 = 0, idx2 = 1;
    std::uint64_t seed = 1;
    double lambda_h = 0.0;

    auto* t = app.add_subcommand("train", "train a model from a config file");
    t->add_option("--config", config_path, "run config file")->required()->check(CLI::ExistingFile);
    std::string out_override;
    t->add_option("--out", out_override, "artifact directory (overrides run.out)");

    auto* s = app.add_subcommand("sample", "draw prior samples and decode them");
    s->add_option("--checkpoint", ck_path)->required()->check(CLI::ExistingFile);
    s->add_option("--head", head, "head name, e.g. g0 (default: first head)");
    s->add_option("--n", n, "number of samples");
    s->add_option("--seed", seed, "sampling seed");
    s->add_option("--out", out, "output directory");

    auto* r = app.add_subcommand("reconstruct", "reconstruct validation samples");
    r->add_option("--checkpoint", ck_path)->required()->check(CLI::ExistingFile);
    r->add_option("--n", n, "number of samples");
    r->add_option("--out", out, "output directory");

    auto* i = app.add_subcommand("interpolate", "decode a line between two codes");
    i->add_option("--checkpoint", ck_path)->required()->check(CLI::ExistingFile);
    i->add_option("idx1", idx1, "first validation row");
    i->add_option("idx2", idx2, "second validation row");
    i->add_option("--steps", steps, "interpolation points including endpoints");
    i->add_option("--head", head, "interpolate prior draws of this head instead of data rows");
    i->add_option("--seed", seed, "prior draw seed (with --head)");
    i->add_option("--out", out, "output directory");

    auto* mnp = app.add_subcommand("manipulate", "shift codes along a factor direction");
    mnp->add_option("--checkpoint", ck_path)->required()->check(CLI::ExistingFile);
    mnp->add_option("--attr", attr, "attribute name: thickness or slant")->required();
    auto* lh = mnp->add_option("--lambda-h", lambda_h, "single shift strength (default: sweep -2..2)");
    mnp->add_option("--n", n, "number of base glyphs");
    mnp->add_option("--out", out, "output directory");

    auto* e = app.add_subcommand("eval", "write a metrics report for every head");
    e->add_option("--checkpoint", ck_path)->required()->check(CLI::ExistingFile);
    e->add_option("--out", out, "output directory");

    try {
        app.parse(argc, argv);
        if (*t) return cmd_train(config_path, out_override);
        if (*s) return cmd_sample(ck_path, head, n, seed, out);
        if (*r) return cmd_reconstruct(ck_path, n, out);
        if (*i) return cmd_interpolate(ck_path, idx1, idx2, steps, head, seed, out);
        if (*mnp)
            return cmd_manipulate(ck_path, attr,
                                  *lh ? std::optional<double>(lambda_h) : std::nullopt, n, out);
        if (*e) return cmd_eval(ck_path, out);
    } catch (const CLI::CallForHelp& h) {
        return app.exit(h);
    } catch (const CLI::ParseError& pe) {
        std::cerr << "error: " << pe.what() << '\n';
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 2;
    }
    return 2;
}
