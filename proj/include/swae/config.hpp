// Copyright (c) 2026 SWAE Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: dataset, model, and trainer settings, parsed from a flat
// `section.key = value` text format. Parsing is strict: unknown keys,
// duplicate keys, or malformed values fail with the offending line number.
// serialize_config() emits the same format, so configs round-trip exactly and
// checkpoints can embed them verbatim.
#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "swae/io.hpp"
#include "swae/model.hpp"

namespace swae {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataConfig {
    std::string kind = "ring";  // ring | glyphs | file
    int n = 8000;               // training-set size for generated datasets
    int val_n = 1024;
    int modes = 8;
    double radius = 2.0;
    double sigma = 0.25;  // widest noise that keeps the 3-sigma mode balls disjoint
    std::string path;  // kind == file
};

struct TrainConfig {
    double lambda = 0.001;  // stage-1 adversarial weight
    int k = 2;              // stage-2 iterations per head per outer step
    int batch = 64;
    double lr = 1e-4;
    double beta1 = 0.5;
    int max_epochs = 32;  // 8000/64 = 125 outer steps per epoch -> 4000 total
    long long max_outer_steps = 0;  // 0 = no cap
    int patience = 0;               // early-stopping epochs; 0 disables
    std::uint64_t seed = 1;
    Stage2ReconSource stage2_recon = Stage2ReconSource::Encoder;
    bool scale_recon_by_lambda = false;  // stage-1 only; stage 2 has no lambda
    long long freeze_stage1_after = 0;  // outer steps; 0 = never freeze
    long long eval_every = 0;           // outer steps between eval hooks; 0 = off
};

struct RunConfig {
    DataConfig data;
    ModelConfig model;
    TrainConfig train;
    std::string out_dir = "out";  // artifact directory; --out overrides

    void validate() const {
        if (out_dir.empty()) throw ConfigError("run.out must not be empty");
        if (data.kind != "ring" && data.kind != "glyphs" && data.kind != "file")
            throw ConfigError("data.kind must be ring|glyphs|file, got " + data.kind);
        if (data.kind == "file" && data.path.empty())
            throw ConfigError("data.kind = file requires data.path");
        if (data.n < 2 || data.val_n < 2) throw ConfigError("data.n / data.val_n too small");
        if (data.modes < 1) throw ConfigError("data.modes must be >= 1");
        if (data.radius <= 0 || data.sigma <= 0) throw ConfigError("bad data.radius/data.sigma");
        model.validate();
        if (train.lambda < 0) throw ConfigError("train.lambda must be >= 0");
        if (train.k < 1) throw ConfigError("train.k must be >= 1");
        if (train.batch < 1) throw ConfigError("train.batch must be >= 1");
        if (train.lr <= 0) throw ConfigError("train.lr must be > 0");
        if (train.max_epochs < 0 || train.max_outer_steps < 0 || train.patience < 0 ||
            train.freeze_stage1_after < 0 || train.eval_every < 0)
            throw ConfigError("negative counters in [train]");
    }
};

// Non-fatal advisories surfaced by the CLI.
inline std::vector<std::string> config_warnings(const RunConfig& cfg) {
    std::vector<std::string> w;
    if (cfg.train.lambda >= 0.01)
        w.push_back("train.lambda = " + format_double(cfg.train.lambda) +
                    " is large; the adversarial term may overwhelm reconstruction");
    return w;
}

// Defaults per dataset kind. TrainConfig's struct defaults keep the generic
// adversarial settings; these profiles override them with values calibrated
// on each dataset. The ring profile uses 1-d stage-2 codes (the ring is an
// intrinsically 1-d manifold), a higher learning rate, four inner iterations,
// and freezes stage 1 after 1000 outer steps so that stage 2 trains against
// a stationary code distribution.
inline RunConfig default_config(const std::string& kind) {
    RunConfig cfg;
    cfg.data.kind = kind;
    if (kind == "ring" || kind == "file") {
        cfg.model.data_dim = 2;
        cfg.model.heads = {{PriorKind::Gaussian, 1, {64, 64}},
                           {PriorKind::Uniform, 1, {64, 64}}};
        cfg.train.lr = 1e-3;
        cfg.train.k = 4;
        cfg.train.freeze_stage1_after = 1000;
    } else if (kind == "glyphs") {
        cfg.data.n = 4096;
        cfg.data.val_n = 512;
        cfg.model.data_dim = 64;
        cfg.model.h_dim = 16;
        cfg.model.e1_hidden = {256, 256};
        cfg.model.g1_hidden = {256, 256};
        cfg.model.d1_hidden = {256, 256};
        cfg.model.heads = {{PriorKind::Gaussian, 8, {64, 64}}};
    } else {
        throw ConfigError("no default config for data.kind = " + kind);
    }
    return cfg;
}

namespace detail {

inline std::string join_ints(const std::vector<int>& v) {
    if (v.empty()) return "none";
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

struct ConfigParser {
    std::map<std::string, std::pair<std::string, int>> entries;  // key -> (value, line)
    std::string origin;

    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
    }

    void load_text(const std::string& text) {
        std::istringstream is(text);
        std::string raw;
        int lineno = 0;
        while (std::getline(is, raw)) {
            ++lineno;
            std::string line = raw;
            if (const auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) fail(lineno, "expected 'key = value': " + raw);
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) fail(lineno, "empty key");
            if (value.empty()) fail(lineno, "empty value for key '" + key + "'");
            if (!entries.emplace(key, std::make_pair(value, lineno)).second)
                fail(lineno, "duplicate key '" + key + "'");
        }
    }

    // Typed take<T>: removes the entry so leftovers can be reported.
    bool take_raw(const std::string& key, std::string* value, int* line) {
        auto it = entries.find(key);
        if (it == entries.end()) return false;
        *value = it->second.first;
        *line = it->second.second;
        entries.erase(it);
        return true;
    }

    template <typename T>
    void take_int(const std::string& key, T* out) {
        std::string v;
        int line;
        if (!take_raw(key, &v, &line)) return;
        T parsed{};
        const auto res = std::from_chars(v.data(), v.data() + v.size(), parsed);
        if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
            fail(line, "expected an integer for '" + key + "', got '" + v + "'");
        *out = parsed;
    }

    void take_double(const std::string& key, double* out) {
        std::string v;
        int line;
        if (!take_raw(key, &v, &line)) return;
        char* end = nullptr;
        const double parsed = std::strtod(v.c_str(), &end);
        if (end != v.c_str() + v.size() || v.empty())
            fail(line, "expected a number for '" + key + "', got '" + v + "'");
        *out = parsed;
    }

    void take_bool(const std::string& key, bool* out) {
        std::string v;
        int line;
        if (!take_raw(key, &v, &line)) return;
        if (v == "true") *out = true;
        else if (v == "false") *out = false;
        else fail(line, "expected true|false for '" + key + "', got '" + v + "'");
    }

    void take_string(const std::string& key, std::string* out) {
        std::string v;
        int line;
        if (take_raw(key, &v, &line)) *out = v;
    }

    void take_int_list(const std::string& key, std::vector<int>* out) {
        std::string v;
        int line;
        if (!take_raw(key, &v, &line)) return;
        out->clear();
        if (v == "none") return;
        std::istringstream is(v);
        std::string tok;
        while (std::getline(is, tok, ',')) {
            int parsed{};
            const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), parsed);
            if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
                fail(line, "expected a comma-separated int list for '" + key + "'");
            out->push_back(parsed);
        }
        if (out->empty()) fail(line, "empty list for '" + key + "'");
    }
};

}  // namespace detail

inline std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream os;
    os << "data.kind = " << cfg.data.kind << '\n';
    os << "data.n = " << cfg.data.n << '\n';
    os << "data.val_n = " << cfg.data.val_n << '\n';
    os << "data.modes = " << cfg.data.modes << '\n';
    os << "data.radius = " << format_double(cfg.data.radius) << '\n';
    os << "data.sigma = " << format_double(cfg.data.sigma) << '\n';
    if (!cfg.data.path.empty()) os << "data.path = " << cfg.data.path << '\n';
    os << "model.data_dim = " << cfg.model.data_dim << '\n';
    os << "model.h_dim = " << cfg.model.h_dim << '\n';
    os << "model.e1_hidden = " << detail::join_ints(cfg.model.e1_hidden) << '\n';
    os << "model.g1_hidden = " << detail::join_ints(cfg.model.g1_hidden) << '\n';
    os << "model.d1_hidden = " << detail::join_ints(cfg.model.d1_hidden) << '\n';
    for (std::size_t i = 0; i < cfg.model.heads.size(); ++i) {
        const auto& h = cfg.model.heads[i];
        os << "model.head." << i << ".prior = " << to_string(h.prior) << '\n';
        os << "model.head." << i << ".z_dim = " << h.z_dim << '\n';
        os << "model.head." << i << ".hidden = " << detail::join_ints(h.hidden) << '\n';
    }
    os << "train.lambda = " << format_double(cfg.train.lambda) << '\n';
    os << "train.k = " << cfg.train.k << '\n';
    os << "train.batch = " << cfg.train.batch << '\n';
    os << "train.lr = " << format_double(cfg.train.lr) << '\n';
    os << "train.beta1 = " << format_double(cfg.train.beta1) << '\n';
    os << "train.max_epochs = " << cfg.train.max_epochs << '\n';
    os << "train.max_outer_steps = " << cfg.train.max_outer_steps << '\n';
    os << "train.patience = " << cfg.train.patience << '\n';
    os << "train.seed = " << cfg.train.seed << '\n';
    os << "train.stage2_recon = "
       << (cfg.train.stage2_recon == Stage2ReconSource::Encoder ? "encoder" : "prior") << '\n';
    os << "train.scale_recon_by_lambda = " << (cfg.train.scale_recon_by_lambda ? "true" : "false")
       << '\n';
    os << "train.freeze_stage1_after = " << cfg.train.freeze_stage1_after << '\n';
    os << "train.eval_every = " << cfg.train.eval_every << '\n';
    os << "run.out = " << cfg.out_dir << '\n';
    return os.str();
}

// Parses config text over a base config; keys present in the text override
// the base. Without an explicit base, the defaults for the file's data.kind
// apply (so `data.kind = glyphs` alone selects the wide glyph model).
inline RunConfig parse_config_text(const std::string& text, const std::string& origin,
                                   std::optional<RunConfig> base = std::nullopt) {
    detail::ConfigParser p;
    p.origin = origin;
    p.load_text(text);
    RunConfig cfg;
    if (base) {
        cfg = std::move(*base);
    } else {
        std::string kind = "ring";
        if (auto it = p.entries.find("data.kind"); it != p.entries.end())
            kind = it->second.first;
        cfg = default_config(kind);
    }

    p.take_string("data.kind", &cfg.data.kind);
    p.take_int("data.n", &cfg.data.n);
    p.take_int("data.val_n", &cfg.data.val_n);
    p.take_int("data.modes", &cfg.data.modes);
    p.take_double("data.radius", &cfg.data.radius);
    p.take_double("data.sigma", &cfg.data.sigma);
    p.take_string("data.path", &cfg.data.path);

    p.take_int("model.data_dim", &cfg.model.data_dim);
    p.take_int("model.h_dim", &cfg.model.h_dim);
    p.take_int_list("model.e1_hidden", &cfg.model.e1_hidden);
    p.take_int_list("model.g1_hidden", &cfg.model.g1_hidden);
    p.take_int_list("model.d1_hidden", &cfg.model.d1_hidden);

    // Heads: indices must be contiguous from 0. A config that sets any head
    // key replaces the base head list wholesale; gaps surface as unknown-key
    // errors from the leftover check below.
    bool saw_head = false;
    for (const auto& [key, unused] : p.entries)
        if (key.rfind("model.head.", 0) == 0) saw_head = true;
    if (saw_head) {
        std::vector<HeadConfig> heads;
        for (int i = 0;; ++i) {
            const std::string prefix = "model.head." + std::to_string(i) + ".";
            if (!p.entries.count(prefix + "prior") && !p.entries.count(prefix + "z_dim") &&
                !p.entries.count(prefix + "hidden"))
                break;
            HeadConfig hc;
            std::string prior_s;
            p.take_string(prefix + "prior", &prior_s);
            if (!prior_s.empty()) hc.prior = prior_from_string(prior_s);
            p.take_int(prefix + "z_dim", &hc.z_dim);
            p.take_int_list(prefix + "hidden", &hc.hidden);
            heads.push_back(hc);
        }
        cfg.model.heads = std::move(heads);
    }

    p.take_double("train.lambda", &cfg.train.lambda);
    p.take_int("train.k", &cfg.train.k);
    p.take_int("train.batch", &cfg.train.batch);
    p.take_double("train.lr", &cfg.train.lr);
    p.take_double("train.beta1", &cfg.train.beta1);
    p.take_int("train.max_epochs", &cfg.train.max_epochs);
    p.take_int("train.max_outer_steps", &cfg.train.max_outer_steps);
    p.take_int("train.patience", &cfg.train.patience);
    p.take_int("train.seed", &cfg.train.seed);
    std::string recon_s;
    p.take_string("train.stage2_recon", &recon_s);
    if (!recon_s.empty()) {
        if (recon_s == "encoder") cfg.train.stage2_recon = Stage2ReconSource::Encoder;
        else if (recon_s == "prior") cfg.train.stage2_recon = Stage2ReconSource::Prior;
        else throw ConfigError(origin + ": train.stage2_recon must be encoder|prior");
    }
    p.take_bool("train.scale_recon_by_lambda", &cfg.train.scale_recon_by_lambda);
    p.take_int("train.freeze_stage1_after", &cfg.train.freeze_stage1_after);
    p.take_int("train.eval_every", &cfg.train.eval_every);
    p.take_string("run.out", &cfg.out_dir);

    if (!p.entries.empty()) {
        const auto& [key, value_line] = *p.entries.begin();
        p.fail(value_line.second, "unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

inline RunConfig load_config_file(const std::string& path,
                                 std::optional<RunConfig> base = std::nullopt) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str(), path, std::move(base));
}

}  // namespace swae
