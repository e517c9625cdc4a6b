// Copyright (c) 2026 SWAE Authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint container: magic "SWAE", little-endian u32 version, a
// self-describing ASCII manifest, a little-endian f64 payload, and a trailing
// CRC-32 of the payload bytes.
//
// Manifest grammar (one entry per line, terminated by "end"):
//   field <key> <value...>            free-form value, may contain spaces
//   array <name> <rank> <dims...> <offset>
// Offsets count f64 slots into the payload. The embedded run configuration
// uses the same dotted keys as config files, prefixed with "cfg ", so a
// checkpoint fully describes the run that produced it.
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "swae/config.hpp"
#include "swae/io.hpp"
#include "swae/metrics.hpp"
#include "swae/model.hpp"
#include "swae/nn.hpp"
#include "swae/rng.hpp"

namespace swae {

struct CheckpointError : std::runtime_error {
    explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

class ManifestWriter {
public:
    void field(const std::string& key, const std::string& value) {
        lines_.push_back("field " + key + ' ' + value);
    }
    void field_u64(const std::string& key, std::uint64_t v) { field(key, std::to_string(v)); }
    void field_i64(const std::string& key, long long v) { field(key, std::to_string(v)); }
    void field_f64(const std::string& key, double v) { field(key, format_double(v)); }
    void field_rng(const std::string& key, const Rng::State& s) {
        std::string v;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i) v += ' ';
            v += std::to_string(s[i]);
        }
        field(key, v);
    }

    void array(const std::string& name, const std::vector<int>& shape,
               const std::vector<double>& data) {
        std::string line = "array " + name + ' ' + std::to_string(shape.size());
        for (int d : shape) line += ' ' + std::to_string(d);
        line += ' ' + std::to_string(payload_.size());
        lines_.push_back(std::move(line));
        payload_.insert(payload_.end(), data.begin(), data.end());
    }

    void write(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw CheckpointError("cannot open " + path + " for writing");
        os.write("SWAE", 4);
        unsigned char v4[4];
        encode_u32_le(kCheckpointVersion, v4);
        os.write(reinterpret_cast<const char*>(v4), 4);
        for (const auto& line : lines_) os << line << '\n';
        os << "end\n";

        std::vector<unsigned char> bytes;
        bytes.reserve(payload_.size() * 8);
        append_f64_le(bytes, payload_.data(), payload_.size());
        Crc32 crc;
        crc.update(bytes.data(), bytes.size());
        os.write(reinterpret_cast<const char*>(bytes.data()),
                 static_cast<std::streamsize>(bytes.size()));
        unsigned char c4[4];
        encode_u32_le(crc.value(), c4);
        os.write(reinterpret_cast<const char*>(c4), 4);
        if (!os) throw CheckpointError("write failed for " + path);
    }

private:
    std::vector<std::string> lines_;
    std::vector<double> payload_;
};

struct LoadedManifest {
    std::string path;
    std::map<std::string, std::string> fields;
    struct ArrayInfo {
        std::vector<int> shape;
        std::size_t offset = 0;
        std::size_t numel = 0;
    };
    std::map<std::string, ArrayInfo> arrays;
    std::vector<double> payload;

    [[noreturn]] void fail(const std::string& msg) const {
        throw CheckpointError(path + ": " + msg);
    }

    const std::string& require_field(const std::string& key) const {
        auto it = fields.find(key);
        if (it == fields.end()) fail("missing field '" + key + "'");
        return it->second;
    }

    long long field_i64(const std::string& key) const {
        return std::stoll(require_field(key));
    }
    std::uint64_t field_u64(const std::string& key) const {
        return std::stoull(require_field(key));
    }
    double field_f64(const std::string& key) const { return std::strtod(require_field(key).c_str(), nullptr); }

    Rng::State field_rng(const std::string& key) const {
        std::istringstream is(require_field(key));
        Rng::State s{};
        for (auto& w : s)
            if (!(is >> w)) fail("malformed rng state in '" + key + "'");
        return s;
    }

    // Copies the named array into `dst`, insisting on an exact shape match.
    void read_array(const std::string& name, const std::vector<int>& shape,
                    std::vector<double>* dst) const {
        auto it = arrays.find(name);
        if (it == arrays.end()) fail("missing array '" + name + "'");
        if (it->second.shape != shape) {
            std::string msg = "array '" + name + "' shape mismatch (stored";
            for (int d : it->second.shape) msg += ' ' + std::to_string(d);
            msg += ", expected";
            for (int d : shape) msg += ' ' + std::to_string(d);
            fail(msg + ")");
        }
        dst->assign(payload.begin() + it->second.offset,
                    payload.begin() + it->second.offset + it->second.numel);
    }
};

inline LoadedManifest read_manifest(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("cannot open " + path);
    std::vector<char> raw((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

    LoadedManifest m;
    m.path = path;
    if (raw.size() < 8 || std::string(raw.data(), 4) != "SWAE") m.fail("not a SWAE checkpoint");
    const std::uint32_t version = decode_u32_le(reinterpret_cast<unsigned char*>(raw.data() + 4));
    if (version != kCheckpointVersion)
        m.fail("unsupported version " + std::to_string(version) + " (expected " +
               std::to_string(kCheckpointVersion) + ")");

    // Manifest: text lines up to and including "end\n".
    std::size_t pos = 8;
    std::size_t expected_payload = 0;
    bool saw_end = false;
    while (pos < raw.size()) {
        const char* nl =
            static_cast<const char*>(std::memchr(raw.data() + pos, '\n', raw.size() - pos));
        if (!nl) break;
        const std::string line(raw.data() + pos, static_cast<std::size_t>(nl - raw.data() - pos));
        pos = static_cast<std::size_t>(nl - raw.data()) + 1;
        if (line == "end") {
            saw_end = true;
            break;
        }
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "field") {
            std::string key;
            ls >> key;
            std::string value;
            std::getline(ls, value);
            if (key.empty() || value.size() < 2) m.fail("malformed field line: " + line);
            m.fields[key] = value.substr(1);  // drop the separating space
        } else if (tag == "array") {
            std::string name;
            int rank = -1;
            ls >> name >> rank;
            if (name.empty() || rank < 0 || rank > 8) m.fail("malformed array line: " + line);
            LoadedManifest::ArrayInfo info;
            info.numel = 1;
            for (int i = 0; i < rank; ++i) {
                int d = -1;
                ls >> d;
                if (d < 0) m.fail("malformed array line: " + line);
                info.shape.push_back(d);
                info.numel *= static_cast<std::size_t>(d);
            }
            long long off = -1;
            ls >> off;
            if (!ls || off < 0) m.fail("malformed array line: " + line);
            info.offset = static_cast<std::size_t>(off);
            expected_payload = std::max(expected_payload, info.offset + info.numel);
            m.arrays[name] = std::move(info);
        } else {
            m.fail("unknown manifest entry: " + line);
        }
    }
    if (!saw_end) m.fail("truncated manifest (no end marker)");

    const std::size_t remaining = raw.size() - pos;
    if (remaining < 4 || (remaining - 4) % 8 != 0) m.fail("truncated payload");
    const std::size_t count = (remaining - 4) / 8;
    if (count != expected_payload)
        m.fail("payload holds " + std::to_string(count) + " values, manifest expects " +
               std::to_string(expected_payload));

    Crc32 crc;
    crc.update(raw.data() + pos, remaining - 4);
    const std::uint32_t want =
        decode_u32_le(reinterpret_cast<unsigned char*>(raw.data() + raw.size() - 4));
    if (crc.value() != want) m.fail("payload checksum mismatch");

    m.payload.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits =
            decode_u64_le(reinterpret_cast<unsigned char*>(raw.data() + pos + i * 8));
        static_assert(sizeof(double) == 8);
        std::memcpy(&m.payload[i], &bits, 8);
    }
    return m;
}

inline void write_net_arrays(ManifestWriter& w, const std::string& name, const ParamSet& params) {
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        w.array("param." + name + '.' + std::to_string(l) + ".w", layer.weight->shape,
                layer.weight->data);
        w.array("param." + name + '.' + std::to_string(l) + ".b", layer.bias->shape,
                layer.bias->data);
    }
}

inline void read_net_arrays(const LoadedManifest& m, const std::string& name, ParamSet* params) {
    for (std::size_t l = 0; l < params->layers.size(); ++l) {
        auto& layer = params->layers[l];
        m.read_array("param." + name + '.' + std::to_string(l) + ".w", layer.weight->shape,
                     &layer.weight->data);
        m.read_array("param." + name + '.' + std::to_string(l) + ".b", layer.bias->shape,
                     &layer.bias->data);
    }
}

inline void write_adam_arrays(ManifestWriter& w, const std::string& name, const AdamState& s) {
    w.field_i64("adam." + name + ".t", s.t);
    const int n = static_cast<int>(s.m.size());
    w.array("adam." + name + ".m", {n}, s.m);
    w.array("adam." + name + ".v", {n}, s.v);
}

inline void read_adam_arrays(const LoadedManifest& m, const std::string& name, AdamState* s) {
    s->t = m.field_i64("adam." + name + ".t");
    const int n = static_cast<int>(s->m.size());
    m.read_array("adam." + name + ".m", {n}, &s->m);
    m.read_array("adam." + name + ".v", {n}, &s->v);
}

}  // namespace detail

struct HeadOptimizers {
    AdamState e2, g2, d2;
};

struct Optimizers {
    AdamState e1, g1, d1;
    std::vector<HeadOptimizers> heads;

    static Optimizers for_model(const SwaeModel& m, const TrainConfig& tc) {
        auto mk = [&](const NetBundle& net) {
            AdamState s = AdamState::for_params(net.params, tc.lr);
            s.beta1 = tc.beta1;
            return s;
        };
        Optimizers o;
        o.e1 = mk(m.e1);
        o.g1 = mk(m.g1);
        o.d1 = mk(m.d1);
        for (const auto& h : m.heads) o.heads.push_back({mk(h.e2), mk(h.g2), mk(h.d2)});
        return o;
    }
};

struct TrainCounters {
    long long epoch = 0;        // completed epochs
    long long outer_index = 0;  // next minibatch index within the epoch
    long long outer_step = 0;   // total outer steps taken
    long long epochs_since_best = 0;
    double best_val = std::numeric_limits<double>::infinity();
};

struct Checkpoint {
    RunConfig config;
    SwaeModel model;
    Optimizers opt;
    TrainCounters counters;
    Rng::State prior_rng{};
    Rng::State inner_rng{};
};

// Fresh checkpoint at step zero for a config: initialized model, zeroed Adam,
// prior/inner streams derived from the run seed.
inline Checkpoint make_checkpoint(const RunConfig& cfg) {
    cfg.validate();
    Checkpoint ck;
    ck.config = cfg;
    ck.model = make_model(cfg.model, Rng::derive(cfg.train.seed, "model"));
    ck.opt = Optimizers::for_model(ck.model, cfg.train);
    ck.prior_rng = Rng(Rng::derive(cfg.train.seed, "train/prior")).state();
    ck.inner_rng = Rng(Rng::derive(cfg.train.seed, "train/inner")).state();
    return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    detail::ManifestWriter w;
    w.field("kind", "swae-checkpoint");
    {
        std::istringstream cfg_lines(serialize_config(ck.config));
        std::string line;
        while (std::getline(cfg_lines, line)) {
            const auto eq = line.find(" = ");
            w.field("cfg." + line.substr(0, eq), line.substr(eq + 3));
        }
    }
    w.field_i64("state.epoch", ck.counters.epoch);
    w.field_i64("state.outer_index", ck.counters.outer_index);
    w.field_i64("state.outer_step", ck.counters.outer_step);
    w.field_i64("state.epochs_since_best", ck.counters.epochs_since_best);
    w.field_f64("state.best_val", ck.counters.best_val);
    w.field_rng("rng.prior", ck.prior_rng);
    w.field_rng("rng.inner", ck.inner_rng);

    detail::write_net_arrays(w, "e1", ck.model.e1.params);
    detail::write_net_arrays(w, "g1", ck.model.g1.params);
    detail::write_net_arrays(w, "d1", ck.model.d1.params);
    detail::write_adam_arrays(w, "e1", ck.opt.e1);
    detail::write_adam_arrays(w, "g1", ck.opt.g1);
    detail::write_adam_arrays(w, "d1", ck.opt.d1);
    for (std::size_t i = 0; i < ck.model.heads.size(); ++i) {
        const std::string hn = "h" + std::to_string(i);
        detail::write_net_arrays(w, hn + ".e2", ck.model.heads[i].e2.params);
        detail::write_net_arrays(w, hn + ".g2", ck.model.heads[i].g2.params);
        detail::write_net_arrays(w, hn + ".d2", ck.model.heads[i].d2.params);
        detail::write_adam_arrays(w, hn + ".e2", ck.opt.heads[i].e2);
        detail::write_adam_arrays(w, hn + ".g2", ck.opt.heads[i].g2);
        detail::write_adam_arrays(w, hn + ".d2", ck.opt.heads[i].d2);
    }
    w.write(path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    const detail::LoadedManifest m = detail::read_manifest(path);
    if (m.require_field("kind") != "swae-checkpoint")
        m.fail("kind is '" + m.require_field("kind") + "', expected swae-checkpoint");

    std::string cfg_text;
    for (const auto& [key, value] : m.fields)
        if (key.rfind("cfg.", 0) == 0) cfg_text += key.substr(4) + " = " + value + '\n';
    Checkpoint ck = make_checkpoint(parse_config_text(cfg_text, path + " (embedded config)"));

    ck.counters.epoch = m.field_i64("state.epoch");
    ck.counters.outer_index = m.field_i64("state.outer_index");
    ck.counters.outer_step = m.field_i64("state.outer_step");
    ck.counters.epochs_since_best = m.field_i64("state.epochs_since_best");
    ck.counters.best_val = m.field_f64("state.best_val");
    ck.prior_rng = m.field_rng("rng.prior");
    ck.inner_rng = m.field_rng("rng.inner");

    detail::read_net_arrays(m, "e1", &ck.model.e1.params);
    detail::read_net_arrays(m, "g1", &ck.model.g1.params);
    detail::read_net_arrays(m, "d1", &ck.model.d1.params);
    detail::read_adam_arrays(m, "e1", &ck.opt.e1);
    detail::read_adam_arrays(m, "g1", &ck.opt.g1);
    detail::read_adam_arrays(m, "d1", &ck.opt.d1);
    for (std::size_t i = 0; i < ck.model.heads.size(); ++i) {
        const std::string hn = "h" + std::to_string(i);
        detail::read_net_arrays(m, hn + ".e2", &ck.model.heads[i].e2.params);
        detail::read_net_arrays(m, hn + ".g2", &ck.model.heads[i].g2.params);
        detail::read_net_arrays(m, hn + ".d2", &ck.model.heads[i].d2.params);
        detail::read_adam_arrays(m, hn + ".e2", &ck.opt.heads[i].e2);
        detail::read_adam_arrays(m, hn + ".g2", &ck.opt.heads[i].g2);
        detail::read_adam_arrays(m, hn + ".d2", &ck.opt.heads[i].d2);
    }
    return ck;
}

// The glyph classifier reuses the container with kind = classifier; the spec
// is stored as fields, the parameters as arrays.
inline void save_classifier(const Classifier& clf, const std::string& path) {
    detail::ManifestWriter w;
    w.field("kind", "classifier");
    w.field("clf.widths", detail::join_ints(clf.spec.layer_widths));
    w.field("clf.hidden_activation", to_string(clf.spec.hidden_activation));
    w.field("clf.output_activation", to_string(clf.spec.output_activation));
    w.field_f64("clf.leaky_slope", clf.spec.leaky_slope);
    detail::write_net_arrays(w, "clf", clf.params);
    w.write(path);
}

inline Classifier load_classifier(const std::string& path) {
    const detail::LoadedManifest m = detail::read_manifest(path);
    if (m.require_field("kind") != "classifier")
        m.fail("kind is '" + m.require_field("kind") + "', expected classifier");
    Classifier clf;
    {
        std::istringstream is(m.require_field("clf.widths"));
        std::string tok;
        while (std::getline(is, tok, ','))
            clf.spec.layer_widths.push_back(std::stoi(tok));
    }
    clf.spec.hidden_activation = activation_from_string(m.require_field("clf.hidden_activation"));
    clf.spec.output_activation = activation_from_string(m.require_field("clf.output_activation"));
    clf.spec.leaky_slope = m.field_f64("clf.leaky_slope");
    clf.spec.validate();
    clf.params = init_params(clf.spec, 0);
    detail::read_net_arrays(m, "clf", &clf.params);
    return clf;
}

}  // namespace swae
