// Copyright (c) 2026 SWAE Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic datasets and minibatching.
//
// Two generators are provided:
//   * gauss_ring: a mixture of `modes` isotropic Gaussians placed uniformly on
//     a circle, rescaled so that essentially all mass fits in [-1, 1]^2.
//   * glyphs: 8x8 seven-segment digit bitmaps (10 classes x 2 thicknesses x
//     3 slants = 60 unique images) with pixel values in {-1, +1}.
//
// Mode / glyph assignment is stratified: sample i is given combination
// i % K before a seeded shuffle of the whole set.  Per-class counts then
// differ by at most one, and the shuffle keeps batches well mixed.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "swae/io.hpp"
#include "swae/rng.hpp"
#include "swae/tensor.hpp"

namespace swae {

enum class Split { Train = 0, Val = 1, Test = 2 };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

struct Dataset {
    TensorPtr samples;        // [N, D], values in [-1, 1]
    std::vector<int> labels;  // empty when the dataset is unlabeled
    TensorPtr factors;        // [N, F] generative factors, or nullptr
    Split split = Split::Train;

    int n() const { return samples->shape[0]; }
    int dim() const { return samples->shape[1]; }
    bool has_labels() const { return !labels.empty(); }
    bool has_factors() const { return factors != nullptr; }
};

// Scaled mode centers and noise width of the Gaussian ring.  The raw ring
// (radius r, noise sigma) is divided by (r + 8 sigma) so that points stay in
// [-1, 1]^2 up to an 8-sigma tail, which is then clamped.
struct RingInfo {
    std::vector<std::array<double, 2>> centers;
    double sigma = 0.0;
};

inline RingInfo gauss_ring_info(int modes, double radius, double sigma) {
    if (modes < 1) throw ShapeError("gauss_ring: modes must be >= 1");
    if (radius <= 0.0 || sigma < 0.0) throw ShapeError("gauss_ring: bad radius/sigma");
    const double scale = radius + 8.0 * sigma;
    RingInfo info;
    info.sigma = sigma / scale;
    info.centers.resize(modes);
    for (int m = 0; m < modes; ++m) {
        const double theta = 2.0 * M_PI * m / modes;
        info.centers[m] = {radius * std::cos(theta) / scale, radius * std::sin(theta) / scale};
    }
    return info;
}

inline Dataset gen_gauss_ring(int n, int modes, double radius, double sigma, std::uint64_t seed,
                              Split split) {
    if (n < 1) throw ShapeError("gauss_ring: n must be >= 1");
    const RingInfo info = gauss_ring_info(modes, radius, sigma);

    Rng rng(Rng::derive(seed, "data/ring", static_cast<std::uint64_t>(split)));
    std::vector<int> mode_of(n);
    for (int i = 0; i < n; ++i) mode_of[i] = i % modes;
    rng.shuffle(mode_of);

    Dataset ds;
    ds.split = split;
    ds.samples = zeros({n, 2});
    ds.labels = mode_of;
    for (int i = 0; i < n; ++i) {
        const auto& c = info.centers[mode_of[i]];
        for (int d = 0; d < 2; ++d) {
            double v = c[d] + info.sigma * rng.normal();
            if (v > 1.0) v = 1.0;
            if (v < -1.0) v = -1.0;
            ds.samples->data[i * 2 + d] = v;
        }
    }
    return ds;
}

namespace detail {

// Seven-segment layout on an 8x8 canvas.  Thickness widens each stroke
// inward, so the thick variant's ink is a strict superset of the thin one.
// Slant shifts the top three rows by +slant and the bottom three by -slant.
inline std::array<double, 64> render_glyph(int digit, int thickness, int slant) {
    static const std::array<unsigned, 10> segs = {
        /*0*/ 0b0111111, /*1*/ 0b0000110, /*2*/ 0b1011011, /*3*/ 0b1001111, /*4*/ 0b1100110,
        /*5*/ 0b1101101, /*6*/ 0b1111101, /*7*/ 0b0000111, /*8*/ 0b1111111, /*9*/ 0b1101111,
    };  // bit order: GFEDCBA
    const unsigned on = segs[digit];
    const int t = thickness;
    bool ink[8][8] = {};
    auto fill = [&](int r0, int r1, int c0, int c1) {
        for (int r = r0; r < r1; ++r)
            for (int c = c0; c < c1; ++c) ink[r][c] = true;
    };
    if (on & 0b0000001) fill(0, t, 2, 6);          // A: top bar
    if (on & 0b0000010) fill(0, 4, 7 - t, 7);      // B: top right
    if (on & 0b0000100) fill(4, 8, 7 - t, 7);      // C: bottom right
    if (on & 0b0001000) fill(8 - t, 8, 2, 6);      // D: bottom bar
    if (on & 0b0010000) fill(4, 8, 1, 1 + t);      // E: bottom left
    if (on & 0b0100000) fill(0, 4, 1, 1 + t);      // F: top left
    if (on & 0b1000000) fill(3, 3 + t, 2, 6);      // G: middle bar

    std::array<double, 64> px;
    px.fill(-1.0);
    for (int r = 0; r < 8; ++r) {
        const int shift = (r < 3) ? slant : (r > 4) ? -slant : 0;
        for (int c = 0; c < 8; ++c) {
            if (!ink[r][c]) continue;
            const int cc = c + shift;
            if (cc >= 0 && cc < 8) px[r * 8 + cc] = 1.0;
        }
    }
    return px;
}

}  // namespace detail

// 60 unique glyphs: combo id -> (digit, thickness, slant).
inline constexpr int kGlyphCombos = 60;

inline void glyph_factors_of(int combo, int* digit, int* thickness, int* slant) {
    *digit = combo % 10;
    *thickness = (combo / 10) % 2 + 1;
    *slant = combo / 20 - 1;
}

inline Dataset gen_glyphs(int n, std::uint64_t seed, Split split) {
    if (n < 1) throw ShapeError("glyphs: n must be >= 1");
    Rng rng(Rng::derive(seed, "data/glyphs", static_cast<std::uint64_t>(split)));
    std::vector<int> combo_of(n);
    for (int i = 0; i < n; ++i) combo_of[i] = i % kGlyphCombos;
    rng.shuffle(combo_of);

    Dataset ds;
    ds.split = split;
    ds.samples = zeros({n, 64});
    ds.labels.resize(n);
    ds.factors = zeros({n, 3});
    for (int i = 0; i < n; ++i) {
        int digit, thickness, slant;
        glyph_factors_of(combo_of[i], &digit, &thickness, &slant);
        const auto px = detail::render_glyph(digit, thickness, slant);
        std::copy(px.begin(), px.end(), ds.samples->data.begin() + i * 64);
        ds.labels[i] = digit;
        ds.factors->data[i * 3 + 0] = digit;
        ds.factors->data[i * 3 + 1] = thickness;
        ds.factors->data[i * 3 + 2] = slant;
    }
    return ds;
}

// Epoch-seeded minibatch index plan.  A fresh permutation of [0, n) is drawn
// per epoch; the trailing partial batch is dropped so shapes stay uniform.
inline std::vector<std::vector<int>> batch_indices(int n, int batch_size, std::uint64_t seed,
                                                   int epoch) {
    if (batch_size < 1) throw ShapeError("batch_indices: batch_size must be >= 1");
    if (batch_size > n)
        throw ShapeError("batch_indices: batch_size " + std::to_string(batch_size) +
                         " exceeds dataset size " + std::to_string(n));
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    Rng rng(Rng::derive(seed, "batch/epoch", static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);

    std::vector<std::vector<int>> out;
    const int nb = n / batch_size;
    out.reserve(nb);
    for (int b = 0; b < nb; ++b)
        out.emplace_back(order.begin() + b * batch_size, order.begin() + (b + 1) * batch_size);
    return out;
}

inline TensorPtr gather_rows(const TensorPtr& src, const std::vector<int>& rows) {
    const int d = src->shape[1];
    TensorPtr out = zeros({static_cast<int>(rows.size()), d});
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(src->data.begin() + rows[i] * d, src->data.begin() + (rows[i] + 1) * d,
                  out->data.begin() + i * d);
    return out;
}

inline std::vector<TensorPtr> batches(const Dataset& ds, int batch_size, std::uint64_t seed,
                                      int epoch) {
    std::vector<TensorPtr> out;
    for (const auto& idx : batch_indices(ds.n(), batch_size, seed, epoch))
        out.push_back(gather_rows(ds.samples, idx));
    return out;
}

// On-disk dataset format: one ASCII header line
//   swae-data v1 <N> <D> <has_labels> <has_factors>\n
// followed by raw little-endian f64: N*D sample values, then N labels (if
// present), then the factor block (if present; its width is inferred from the
// file size).
inline void export_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << "swae-data v1 " << ds.n() << ' ' << ds.dim() << ' ' << (ds.has_labels() ? 1 : 0) << ' '
       << (ds.has_factors() ? 1 : 0) << '\n';
    write_f64_le(os, ds.samples->data.data(), ds.samples->data.size());
    if (ds.has_labels()) {
        std::vector<double> as_f64(ds.labels.begin(), ds.labels.end());
        write_f64_le(os, as_f64.data(), as_f64.size());
    }
    if (ds.has_factors()) write_f64_le(os, ds.factors->data.data(), ds.factors->data.size());
    if (!os) throw IoError("write failed for " + path);
}

inline Dataset import_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    std::string header;
    if (!std::getline(is, header)) throw IoError(path + ": missing header");
    std::istringstream hs(header);
    std::string magic, version;
    long long n = 0, d = 0;
    int has_labels = 0, has_factors = 0;
    hs >> magic >> version >> n >> d >> has_labels >> has_factors;
    if (!hs || magic != "swae-data") throw IoError(path + ": not a swae-data file");
    if (version != "v1") throw IoError(path + ": unsupported version " + version);
    if (n < 1 || d < 1) throw IoError(path + ": bad dimensions in header");

    const std::streampos body_start = is.tellg();
    is.seekg(0, std::ios::end);
    const std::uint64_t body_bytes = static_cast<std::uint64_t>(is.tellg() - body_start);
    is.seekg(body_start);

    std::uint64_t expect = static_cast<std::uint64_t>(n) * d;
    if (has_labels) expect += static_cast<std::uint64_t>(n);
    if (body_bytes < expect * 8) throw IoError(path + ": file truncated");
    const std::uint64_t factor_vals = body_bytes / 8 - expect;
    if (body_bytes % 8 != 0 || (has_factors && factor_vals % n != 0) ||
        (!has_factors && factor_vals != 0))
        throw IoError(path + ": body size inconsistent with header");

    Dataset ds;
    ds.samples = zeros({static_cast<int>(n), static_cast<int>(d)});
    read_f64_le(is, ds.samples->data.data(), ds.samples->data.size());
    if (has_labels) {
        std::vector<double> as_f64(n);
        read_f64_le(is, as_f64.data(), as_f64.size());
        ds.labels.assign(as_f64.begin(), as_f64.end());
    }
    if (has_factors) {
        const int f = static_cast<int>(factor_vals / n);
        ds.factors = zeros({static_cast<int>(n), f});
        read_f64_le(is, ds.factors->data.data(), ds.factors->data.size());
    }
    return ds;
}

}  // namespace swae
