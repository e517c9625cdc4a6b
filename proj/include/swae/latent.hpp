// Copyright (c) 2026 SWAE Authors
// SPDX-License-Identifier: Apache-2.0
//
// Latent-space tooling: linear interpolation between codes and post-hoc
// attribute arithmetic. Directions are mean differences between codes with
// and without an attribute; manipulation shifts a code along a direction
// and decodes it. All functions here are pure and tape-free.
#pragma once

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "swae/data.hpp"
#include "swae/io.hpp"
#include "swae/model.hpp"

namespace swae {

class LatentError : public std::runtime_error {
  public:
    explicit LatentError(const std::string& what) : std::runtime_error(what) {}
};

// A post-hoc attribute axis: mean(code | attr) - mean(code | no attr).
// Works for any code space; in practice directions live in the stage-1
// code space h and are applied before decoding through G1.
struct AttributeDirection {
    std::string name;
    std::vector<double> direction;
    int n_pos = 0;
    int n_neg = 0;
};

// Evenly spaced convex combinations from a to b inclusive:
// out[i] = (1 - t_i) a + t_i b with t_i = i / (steps - 1). The endpoints
// are copied verbatim, not recomputed, so they compare bit-exactly, and
// interior points use a + t (b - a) so interpolating a point with itself
// reproduces it bit-exactly as well.
inline std::vector<std::vector<double>> interpolate(const std::vector<double>& a,
                                                    const std::vector<double>& b, int steps) {
    if (a.size() != b.size())
        throw LatentError("interpolate: dim mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
    if (steps < 2) throw LatentError("interpolate: steps must be >= 2");
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<std::size_t>(steps));
    out.push_back(a);
    for (int i = 1; i + 1 < steps; ++i) {
        const double t = static_cast<double>(i) / (steps - 1);
        std::vector<double> row(a.size());
        for (std::size_t j = 0; j < a.size(); ++j) row[j] = a[j] + t * (b[j] - a[j]);
        out.push_back(std::move(row));
    }
    out.push_back(b);
    return out;
}

// Copies row `row` of a [N, L] tensor into a plain vector.
inline std::vector<double> row_of(const TensorPtr& t, int row) {
    if (t->shape.size() != 2) throw LatentError("row_of: expected a rank-2 tensor");
    if (row < 0 || row >= t->shape[0])
        throw LatentError("row_of: row " + std::to_string(row) + " out of range");
    const int l = t->shape[1];
    const auto base = static_cast<std::size_t>(row) * static_cast<std::size_t>(l);
    return {t->data.begin() + static_cast<std::ptrdiff_t>(base),
            t->data.begin() + static_cast<std::ptrdiff_t>(base + static_cast<std::size_t>(l))};
}

// Stacks a list of equal-length vectors into a [n, L] tensor.
inline TensorPtr stack_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw LatentError("stack_rows: no rows");
    const auto l = rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * l);
    for (const auto& r : rows) {
        if (r.size() != l) throw LatentError("stack_rows: ragged rows");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return tensor({static_cast<int>(rows.size()), static_cast<int>(l)}, std::move(flat));
}

// Mean code over rows where `has_attr` is true minus the mean over rows
// where it is false. Both groups must be non-empty.
inline AttributeDirection attribute_direction(const TensorPtr& codes,
                                              const std::vector<bool>& has_attr,
                                              const std::string& name) {
    if (codes->shape.size() != 2)
        throw LatentError("attribute_direction: expected [N, L] codes");
    const int n = codes->shape[0];
    const int l = codes->shape[1];
    if (static_cast<int>(has_attr.size()) != n)
        throw LatentError("attribute_direction: label count does not match rows");
    std::vector<double> pos(static_cast<std::size_t>(l), 0.0);
    std::vector<double> neg(static_cast<std::size_t>(l), 0.0);
    int n_pos = 0, n_neg = 0;
    for (int i = 0; i < n; ++i) {
        auto& acc = has_attr[static_cast<std::size_t>(i)] ? pos : neg;
        (has_attr[static_cast<std::size_t>(i)] ? n_pos : n_neg)++;
        for (int j = 0; j < l; ++j) acc[static_cast<std::size_t>(j)] += codes->at(i, j);
    }
    if (n_pos == 0 || n_neg == 0)
        throw LatentError("attribute_direction '" + name +
                          "': need at least one positive and one negative example");
    AttributeDirection dir;
    dir.name = name;
    dir.n_pos = n_pos;
    dir.n_neg = n_neg;
    dir.direction.resize(static_cast<std::size_t>(l));
    for (int j = 0; j < l; ++j)
        dir.direction[static_cast<std::size_t>(j)] =
            pos[static_cast<std::size_t>(j)] / n_pos - neg[static_cast<std::size_t>(j)] / n_neg;
    return dir;
}

// Shifted code h + lambda_h * direction. With lambda_h == 0 the input is
// copied verbatim so the decoded output is bit-identical to G1(h).
inline std::vector<double> shift_code(const std::vector<double>& h, const AttributeDirection& dir,
                                      double lambda_h) {
    if (h.size() != dir.direction.size())
        throw LatentError("shift_code: code dim " + std::to_string(h.size()) +
                          " does not match direction dim " + std::to_string(dir.direction.size()));
    std::vector<double> out = h;
    if (lambda_h != 0.0)
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += lambda_h * dir.direction[j];
    return out;
}

// Decodes the shifted code through the stage-1 generator: G1(h + lambda_h d).
inline TensorPtr manipulate(const SwaeModel& m, const std::vector<double>& h,
                            const AttributeDirection& dir, double lambda_h) {
    if (static_cast<int>(h.size()) != m.config.h_dim)
        throw LatentError("manipulate: code dim " + std::to_string(h.size()) +
                          " does not match model h_dim " + std::to_string(m.config.h_dim));
    return decode1(nullptr, m, stack_rows({shift_code(h, dir, lambda_h)}));
}

// Binary glyph attributes recovered from generator factors. "thickness"
// contrasts thick (2) against thin (1) strokes over every glyph; "slant"
// contrasts right- against left-leaning glyphs, skipping upright ones.
inline AttributeDirection glyph_attribute(const SwaeModel& m, const Dataset& ds,
                                          const std::string& name) {
    if (!ds.has_factors() || ds.factors->shape[1] != 3)
        throw LatentError("glyph_attribute: dataset has no glyph factors");
    if (name != "thickness" && name != "slant")
        throw LatentError("glyph_attribute: unknown attribute '" + name +
                          "' (try thickness or slant)");
    const bool thick = name == "thickness";
    std::vector<int> rows;
    std::vector<bool> flags;
    for (int i = 0; i < ds.n(); ++i) {
        const double v = ds.factors->at(i, thick ? 1 : 2);
        if (!thick && v == 0.0) continue;
        rows.push_back(i);
        flags.push_back(v > (thick ? 1.0 : 0.0));
    }
    const TensorPtr codes = encode1(nullptr, m, gather_rows(ds.samples, rows));
    return attribute_direction(codes, flags, name);
}

// One CSV line per direction: name,L,d_1,...,d_L.
inline void write_attribute_csv(std::ostream& os, const AttributeDirection& dir) {
    os << dir.name << ',' << dir.direction.size();
    for (double d : dir.direction) os << ',' << format_double(d);
    os << '\n';
}

}  // namespace swae
