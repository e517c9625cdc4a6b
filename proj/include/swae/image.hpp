// Copyright (c) 2026 SWAE Authors
// SPDX-License-Identifier: Apache-2.0
//
// Artifact rendering: binary PGM (P5) grids for square grayscale images
// and scatter CSV for 2-d point sets. Both are byte-deterministic so that
// reruns with identical inputs produce identical files.
#pragma once

#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "swae/io.hpp"
#include "swae/tensor.hpp"

namespace swae {

class ImageError : public std::runtime_error {
  public:
    explicit ImageError(const std::string& what) : std::runtime_error(what) {}
};

struct PgmImage {
    int width = 0;
    int height = 0;
    std::vector<unsigned char> bytes;  // row-major, one byte per pixel
};

// Maps v in [-1, 1] to an 8-bit gray level: round((v + 1) / 2 * 255),
// clamped so out-of-range values saturate instead of wrapping.
inline unsigned char pixel_byte(double v) {
    const double g = std::round((v + 1.0) / 2.0 * 255.0);
    return static_cast<unsigned char>(g < 0.0 ? 0.0 : g > 255.0 ? 255.0 : g);
}

// Tiles the rows of `images` ([n, side*side], each a square image) into a
// grid with `cols` columns, a one-pixel frame around the border, and
// one-pixel gutters between cells. Unused trailing cells stay frame-gray.
inline PgmImage render_grid(const TensorPtr& images, int side, int cols,
                            unsigned char frame = 128) {
    if (images->shape.size() != 2 || images->shape[1] != side * side)
        throw ImageError("render_grid: expected [n, " + std::to_string(side * side) +
                         "] pixel rows");
    if (cols < 1) throw ImageError("render_grid: cols must be >= 1");
    const int n = images->shape[0];
    const int rows = (n + cols - 1) / cols;
    PgmImage img;
    img.width = cols * side + cols + 1;
    img.height = rows * side + rows + 1;
    img.bytes.assign(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height),
                     frame);
    for (int i = 0; i < n; ++i) {
        const int y0 = 1 + (i / cols) * (side + 1);
        const int x0 = 1 + (i % cols) * (side + 1);
        for (int py = 0; py < side; ++py)
            for (int px = 0; px < side; ++px)
                img.bytes[static_cast<std::size_t>(y0 + py) * img.width +
                          static_cast<std::size_t>(x0 + px)] =
                    pixel_byte(images->at(i, py * side + px));
    }
    return img;
}

inline void write_pgm(const std::string& path, const PgmImage& img) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ImageError("cannot open '" + path + "' for writing");
    os << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(img.bytes.data()),
             static_cast<std::streamsize>(img.bytes.size()));
    if (!os) throw ImageError("short write to '" + path + "'");
}

inline PgmImage read_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ImageError("cannot open '" + path + "'");
    std::string magic;
    int maxval = 0;
    PgmImage img;
    is >> magic >> img.width >> img.height >> maxval;
    if (!is || magic != "P5" || maxval != 255)
        throw ImageError("'" + path + "' is not an 8-bit P5 PGM");
    is.get();  // the single whitespace byte after the header
    img.bytes.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
    is.read(reinterpret_cast<char*>(img.bytes.data()),
            static_cast<std::streamsize>(img.bytes.size()));
    if (is.gcount() != static_cast<std::streamsize>(img.bytes.size()))
        throw ImageError("'" + path + "' is truncated");
    return img;
}

// Scatter CSV for 2-d point sets: one `x,y,source` row per point, so that
// outputs from different commands stay diffable text.
inline void write_scatter_header(std::ostream& os) { os << "x,y,source\n"; }

inline void write_scatter_rows(std::ostream& os, const TensorPtr& pts, const std::string& source) {
    if (pts->shape.size() != 2 || pts->shape[1] != 2)
        throw ImageError("write_scatter_rows: expected [n, 2] points");
    for (int i = 0; i < pts->shape[0]; ++i)
        os << format_double(pts->at(i, 0)) << ',' << format_double(pts->at(i, 1)) << ','
           << source << '\n';
}

}  // namespace swae
