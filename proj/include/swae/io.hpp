// Copyright (c) 2026 SWAE Authors
// SPDX-License-Identifier: Apache-2.0
//
// Byte-level helpers shared by the dataset and checkpoint file formats:
// explicit little-endian 64-bit float encoding and CRC-32 (IEEE polynomial).
#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace swae {

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

inline const std::array<std::uint32_t, 256>& crc32_table() {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    return table;
}

}  // namespace detail

class Crc32 {
public:
    void update(const void* bytes, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(bytes);
        const auto& table = detail::crc32_table();
        for (std::size_t i = 0; i < len; ++i) crc_ = table[(crc_ ^ p[i]) & 0xffu] ^ (crc_ >> 8);
    }
    std::uint32_t value() const { return crc_ ^ 0xffffffffu; }

private:
    std::uint32_t crc_ = 0xffffffffu;
};

inline void encode_u64_le(std::uint64_t v, unsigned char out[8]) {
    for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>(v >> (8 * i));
}

inline std::uint64_t decode_u64_le(const unsigned char in[8]) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
    return v;
}

inline void encode_u32_le(std::uint32_t v, unsigned char out[4]) {
    for (int i = 0; i < 4; ++i) out[i] = static_cast<unsigned char>(v >> (8 * i));
}

inline std::uint32_t decode_u32_le(const unsigned char in[4]) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[i]) << (8 * i);
    return v;
}

inline void write_f64_le(std::ostream& os, const double* data, std::size_t count) {
    unsigned char buf[8];
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &data[i], 8);
        encode_u64_le(bits, buf);
        os.write(reinterpret_cast<const char*>(buf), 8);
    }
}

inline void read_f64_le(std::istream& is, double* data, std::size_t count) {
    unsigned char buf[8];
    for (std::size_t i = 0; i < count; ++i) {
        is.read(reinterpret_cast<char*>(buf), 8);
        if (!is) throw IoError("unexpected end of file while reading float data");
        const std::uint64_t bits = decode_u64_le(buf);
        std::memcpy(&data[i], &bits, 8);
    }
}

inline void append_f64_le(std::vector<unsigned char>& out, const double* data, std::size_t count) {
    unsigned char buf[8];
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &data[i], 8);
        encode_u64_le(bits, buf);
        out.insert(out.end(), buf, buf + 8);
    }
}

// %.17g round-trips IEEE doubles exactly through a correctly rounded strtod.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace swae
