#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "seghaze/core.hpp"

namespace seghaze::io {

// Flat binary container for scalar fields (depth, transmission, density):
//   bytes 0..7   magic "SEGHZF32"
//   bytes 8..11  uint32 LE format version (1)
//   bytes 12..15 uint32 LE height
//   bytes 16..19 uint32 LE width
//   then h*w float32 LE, row-major.
inline constexpr char kFieldMagic[8] = {'S', 'E', 'G', 'H', 'Z', 'F', '3', '2'};
inline constexpr uint32_t kFieldVersion = 1;

namespace detail {

inline void put_u32(std::ostream& os, uint32_t v) {
    const uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline uint32_t get_u32(std::istream& is) {
    uint8_t b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

}  // namespace detail

inline void write_field(const std::filesystem::path& path, const Field& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open " + path.string() + " for writing");
    os.write(kFieldMagic, 8);
    detail::put_u32(os, kFieldVersion);
    detail::put_u32(os, uint32_t(f.h));
    detail::put_u32(os, uint32_t(f.w));
    std::vector<float> buf(f.v.size());
    for (size_t i = 0; i < buf.size(); ++i) buf[i] = float(f.v[i]);
    static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
    if constexpr (std::endian::native == std::endian::big)
        for (auto& x : buf) {
            uint32_t u;
            std::memcpy(&u, &x, 4);
            u = __builtin_bswap32(u);
            std::memcpy(&x, &u, 4);
        }
    os.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size() * 4));
    if (!os) throw io_error("write failed: " + path.string());
}

inline Field read_field(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw not_found_error("cannot open " + path.string());
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kFieldMagic, 8) != 0) throw format_error("bad field magic in " + path.string());
    const uint32_t version = detail::get_u32(is);
    if (version != kFieldVersion) throw format_error("unsupported field version in " + path.string());
    const uint32_t h = detail::get_u32(is);
    const uint32_t w = detail::get_u32(is);
    if (!is || h == 0 || w == 0 || size_t(h) * w > (1u << 30)) throw format_error("bad field header in " + path.string());
    std::vector<float> buf(size_t(h) * w);
    is.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size() * 4));
    if (!is) throw format_error("truncated field payload in " + path.string());
    if constexpr (std::endian::native == std::endian::big)
        for (auto& x : buf) {
            uint32_t u;
            std::memcpy(&u, &x, 4);
            u = __builtin_bswap32(u);
            std::memcpy(&x, &u, 4);
        }
    Field f{int(h), int(w)};
    for (size_t i = 0; i < buf.size(); ++i) f.v[i] = buf[i];
    return f;
}

}  // namespace seghaze::io
