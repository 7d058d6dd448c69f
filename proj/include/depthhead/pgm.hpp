#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "depthhead/depth_frame.hpp"

namespace depthhead {

// Depth frames travel as binary PGM: "P5", maxval 65535, two bytes per
// pixel most-significant byte first, row-major. Header tokens may be
// separated by any whitespace and '#' comments per the PNM convention.
// Parse errors report the byte offset at which reading failed.

class PgmError : public std::runtime_error {
public:
    PgmError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

namespace detail {

inline long pgm_read_token(std::istream& in, std::size_t& offset, const char* what) {
    const auto next = [&] {
        const int c = in.get();
        if (c != EOF) ++offset;
        return c;
    };
    int c = next();
    // skip whitespace and comment lines
    for (;;) {
        if (c == EOF)
            throw PgmError(std::string("unexpected end of header reading ") + what, offset);
        if (c == '#') {
            while (c != EOF && c != '\n') c = next();
        } else if (std::isspace(c)) {
            c = next();
        } else {
            break;
        }
    }
    if (!std::isdigit(c))
        throw PgmError(std::string("expected digit for ") + what, offset - 1);
    long value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        if (value > 1'000'000'000)
            throw PgmError(std::string("oversized value for ") + what, offset - 1);
        c = next();
    }
    if (c != EOF) {
        in.unget();
        --offset;
    }
    return value;
}

}  // namespace detail

inline DepthFrame read_pgm16(std::istream& in, CameraIntrinsics intr = {}) {
    std::size_t offset = 0;
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5')
        throw PgmError("not a binary PGM (expected magic P5)", 0);
    offset = 2;
    const long width = detail::pgm_read_token(in, offset, "width");
    const long height = detail::pgm_read_token(in, offset, "height");
    const long maxval = detail::pgm_read_token(in, offset, "maxval");
    if (width <= 0 || height <= 0)
        throw PgmError("non-positive dimensions", offset);
    if (maxval != 65535)
        throw PgmError("depth PGM requires maxval 65535, got " + std::to_string(maxval), offset);
    // exactly one whitespace byte separates the header from the raster
    const int sep = in.get();
    ++offset;
    if (sep == EOF || !std::isspace(sep))
        throw PgmError("missing whitespace before raster", offset);

    std::vector<std::uint16_t> pixels(static_cast<std::size_t>(width) * height);
    std::vector<unsigned char> raw(pixels.size() * 2);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw PgmError("truncated raster", offset + static_cast<std::size_t>(in.gcount()));
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        pixels[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
    }
    return DepthFrame(static_cast<int>(width), static_cast<int>(height), intr, std::move(pixels));
}

inline DepthFrame read_pgm16_file(const std::string& path, CameraIntrinsics intr = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open PGM file: " + path);
    try {
        return read_pgm16(in, intr);
    } catch (const PgmError& e) {
        throw PgmError(path + ": " + e.what(), e.offset());
    }
}

inline void write_pgm16(std::ostream& out, const DepthFrame& frame) {
    out << "P5\n" << frame.width() << " " << frame.height() << "\n65535\n";
    std::vector<unsigned char> raw(frame.pixels().size() * 2);
    for (std::size_t i = 0; i < frame.pixels().size(); ++i) {
        raw[2 * i] = static_cast<unsigned char>(frame.pixels()[i] >> 8);
        raw[2 * i + 1] = static_cast<unsigned char>(frame.pixels()[i] & 0xff);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw std::runtime_error("PGM write failed");
}

inline void write_pgm16_file(const std::string& path, const DepthFrame& frame) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot create PGM file: " + path);
    write_pgm16(out, frame);
}

// 8-bit grayscale P5, used for visualization output only.
inline void write_pgm8_file(const std::string& path, int width, int height,
                            const std::vector<std::uint8_t>& gray) {
    if (gray.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("write_pgm8_file: size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot create PGM file: " + path);
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
    if (!out) throw std::runtime_error("PGM write failed");
}

}  // namespace depthhead
