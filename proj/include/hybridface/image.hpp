#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hybridface/errors.hpp"

namespace hybridface {

// 8-bit grayscale image, row-major.
struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;

    GrayImage() = default;
    GrayImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> px = {})
        : width(w), height(h), pixels(std::move(px)) {
        if (w < 1 || h < 1)
            throw ParamError("image dimensions must be at least 1x1");
        if (pixels.empty()) pixels.assign(w * h, 0);
        if (pixels.size() != w * h)
            throw ShapeError("pixel count " + std::to_string(pixels.size()) +
                             " does not match " + std::to_string(w) + "x" + std::to_string(h));
    }

    std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
    std::uint8_t& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
};

namespace detail {

// header tokenizer: whitespace-separated tokens, '#' starts a comment that
// runs to end of line
struct PgmHeaderReader {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    bool at_end() const { return pos >= bytes.size(); }

    void skip_separators() {
        while (!at_end()) {
            const char c = static_cast<char>(bytes[pos]);
            if (c == '#') {
                while (!at_end() && static_cast<char>(bytes[pos]) != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos;
            } else {
                break;
            }
        }
    }

    std::string next_token() {
        skip_separators();
        std::string tok;
        while (!at_end()) {
            const char c = static_cast<char>(bytes[pos]);
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '#') break;
            tok.push_back(c);
            ++pos;
        }
        if (tok.empty()) throw FormatError("PGM header ended unexpectedly");
        return tok;
    }

    unsigned long next_number(const char* what) {
        const std::string tok = next_token();
        if (tok.find_first_not_of("0123456789") != std::string::npos)
            throw FormatError(std::string("PGM ") + what + " is not a number: '" + tok + "'");
        return std::stoul(tok);
    }
};

} // namespace detail

// Reads binary "P5" or ASCII "P2", maxval up to 255, '#' comments allowed in
// the header.
inline GrayImage parse_pgm(const std::vector<std::uint8_t>& bytes) {
    detail::PgmHeaderReader rd{bytes};
    if (bytes.size() < 2)
        throw FormatError("not a PGM file: too short");
    const std::string magic = rd.next_token();
    if (magic != "P5" && magic != "P2")
        throw FormatError("not a PGM file: magic '" + magic + "'");
    const unsigned long w = rd.next_number("width");
    const unsigned long h = rd.next_number("height");
    const unsigned long maxval = rd.next_number("maxval");
    if (w < 1 || h < 1)
        throw FormatError("PGM dimensions must be positive");
    if (maxval > 255)
        throw UnsupportedDepthError("PGM maxval " + std::to_string(maxval) +
                                    " exceeds 8-bit range");
    if (maxval == 0)
        throw FormatError("PGM maxval must be positive");

    const std::size_t count = static_cast<std::size_t>(w) * h;
    std::vector<std::uint8_t> pixels;
    pixels.reserve(count);

    if (magic == "P5") {
        // exactly one whitespace byte separates maxval from the payload
        if (rd.at_end()) throw LengthError("PGM payload missing");
        ++rd.pos;
        if (bytes.size() - rd.pos < count)
            throw LengthError("PGM payload truncated: need " + std::to_string(count) +
                              " bytes, have " + std::to_string(bytes.size() - rd.pos));
        pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(rd.pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(rd.pos + count));
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            rd.skip_separators();
            if (rd.at_end())
                throw LengthError("PGM payload truncated at sample " + std::to_string(i));
            const unsigned long v = rd.next_number("sample");
            if (v > maxval)
                throw FormatError("PGM sample " + std::to_string(v) + " exceeds maxval");
            pixels.push_back(static_cast<std::uint8_t>(v));
        }
    }
    return GrayImage(w, h, std::move(pixels));
}

// Always emits binary P5 with maxval 255; parse_pgm inverts it bit-exactly.
inline std::vector<std::uint8_t> write_pgm(const GrayImage& img) {
    const std::string header = "P5\n" + std::to_string(img.width) + " " +
                               std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

inline GrayImage load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open image file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return parse_pgm(bytes);
}

inline void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write image file: " + path.string());
    const std::vector<std::uint8_t> bytes = write_pgm(img);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

} // namespace hybridface
