#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "hybridface/errors.hpp"
#include "hybridface/image.hpp"

namespace hybridface {

// Fixed pipeline order: resize, then optional histogram equalization, then
// gamma correction, then flattening to [0,1].
struct PreprocessConfig {
    std::size_t target_width = 46;
    std::size_t target_height = 56;
    double gamma = 1.0;
    bool equalize = true;
};

// Flattened face, pixels scaled into [0,1].
struct FaceVector {
    std::vector<double> values;
    std::size_t width = 0;
    std::size_t height = 0;
};

namespace detail {

inline std::uint8_t round_half_up(double v) {
    const double r = std::floor(v + 0.5);
    return static_cast<std::uint8_t>(r < 0.0 ? 0.0 : (r > 255.0 ? 255.0 : r));
}

} // namespace detail

// Bilinear resize with corner-aligned sampling. A one-pixel output axis
// samples the source origin.
inline GrayImage resize(const GrayImage& img, std::size_t w, std::size_t h) {
    if (w < 1 || h < 1)
        throw ParamError("resize target must be at least 1x1");
    GrayImage out(w, h);
    const double sx = w > 1 ? static_cast<double>(img.width - 1) / (w - 1) : 0.0;
    const double sy = h > 1 ? static_cast<double>(img.height - 1) / (h - 1) : 0.0;
    for (std::size_t y = 0; y < h; ++y) {
        const double fy = y * sy;
        const std::size_t y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = y0 + 1 < img.height ? y0 + 1 : y0;
        const double wy = fy - y0;
        for (std::size_t x = 0; x < w; ++x) {
            const double fx = x * sx;
            const std::size_t x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = x0 + 1 < img.width ? x0 + 1 : x0;
            const double wx = fx - x0;
            const double top = (1.0 - wx) * img.at(x0, y0) + wx * img.at(x1, y0);
            const double bot = (1.0 - wx) * img.at(x0, y1) + wx * img.at(x1, y1);
            out.at(x, y) = detail::round_half_up((1.0 - wy) * top + wy * bot);
        }
    }
    return out;
}

// out = round((cdf(v) - cdf_min) / (P - cdf_min) * 255); a constant image
// comes back unchanged since the denominator degenerates to zero.
inline GrayImage equalize_histogram(const GrayImage& img) {
    std::array<std::size_t, 256> hist{};
    for (std::uint8_t p : img.pixels) ++hist[p];

    std::array<std::size_t, 256> cdf{};
    std::size_t running = 0;
    std::size_t cdf_min = 0;
    for (std::size_t v = 0; v < 256; ++v) {
        running += hist[v];
        cdf[v] = running;
        if (cdf_min == 0 && running > 0) cdf_min = running;
    }
    const std::size_t total = img.pixels.size();
    if (cdf_min == total) return img; // single intensity level

    GrayImage out(img.width, img.height);
    std::array<std::uint8_t, 256> lut{};
    const double denom = static_cast<double>(total - cdf_min);
    for (std::size_t v = 0; v < 256; ++v)
        lut[v] = detail::round_half_up(static_cast<double>(cdf[v] - cdf_min) / denom * 255.0);
    for (std::size_t i = 0; i < total; ++i) out.pixels[i] = lut[img.pixels[i]];
    return out;
}

// out = round((v/255)^gamma * 255); keeps 0 and 255 fixed for any gamma.
inline GrayImage gamma_correct(const GrayImage& img, double gamma) {
    if (!(gamma > 0.0))
        throw ParamError("gamma must be positive, got " + std::to_string(gamma));
    std::array<std::uint8_t, 256> lut{};
    for (std::size_t v = 0; v < 256; ++v)
        lut[v] = detail::round_half_up(std::pow(v / 255.0, gamma) * 255.0);
    GrayImage out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) out.pixels[i] = lut[img.pixels[i]];
    return out;
}

// Row-major scan scaled by 1/255.
inline FaceVector flatten(const GrayImage& img) {
    FaceVector face;
    face.width = img.width;
    face.height = img.height;
    face.values.reserve(img.pixels.size());
    for (std::uint8_t p : img.pixels) face.values.push_back(p / 255.0);
    return face;
}

inline FaceVector normalize(const GrayImage& img, const PreprocessConfig& cfg) {
    GrayImage work = resize(img, cfg.target_width, cfg.target_height);
    if (cfg.equalize) work = equalize_histogram(work);
    work = gamma_correct(work, cfg.gamma);
    return flatten(work);
}

} // namespace hybridface
