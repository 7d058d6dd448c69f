#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "depthhead/depth_frame.hpp"
#include "depthhead/pgm.hpp"

namespace depthhead {

// Candidate extraction parameters. K doubles as the sampling stride and the
// depth-averaging window radius.
struct ExtractionConfig {
    int k = 9;               // stride and averaging radius, pixels
    double r_mm = 200.0;     // physical face width
    double l_mm = 300.0;     // depth extent kept in a patch
    int min_patch = 15;      // boxes smaller than this are background objects
    int patch_side = 64;     // classifier input side

    void validate() const {
        if (k < 1) throw std::invalid_argument("ExtractionConfig: K must be >= 1");
        if (r_mm <= 0) throw std::invalid_argument("ExtractionConfig: R must be positive");
        if (l_mm <= 0) throw std::invalid_argument("ExtractionConfig: l must be positive");
        if (min_patch < 1) throw std::invalid_argument("ExtractionConfig: min_patch must be >= 1");
        if (patch_side < min_patch)
            throw std::invalid_argument("ExtractionConfig: patch_side must be >= min_patch");
    }
};

// One candidate head location: grid center, its depth-scaled box, the
// measured distance and the normalized patch fed to the classifier.
struct Candidate {
    PixelPos center;
    BoundingBox box;
    double distance_mm = 0.0;
    std::vector<float> patch;  // patch_side * patch_side values in [-1, 1]
};

// Image size of a head of physical width r_mm seen at distance d_mm:
// width = fx * R / D, height = fy * R / D. Inverse-linear in distance, which
// is what makes a single tested scale per position sufficient.
inline std::pair<double, double> head_box_at(const CameraIntrinsics& intr, double d_mm,
                                             double r_mm) {
    if (d_mm <= 0) throw std::invalid_argument("head_box_at: distance must be positive");
    if (r_mm <= 0) throw std::invalid_argument("head_box_at: R must be positive");
    return {intr.fx * r_mm / d_mm, intr.fy * r_mm / d_mm};
}

// Crops `box` out of the frame, suppresses background, resizes to
// patch_side^2 and normalizes around the candidate distance:
//   value -> clamp((value - D) / l, -1, +1)
// Pixels with no measurement, deeper than D + l, or outside the frame are
// background and map to -1. Box bounds round outward (floor/ceil); the crop
// is resized with bilinear interpolation.
inline std::vector<float> crop_normalize(const DepthFrame& frame, const BoundingBox& box,
                                         double d_mm, const ExtractionConfig& cfg) {
    if (d_mm <= 0) throw std::invalid_argument("crop_normalize: distance must be positive");
    const int x0 = static_cast<int>(std::floor(box.x_min()));
    const int x1 = static_cast<int>(std::ceil(box.x_max()));
    const int y0 = static_cast<int>(std::floor(box.y_min()));
    const int y1 = static_cast<int>(std::ceil(box.y_max()));
    const int src_w = x1 - x0;
    const int src_h = y1 - y0;
    if (src_w <= 0 || src_h <= 0)
        throw std::invalid_argument("crop_normalize: degenerate box");
    if (x1 <= 0 || y1 <= 0 || x0 >= frame.width() || y0 >= frame.height())
        throw std::invalid_argument("crop_normalize: box entirely outside frame");

    // Normalize at source resolution; interpolation then happens in [-1, 1]
    // space where the affine depth map and the clamp are already applied.
    std::vector<float> src(static_cast<std::size_t>(src_w) * src_h, -1.0f);
    const double inv_l = 1.0 / cfg.l_mm;
    for (int y = y0; y < y1; ++y) {
        if (y < 0 || y >= frame.height()) continue;
        for (int x = std::max(x0, 0); x < std::min(x1, frame.width()); ++x) {
            const std::uint16_t v = frame.at(x, y);
            if (v == 0 || v > d_mm + cfg.l_mm) continue;  // background stays -1
            const double n = (v - d_mm) * inv_l;
            src[static_cast<std::size_t>(y - y0) * src_w + (x - x0)] =
                static_cast<float>(std::clamp(n, -1.0, 1.0));
        }
    }

    // Bilinear resize with half-pixel centers.
    const int p = cfg.patch_side;
    std::vector<float> dst(static_cast<std::size_t>(p) * p);
    const double sx = static_cast<double>(src_w) / p;
    const double sy = static_cast<double>(src_h) / p;
    for (int dy = 0; dy < p; ++dy) {
        const double fy = (dy + 0.5) * sy - 0.5;
        int iy = static_cast<int>(std::floor(fy));
        double wy = fy - iy;
        const int iy0 = std::clamp(iy, 0, src_h - 1);
        const int iy1 = std::clamp(iy + 1, 0, src_h - 1);
        for (int dx = 0; dx < p; ++dx) {
            const double fx = (dx + 0.5) * sx - 0.5;
            int ix = static_cast<int>(std::floor(fx));
            double wx = fx - ix;
            const int ix0 = std::clamp(ix, 0, src_w - 1);
            const int ix1 = std::clamp(ix + 1, 0, src_w - 1);
            const double top = src[static_cast<std::size_t>(iy0) * src_w + ix0] * (1 - wx) +
                               src[static_cast<std::size_t>(iy0) * src_w + ix1] * wx;
            const double bot = src[static_cast<std::size_t>(iy1) * src_w + ix0] * (1 - wx) +
                               src[static_cast<std::size_t>(iy1) * src_w + ix1] * wx;
            dst[static_cast<std::size_t>(dy) * p + dx] =
                static_cast<float>(top * (1 - wy) + bot * wy);
        }
    }
    return dst;
}

// Debug dump: a normalized patch rescaled from [-1, 1] onto the full 16-bit
// range, written as a square PGM.
inline void write_patch_pgm16(const std::string& path, const std::vector<float>& patch) {
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(patch.size()))));
    if (static_cast<std::size_t>(side) * side != patch.size())
        throw std::invalid_argument("write_patch_pgm16: patch is not square");
    DepthFrame img(side, side, CameraIntrinsics{});
    for (std::size_t i = 0; i < patch.size(); ++i)
        img.pixels()[i] = static_cast<std::uint16_t>(
            std::lround((std::clamp(patch[i], -1.0f, 1.0f) + 1.0f) / 2.0f * 65535.0f));
    write_pgm16_file(path, img);
}

// The candidate sampling grid: one center per KxK tile, ceil(w/K) * ceil(h/K)
// tiles in total. Tile (i, j) samples (i*K + K/2, j*K + K/2); centers of
// partial border tiles clamp to the last row/column so every tile is probed.
inline std::vector<PixelPos> candidate_grid(int width, int height, int k) {
    std::vector<PixelPos> centers;
    const int nx = (width + k - 1) / k;
    const int ny = (height + k - 1) / k;
    centers.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        const int cy = std::min(j * k + k / 2, height - 1);
        for (int i = 0; i < nx; ++i) {
            const int cx = std::min(i * k + k / 2, width - 1);
            centers.push_back({cx, cy});
        }
    }
    return centers;
}

// Walks the sampling grid and produces one candidate per center that has a
// measurable mean depth and a large enough box. Output order is row-major by
// center, so the result is deterministic.
inline std::vector<Candidate> extract_candidates(const DepthFrame& frame,
                                                 const ExtractionConfig& cfg) {
    cfg.validate();
    std::vector<Candidate> out;
    for (const PixelPos center : candidate_grid(frame.width(), frame.height(), cfg.k)) {
        const auto d = neighborhood_mean_depth(frame, center, cfg.k);
        if (!d) continue;
        const auto [w, h] = head_box_at(frame.intrinsics(), *d, cfg.r_mm);
        if (std::min(w, h) < cfg.min_patch) continue;
        Candidate c;
        c.center = center;
        c.box = {static_cast<double>(center.x), static_cast<double>(center.y), w, h};
        c.distance_mm = *d;
        c.patch = crop_normalize(frame, c.box, *d, cfg);
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace depthhead
