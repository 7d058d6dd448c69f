#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace depthhead {

// Pinhole focal lengths and principal point, all in pixels.
struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
};

// Axis-aligned box described by its real-valued center and size in pixels.
struct BoundingBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;

    double x_min() const { return cx - w / 2.0; }
    double x_max() const { return cx + w / 2.0; }
    double y_min() const { return cy - h / 2.0; }
    double y_max() const { return cy + h / 2.0; }
    double area() const { return w * h; }
};

struct PixelPos {
    int x = 0;
    int y = 0;
};

// Single depth frame: row-major 16-bit distances in millimeters.
// A stored value of 0 means "no measurement"; consumers skip zeros.
class DepthFrame {
public:
    DepthFrame() = default;
    DepthFrame(int width, int height, CameraIntrinsics intr, std::uint16_t fill = 0)
        : width_(width), height_(height), intrinsics_(intr),
          pixels_(static_cast<std::size_t>(width) * height, fill) {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("DepthFrame: non-positive dimensions");
    }
    DepthFrame(int width, int height, CameraIntrinsics intr, std::vector<std::uint16_t> pixels)
        : width_(width), height_(height), intrinsics_(intr), pixels_(std::move(pixels)) {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("DepthFrame: non-positive dimensions");
        if (pixels_.size() != static_cast<std::size_t>(width) * height)
            throw std::invalid_argument("DepthFrame: pixel count does not match dimensions");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    const CameraIntrinsics& intrinsics() const { return intrinsics_; }
    void set_intrinsics(const CameraIntrinsics& intr) { intrinsics_ = intr; }

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width_ && y >= 0 && y < height_;
    }

    std::uint16_t at(int x, int y) const {
        return pixels_[static_cast<std::size_t>(y) * width_ + x];
    }
    std::uint16_t& at(int x, int y) {
        return pixels_[static_cast<std::size_t>(y) * width_ + x];
    }

    const std::vector<std::uint16_t>& pixels() const { return pixels_; }
    std::vector<std::uint16_t>& pixels() { return pixels_; }

private:
    int width_ = 0;
    int height_ = 0;
    CameraIntrinsics intrinsics_;
    std::vector<std::uint16_t> pixels_;
};

// Fills sensor dropouts: every zero pixel with at least one nonzero in-bounds
// 3x3 neighbor becomes the median of those neighbors. Nonzero pixels are left
// untouched, so measured depth edges stay sharp. Reads the input frame only,
// never partially filled output. Even neighbor counts take the rounded mean
// of the two central values.
inline DepthFrame denoise_zeros(const DepthFrame& frame) {
    DepthFrame out = frame;
    std::uint16_t neighbors[8];
    for (int y = 0; y < frame.height(); ++y) {
        for (int x = 0; x < frame.width(); ++x) {
            if (frame.at(x, y) != 0) continue;
            int n = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (!frame.in_bounds(nx, ny)) continue;
                    const std::uint16_t v = frame.at(nx, ny);
                    if (v != 0) neighbors[n++] = v;
                }
            }
            if (n == 0) continue;
            std::sort(neighbors, neighbors + n);
            std::uint16_t med;
            if (n % 2 == 1) {
                med = neighbors[n / 2];
            } else {
                const unsigned a = neighbors[n / 2 - 1];
                const unsigned b = neighbors[n / 2];
                med = static_cast<std::uint16_t>((a + b + 1) / 2);
            }
            out.at(x, y) = med;
        }
    }
    return out;
}

// Mean of the nonzero pixels in the square window of side 2K+1 centered at p,
// clipped at the frame borders. Empty (all-zero) windows yield nullopt.
inline std::optional<double> neighborhood_mean_depth(const DepthFrame& frame, PixelPos p, int k) {
    if (!frame.in_bounds(p.x, p.y))
        throw std::invalid_argument("neighborhood_mean_depth: position outside frame");
    if (k < 1)
        throw std::invalid_argument("neighborhood_mean_depth: K must be >= 1");
    const int x0 = std::max(0, p.x - k);
    const int x1 = std::min(frame.width() - 1, p.x + k);
    const int y0 = std::max(0, p.y - k);
    const int y1 = std::min(frame.height() - 1, p.y + k);
    std::uint64_t sum = 0;
    std::uint64_t count = 0;
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const std::uint16_t v = frame.at(x, y);
            if (v != 0) {
                sum += v;
                ++count;
            }
        }
    }
    if (count == 0) return std::nullopt;
    return static_cast<double>(sum) / static_cast<double>(count);
}

// Contrast-stretches nonzero values onto [1, 255] for visual inspection;
// zeros stay 0. When all nonzero values are equal they map to 255.
inline std::vector<std::uint8_t> to_display8(const DepthFrame& frame) {
    std::uint16_t lo = 65535;
    std::uint16_t hi = 0;
    for (const std::uint16_t v : frame.pixels()) {
        if (v == 0) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<std::uint8_t> out(frame.pixels().size(), 0);
    if (hi == 0) return out;  // all-zero frame
    const double span = static_cast<double>(hi) - static_cast<double>(lo);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint16_t v = frame.pixels()[i];
        if (v == 0) continue;
        if (span == 0.0) {
            out[i] = 255;
        } else {
            out[i] = static_cast<std::uint8_t>(std::lround((v - lo) / span * 254.0) + 1);
        }
    }
    return out;
}

}  // namespace depthhead
