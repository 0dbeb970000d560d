#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace viewadapt::warpcore {

/// Row-major 8-bit RGB image. Integer pixel coordinates are pixel centers.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // width * height * 3

    Image() = default;
    Image(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<size_t>(w) * h * 3, fill) {}

    std::uint8_t* at(int x, int y) { return pixels.data() + 3 * (static_cast<size_t>(y) * width + x); }
    const std::uint8_t* at(int x, int y) const { return pixels.data() + 3 * (static_cast<size_t>(y) * width + x); }

    bool operator==(const Image& o) const {
        return width == o.width && height == o.height && pixels == o.pixels;
    }
};

/// Row-major z-depth map in meters; entries that are non-finite or <= 0 mark
/// pixels without depth.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<float> depths;

    DepthMap() = default;
    DepthMap(int w, int h, float fill = 0.0f)
        : width(w), height(h), depths(static_cast<size_t>(w) * h, fill) {}

    float& at(int x, int y) { return depths[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return depths[static_cast<size_t>(y) * width + x]; }
    bool valid_at(int x, int y) const {
        const float d = at(x, y);
        return std::isfinite(d) && d > 0.0f;
    }

    bool operator==(const DepthMap& o) const {
        return width == o.width && height == o.height && depths == o.depths;
    }
};

/// Per-pixel validity; true = observed/synthesized, false = hole.
struct ValidityMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;  // 0 or 1

    ValidityMask() = default;
    ValidityMask(int w, int h, bool fill = false)
        : width(w), height(h), bits(static_cast<size_t>(w) * h, fill ? 1 : 0) {}

    bool at(int x, int y) const { return bits[static_cast<size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { bits[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }

    bool all_true() const {
        for (std::uint8_t b : bits)
            if (!b) return false;
        return true;
    }
    bool any_true() const {
        for (std::uint8_t b : bits)
            if (b) return true;
        return false;
    }
    double true_fraction() const {
        if (bits.empty()) return 0.0;
        size_t n = 0;
        for (std::uint8_t b : bits) n += b;
        return static_cast<double>(n) / static_cast<double>(bits.size());
    }

    bool operator==(const ValidityMask& o) const {
        return width == o.width && height == o.height && bits == o.bits;
    }
};

// --- file formats (all bit-exact) ---------------------------------------
// Images: binary PPM (P6, maxval 255).
// Depth:  "DPTH" magic, u32 LE width/height/reserved, then float32 LE rows.
// Masks:  binary PBM (P4); bit 1 (black) = hole, bit 0 (white) = valid.

void save_ppm(const Image& img, const std::string& path);
Image load_ppm(const std::string& path);

void save_depth(const DepthMap& depth, const std::string& path);
DepthMap load_depth(const std::string& path);

void save_mask(const ValidityMask& mask, const std::string& path);
ValidityMask load_mask(const std::string& path);

}  // namespace viewadapt::warpcore
