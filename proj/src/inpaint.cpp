#include "viewadapt/inpaint.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace viewadapt::inpaint {

namespace {

constexpr float kFar = 1e10f;

struct HeapEntry {
    float t;
    int y;
    int x;
};

struct HeapCmp {
    // min-heap on (t, y, x); ties resolved in (row, column) order
    bool operator()(const HeapEntry& a, const HeapEntry& b) const {
        if (a.t != b.t) return a.t > b.t;
        if (a.y != b.y) return a.y > b.y;
        return a.x > b.x;
    }
};

using Heap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapCmp>;

// Upwind quadratic solve of |grad T| = 1 on a unit grid from one vertical
// and one horizontal neighbor time (kFar when that neighbor is unresolved).
float eikonal_solve(float a, float b) {
    if (a > b) std::swap(a, b);
    if (a >= kFar) return kFar;
    if (b >= kFar || b - a >= 1.0f) return a + 1.0f;
    return 0.5f * (a + b + std::sqrt(2.0f - (a - b) * (a - b)));
}

struct Grid {
    int w = 0;
    int h = 0;
    size_t idx(int x, int y) const { return static_cast<size_t>(y) * w + x; }
    bool inside(int x, int y) const { return x >= 0 && x < w && y >= 0 && y < h; }
};

// Fast marching from the frozen seed set across `domain` pixels. Calls
// on_freeze(x, y) for every domain pixel in ascending-T order.
template <typename OnFreeze>
void march(const Grid& g, std::vector<float>& t, std::vector<std::uint8_t>& frozen,
           const std::vector<std::uint8_t>& domain, OnFreeze&& on_freeze) {
    static constexpr int dx[4] = {1, -1, 0, 0};
    static constexpr int dy[4] = {0, 0, 1, -1};

    auto neighbor_t = [&](int x, int y) -> float {
        if (!g.inside(x, y)) return kFar;
        const size_t i = g.idx(x, y);
        return frozen[i] ? t[i] : kFar;
    };
    auto update = [&](int x, int y) -> float {
        const float l = neighbor_t(x - 1, y);
        const float r = neighbor_t(x + 1, y);
        const float u = neighbor_t(x, y - 1);
        const float d = neighbor_t(x, y + 1);
        return std::min(std::min(eikonal_solve(l, u), eikonal_solve(r, u)),
                        std::min(eikonal_solve(l, d), eikonal_solve(r, d)));
    };

    Heap heap;
    for (int y = 0; y < g.h; ++y) {
        for (int x = 0; x < g.w; ++x) {
            const size_t i = g.idx(x, y);
            if (frozen[i] || !domain[i]) continue;
            bool fringe = false;
            for (int k = 0; k < 4 && !fringe; ++k) {
                const int nx = x + dx[k], ny = y + dy[k];
                fringe = g.inside(nx, ny) && frozen[g.idx(nx, ny)];
            }
            if (fringe) {
                t[i] = update(x, y);
                heap.push({t[i], y, x});
            }
        }
    }

    while (!heap.empty()) {
        const HeapEntry e = heap.top();
        heap.pop();
        const size_t i = g.idx(e.x, e.y);
        if (frozen[i] || e.t != t[i]) continue;  // finalized or stale entry
        frozen[i] = 1;
        on_freeze(e.x, e.y);
        for (int k = 0; k < 4; ++k) {
            const int nx = e.x + dx[k], ny = e.y + dy[k];
            if (!g.inside(nx, ny)) continue;
            const size_t ni = g.idx(nx, ny);
            if (frozen[ni] || !domain[ni]) continue;
            const float nt = update(nx, ny);
            if (nt < t[ni]) {
                t[ni] = nt;
                heap.push({nt, ny, nx});
            }
        }
    }
}

// Signed distance field: holes get +distance to the known region (solved
// later by the inward march), known pixels get -distance to the hole region
// clamped to band width. The outside distances only scale the level-set
// weight factor, so a two-pass chamfer transform is accurate enough and
// far cheaper than marching the whole known region.
std::vector<float> signed_field(const Grid& g, const ValidityMask& mask, int band) {
    const size_t n = static_cast<size_t>(g.w) * g.h;
    std::vector<float> t(n, kFar);

    constexpr float kDiag = 1.41421356f;
    std::vector<float> d(n, kFar);
    for (size_t i = 0; i < n; ++i)
        if (!mask.bits[i]) d[i] = 0.0f;

    auto relax = [&](size_t i, size_t j, float step) {
        if (d[j] + step < d[i]) d[i] = d[j] + step;
    };
    for (int y = 0; y < g.h; ++y) {
        for (int x = 0; x < g.w; ++x) {
            const size_t i = g.idx(x, y);
            if (x > 0) relax(i, i - 1, 1.0f);
            if (y > 0) relax(i, i - g.w, 1.0f);
            if (x > 0 && y > 0) relax(i, i - g.w - 1, kDiag);
            if (x < g.w - 1 && y > 0) relax(i, i - g.w + 1, kDiag);
        }
    }
    for (int y = g.h - 1; y >= 0; --y) {
        for (int x = g.w - 1; x >= 0; --x) {
            const size_t i = g.idx(x, y);
            if (x < g.w - 1) relax(i, i + 1, 1.0f);
            if (y < g.h - 1) relax(i, i + g.w, 1.0f);
            if (x < g.w - 1 && y < g.h - 1) relax(i, i + g.w + 1, kDiag);
            if (x > 0 && y < g.h - 1) relax(i, i + g.w - 1, kDiag);
        }
    }
    for (size_t i = 0; i < n; ++i)
        if (mask.bits[i]) t[i] = -std::min(d[i], static_cast<float>(band));
    return t;
}

struct DiscOffset {
    int dx, dy;
    float inv_len;   // 1 / |r|
    float inv_len2;  // geometric distance factor, d0 = 1
};

std::vector<DiscOffset> make_disc(int radius) {
    std::vector<DiscOffset> disc;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int len2 = dx * dx + dy * dy;
            if (len2 > radius * radius) continue;
            disc.push_back({dx, dy, 1.0f / std::sqrt(float(len2)), 1.0f / float(len2)});
        }
    return disc;
}

struct TeleaFiller {
    Grid g;
    const std::vector<float>* t;
    const std::vector<std::uint8_t>* resolved;
    int radius;
    std::vector<DiscOffset> disc;

    void fill(Image& img, int px, int py) const {
        const auto& T = *t;
        const auto& known = *resolved;

        // propagation direction = gradient of the arrival-time field
        auto grad_axis = [&](int ax, int ay) -> float {
            const bool hasp = g.inside(px + ax, py + ay) && known[g.idx(px + ax, py + ay)];
            const bool hasm = g.inside(px - ax, py - ay) && known[g.idx(px - ax, py - ay)];
            const float tp = hasp ? T[g.idx(px + ax, py + ay)] : 0.0f;
            const float tm = hasm ? T[g.idx(px - ax, py - ay)] : 0.0f;
            const float tc = T[g.idx(px, py)];
            if (hasp && hasm) return 0.5f * (tp - tm);
            if (hasp) return tp - tc;
            if (hasm) return tc - tm;
            return 0.0f;
        };
        const float gx = grad_axis(1, 0);
        const float gy = grad_axis(0, 1);
        const float glen = std::sqrt(gx * gx + gy * gy);
        const bool degenerate = glen < 1e-12f;
        const float nx = degenerate ? 0.0f : gx / glen;
        const float ny = degenerate ? 0.0f : gy / glen;

        const float tp = T[g.idx(px, py)];
        const bool interior =
            px >= radius && py >= radius && px < g.w - radius && py < g.h - radius;
        float acc0 = 0.0f, acc1 = 0.0f, acc2 = 0.0f, wsum = 0.0f;
        for (const DiscOffset& o : disc) {
            const int qx = px + o.dx;
            const int qy = py + o.dy;
            if (!interior && !g.inside(qx, qy)) continue;
            const size_t qi = g.idx(qx, qy);
            if (!known[qi]) continue;
            // r = p - q = (-dx, -dy); only |r . N| enters the weight
            const float dir =
                degenerate ? 1.0f
                           : std::max(std::abs(o.dx * nx + o.dy * ny) * o.inv_len, 1e-6f);
            const float lev = 1.0f / (1.0f + std::abs(tp - T[qi]));
            const float w = dir * o.inv_len2 * lev;
            const std::uint8_t* rgb = img.pixels.data() + qi * 3;
            acc0 += w * rgb[0];
            acc1 += w * rgb[1];
            acc2 += w * rgb[2];
            wsum += w;
        }
        std::uint8_t* out = img.at(px, py);
        if (wsum <= 0.0f) return;  // unreachable: the popped pixel touches the front
        const float inv = 1.0f / wsum;
        out[0] = static_cast<std::uint8_t>(std::clamp<long>(std::lroundf(acc0 * inv), 0, 255));
        out[1] = static_cast<std::uint8_t>(std::clamp<long>(std::lroundf(acc1 * inv), 0, 255));
        out[2] = static_cast<std::uint8_t>(std::clamp<long>(std::lroundf(acc2 * inv), 0, 255));
    }
};

}  // namespace

std::vector<double> fmm_distance_field(const ValidityMask& mask) {
    const Grid g{mask.width, mask.height};
    const size_t n = static_cast<size_t>(g.w) * g.h;
    std::vector<float> t(n, kFar);
    std::vector<std::uint8_t> frozen(n, 0), domain(n, 0);
    for (size_t i = 0; i < n; ++i) {
        if (mask.bits[i]) {
            frozen[i] = 1;
            t[i] = 0.0f;
        } else {
            domain[i] = 1;
        }
    }
    march(g, t, frozen, domain, [](int, int) {});
    return std::vector<double>(t.begin(), t.end());
}

InpaintResult inpaint_telea(const Image& img, const ValidityMask& mask,
                            const InpaintParams& params) {
    validate(params);
    if (img.width != mask.width || img.height != mask.height)
        throw std::invalid_argument("inpaint: image and mask dimensions differ");

    InpaintResult res;
    res.image = img;
    if (mask.all_true()) return res;
    if (!mask.any_true()) {
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                std::uint8_t* p = res.image.at(x, y);
                p[0] = params.fallback_color[0];
                p[1] = params.fallback_color[1];
                p[2] = params.fallback_color[2];
            }
        res.used_fallback = true;
        return res;
    }

    const Grid g{img.width, img.height};
    const size_t n = static_cast<size_t>(g.w) * g.h;
    const int band = params.band > 0 ? params.band : params.radius;
    std::vector<float> t = signed_field(g, mask, band);

    std::vector<std::uint8_t> frozen(n, 0), domain(n, 0), resolved(n, 0);
    for (size_t i = 0; i < n; ++i) {
        if (mask.bits[i]) {
            frozen[i] = 1;
            resolved[i] = 1;
        } else {
            domain[i] = 1;
            t[i] = kFar;
        }
    }

    TeleaFiller filler{g, &t, &resolved, params.radius, make_disc(params.radius)};
    march(g, t, frozen, domain, [&](int x, int y) {
        filler.fill(res.image, x, y);
        resolved[g.idx(x, y)] = 1;
    });
    return res;
}

InpaintResult adapt_and_fill(const Image& img, const ValidityMask& mask,
                             const InpaintParams& params) {
    if (img.width == mask.width && img.height == mask.height && mask.all_true()) {
        return InpaintResult{img, false};
    }
    return inpaint_telea(img, mask, params);
}

}  // namespace viewadapt::inpaint
