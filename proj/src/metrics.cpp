#include "viewadapt/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace viewadapt::benchkit {

double psnr(const Image& a, const Image& b, const ValidityMask* mask) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("psnr: image dimensions differ");
    if (mask && (mask->width != a.width || mask->height != a.height))
        throw std::invalid_argument("psnr: mask dimensions differ");

    double se = 0.0;
    size_t n = 0;
    const size_t total = static_cast<size_t>(a.width) * a.height;
    for (size_t i = 0; i < total; ++i) {
        if (mask && !mask->bits[i]) continue;
        for (int c = 0; c < 3; ++c) {
            const double d = double(a.pixels[i * 3 + c]) - double(b.pixels[i * 3 + c]);
            se += d * d;
        }
        ++n;
    }
    if (n == 0) throw std::invalid_argument("psnr: mask selects no pixels");
    const double mse = se / (3.0 * static_cast<double>(n));
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

namespace {

constexpr int kWinRadius = 5;  // 11-tap window
constexpr double kSigma = 1.5;

const std::vector<double>& gaussian_kernel() {
    static const std::vector<double> k = [] {
        std::vector<double> v(2 * kWinRadius + 1);
        double sum = 0.0;
        for (int i = -kWinRadius; i <= kWinRadius; ++i) {
            v[i + kWinRadius] = std::exp(-0.5 * i * i / (kSigma * kSigma));
            sum += v[i + kWinRadius];
        }
        for (double& x : v) x /= sum;
        return v;
    }();
    return k;
}

std::vector<double> luma(const Image& img) {
    std::vector<double> y(static_cast<size_t>(img.width) * img.height);
    for (size_t i = 0; i < y.size(); ++i) {
        y[i] = 0.299 * img.pixels[i * 3] + 0.587 * img.pixels[i * 3 + 1] +
               0.114 * img.pixels[i * 3 + 2];
    }
    return y;
}

// Separable Gaussian filter; only values at least kWinRadius from every
// border are meaningful afterwards.
std::vector<double> blur(const std::vector<double>& src, int w, int h) {
    std::vector<double> tmp(src.size(), 0.0), dst(src.size(), 0.0);
    const auto& k = gaussian_kernel();
    for (int y = 0; y < h; ++y) {
        for (int x = kWinRadius; x < w - kWinRadius; ++x) {
            double s = 0.0;
            for (int i = -kWinRadius; i <= kWinRadius; ++i)
                s += k[i + kWinRadius] * src[static_cast<size_t>(y) * w + x + i];
            tmp[static_cast<size_t>(y) * w + x] = s;
        }
    }
    for (int y = kWinRadius; y < h - kWinRadius; ++y) {
        for (int x = kWinRadius; x < w - kWinRadius; ++x) {
            double s = 0.0;
            for (int i = -kWinRadius; i <= kWinRadius; ++i)
                s += k[i + kWinRadius] * tmp[static_cast<size_t>(y + i) * w + x];
            dst[static_cast<size_t>(y) * w + x] = s;
        }
    }
    return dst;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("ssim: image dimensions differ");
    const int w = a.width;
    const int h = a.height;
    if (w < 2 * kWinRadius + 1 || h < 2 * kWinRadius + 1)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");

    const std::vector<double> x = luma(a);
    const std::vector<double> y = luma(b);
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }

    const std::vector<double> ux = blur(x, w, h);
    const std::vector<double> uy = blur(y, w, h);
    const std::vector<double> uxx = blur(xx, w, h);
    const std::vector<double> uyy = blur(yy, w, h);
    const std::vector<double> uxy = blur(xy, w, h);

    constexpr double kL = 255.0;
    constexpr double c1 = (0.01 * kL) * (0.01 * kL);
    constexpr double c2 = (0.03 * kL) * (0.03 * kL);

    double sum = 0.0;
    size_t n = 0;
    for (int py = kWinRadius; py < h - kWinRadius; ++py) {
        for (int px = kWinRadius; px < w - kWinRadius; ++px) {
            const size_t i = static_cast<size_t>(py) * w + px;
            const double vx = uxx[i] - ux[i] * ux[i];
            const double vy = uyy[i] - uy[i] * uy[i];
            const double cxy = uxy[i] - ux[i] * uy[i];
            const double num = (2.0 * ux[i] * uy[i] + c1) * (2.0 * cxy + c2);
            const double den = (ux[i] * ux[i] + uy[i] * uy[i] + c1) * (vx + vy + c2);
            sum += num / den;
            ++n;
        }
    }
    return sum / static_cast<double>(n);
}

}  // namespace viewadapt::benchkit
