#pragma once

#include "viewadapt/image.hpp"

#include <optional>

namespace viewadapt::benchkit {

using warpcore::Image;
using warpcore::ValidityMask;

/// PSNR cap reported for identical images (keeps CSV cells finite).
constexpr double kPsnrCap = 99.0;

/// 10 log10(255^2 / MSE) over mask-true pixels (all pixels when no mask);
/// identical inputs return the 99 dB cap. Throws on dimension mismatch or
/// an empty mask.
double psnr(const Image& a, const Image& b, const ValidityMask* mask = nullptr);

/// Single-scale SSIM on Rec.601 luma: 11x11 Gaussian window, sigma 1.5,
/// K1 = 0.01, K2 = 0.03, L = 255, averaged over windows that fit entirely
/// inside the image. Requires at least 11x11 inputs.
double ssim(const Image& a, const Image& b);

}  // namespace viewadapt::benchkit
