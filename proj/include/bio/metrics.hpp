#pragma once

#include "bio/image.hpp"

namespace bio {

/// 10 log10(peak^2 / MSE), capped at 99 dB when MSE < 1e-10 peak^2.
double psnr(const ImageGrid& a, const ImageGrid& b, double peak = 1.0);

/// Mean SSIM over all fully-contained 11 x 11 Gaussian windows (sigma 1.5),
/// with C1 = (0.01 L)^2 and C2 = (0.03 L)^2.
double ssim(const ImageGrid& a, const ImageGrid& b, double dynamic_range = 1.0);

inline constexpr double kPsnrCap = 99.0;

}  // namespace bio
