#pragma once

#include <cstdint>
#include <string>

#include "bio/image.hpp"

namespace bio {

enum class MaskKind { Cartesian, Gaussian, Radial };

MaskKind parse_mask_kind(const std::string& name);
std::string to_string(MaskKind kind);

/// Binary k-space sampling pattern in FFT-native (unshifted) order, so the DC
/// sample is pixel (0, 0). The achieved rate is within 0.02 of `rate`.
///  - Cartesian: whole phase-encode rows; a low-frequency band of
///    ceil(rows/4) rows is always kept, the rest drawn uniformly.
///  - Gaussian: individual samples drawn without replacement with density
///    proportional to exp(-r^2 / (2 * 0.2^2)), r the normalized frequency radius.
///  - Radial: equiangular spokes through the origin.
ImageGrid make_mask(MaskKind kind, double rate, int height, int width, std::uint64_t seed);

double sampled_fraction(const ImageGrid& mask);

}  // namespace bio
