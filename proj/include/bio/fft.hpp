#pragma once

#include <complex>
#include <vector>

#include "bio/image.hpp"

namespace bio::fft {

using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;

/// In-place unnormalized 2-D DFT of a row-major h x w buffer.
/// `inverse` selects the +i exponent; neither direction scales.
void transform(Spectrum& buf, int h, int w, bool inverse);

/// Unnormalized forward DFT of a real field.
Spectrum forward(const Vec& real, int h, int w);

/// Real part of the unnormalized inverse DFT, divided by h*w.
Vec inverse_real(Spectrum spec, int h, int w);

}  // namespace bio::fft
