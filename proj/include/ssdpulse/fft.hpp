#pragma once

#include <complex>
#include <vector>

#include "ssdpulse/tensor.hpp"

namespace ssdpulse {

// One-sided spectrum of a real signal: bins 0 .. floor(n/2).
struct ComplexSpectrum {
    Tensor re;  // [n/2 + 1]
    Tensor im;  // [n/2 + 1]
    std::int64_t n = 0;  // original signal length
};

// Forward DFT of a real float signal, any length >= 1. Internals run in
// double; results are rounded to f32 at the end.
ComplexSpectrum rfft(const std::vector<float>& x);

// Inverse of rfft for a signal of length n. Conjugate symmetry of the hidden
// negative bins is implied; Nyquist/DC imaginary parts are ignored as zero.
std::vector<float> irfft(const ComplexSpectrum& spec, std::int64_t n);

namespace fftcore {

// In-place complex DFT of any length. Power-of-two sizes use radix-2;
// others go through the Bluestein chirp-z transform on a padded
// power-of-two grid. Inverse includes the 1/n factor.
void transform(std::vector<std::complex<double>>& a, bool inverse);

std::size_t next_pow2(std::size_t n);

}  // namespace fftcore

}  // namespace ssdpulse
