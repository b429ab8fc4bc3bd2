#include "ssdpulse/fft.hpp"

#include <cmath>
#include <utility>

namespace ssdpulse {

namespace fftcore {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative in-place radix-2 Cooley-Tukey. No normalization here.
void radix2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                std::complex<double> u = a[i + j];
                std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// Arbitrary-length DFT as a convolution with a chirp (Bluestein). The chirp
// exponent uses j*j mod 2n so the angle never loses precision at large j.
void bluestein(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    const double sign = inverse ? 1.0 : -1.0;
    std::vector<std::complex<double>> chirp(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::uint64_t jj = (static_cast<std::uint64_t>(j) * j) %
                                 (2 * static_cast<std::uint64_t>(n));
        const double ang = sign * kPi * static_cast<double>(jj) / static_cast<double>(n);
        chirp[j] = {std::cos(ang), std::sin(ang)};
    }
    const std::size_t m = next_pow2(2 * n - 1);
    std::vector<std::complex<double>> u(m, {0.0, 0.0});
    std::vector<std::complex<double>> v(m, {0.0, 0.0});
    for (std::size_t j = 0; j < n; ++j) u[j] = a[j] * chirp[j];
    v[0] = std::conj(chirp[0]);
    for (std::size_t j = 1; j < n; ++j) {
        v[j] = std::conj(chirp[j]);
        v[m - j] = v[j];
    }
    radix2(u, false);
    radix2(v, false);
    for (std::size_t j = 0; j < m; ++j) u[j] *= v[j];
    radix2(u, true);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t j = 0; j < n; ++j) a[j] = u[j] * inv_m * chirp[j];
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void transform(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n <= 1) return;
    if (is_pow2(n)) {
        radix2(a, inverse);
    } else {
        bluestein(a, inverse);
    }
    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv_n;
    }
}

}  // namespace fftcore

ComplexSpectrum rfft(const std::vector<float>& x) {
    const std::int64_t n = static_cast<std::int64_t>(x.size());
    if (n < 1) throw ArgumentError("rfft: empty input");
    std::vector<std::complex<double>> a(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = {static_cast<double>(x[i]), 0.0};
    fftcore::transform(a, false);
    const std::int64_t bins = n / 2 + 1;
    ComplexSpectrum spec;
    spec.n = n;
    spec.re = Tensor({bins});
    spec.im = Tensor({bins});
    for (std::int64_t j = 0; j < bins; ++j) {
        spec.re.at(j) = static_cast<float>(a[static_cast<std::size_t>(j)].real());
        spec.im.at(j) = static_cast<float>(a[static_cast<std::size_t>(j)].imag());
    }
    return spec;
}

std::vector<float> irfft(const ComplexSpectrum& spec, std::int64_t n) {
    if (n < 1) throw ArgumentError("irfft: target length must be >= 1");
    const std::int64_t bins = n / 2 + 1;
    if (spec.re.rank() != 1 || spec.im.rank() != 1 || spec.re.dim(0) != bins ||
        spec.im.dim(0) != bins) {
        throw ShapeError("irfft: spectrum " + spec.re.shape_str() + "/" +
                         spec.im.shape_str() + " does not match length " +
                         std::to_string(n) + " (want [" + std::to_string(bins) + "])");
    }
    std::vector<std::complex<double>> a(static_cast<std::size_t>(n));
    for (std::int64_t j = 0; j < bins; ++j) {
        double re = spec.re.at(j);
        double im = spec.im.at(j);
        if (j == 0 || (n % 2 == 0 && j == bins - 1)) im = 0.0;
        a[static_cast<std::size_t>(j)] = {re, im};
    }
    for (std::int64_t j = bins; j < n; ++j) {
        a[static_cast<std::size_t>(j)] = std::conj(a[static_cast<std::size_t>(n - j)]);
    }
    fftcore::transform(a, true);
    std::vector<float> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] =
            static_cast<float>(a[static_cast<std::size_t>(i)].real());
    }
    return out;
}

}  // namespace ssdpulse
