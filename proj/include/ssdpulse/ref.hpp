#pragma once

#include <complex>
#include <vector>

#include "ssdpulse/ssd.hpp"
#include "ssdpulse/tensor.hpp"

// Serial, no-OpenMP reference implementations written directly from the
// defining formulas. Deliberately naive: tests compare the optimized library
// against these, and the kernel benchmark uses them as the baseline.
namespace ssdpulse::ref {

Tensor matmul_naive(const Tensor& a, const Tensor& b);
Tensor conv2d_naive(const Tensor& input, const Tensor& weight, std::int64_t stride,
                    std::int64_t pad);
Tensor conv1d_naive(const Tensor& input, const Tensor& weight, std::int64_t pad);
Tensor maxpool2d_naive(const Tensor& input, std::int64_t k, std::int64_t stride);
Tensor batchnorm_naive(const Tensor& x, const Tensor& mean, const Tensor& var,
                       const Tensor& gamma, const Tensor& beta, double eps);
Tensor relu_naive(const Tensor& x);
Tensor sigmoid_naive(const Tensor& x);
Tensor spatial_mean_naive(const Tensor& x);

// O(n^2) direct DFT; inverse includes the 1/n factor.
std::vector<std::complex<double>> dft_naive(
    const std::vector<std::complex<double>>& x, bool inverse);

// SSD by the unrolled definition: y[h,i,p] = sum_{j<=i} (prod_{m=j+1..i}
// a[h,m]) (q_i . k_j) v[j,p], products expanded literally per (i,j).
Tensor ssd_unrolled_naive(const SsdInputs& in);

Tensor softmax_attention_naive(const Tensor& q, const Tensor& k, const Tensor& v,
                               bool causal);

// Direct difference equation y[n] = sum b[k] x[n-k] - sum a[k] y[n-k].
std::vector<double> lfilter_naive(const std::vector<double>& b,
                                  const std::vector<double>& a,
                                  const std::vector<double>& x);

// Analog Butterworth bandpass magnitude at digital frequency f, using the
// bilinear pre-warp identity |H_d(f)| == |H_a(j 2 fs tan(pi f / fs))|.
double butter_bandpass_mag(double f_hz, double low_hz, double high_hz, double fs,
                           int order);

struct PsdNaive {
    std::vector<double> freqs;
    std::vector<double> power;
};
// Welch re-derived from the formula: periodic Hann, per-segment mean
// removal, zero-padding to >= 2048, one-sided density, segment average.
PsdNaive welch_naive(const std::vector<double>& x, double fs, std::int64_t nperseg,
                     double overlap);

double snr_naive(const std::vector<double>& pred, double fs, double gt_hr_bpm);

double pearson_naive(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ssdpulse::ref
