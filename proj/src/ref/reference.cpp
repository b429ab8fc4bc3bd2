#include "ssdpulse/ref.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ssdpulse::ref {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Tensor matmul_naive(const Tensor& a, const Tensor& b) {
    const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw ShapeError("matmul_naive: inner dims disagree: " + a.shape_str() +
                         " x " + b.shape_str());
    }
    Tensor c({m, n});
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::int64_t kk = 0; kk < k; ++kk) {
                acc += static_cast<double>(a.at(i, kk)) *
                       static_cast<double>(b.at(kk, j));
            }
            c.at(i, j) = static_cast<float>(acc);
        }
    }
    return c;
}

Tensor conv2d_naive(const Tensor& input, const Tensor& weight, std::int64_t stride,
                    std::int64_t pad) {
    const std::int64_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
    const std::int64_t cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
    const std::int64_t oh = (h + 2 * pad - kh) / stride + 1;
    const std::int64_t ow = (w + 2 * pad - kw) / stride + 1;
    Tensor out({cout, oh, ow});
    for (std::int64_t co = 0; co < cout; ++co) {
        for (std::int64_t oy = 0; oy < oh; ++oy) {
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (std::int64_t ci = 0; ci < cin; ++ci) {
                    for (std::int64_t ky = 0; ky < kh; ++ky) {
                        for (std::int64_t kx = 0; kx < kw; ++kx) {
                            const std::int64_t iy = oy * stride + ky - pad;
                            const std::int64_t ix = ox * stride + kx - pad;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                            acc += static_cast<double>(weight.at(co, ci, ky, kx)) *
                                   static_cast<double>(input.at(ci, iy, ix));
                        }
                    }
                }
                out.at(co, oy, ox) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

Tensor conv1d_naive(const Tensor& input, const Tensor& weight, std::int64_t pad) {
    const std::int64_t cin = input.dim(0), t = input.dim(1);
    const std::int64_t cout = weight.dim(0), k = weight.dim(2);
    const std::int64_t ot = t + 2 * pad - k + 1;
    Tensor out({cout, ot});
    for (std::int64_t co = 0; co < cout; ++co) {
        for (std::int64_t o = 0; o < ot; ++o) {
            double acc = 0.0;
            for (std::int64_t ci = 0; ci < cin; ++ci) {
                for (std::int64_t kk = 0; kk < k; ++kk) {
                    const std::int64_t it = o + kk - pad;
                    if (it < 0 || it >= t) continue;
                    acc += static_cast<double>(weight.at(co, ci, kk)) *
                           static_cast<double>(input.at(ci, it));
                }
            }
            out.at(co, o) = static_cast<float>(acc);
        }
    }
    return out;
}

Tensor maxpool2d_naive(const Tensor& input, std::int64_t k, std::int64_t stride) {
    const std::int64_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
    const std::int64_t oh = (h - k) / stride + 1, ow = (w - k) / stride + 1;
    Tensor out({c, oh, ow});
    for (std::int64_t ci = 0; ci < c; ++ci) {
        for (std::int64_t oy = 0; oy < oh; ++oy) {
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                float best = input.at(ci, oy * stride, ox * stride);
                for (std::int64_t ky = 0; ky < k; ++ky) {
                    for (std::int64_t kx = 0; kx < k; ++kx) {
                        best = std::max(best,
                                        input.at(ci, oy * stride + ky, ox * stride + kx));
                    }
                }
                out.at(ci, oy, ox) = best;
            }
        }
    }
    return out;
}

Tensor batchnorm_naive(const Tensor& x, const Tensor& mean, const Tensor& var,
                       const Tensor& gamma, const Tensor& beta, double eps) {
    const std::int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor out({c, h, w});
    for (std::int64_t ci = 0; ci < c; ++ci) {
        for (std::int64_t y = 0; y < h; ++y) {
            for (std::int64_t xx = 0; xx < w; ++xx) {
                const double z = (static_cast<double>(x.at(ci, y, xx)) - mean.at(ci)) /
                                 std::sqrt(static_cast<double>(var.at(ci)) + eps);
                out.at(ci, y, xx) =
                    static_cast<float>(z * gamma.at(ci) + beta.at(ci));
            }
        }
    }
    return out;
}

Tensor relu_naive(const Tensor& x) {
    Tensor out(x.shape());
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        out.data()[i] = std::max(0.0f, x.data()[i]);
    }
    return out;
}

Tensor sigmoid_naive(const Tensor& x) {
    Tensor out(x.shape());
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        out.data()[i] = static_cast<float>(
            1.0 / (1.0 + std::exp(-static_cast<double>(x.data()[i]))));
    }
    return out;
}

Tensor spatial_mean_naive(const Tensor& x) {
    const std::int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor out({c});
    for (std::int64_t ci = 0; ci < c; ++ci) {
        double acc = 0.0;
        for (std::int64_t y = 0; y < h; ++y) {
            for (std::int64_t xx = 0; xx < w; ++xx) acc += x.at(ci, y, xx);
        }
        out.at(ci) = static_cast<float>(acc / static_cast<double>(h * w));
    }
    return out;
}

std::vector<std::complex<double>> dft_naive(
    const std::vector<std::complex<double>>& x, bool inverse) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n, {0.0, 0.0});
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = sign * 2.0 * kPi * static_cast<double>(j) *
                               static_cast<double>(k) / static_cast<double>(n);
            acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = inverse ? acc / static_cast<double>(n) : acc;
    }
    return out;
}

Tensor ssd_unrolled_naive(const SsdInputs& in) {
    const std::int64_t heads = in.q.dim(0), t = in.q.dim(1), n = in.q.dim(2),
                       p = in.v.dim(2);
    Tensor y({heads, t, p});
    for (std::int64_t h = 0; h < heads; ++h) {
        for (std::int64_t i = 0; i < t; ++i) {
            for (std::int64_t pp = 0; pp < p; ++pp) {
                double acc = 0.0;
                for (std::int64_t j = 0; j <= i; ++j) {
                    double decay = 1.0;
                    for (std::int64_t m = j + 1; m <= i; ++m) {
                        decay *= static_cast<double>(in.decay.a.at(h, m));
                    }
                    double score = 0.0;
                    for (std::int64_t nn = 0; nn < n; ++nn) {
                        score += static_cast<double>(in.q.at(h, i, nn)) *
                                 static_cast<double>(in.k.at(h, j, nn));
                    }
                    acc += decay * score * static_cast<double>(in.v.at(h, j, pp));
                }
                y.at(h, i, pp) = static_cast<float>(acc);
            }
        }
    }
    return y;
}

Tensor softmax_attention_naive(const Tensor& q, const Tensor& k, const Tensor& v,
                               bool causal) {
    const std::int64_t t = q.dim(0), n = q.dim(1), p = v.dim(1);
    Tensor y({t, p});
    for (std::int64_t i = 0; i < t; ++i) {
        const std::int64_t jmax = causal ? i : t - 1;
        std::vector<double> e(static_cast<std::size_t>(jmax + 1));
        double z = 0.0;
        for (std::int64_t j = 0; j <= jmax; ++j) {
            double s = 0.0;
            for (std::int64_t nn = 0; nn < n; ++nn) {
                s += static_cast<double>(q.at(i, nn)) *
                     static_cast<double>(k.at(j, nn));
            }
            e[static_cast<std::size_t>(j)] =
                std::exp(s / std::sqrt(static_cast<double>(n)));
            z += e[static_cast<std::size_t>(j)];
        }
        for (std::int64_t pp = 0; pp < p; ++pp) {
            double acc = 0.0;
            for (std::int64_t j = 0; j <= jmax; ++j) {
                acc += e[static_cast<std::size_t>(j)] / z *
                       static_cast<double>(v.at(j, pp));
            }
            y.at(i, pp) = static_cast<float>(acc);
        }
    }
    return y;
}

std::vector<double> lfilter_naive(const std::vector<double>& b,
                                  const std::vector<double>& a,
                                  const std::vector<double>& x) {
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < b.size(); ++k) {
            if (i >= k) acc += b[k] * x[i - k];
        }
        for (std::size_t k = 1; k < a.size(); ++k) {
            if (i >= k) acc -= a[k] * y[i - k];
        }
        y[i] = acc / a[0];
    }
    return y;
}

double butter_bandpass_mag(double f_hz, double low_hz, double high_hz, double fs,
                           int order) {
    const double fs2 = 2.0 * fs;
    const double wl = fs2 * std::tan(kPi * low_hz / fs);
    const double wh = fs2 * std::tan(kPi * high_hz / fs);
    const double wo2 = wl * wh;
    const double bw = wh - wl;
    if (f_hz <= 0.0) return 0.0;
    if (f_hz >= fs / 2.0) return 0.0;
    const double w = fs2 * std::tan(kPi * f_hz / fs);
    const double u = (w * w - wo2) / (bw * w);  // bandpass -> prototype map
    return 1.0 / std::sqrt(1.0 + std::pow(u, 2.0 * order));
}

PsdNaive welch_naive(const std::vector<double>& x, double fs, std::int64_t nperseg,
                     double overlap) {
    const std::int64_t n = static_cast<std::int64_t>(x.size());
    const std::int64_t hop = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::llround(
               static_cast<double>(nperseg) * (1.0 - overlap))));
    const std::int64_t nseg = (n - nperseg) / hop + 1;
    std::size_t nfft = 2048;
    while (nfft < static_cast<std::size_t>(nperseg)) nfft *= 2;

    std::vector<double> win(static_cast<std::size_t>(nperseg));
    double wss = 0.0;
    for (std::int64_t i = 0; i < nperseg; ++i) {
        win[static_cast<std::size_t>(i)] =
            0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) /
                                  static_cast<double>(nperseg)));
        wss += win[static_cast<std::size_t>(i)] * win[static_cast<std::size_t>(i)];
    }
    const std::size_t bins = nfft / 2 + 1;
    PsdNaive out;
    out.freqs.resize(bins);
    out.power.assign(bins, 0.0);
    for (std::size_t j = 0; j < bins; ++j) {
        out.freqs[j] = static_cast<double>(j) * fs / static_cast<double>(nfft);
    }
    for (std::int64_t s = 0; s < nseg; ++s) {
        double mean = 0.0;
        for (std::int64_t i = 0; i < nperseg; ++i) {
            mean += x[static_cast<std::size_t>(s * hop + i)];
        }
        mean /= static_cast<double>(nperseg);
        std::vector<std::complex<double>> buf(nfft, {0.0, 0.0});
        for (std::int64_t i = 0; i < nperseg; ++i) {
            buf[static_cast<std::size_t>(i)] = {
                (x[static_cast<std::size_t>(s * hop + i)] - mean) *
                    win[static_cast<std::size_t>(i)],
                0.0};
        }
        auto spec = dft_naive(buf, false);
        for (std::size_t j = 0; j < bins; ++j) {
            double p = std::norm(spec[j]) / (fs * wss);
            if (j != 0 && j != bins - 1) p *= 2.0;
            out.power[j] += p;
        }
    }
    for (double& p : out.power) p /= static_cast<double>(nseg);
    return out;
}

double snr_naive(const std::vector<double>& pred, double fs, double gt_hr_bpm) {
    const auto nperseg = static_cast<std::int64_t>(pred.size());
    PsdNaive psd = welch_naive(pred, fs, nperseg, 0.5);
    const double f0 = gt_hr_bpm / 60.0;
    double sig = 0.0, noise = 0.0;
    for (std::size_t j = 0; j < psd.freqs.size(); ++j) {
        const double f = psd.freqs[j];
        if (f < 0.6 || f > 3.3) continue;
        if (std::abs(f - f0) <= 0.1 || std::abs(f - 2.0 * f0) <= 0.1) {
            sig += psd.power[j];
        } else {
            noise += psd.power[j];
        }
    }
    if (noise == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(sig / noise);
}

double pearson_naive(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (double v : x) mx += v;
    for (double v : y) my += v;
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace ssdpulse::ref
