#include "ssdpulse/temporal.hpp"

#include <complex>
#include <vector>

#include "ssdpulse/fft.hpp"

namespace ssdpulse {

MultiTemporalViews multi_temporal_views(const Tensor& tokens) {
    if (tokens.rank() != 2) {
        throw ShapeError("multi_temporal_views: expected [T'xC], got " +
                         tokens.shape_str());
    }
    const std::int64_t t = tokens.dim(0), c = tokens.dim(1);
    if (t < 8) {
        throw ArgumentError("multi_temporal_views: need at least 8 tokens, got " +
                            std::to_string(t));
    }
    const std::int64_t tp = (t + 7) / 8 * 8;
    MultiTemporalViews out;
    out.original_len = t;
    out.padded = (tp != t);
    Tensor base({tp, c});
    for (std::int64_t i = 0; i < tp; ++i) {
        const std::int64_t src = i < t ? i : t - 1;  // edge replication
        for (std::int64_t ci = 0; ci < c; ++ci) base.at(i, ci) = tokens.at(src, ci);
    }
    for (int k = 0; k < 4; ++k) {
        out.views[k] = base;
        out.segment_len[k] = tp >> k;
    }
    return out;
}

Tensor fdf_forward(const Tensor& tokens, const FdfParams& p) {
    if (tokens.rank() != 2) {
        throw ShapeError("fdf_forward: expected [T'xC], got " + tokens.shape_str());
    }
    const std::int64_t t = tokens.dim(0), c = tokens.dim(1);
    if (t < 2) throw ArgumentError("fdf_forward: need at least 2 tokens");
    for (const Tensor* w : {&p.w_re, &p.w_im}) {
        if (w->rank() != 2 || w->dim(0) != c || w->dim(1) != c) {
            throw ShapeError("fdf_forward: mixing weight " + w->shape_str() +
                             " must be [" + std::to_string(c) + "x" +
                             std::to_string(c) + "]");
        }
    }
    const std::int64_t bins = t / 2 + 1;
    // forward transforms, one column per channel
    std::vector<std::vector<std::complex<double>>> spec(
        static_cast<std::size_t>(c));
#pragma omp parallel for schedule(static)
    for (std::int64_t ci = 0; ci < c; ++ci) {
        std::vector<std::complex<double>> a(static_cast<std::size_t>(t));
        for (std::int64_t i = 0; i < t; ++i) {
            a[static_cast<std::size_t>(i)] = {static_cast<double>(tokens.at(i, ci)),
                                              0.0};
        }
        fftcore::transform(a, false);
        a.resize(static_cast<std::size_t>(bins));
        spec[static_cast<std::size_t>(ci)] = std::move(a);
    }
    // channel mixing per frequency bin: out_col = sum_c in_c * (w_re + i w_im)
    std::vector<std::vector<std::complex<double>>> mixed(
        static_cast<std::size_t>(c),
        std::vector<std::complex<double>>(static_cast<std::size_t>(bins)));
#pragma omp parallel for schedule(static)
    for (std::int64_t co = 0; co < c; ++co) {
        for (std::int64_t f = 0; f < bins; ++f) {
            double re = 0.0, im = 0.0;
            for (std::int64_t ci = 0; ci < c; ++ci) {
                const auto& z = spec[static_cast<std::size_t>(ci)]
                                    [static_cast<std::size_t>(f)];
                const double wr = p.w_re.at(ci, co);
                const double wi = p.w_im.at(ci, co);
                re += z.real() * wr - z.imag() * wi;
                im += z.real() * wi + z.imag() * wr;
            }
            mixed[static_cast<std::size_t>(co)][static_cast<std::size_t>(f)] = {re, im};
        }
    }
    Tensor out({t, c});
#pragma omp parallel for schedule(static)
    for (std::int64_t co = 0; co < c; ++co) {
        std::vector<std::complex<double>> a(static_cast<std::size_t>(t));
        for (std::int64_t f = 0; f < bins; ++f) {
            std::complex<double> z =
                mixed[static_cast<std::size_t>(co)][static_cast<std::size_t>(f)];
            if (f == 0 || (t % 2 == 0 && f == bins - 1)) z = {z.real(), 0.0};
            a[static_cast<std::size_t>(f)] = z;
        }
        for (std::int64_t f = bins; f < t; ++f) {
            a[static_cast<std::size_t>(f)] =
                std::conj(a[static_cast<std::size_t>(t - f)]);
        }
        fftcore::transform(a, true);
        for (std::int64_t i = 0; i < t; ++i) {
            out.at(i, co) = static_cast<float>(
                a[static_cast<std::size_t>(i)].real() +
                static_cast<double>(tokens.at(i, co)));
        }
    }
    return out;
}

Tensor recombine_views(const MultiTemporalViews& processed) {
    const Tensor& v0 = processed.views[0];
    if (v0.rank() != 2) {
        throw ShapeError("recombine_views: expected [T'xC] views, got " +
                         v0.shape_str());
    }
    for (int k = 1; k < 4; ++k) {
        if (!processed.views[k].same_shape(v0)) {
            throw ShapeError("recombine_views: view " + std::to_string(k) + " shape " +
                             processed.views[k].shape_str() + " differs from view 0 " +
                             v0.shape_str());
        }
    }
    Tensor out(v0.shape());
    const std::int64_t n = v0.numel();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) {
            acc += static_cast<double>(processed.views[k].data()[i]);
        }
        out.data()[i] = static_cast<float>(acc * 0.25);
    }
    return out;
}

}  // namespace ssdpulse
