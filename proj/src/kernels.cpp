#include "ssdpulse/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ssdpulse {

namespace {

void require_rank(const Tensor& t, std::int64_t r, const char* what) {
    if (t.rank() != r) {
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(r) +
                         ", got " + t.shape_str());
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul lhs");
    require_rank(b, 2, "matmul rhs");
    if (a.dim(1) != b.dim(0)) {
        throw ShapeError("matmul: inner dims disagree: " + a.shape_str() + " x " +
                         b.shape_str());
    }
    const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor c({m, n});
    const float* pa = a.data();
    const float* pb = b.data();
    float* pc = c.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::int64_t kk = 0; kk < k; ++kk) {
                acc += static_cast<double>(pa[i * k + kk]) *
                       static_cast<double>(pb[kk * n + j]);
            }
            pc[i * n + j] = static_cast<float>(acc);
        }
    }
    return c;
}

Tensor conv2d(const Tensor& input, const Tensor& weight, std::int64_t stride,
              std::int64_t pad) {
    require_rank(input, 3, "conv2d input");
    require_rank(weight, 4, "conv2d weight");
    if (stride < 1) throw ArgumentError("conv2d: stride must be >= 1");
    if (pad < 0) throw ArgumentError("conv2d: pad must be >= 0");
    const std::int64_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
    const std::int64_t cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
    if (weight.dim(1) != cin) {
        throw ShapeError("conv2d: weight " + weight.shape_str() +
                         " does not match input channels of " + input.shape_str());
    }
    const std::int64_t num_h = h + 2 * pad - kh;
    const std::int64_t num_w = w + 2 * pad - kw;
    if (num_h < 0 || num_w < 0 || num_h % stride != 0 || num_w % stride != 0) {
        throw ShapeError("conv2d: input " + input.shape_str() + ", kernel " +
                         weight.shape_str() + ", stride " + std::to_string(stride) +
                         ", pad " + std::to_string(pad) +
                         " give non-integral output dims");
    }
    const std::int64_t oh = num_h / stride + 1;
    const std::int64_t ow = num_w / stride + 1;
    Tensor out({cout, oh, ow});
    const float* px = input.data();
    const float* pw = weight.data();
    float* po = out.data();
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t co = 0; co < cout; ++co) {
        for (std::int64_t oy = 0; oy < oh; ++oy) {
            std::vector<double> row(static_cast<std::size_t>(ow), 0.0);
            for (std::int64_t ci = 0; ci < cin; ++ci) {
                for (std::int64_t ky = 0; ky < kh; ++ky) {
                    const std::int64_t iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= h) continue;
                    const float* xrow = px + (ci * h + iy) * w;
                    const float* wrow = pw + ((co * cin + ci) * kh + ky) * kw;
                    for (std::int64_t kx = 0; kx < kw; ++kx) {
                        const double wv = wrow[kx];
                        const std::int64_t x0 = kx - pad;
                        for (std::int64_t ox = 0; ox < ow; ++ox) {
                            const std::int64_t ix = ox * stride + x0;
                            if (ix < 0 || ix >= w) continue;
                            row[static_cast<std::size_t>(ox)] += wv * xrow[ix];
                        }
                    }
                }
            }
            float* orow = po + (co * oh + oy) * ow;
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                orow[ox] = static_cast<float>(row[static_cast<std::size_t>(ox)]);
            }
        }
    }
    return out;
}

Tensor conv1d(const Tensor& input, const Tensor& weight, std::int64_t pad) {
    require_rank(input, 2, "conv1d input");
    require_rank(weight, 3, "conv1d weight");
    if (pad < 0) throw ArgumentError("conv1d: pad must be >= 0");
    const std::int64_t cin = input.dim(0), t = input.dim(1);
    const std::int64_t cout = weight.dim(0), k = weight.dim(2);
    if (weight.dim(1) != cin) {
        throw ShapeError("conv1d: weight " + weight.shape_str() +
                         " does not match input channels of " + input.shape_str());
    }
    const std::int64_t ot = t + 2 * pad - k + 1;
    if (ot < 1) {
        throw ShapeError("conv1d: kernel " + weight.shape_str() +
                         " longer than padded input " + input.shape_str());
    }
    Tensor out({cout, ot});
    const float* px = input.data();
    const float* pw = weight.data();
    float* po = out.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t co = 0; co < cout; ++co) {
        for (std::int64_t o = 0; o < ot; ++o) {
            double acc = 0.0;
            for (std::int64_t ci = 0; ci < cin; ++ci) {
                for (std::int64_t kk = 0; kk < k; ++kk) {
                    const std::int64_t it = o + kk - pad;
                    if (it < 0 || it >= t) continue;
                    acc += static_cast<double>(pw[(co * cin + ci) * k + kk]) *
                           static_cast<double>(px[ci * t + it]);
                }
            }
            po[co * ot + o] = static_cast<float>(acc);
        }
    }
    return out;
}

Tensor maxpool2d(const Tensor& input, std::int64_t k, std::int64_t stride) {
    require_rank(input, 3, "maxpool2d input");
    if (k < 1 || stride < 1) throw ArgumentError("maxpool2d: k and stride must be >= 1");
    const std::int64_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (h < k || w < k) {
        throw ShapeError("maxpool2d: window " + std::to_string(k) +
                         " exceeds input " + input.shape_str());
    }
    const std::int64_t oh = (h - k) / stride + 1;
    const std::int64_t ow = (w - k) / stride + 1;
    Tensor out({c, oh, ow});
    const float* px = input.data();
    float* po = out.data();
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t ci = 0; ci < c; ++ci) {
        for (std::int64_t oy = 0; oy < oh; ++oy) {
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                float best = px[(ci * h + oy * stride) * w + ox * stride];
                for (std::int64_t ky = 0; ky < k; ++ky) {
                    for (std::int64_t kx = 0; kx < k; ++kx) {
                        best = std::max(best, px[(ci * h + oy * stride + ky) * w +
                                                 ox * stride + kx]);
                    }
                }
                po[(ci * oh + oy) * ow + ox] = best;
            }
        }
    }
    return out;
}

Tensor batchnorm_infer(const Tensor& x, const Tensor& mean, const Tensor& var,
                       const Tensor& gamma, const Tensor& beta, double eps) {
    require_rank(x, 3, "batchnorm input");
    const std::int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    for (const auto* p : {&mean, &var, &gamma, &beta}) {
        if (p->rank() != 1 || p->dim(0) != c) {
            throw ShapeError("batchnorm: parameter " + p->shape_str() +
                             " does not match input " + x.shape_str());
        }
    }
    if (eps < 0.0) throw ArgumentError("batchnorm: eps must be >= 0");
    Tensor out({c, h, w});
    const float* px = x.data();
    float* po = out.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t ci = 0; ci < c; ++ci) {
        const double inv = 1.0 / std::sqrt(static_cast<double>(var.at(ci)) + eps);
        const double g = gamma.at(ci), b = beta.at(ci), m = mean.at(ci);
        for (std::int64_t i = 0; i < h * w; ++i) {
            po[ci * h * w + i] =
                static_cast<float>((px[ci * h * w + i] - m) * inv * g + b);
        }
    }
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out(x.shape());
    const float* px = x.data();
    float* po = out.data();
    const std::int64_t n = x.numel();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) po[i] = px[i] > 0.0f ? px[i] : 0.0f;
    return out;
}

Tensor sigmoid(const Tensor& x) {
    Tensor out(x.shape());
    const float* px = x.data();
    float* po = out.data();
    const std::int64_t n = x.numel();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        po[i] = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(px[i]))));
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("add: shapes disagree: " + a.shape_str() + " vs " +
                         b.shape_str());
    }
    Tensor out(a.shape());
    const float* pa = a.data();
    const float* pb = b.data();
    float* po = out.data();
    const std::int64_t n = a.numel();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
    return out;
}

Tensor scale(const Tensor& x, float s) {
    Tensor out(x.shape());
    const float* px = x.data();
    float* po = out.data();
    const std::int64_t n = x.numel();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) po[i] = px[i] * s;
    return out;
}

Tensor spatial_mean(const Tensor& x) {
    require_rank(x, 3, "spatial_mean input");
    const std::int64_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
    Tensor out({c});
    const float* px = x.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t ci = 0; ci < c; ++ci) {
        double acc = 0.0;
        for (std::int64_t i = 0; i < hw; ++i) acc += px[ci * hw + i];
        out.at(ci) = static_cast<float>(acc / static_cast<double>(hw));
    }
    return out;
}

}  // namespace ssdpulse
