#include "ssdpulse/stem.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "ssdpulse/kernels.hpp"

namespace ssdpulse {

void VideoClip::validate() const {
    if (data.rank() != 4 || data.dim(0) != 3) {
        throw ShapeError("clip must be [3xTxHxW], got " + data.shape_str());
    }
    if (data.dim(1) < 4) {
        throw ArgumentError("clip needs at least 4 frames, got " +
                            std::to_string(data.dim(1)));
    }
    if (data.dim(2) < 64 || data.dim(3) < 64) {
        throw ArgumentError("clip spatial dims must be >= 64, got " + data.shape_str());
    }
    if (!(fps > 0.0)) throw ArgumentError("clip fps must be > 0");
    for (std::int64_t i = 0; i < data.numel(); ++i) {
        const float v = data.data()[i];
        if (!(v >= 0.0f && v <= 1.0f)) {
            throw ArgumentError("clip values must lie in [0,1], found " +
                                std::to_string(v));
        }
    }
}

Tensor diff_frames(const VideoClip& clip) {
    if (clip.data.rank() != 4 || clip.data.dim(0) != 3) {
        throw ShapeError("diff_frames: clip must be [3xTxHxW], got " +
                         clip.data.shape_str());
    }
    const std::int64_t t = clip.data.dim(1);
    if (t < 2) throw ArgumentError("diff_frames: need at least 2 frames");
    const std::int64_t c = 3, h = clip.data.dim(2), w = clip.data.dim(3);
    const std::int64_t hw = h * w;
    Tensor out(clip.data.shape());
    const float* px = clip.data.data();
    float* po = out.data();
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t ci = 0; ci < c; ++ci) {
        for (std::int64_t ti = 0; ti < t; ++ti) {
            // last frame repeats the previous difference
            const std::int64_t a = (ti < t - 1) ? ti : t - 2;
            const float* f0 = px + (ci * t + a) * hw;
            const float* f1 = px + (ci * t + a + 1) * hw;
            float* d = po + (ci * t + ti) * hw;
            for (std::int64_t i = 0; i < hw; ++i) d[i] = f1[i] - f0[i];
        }
    }
    return out;
}

Tensor stem_block(const Tensor& x, const StemBlockParams& p) {
    if (x.rank() != 3) {
        throw ShapeError("stem_block: expected [CxHxW], got " + x.shape_str());
    }
    if (x.dim(1) < 2 || x.dim(2) < 2) {
        throw ShapeError("stem_block: spatial dims must be >= 2, got " + x.shape_str());
    }
    if (p.conv_w.rank() != 4 || p.conv_w.dim(2) != 7 || p.conv_w.dim(3) != 7) {
        throw ShapeError("stem_block: conv kernel must be [CoutxCinx7x7], got " +
                         p.conv_w.shape_str());
    }
    Tensor y = conv2d(x, p.conv_w, /*stride=*/1, /*pad=*/3);
    y = batchnorm_infer(y, p.bn_mean, p.bn_var, p.bn_gamma, p.bn_beta, p.bn_eps);
    y = relu(y);
    return maxpool2d(y, /*k=*/2, /*stride=*/2);
}

namespace {

// Runs a frame [Cin,H,W] through both stage-1 blocks.
Tensor stage1(const Tensor& frame, const StemBlockParams& a, const StemBlockParams& b) {
    return stem_block(stem_block(frame, a), b);
}

Tensor take_frame(const Tensor& video, std::int64_t t) {
    // [C,T,H,W] -> [C,H,W]
    const std::int64_t c = video.dim(0), tt = video.dim(1), h = video.dim(2),
                       w = video.dim(3);
    Tensor frame({c, h, w});
    for (std::int64_t ci = 0; ci < c; ++ci) {
        const float* src = video.data() + (ci * tt + t) * h * w;
        float* dst = frame.data() + ci * h * w;
        for (std::int64_t i = 0; i < h * w; ++i) dst[i] = src[i];
    }
    return frame;
}

void put_frame(Tensor& video, std::int64_t t, const Tensor& frame) {
    const std::int64_t c = video.dim(0), tt = video.dim(1), h = video.dim(2),
                       w = video.dim(3);
    for (std::int64_t ci = 0; ci < c; ++ci) {
        const float* src = frame.data() + ci * h * w;
        float* dst = video.data() + (ci * tt + t) * h * w;
        for (std::int64_t i = 0; i < h * w; ++i) dst[i] = src[i];
    }
}

}  // namespace

FuseResult fuse_stem(const VideoClip& clip, const StemParams& p) {
    clip.validate();
    const std::int64_t t = clip.frames();
    Tensor diff = diff_frames(clip);

    Tensor fused;  // [C, T, h, w], allocated after the first frame fixes dims
    for (std::int64_t ti = 0; ti < t; ++ti) {
        Tensor a = stage1(take_frame(clip.data, ti), p.s1_rgb_a, p.s1_rgb_b);
        Tensor b = stage1(take_frame(diff, ti), p.s1_diff_a, p.s1_diff_b);
        Tensor f = add(stem_block(a, p.s2), stem_block(add(a, b), p.s2));
        if (ti == 0) {
            fused = Tensor({f.dim(0), t, f.dim(1), f.dim(2)});
        }
        put_frame(fused, ti, f);
    }

    FuseResult res;
    res.dropped_trailing_frame = (t % 2 != 0);
    const std::int64_t tp = t / 2;
    const std::int64_t c = fused.dim(0), h = fused.dim(2), w = fused.dim(3);
    res.features = Tensor({c, tp, h, w});
    float* po = res.features.data();
    const float* pf = fused.data();
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t ci = 0; ci < c; ++ci) {
        for (std::int64_t ti = 0; ti < tp; ++ti) {
            const float* f0 = pf + (ci * t + 2 * ti) * h * w;
            const float* f1 = pf + (ci * t + 2 * ti + 1) * h * w;
            float* d = po + (ci * tp + ti) * h * w;
            for (std::int64_t i = 0; i < h * w; ++i) d[i] = 0.5f * (f0[i] + f1[i]);
        }
    }
    return res;
}

Tensor attention_mask(const Tensor& features, const Tensor& attn_conv_w,
                      bool use_sigmoid) {
    if (features.rank() != 4) {
        throw ShapeError("attention_mask: expected [CxT'xhxw], got " +
                         features.shape_str());
    }
    if (attn_conv_w.rank() != 4 || attn_conv_w.dim(0) != 1 ||
        attn_conv_w.dim(1) != features.dim(0) || attn_conv_w.dim(2) != 5 ||
        attn_conv_w.dim(3) != 5) {
        throw ShapeError("attention_mask: conv kernel " + attn_conv_w.shape_str() +
                         " does not match features " + features.shape_str());
    }
    const std::int64_t tp = features.dim(1), h = features.dim(2), w = features.dim(3);
    Tensor mask({1, tp, h, w});
    for (std::int64_t ti = 0; ti < tp; ++ti) {
        Tensor frame = take_frame(features, ti);
        Tensor m = conv2d(frame, attn_conv_w, /*stride=*/1, /*pad=*/2);  // [1,h,w]
        if (use_sigmoid) m = sigmoid(m);
        double l1 = 0.0;
        for (std::int64_t i = 0; i < h * w; ++i) {
            l1 += std::abs(static_cast<double>(m.data()[i]));
        }
        if (l1 == 0.0) {
            throw ArgumentError("attention_mask: raw conv output is all zero, "
                                "mask normalization undefined");
        }
        const double norm = static_cast<double>(h * w) / (2.0 * l1);
        float* dst = mask.data() + ti * h * w;
        for (std::int64_t i = 0; i < h * w; ++i) {
            dst[i] = static_cast<float>(static_cast<double>(m.data()[i]) * norm);
        }
    }
    return mask;
}

StemOutput frame_stem_forward(const VideoClip& clip, const StemParams& p) {
    FuseResult fused = fuse_stem(clip, p);
    Tensor mask = attention_mask(fused.features, p.attn_conv_w, p.mask_sigmoid);
    const std::int64_t c = fused.features.dim(0), tp = fused.features.dim(1),
                       h = fused.features.dim(2), w = fused.features.dim(3);
    StemOutput out;
    out.dropped_trailing_frame = fused.dropped_trailing_frame;
    out.tokens = Tensor({tp, c});
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t ti = 0; ti < tp; ++ti) {
        for (std::int64_t ci = 0; ci < c; ++ci) {
            const float* f = fused.features.data() + (ci * tp + ti) * h * w;
            const float* m = mask.data() + ti * h * w;
            double acc = 0.0;
            for (std::int64_t i = 0; i < h * w; ++i) {
                acc += static_cast<double>(f[i]) * static_cast<double>(m[i]);
            }
            out.tokens.at(ti, ci) = static_cast<float>(acc / static_cast<double>(h * w));
        }
    }
    return out;
}

}  // namespace ssdpulse
