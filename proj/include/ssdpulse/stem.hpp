#pragma once

#include "ssdpulse/tensor.hpp"

namespace ssdpulse {

// Pre-cropped video clip, channels-first, pixel values in [0,1].
struct VideoClip {
    Tensor data;  // [3, T, H, W]
    double fps = 0.0;
    void validate() const;
    std::int64_t frames() const { return data.dim(1); }
    std::int64_t height() const { return data.dim(2); }
    std::int64_t width() const { return data.dim(3); }
};

// One stem block: 7x7 conv (stride 1, pad 3) -> batchnorm (inference) ->
// ReLU -> 2x2/2 maxpool. Halves spatial dims.
struct StemBlockParams {
    Tensor conv_w;  // [Cout, Cin, 7, 7]
    Tensor bn_mean, bn_var, bn_gamma, bn_beta;  // [Cout]
    double bn_eps = 1e-5;
};

// Stage 1 cascades two blocks (/4 overall), stage 2 adds one more (/2), so
// the fused map sits at H/8 x W/8. Stage 2 weights are shared between the
// raw and raw+diff branches.
struct StemParams {
    StemBlockParams s1_rgb_a, s1_rgb_b;
    StemBlockParams s1_diff_a, s1_diff_b;
    StemBlockParams s2;
    Tensor attn_conv_w;  // [1, C, 5, 5]
    bool mask_sigmoid = true;
};

// Forward differences over time with the last frame replicating the
// previous difference, so the output keeps the input length.
Tensor diff_frames(const VideoClip& clip);

Tensor stem_block(const Tensor& x, const StemBlockParams& p);

struct FuseResult {
    Tensor features;  // [C, T', H/8, W/8]
    bool dropped_trailing_frame = false;
};

// A = stage1(raw), B = stage1(diff); features = stage2(A) + stage2(A + B),
// then non-overlapping pairwise temporal averaging (T -> floor(T/2)).
FuseResult fuse_stem(const VideoClip& clip, const StemParams& p);

// Per frame: m = act(conv5x5(x)) with act = sigmoid (or identity when
// use_sigmoid is false); mask = (h*w) * m / (2 * ||m||_1). The spatial mass
// of every frame's mask is h*w/2.
Tensor attention_mask(const Tensor& features, const Tensor& attn_conv_w,
                      bool use_sigmoid);

struct StemOutput {
    Tensor tokens;  // [T', C]
    bool dropped_trailing_frame = false;
};

// fuse_stem -> attention mask multiply -> spatial average -> [T', C].
StemOutput frame_stem_forward(const VideoClip& clip, const StemParams& p);

}  // namespace ssdpulse
