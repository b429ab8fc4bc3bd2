#pragma once

#include <array>

#include "ssdpulse/tensor.hpp"

namespace ssdpulse {

// Four copies of the token sequence that tile into contiguous segments of
// geometrically shrinking length. Views share content; only the segment
// length (and hence where the scan state resets) differs.
struct MultiTemporalViews {
    std::array<Tensor, 4> views;        // each [Tp, C]
    std::array<std::int64_t, 4> segment_len{};
    std::int64_t original_len = 0;      // tokens before edge padding
    bool padded = false;
};

// Segment lengths [Tp, Tp/2, Tp/4, Tp/8]. Sequences whose length is not a
// multiple of 8 are edge-replicated up to one, recorded in `padded`.
MultiTemporalViews multi_temporal_views(const Tensor& tokens);

// Complex-linear channel mixing applied in the frequency domain.
struct FdfParams {
    Tensor w_re;  // [C, C]
    Tensor w_im;  // [C, C]
};

// Per-channel rfft over time, RE' = RE w_re - IM w_im and
// IM' = RE w_im + IM w_re across channels, irfft, plus the input residual.
Tensor fdf_forward(const Tensor& tokens, const FdfParams& p);

// Elementwise mean of the four processed views.
Tensor recombine_views(const MultiTemporalViews& processed);

}  // namespace ssdpulse
