#pragma once

#include "ssdpulse/tensor.hpp"

namespace ssdpulse {

// All kernels parallelize only over independent output elements and keep a
// fixed per-element summation order (64-bit accumulators, ascending index),
// so results are bit-identical for any thread count.

// C[m,n] = sum_k A[m,k] * B[k,n]; k ascends.
Tensor matmul(const Tensor& a, const Tensor& b);

// input [Cin,H,W], weight [Cout,Cin,kh,kw]. Zero padding. Output spatial dims
// must be integral or the call raises ShapeError.
Tensor conv2d(const Tensor& input, const Tensor& weight, std::int64_t stride,
              std::int64_t pad);

// input [C,T], weight [Cout,C,k]; stride 1, zero padding.
Tensor conv1d(const Tensor& input, const Tensor& weight, std::int64_t pad);

// input [C,H,W]; window k x k, square stride. Remainder rows/cols that do not
// fill a window are dropped.
Tensor maxpool2d(const Tensor& input, std::int64_t k, std::int64_t stride);

// Inference-mode batchnorm over channel dim of [C,H,W].
Tensor batchnorm_infer(const Tensor& x, const Tensor& mean, const Tensor& var,
                       const Tensor& gamma, const Tensor& beta, double eps);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, float s);

// Mean over the trailing two (spatial) dims of [C,H,W] -> [C].
Tensor spatial_mean(const Tensor& x);

}  // namespace ssdpulse
