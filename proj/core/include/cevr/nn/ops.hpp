#pragma once

#include "cevr/nn/autograd.hpp"
#include "cevr/resize.hpp"

namespace cevr::nn {

// Zero-padded "same" convolution with stride 1. weight: {out, in, k*k},
// bias: {out, 1, 1}; k must be odd.
Var conv2d(const Var& x, const Var& weight, const Var& bias, int kernel);

// One layer of the per-location MLP applied to [x(p, q), s]:
// out(:, p, q) = W [x(:, p, q); s] + b with weight {out, in + 1, 1}.
// The last weight column multiplies the scalar s.
Var linear_with_scalar(const Var& x, const Var& s, const Var& weight, const Var& bias);

Var silu(const Var& x);
Var sigmoid(const Var& x);
Var exp(const Var& x);
// Clamp to [0, 1]; gradient passes only strictly inside the interval.
Var clamp01(const Var& x);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double factor);

Var max_pool2(const Var& x);
Var avg_pool2(const Var& x);
// Separable resampling to (h, w) with the same kernels as cevr::resize.
Var resample(const Var& x, int h, int w, ResizeMethod method = ResizeMethod::Bicubic);

Var concat_channels(const Var& a, const Var& b);
Var slice_channels(const Var& x, int begin, int count);

// Mean of |a - b| over every element, as a scalar node.
Var mean_abs_diff(const Var& a, const Var& b);

}  // namespace cevr::nn
