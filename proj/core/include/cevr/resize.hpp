#pragma once

#include <vector>

#include "cevr/image.hpp"

namespace cevr {

enum class ResizeMethod { Bicubic, Bilinear };

// Interpolation weights for resampling one axis from `in_size` to `out_size`
// samples. Half-pixel centres (output i sits at (i + 0.5) * in/out - 0.5),
// replicated borders, cubic kernel with a = -0.75.
struct AxisResampler {
    struct Tap {
        int index;
        double weight;
    };

    int in_size = 0;
    int out_size = 0;
    // taps[i] lists the input samples contributing to output i.
    std::vector<std::vector<Tap>> taps;

    static AxisResampler make(int in_size, int out_size, ResizeMethod method);
};

double cubic_kernel(double t);

// Separable resize; any channel count. Output is not clamped.
Image resize(const Image& image, int target_h, int target_w,
             ResizeMethod method = ResizeMethod::Bicubic);

// Same as resize but clamps the result back into [0, 1].
LdrImage resize(const LdrImage& image, int target_h, int target_w,
                ResizeMethod method = ResizeMethod::Bicubic);

}  // namespace cevr
