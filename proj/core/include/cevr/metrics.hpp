#pragma once

#include <array>

#include "cevr/image.hpp"

namespace cevr {

inline constexpr double kPsnrCap = 100.0;
inline constexpr std::array<double, 5> kMsSsimWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

// 10 log10(1 / MSE) over all channels, capped at kPsnrCap.
double psnr(const LdrImage& a, const LdrImage& b);

struct SsimTerms {
    double ssim = 0.0;  // mean of l * c * s
    double cs = 0.0;    // mean of c * s
};

// Single-channel SSIM: 11x11 Gaussian window (sigma 1.5), K1 0.01, K2 0.03,
// range 1, averaged over windows that fit entirely inside the image.
SsimTerms ssim_terms(const Image& x, const Image& y);

// SSIM of the Rec. 709 lumas.
double ssim(const LdrImage& a, const LdrImage& b);

// Scales used for a given shorter side: up to 5, each scale's side (halved,
// rounding up) must still hold the 11x11 window. 0 when even the first fails.
int ms_ssim_scales(int shorter_side);

// Luma MS-SSIM. With fewer than 5 scales the leading weights are
// renormalized to sum to one. Negative per-scale terms are clamped to 0.
double ms_ssim(const LdrImage& a, const LdrImage& b);

// 2x2 box average; odd sides replicate the last row/column.
Image downsample2(const Image& image);

}  // namespace cevr
