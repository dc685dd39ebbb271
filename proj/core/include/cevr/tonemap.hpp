#pragma once

#include <optional>

#include "cevr/image.hpp"

namespace cevr {

// Rec. 709 luminance, single channel.
Image luminance(const RadianceMap& radiance);

struct ReinhardParams {
    double key = 0.18;
    // Unset: the largest scaled luminance of the image.
    std::optional<double> white;
    // Log-average guard, relative to the largest luminance.
    double delta = 1e-6;
    double gamma = 2.2;
};

struct KimKautzParams {
    double display_max = 300.0;
    double display_min = 0.3;
    double k1 = 1.6774;
    double k2 = 0.9925;
    // Display luminance (fraction of display_max) the log mean maps to.
    double key = 0.18;
    double gamma = 2.2;
};

// L_m (1 + L_m / white^2) / (1 + L_m)
double reinhard_curve(double scaled, double white);

// Linear display RGB before gamma and clamping; channel ratios C / L of the
// input are kept exactly.
Image reinhard_linear(const RadianceMap& radiance, const ReinhardParams& params = {});
Image kim_kautz_linear(const RadianceMap& radiance, const KimKautzParams& params = {});

// Gamma 1/gamma then clamp to [0, 1].
LdrImage display_encode(const Image& linear, double gamma = 2.2);

LdrImage reinhard_global(const RadianceMap& radiance, const ReinhardParams& params = {});
LdrImage kim_kautz(const RadianceMap& radiance, const KimKautzParams& params = {});

}  // namespace cevr
