#pragma once

#include <cstdint>
#include <vector>

#include "cevr/image.hpp"

namespace cevr {

// Power-law response v = X^(1/gamma); gamma = 1 is linear.
struct GammaCrf {
    double gamma = 2.2;

    double forward(double exposure) const;
    // Log exposure for a display level in (0, 1].
    double inverse_log(double level) const;
};

struct SyntheticScene {
    RadianceMap radiance;
    GammaCrf crf;
    double base_exposure = 1.0;
};

struct SceneOptions {
    int height = 96;
    int width = 96;
    double gamma = 2.2;
    // Approximate dynamic range of the generated radiance, in stops.
    double stops = 9.0;
    // Fraction of EV-0 pixels left saturated by the base exposure choice.
    double highlight_fraction = 0.02;
};

// Random HDR scene: smooth log-radiance blobs, oriented texture and a few
// bright sources, tinted per region. The base exposure puts the chosen
// upper quantile of EV-0 luminance at the clipping point.
SyntheticScene generate_scene(std::uint64_t seed, const SceneOptions& options = {});

// Exposure X = radiance * 2^s * base; pixel = clamp(crf(X), 0, 1); optional
// 8-bit quantization. EVs must be strictly increasing.
LdrStack simulate_stack(const SyntheticScene& scene, const std::vector<EvStep>& evs,
                        bool quantize);

LdrImage simulate_exposure(const SyntheticScene& scene, EvStep ev, bool quantize);

}  // namespace cevr
