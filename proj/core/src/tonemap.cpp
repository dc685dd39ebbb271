#include "cevr/tonemap.hpp"

#include <algorithm>
#include <cmath>

#include "cevr/error.hpp"

namespace cevr {
namespace {

Image with_luminance(const RadianceMap& radiance, const Image& lum, const Image& target) {
    Image out(radiance.height(), radiance.width(), 3);
    for (int c = 0; c < 3; ++c) {
        const auto src = radiance.pixels().plane(c);
        auto dst = out.plane(c);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] / lum.values()[i] * target.values()[i];
    }
    return out;
}

}  // namespace

Image luminance(const RadianceMap& radiance) { return luma(radiance.pixels()); }

double reinhard_curve(double scaled, double white) {
    return scaled * (1.0 + scaled / (white * white)) / (1.0 + scaled);
}

Image reinhard_linear(const RadianceMap& radiance, const ReinhardParams& params) {
    require(params.key > 0.0 && params.delta >= 0.0, ErrorKind::InvalidArgument, "reinhard: key must be > 0");
    require(!params.white || *params.white > 0.0, ErrorKind::InvalidArgument, "reinhard: white must be > 0");
    const Image lum = luminance(radiance);
    const auto l = lum.values();
    const double delta = params.delta * *std::max_element(l.begin(), l.end());
    double log_sum = 0.0;
    for (double v : l) log_sum += std::log(delta + v);
    const double log_avg = std::exp(log_sum / static_cast<double>(l.size()));

    Image scaled = lum;
    for (double& v : scaled.values()) v = params.key * v / log_avg;
    const auto sv = scaled.values();
    const double white = params.white ? *params.white : *std::max_element(sv.begin(), sv.end());
    Image display = scaled;
    for (double& v : display.values()) v = reinhard_curve(v, white);
    return with_luminance(radiance, lum, display);
}

Image kim_kautz_linear(const RadianceMap& radiance, const KimKautzParams& p) {
    require(p.display_max > p.display_min && p.display_min > 0.0, ErrorKind::InvalidArgument,
            "kim_kautz: need display_max > display_min > 0");
    require(p.key > 0.0 && p.key < 1.0 && p.k1 > 0.0 && p.k2 > 0.0, ErrorKind::InvalidArgument,
            "kim_kautz: key in (0, 1) and positive k1, k2 required");
    const Image lum = luminance(radiance);
    Image logl = lum;
    for (double& v : logl.values()) v = std::log(v);
    const auto ll = logl.values();
    const double n = static_cast<double>(ll.size());
    double mean = 0.0;
    for (double v : ll) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : ll) var += (v - mean) * (v - mean);
    const double sigma = std::sqrt(var / n);

    // Contrast: bring the log-luminance spread to a fixed share of the
    // display's log range, never expanding beyond k2.
    const double display_range = std::log(p.display_max / p.display_min);
    const double target_sigma = display_range / (4.0 * p.k1);
    const double k = sigma > 1e-12 ? std::min(p.k2, target_sigma / sigma) : p.k2;

    // Soft clamp to the display range around the anchor, with separate
    // headroom above and below so the curve stays smooth at the anchor.
    const double anchor = std::log(p.key * p.display_max);
    const double head_up = std::log(p.display_max) - anchor;
    const double head_down = anchor - std::log(p.display_min);

    Image display = logl;
    for (double& v : display.values()) {
        const double x = k * (v - mean);
        const double h = x >= 0.0 ? head_up : head_down;
        v = std::exp(anchor + h * std::tanh(x / h)) / p.display_max;
    }
    return with_luminance(radiance, lum, display);
}

LdrImage display_encode(const Image& linear, double gamma) {
    require(gamma > 0.0, ErrorKind::InvalidArgument, "display gamma must be positive");
    Image out = linear;
    for (double& v : out.values()) v = std::pow(std::clamp(v, 0.0, 1.0), 1.0 / gamma);
    return LdrImage(std::move(out));
}

LdrImage reinhard_global(const RadianceMap& radiance, const ReinhardParams& params) {
    return display_encode(reinhard_linear(radiance, params), params.gamma);
}

LdrImage kim_kautz(const RadianceMap& radiance, const KimKautzParams& params) {
    return display_encode(kim_kautz_linear(radiance, params), params.gamma);
}

}  // namespace cevr
