#include "cevr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cevr/error.hpp"
#include "cevr/io.hpp"

namespace cevr {

double GammaCrf::forward(double exposure) const {
    if (exposure <= 0.0) return 0.0;
    return std::pow(exposure, 1.0 / gamma);
}

double GammaCrf::inverse_log(double level) const { return gamma * std::log(level); }

SyntheticScene generate_scene(std::uint64_t seed, const SceneOptions& options) {
    require(options.height > 0 && options.width > 0, ErrorKind::InvalidArgument,
            "scene dimensions must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int h = options.height, w = options.width;
    const double diag = std::hypot(h, w);

    struct Blob {
        double cy, cx, sigma, amp;
        double tint[3];
    };
    std::vector<Blob> blobs(6);
    for (auto& b : blobs) {
        b.cy = unit(rng) * h;
        b.cx = unit(rng) * w;
        b.sigma = (0.08 + 0.25 * unit(rng)) * diag;
        b.amp = (unit(rng) - 0.5) * options.stops * 0.6;
        for (double& t : b.tint) t = (unit(rng) - 0.5) * 0.8;
    }
    struct Wave {
        double ky, kx, phase, amp;
    };
    std::vector<Wave> waves(3);
    for (auto& wv : waves) {
        const double angle = unit(rng) * std::numbers::pi;
        const double freq = (2.0 + 10.0 * unit(rng)) * 2.0 * std::numbers::pi / diag;
        wv.ky = std::sin(angle) * freq;
        wv.kx = std::cos(angle) * freq;
        wv.phase = unit(rng) * 2.0 * std::numbers::pi;
        wv.amp = 0.2 + 0.5 * unit(rng);
    }
    std::vector<Blob> sources(2);
    for (auto& s : sources) {
        s.cy = unit(rng) * h;
        s.cx = unit(rng) * w;
        s.sigma = (0.01 + 0.03 * unit(rng)) * diag;
        s.amp = options.stops * (0.35 + 0.2 * unit(rng));
        for (double& t : s.tint) t = (unit(rng) - 0.5) * 0.3;
    }

    Image log2_rad(h, w, 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double log2_base = 0.0;
            double tint[3] = {0.0, 0.0, 0.0};
            auto add_blob = [&](const Blob& b) {
                const double d2 = (y - b.cy) * (y - b.cy) + (x - b.cx) * (x - b.cx);
                const double g = std::exp(-d2 / (2.0 * b.sigma * b.sigma));
                log2_base += b.amp * g;
                for (int c = 0; c < 3; ++c) tint[c] += b.tint[c] * g;
            };
            for (const auto& b : blobs) add_blob(b);
            for (const auto& s : sources) add_blob(s);
            for (const auto& wv : waves) {
                log2_base += wv.amp * std::sin(wv.ky * y + wv.kx * x + wv.phase);
            }
            // Hard-edged step so scenes contain sharp structure as well.
            if ((x + y / 2) % 29 < 3) log2_base -= 0.8;
            for (int c = 0; c < 3; ++c) log2_rad.at(c, y, x) = log2_base + tint[c];
        }
    }

    // The random terms only roughly set the span; stretch it to exactly
    // options.stops so every scene has both deep shadows and highlights.
    const auto [lo_it, hi_it] = std::minmax_element(log2_rad.values().begin(), log2_rad.values().end());
    const double lo = *lo_it, span = *hi_it - *lo_it;
    const double stretch = span > 0.0 ? options.stops / span : 1.0;
    Image rad(h, w, 3);
    auto src = log2_rad.values();
    auto dst = rad.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::exp2((src[i] - lo) * stretch);

    const Image lum = luma(rad);
    std::vector<double> sorted(lum.values().begin(), lum.values().end());
    const double q = std::clamp(1.0 - options.highlight_fraction, 0.0, 1.0);
    const auto k = static_cast<std::size_t>(q * (sorted.size() - 1));
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());

    SyntheticScene scene;
    scene.radiance = RadianceMap(std::move(rad));
    scene.crf = GammaCrf{options.gamma};
    scene.base_exposure = 1.0 / sorted[k];
    return scene;
}

LdrImage simulate_exposure(const SyntheticScene& scene, EvStep ev, bool quantize) {
    const Image& rad = scene.radiance.pixels();
    Image out(rad.height(), rad.width(), 3);
    const double gain = std::exp2(ev.value()) * scene.base_exposure;
    auto src = rad.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        double v = std::clamp(scene.crf.forward(src[i] * gain), 0.0, 1.0);
        if (quantize) v = quantize_level(v) / 255.0;
        dst[i] = v;
    }
    return LdrImage(std::move(out));
}

LdrStack simulate_stack(const SyntheticScene& scene, const std::vector<EvStep>& evs,
                        bool quantize) {
    require(!evs.empty(), ErrorKind::InvalidArgument, "simulate_stack needs at least one EV");
    for (std::size_t i = 1; i < evs.size(); ++i) {
        require(evs[i - 1] < evs[i], ErrorKind::InvalidArgument,
                "simulate_stack EVs must be strictly increasing");
    }
    std::vector<StackEntry> entries;
    entries.reserve(evs.size());
    for (EvStep ev : evs) entries.push_back({simulate_exposure(scene, ev, quantize), ev});
    return LdrStack(std::move(entries));
}

}  // namespace cevr
