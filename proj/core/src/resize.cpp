#include "cevr/resize.hpp"

#include <algorithm>
#include <cmath>

#include "cevr/error.hpp"

namespace cevr {

double cubic_kernel(double t) {
    constexpr double a = -0.75;
    t = std::abs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

AxisResampler AxisResampler::make(int in_size, int out_size, ResizeMethod method) {
    require(in_size > 0 && out_size > 0, ErrorKind::InvalidArgument,
            "resize dimensions must be positive");
    AxisResampler r;
    r.in_size = in_size;
    r.out_size = out_size;
    r.taps.resize(out_size);
    const double scale = static_cast<double>(in_size) / out_size;
    for (int i = 0; i < out_size; ++i) {
        auto& taps = r.taps[i];
        if (in_size == out_size) {
            taps.push_back({i, 1.0});
            continue;
        }
        const double src = (i + 0.5) * scale - 0.5;
        const int base = static_cast<int>(std::floor(src));
        const double frac = src - base;
        auto add = [&](int idx, double w) {
            idx = std::clamp(idx, 0, in_size - 1);
            for (auto& t : taps) {
                if (t.index == idx) {
                    t.weight += w;
                    return;
                }
            }
            taps.push_back({idx, w});
        };
        if (method == ResizeMethod::Bilinear) {
            add(base, 1.0 - frac);
            add(base + 1, frac);
        } else {
            for (int k = -1; k <= 2; ++k) add(base + k, cubic_kernel(frac - k));
        }
    }
    return r;
}

Image resize(const Image& image, int target_h, int target_w, ResizeMethod method) {
    require(target_h > 0 && target_w > 0, ErrorKind::InvalidArgument,
            "resize target dimensions must be positive");
    if (target_h == image.height() && target_w == image.width()) return image;
    const auto rx = AxisResampler::make(image.width(), target_w, method);
    const auto ry = AxisResampler::make(image.height(), target_h, method);

    Image tmp(image.height(), target_w, image.channels());
    for (int c = 0; c < image.channels(); ++c) {
        for (int y = 0; y < image.height(); ++y) {
            for (int x = 0; x < target_w; ++x) {
                double acc = 0.0;
                for (const auto& t : rx.taps[x]) acc += t.weight * image.at(c, y, t.index);
                tmp.at(c, y, x) = acc;
            }
        }
    }
    Image out(target_h, target_w, image.channels());
    for (int c = 0; c < image.channels(); ++c) {
        for (int y = 0; y < target_h; ++y) {
            for (int x = 0; x < target_w; ++x) {
                double acc = 0.0;
                for (const auto& t : ry.taps[y]) acc += t.weight * tmp.at(c, t.index, x);
                out.at(c, y, x) = acc;
            }
        }
    }
    return out;
}

LdrImage resize(const LdrImage& image, int target_h, int target_w, ResizeMethod method) {
    return LdrImage::clamped(resize(image.pixels(), target_h, target_w, method));
}

}  // namespace cevr
