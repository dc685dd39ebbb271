#pragma once

// Deliberately naive reference implementations shared by the unit and
// acceptance tests. Nothing here is vectorized or clever.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cevr/image.hpp"
#include "cevr/model.hpp"

namespace cevr::oracle {

inline double silu(double v) { return v / (1.0 + std::exp(-v)); }

// The implicit MLP evaluated on one feature vector and one scalar.
inline std::vector<double> implicit_mlp(const ModelWeights& w, const std::string& prefix,
                                        std::vector<double> x, double s) {
    x.push_back(s);
    for (int l = 0; l < w.config.mlp_depth; ++l) {
        const auto& W = w.params.get(prefix + ".l" + std::to_string(l) + ".weight")->value;
        const auto& b = w.params.get(prefix + ".l" + std::to_string(l) + ".bias")->value;
        const int out = W.shape.c, in = W.shape.h;
        std::vector<double> y(out);
        for (int o = 0; o < out; ++o) {
            double acc = b.data[o];
            for (int i = 0; i < in; ++i) acc += W.data[o * in + i] * x[i];
            y[o] = acc;
        }
        if (l + 1 < w.config.mlp_depth) {
            for (double& v : y) v = silu(v);
        }
        x = std::move(y);
    }
    return x;
}

// Mean absolute difference over every element, summed in index order.
inline double l1(const Image& a, const Image& b) {
    double acc = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        for (int y = 0; y < a.height(); ++y) {
            for (int x = 0; x < a.width(); ++x) acc += std::abs(a.at(c, y, x) - b.at(c, y, x));
        }
    }
    return acc / static_cast<double>(a.size());
}

inline double psnr(const Image& a, const Image& b) {
    double se = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        for (int y = 0; y < a.height(); ++y) {
            for (int x = 0; x < a.width(); ++x) {
                const double d = a.at(c, y, x) - b.at(c, y, x);
                se += d * d;
            }
        }
    }
    const double mse = se / static_cast<double>(a.size());
    if (mse == 0.0) return 100.0;
    return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

inline double luma_at(const Image& rgb, int y, int x) {
    return 0.2126 * rgb.at(0, y, x) + 0.7152 * rgb.at(1, y, x) + 0.0722 * rgb.at(2, y, x);
}

// Direct 2D Gaussian-window SSIM over every fully contained 11x11 window.
inline double ssim(const Image& a, const Image& b) {
    const int r = 5;
    double k[11][11];
    double total = 0.0;
    for (int i = -r; i <= r; ++i) {
        for (int j = -r; j <= r; ++j) {
            k[i + r][j + r] = std::exp(-(i * i + j * j) / (2 * 1.5 * 1.5));
            total += k[i + r][j + r];
        }
    }
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double acc = 0.0;
    int count = 0;
    for (int y = r; y + r < a.height(); ++y) {
        for (int x = r; x + r < a.width(); ++x) {
            double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
            for (int i = -r; i <= r; ++i) {
                for (int j = -r; j <= r; ++j) {
                    const double w = k[i + r][j + r] / total;
                    const double u = luma_at(a, y + i, x + j), v = luma_at(b, y + i, x + j);
                    mx += w * u;
                    my += w * v;
                    sxx += w * u * u;
                    syy += w * v * v;
                    sxy += w * u * v;
                }
            }
            const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
            acc += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    }
    return acc / count;
}

}  // namespace cevr::oracle
