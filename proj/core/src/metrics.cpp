#include "cevr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cevr/error.hpp"

namespace cevr {
namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_taps() {
    std::array<double, kWindow> t{};
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kWindow / 2;
        t[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        sum += t[i];
    }
    for (double& v : t) v /= sum;
    return t;
}

// Separable "valid" filtering of a single-channel plane.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w) {
    static const auto taps = gaussian_taps();
    const int oh = h - kWindow + 1, ow = w - kWindow + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) acc += taps[k] * src[static_cast<std::size_t>(y) * w + x + k];
            rows[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) acc += taps[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    return out;
}

}  // namespace

double psnr(const LdrImage& a, const LdrImage& b) {
    require(a.pixels().same_shape(b.pixels()), ErrorKind::DimensionMismatch, "psnr: image sizes differ");
    const auto x = a.pixels().values();
    const auto y = b.pixels().values();
    require(!x.empty(), ErrorKind::InvalidArgument, "psnr: empty images");
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sse += (x[i] - y[i]) * (x[i] - y[i]);
    const double mse = sse / static_cast<double>(x.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

SsimTerms ssim_terms(const Image& x, const Image& y) {
    require(x.same_shape(y), ErrorKind::DimensionMismatch, "ssim: image sizes differ");
    require(x.channels() == 1, ErrorKind::InvalidArgument, "ssim_terms expects single-channel images");
    const int h = x.height(), w = x.width();
    require(h >= kWindow && w >= kWindow, ErrorKind::InvalidArgument, "ssim: images smaller than the 11x11 window");
    const auto xv = x.values();
    const auto yv = y.values();
    const std::size_t n = xv.size();
    std::vector<double> a(xv.begin(), xv.end()), b(yv.begin(), yv.end()), aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const auto mu_a = filter_valid(a, h, w), mu_b = filter_valid(b, h, w);
    const auto e_aa = filter_valid(aa, h, w), e_bb = filter_valid(bb, h, w), e_ab = filter_valid(ab, h, w);
    double sum_ssim = 0.0, sum_cs = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double va = e_aa[i] - mu_a[i] * mu_a[i];
        const double vb = e_bb[i] - mu_b[i] * mu_b[i];
        const double cov = e_ab[i] - mu_a[i] * mu_b[i];
        const double cs = (2.0 * cov + kC2) / (va + vb + kC2);
        const double l = (2.0 * mu_a[i] * mu_b[i] + kC1) / (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kC1);
        sum_ssim += l * cs;
        sum_cs += cs;
    }
    const double count = static_cast<double>(mu_a.size());
    return {sum_ssim / count, sum_cs / count};
}

double ssim(const LdrImage& a, const LdrImage& b) {
    require(a.pixels().same_shape(b.pixels()), ErrorKind::DimensionMismatch, "ssim: image sizes differ");
    if (a == b) return 1.0;
    return ssim_terms(luma(a.pixels()), luma(b.pixels())).ssim;
}

int ms_ssim_scales(int shorter_side) {
    int scales = 0;
    for (int side = shorter_side; scales < 5 && side >= kWindow; side = (side + 1) / 2) ++scales;
    return scales;
}

Image downsample2(const Image& image) {
    const int h = image.height(), w = image.width();
    const int oh = (h + 1) / 2, ow = (w + 1) / 2;
    Image out(oh, ow, image.channels());
    for (int c = 0; c < image.channels(); ++c) {
        for (int y = 0; y < oh; ++y) {
            const int y0 = 2 * y, y1 = std::min(2 * y + 1, h - 1);
            for (int x = 0; x < ow; ++x) {
                const int x0 = 2 * x, x1 = std::min(2 * x + 1, w - 1);
                out.at(c, y, x) =
                    0.25 * (image.at(c, y0, x0) + image.at(c, y0, x1) + image.at(c, y1, x0) + image.at(c, y1, x1));
            }
        }
    }
    return out;
}

double ms_ssim(const LdrImage& a, const LdrImage& b) {
    require(a.pixels().same_shape(b.pixels()), ErrorKind::DimensionMismatch, "ms_ssim: image sizes differ");
    const int scales = ms_ssim_scales(std::min(a.height(), a.width()));
    require(scales >= 1, ErrorKind::InvalidArgument, "ms_ssim: images smaller than the 11x11 window");
    if (a == b) return 1.0;
    double weight_sum = 0.0;
    for (int m = 0; m < scales; ++m) weight_sum += kMsSsimWeights[m];

    Image x = luma(a.pixels()), y = luma(b.pixels());
    double result = 1.0;
    for (int m = 0; m < scales; ++m) {
        const SsimTerms t = ssim_terms(x, y);
        const double term = m + 1 == scales ? t.ssim : t.cs;
        result *= std::pow(std::max(term, 0.0), kMsSsimWeights[m] / weight_sum);
        if (m + 1 < scales) {
            x = downsample2(x);
            y = downsample2(y);
        }
    }
    return result;
}

}  // namespace cevr
