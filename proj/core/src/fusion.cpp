#include "cevr/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseQR>

#include "cevr/error.hpp"
#include "cevr/io.hpp"

namespace cevr {

double weight_hat(int z) {
    require(z >= 0 && z <= 255, ErrorKind::InvalidArgument, "weight_hat: level outside [0, 255]");
    return z <= 127 ? z + 1.0 : 256.0 - z;
}

int min_samples_for(std::size_t exposures) {
    require(exposures >= 2, ErrorKind::InvalidArgument, "CRF recovery needs at least 2 exposures");
    const auto p = static_cast<int>(exposures);
    return (255 + p - 2) / (p - 1);
}

PixelSamples sample_pixels(const LdrStack& stack, int n_samples, std::mt19937_64& rng) {
    require(stack.size() >= 2, ErrorKind::InvalidArgument, "sample_pixels: stack needs at least 2 exposures");
    const int need = min_samples_for(stack.size());
    require(n_samples >= need, ErrorKind::InvalidArgument,
            "sample_pixels: " + std::to_string(n_samples) + " samples cannot determine the curve; need at least " +
                std::to_string(need) + " for " + std::to_string(stack.size()) + " exposures");
    const int h = stack.height(), w = stack.width();
    require(static_cast<long long>(n_samples) <= static_cast<long long>(h) * w, ErrorKind::InvalidArgument,
            "sample_pixels: more samples than pixels");

    const StackEntry* ref = stack.reference();
    const Image ref_luma = luma((ref ? *ref : stack[stack.size() / 2]).image.pixels());

    const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_samples))));
    std::vector<int> cells(static_cast<std::size_t>(grid) * grid);
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int>(i);
    std::shuffle(cells.begin(), cells.end(), rng);

    PixelSamples out;
    out.evs = stack.evs();
    constexpr int kCandidates = 4;
    std::vector<char> taken(static_cast<std::size_t>(h) * w, 0);
    for (int cell : cells) {
        if (static_cast<int>(out.coords.size()) == n_samples) break;
        const int gy = cell / grid, gx = cell % grid;
        const int y0 = h * gy / grid, y1 = std::max(y0 + 1, h * (gy + 1) / grid);
        const int x0 = w * gx / grid, x1 = std::max(x0 + 1, w * (gx + 1) / grid);
        std::uniform_int_distribution<int> dy(y0, std::min(y1, h) - 1), dx(x0, std::min(x1, w) - 1);
        // Every fourth sample takes the darkest unclipped candidate instead:
        // mid-tones alone leave the lowest levels without data once the
        // shortest exposure is reached.
        const bool shadow = out.coords.size() % 4 == 3;
        int best_y = -1, best_x = -1;
        double best = 2.0;
        for (int k = 0; k < kCandidates; ++k) {
            const int y = dy(rng), x = dx(rng);
            if (taken[static_cast<std::size_t>(y) * w + x]) continue;
            const double v = ref_luma.at(0, y, x);
            const double d = shadow ? (v > 0.5 / 255.0 ? v : 1.5) : std::abs(v - 0.5);
            if (d < best) best = d, best_y = y, best_x = x;
        }
        if (best_y < 0) continue;
        taken[static_cast<std::size_t>(best_y) * w + best_x] = 1;
        out.coords.push_back({best_y, best_x});
    }
    // Small images can leave cells empty; top up with unused pixels.
    while (static_cast<int>(out.coords.size()) < n_samples) {
        std::uniform_int_distribution<int> dy(0, h - 1), dx(0, w - 1);
        const int y = dy(rng), x = dx(rng);
        if (taken[static_cast<std::size_t>(y) * w + x]) continue;
        taken[static_cast<std::size_t>(y) * w + x] = 1;
        out.coords.push_back({y, x});
    }

    const std::size_t p = stack.size();
    for (int c = 0; c < 3; ++c) {
        auto& lv = out.levels[c];
        lv.resize(out.coords.size() * p);
        for (std::size_t i = 0; i < out.coords.size(); ++i) {
            for (std::size_t j = 0; j < p; ++j) {
                lv[i * p + j] = quantize_level(stack[j].image.at(c, out.coords[i][0], out.coords[i][1]));
            }
        }
    }
    return out;
}

InverseCrf InverseCrf::from_gamma(double gamma) {
    require(gamma > 0.0, ErrorKind::InvalidArgument, "gamma must be positive");
    InverseCrf crf;
    for (int c = 0; c < 3; ++c) {
        for (int z = 0; z < 256; ++z) crf.g[c][z] = gamma * std::log((z == 0 ? 0.5 : z) / 128.0);
    }
    return crf;
}

double InverseCrf::log_exposure(int c, double value) const {
    const double z = std::clamp(value * 255.0, 0.5, 255.0);
    const int k = std::clamp(static_cast<int>(z), 1, 254);
    const double lk = std::log(static_cast<double>(k));
    const double t = (std::log(z) - lk) / (std::log(k + 1.0) - lk);
    return g[c][k] + t * (g[c][k + 1] - g[c][k]);
}

double InverseCrf::smoothness_energy(int c) const {
    double e = 0.0;
    for (int z = 1; z < 255; ++z) {
        const double d2 = g[c][z - 1] - 2.0 * g[c][z] + g[c][z + 1];
        e += d2 * d2;
    }
    return e;
}

double InverseCrf::smoothness_energy() const {
    return smoothness_energy(0) + smoothness_energy(1) + smoothness_energy(2);
}

bool InverseCrf::monotone(int c) const {
    for (int z = 1; z < 256; ++z) {
        if (g[c][z] < g[c][z - 1]) return false;
    }
    return true;
}

InverseCrf solve_inverse_crf(const PixelSamples& samples, double lambda_smooth) {
    require(lambda_smooth >= 0.0 && std::isfinite(lambda_smooth), ErrorKind::InvalidArgument,
            "lambda_smooth must be finite and >= 0");
    const std::size_t n = samples.count();
    const std::size_t p = samples.evs.size();
    require(p >= 2 && n >= static_cast<std::size_t>(min_samples_for(p)), ErrorKind::InvalidArgument,
            "solve_inverse_crf: too few samples to over-determine the system");

    InverseCrf crf;
    crf.lambda_smooth = lambda_smooth;
    crf.sample_count = static_cast<int>(n);
    const double smooth = std::sqrt(lambda_smooth);
    // The data term is averaged over exposures so lambda weighs the same
    // against it for any stack size.
    const double data_scale = 1.0 / std::sqrt(static_cast<double>(p));
    const auto cols = static_cast<Eigen::Index>(256 + n);
    const auto rows = static_cast<Eigen::Index>(n * p + 1 + 254);

    for (int c = 0; c < 3; ++c) {
        std::vector<char> seen(256, 0);
        for (std::uint8_t z : samples.levels[c]) seen[z] = 1;
        const int interior = static_cast<int>(std::count(seen.begin() + 1, seen.end() - 1, 1));
        require(interior >= 2, ErrorKind::RankDeficient,
                "solve_inverse_crf: samples of channel " + std::to_string(c) +
                    " are clipped or constant; the response cannot be recovered");

        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(n * p * 2 + 1 + 254 * 3);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
        Eigen::Index r = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p; ++j, ++r) {
                const int z = samples.level(c, i, j);
                const double wz = data_scale * weight_hat(z);
                trip.emplace_back(r, z, wz);
                trip.emplace_back(r, static_cast<Eigen::Index>(256 + i), -wz);
                b[r] = wz * samples.evs[j].value() * std::numbers::ln2;
            }
        }
        trip.emplace_back(r++, 128, 1.0);
        for (int z = 1; z < 255; ++z, ++r) {
            const double wz = smooth * weight_hat(z);
            trip.emplace_back(r, z - 1, wz);
            trip.emplace_back(r, z, -2.0 * wz);
            trip.emplace_back(r, z + 1, wz);
        }
        Eigen::SparseMatrix<double> a(rows, cols);
        a.setFromTriplets(trip.begin(), trip.end());
        a.makeCompressed();
        // QR of the system itself; normal equations would square its
        // condition number and misreport rank under heavy smoothing.
        Eigen::SparseQR<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> qr(a);
        require(qr.info() == Eigen::Success && qr.rank() == cols, ErrorKind::RankDeficient,
                "solve_inverse_crf: least-squares system is rank deficient");
        const Eigen::VectorXd x = qr.solve(b);
        for (int z = 0; z < 256; ++z) crf.g[c][z] = x[z] - x[128];
        for (int z = 0; z < 256; ++z) {
            require(std::isfinite(crf.g[c][z]), ErrorKind::RankDeficient, "solve_inverse_crf: non-finite solution");
        }
    }
    return crf;
}

RadianceMap merge_radiance(const LdrStack& stack, const InverseCrf& crf) {
    require(!stack.empty(), ErrorKind::InvalidArgument, "merge_radiance: empty stack");
    const int h = stack.height(), w = stack.width();
    const std::size_t p = stack.size();
    std::vector<double> shift(p);
    for (std::size_t j = 0; j < p; ++j) shift[j] = stack[j].ev.value() * std::numbers::ln2;

    Image out(h, w, 3);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double num = 0.0, den = 0.0;
                std::size_t fallback = 0;
                double margin = -1.0;
                for (std::size_t j = 0; j < p; ++j) {
                    const double v = stack[j].image.at(c, y, x);
                    const double m = std::min(v, 1.0 - v);
                    if (m > margin) margin = m, fallback = j;
                    if (v <= 0.0 || v >= 1.0) continue;
                    const double wz = weight_hat(quantize_level(v));
                    num += wz * (crf.log_exposure(c, v) - shift[j]);
                    den += wz;
                }
                const double log_e = den > 0.0
                                         ? num / den
                                         : crf.log_exposure(c, stack[fallback].image.at(c, y, x)) - shift[fallback];
                out.at(c, y, x) = std::exp(log_e);
            }
        }
    }
    return RadianceMap(std::move(out));
}

void write_crf_csv(const InverseCrf& crf, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::IoFailure, "cannot write " + path.string());
    out << "level,g_r,g_g,g_b\n";
    char buf[128];
    for (int z = 0; z < 256; ++z) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g\n", z, crf.g[0][z], crf.g[1][z], crf.g[2][z]);
        out << buf;
    }
    if (!out) fail(ErrorKind::IoFailure, "failed writing " + path.string());
}

}  // namespace cevr
