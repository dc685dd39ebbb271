#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "cevr/image.hpp"

namespace cevr {

// Triangle weight on 8-bit levels: z + 1 up to 127, 256 - z from 128.
double weight_hat(int z);

struct PixelSamples {
    std::vector<EvStep> evs;
    // (y, x) of each sample; identical for every exposure.
    std::vector<std::array<int, 2>> coords;
    // levels[c][i * evs.size() + j]: channel c, sample i, exposure j.
    std::array<std::vector<std::uint8_t>, 3> levels;

    std::size_t count() const noexcept { return coords.size(); }
    int level(int c, std::size_t i, std::size_t j) const { return levels[c][i * evs.size() + j]; }
};

// Smallest sample count that over-determines the least-squares system.
int min_samples_for(std::size_t exposures);

// Stratified over a grid of cells; inside each cell the candidate closest to
// mid-grey in the reference (EV 0, else middle) exposure wins, except that
// every fourth sample takes the darkest unclipped candidate.
PixelSamples sample_pixels(const LdrStack& stack, int n_samples, std::mt19937_64& rng);

struct InverseCrf {
    // g[c][z]: log exposure of level z, with g[c][128] = 0.
    std::array<std::array<double, 256>, 3> g{};
    double lambda_smooth = 0.0;
    int sample_count = 0;

    // g(z) = gamma * ln(z / 128); level 0 uses z = 0.5.
    static InverseCrf from_gamma(double gamma);

    // Log exposure of a level in [0, 1]. Between integer knots g is
    // interpolated linearly in ln z, which is exact for power-law curves.
    double log_exposure(int c, double value) const;

    double smoothness_energy(int c) const;
    double smoothness_energy() const;
    bool monotone(int c) const;
};

// Per channel, least squares over 256 g values and one log radiance per
// sample, anchored at g(128) = 0. Minimizes
//   (1/P) sum_ij [w(Z_ij)(g(Z_ij) - ln E_i - s_j ln 2)]^2 + lambda sum_z [w(z) g''(z)]^2
// for P exposures. Throws RankDeficient when the samples do
// not pin down the curve.
InverseCrf solve_inverse_crf(const PixelSamples& samples, double lambda_smooth = 100.0);

// Weighted average of g(Z) - s ln 2 over the stack. Levels at 0 or 1 carry no
// weight; pixels clipped everywhere take the exposure farthest from clipping.
RadianceMap merge_radiance(const LdrStack& stack, const InverseCrf& crf);

// level,g_r,g_g,g_b with 256 rows.
void write_crf_csv(const InverseCrf& crf, const std::filesystem::path& path);

}  // namespace cevr
