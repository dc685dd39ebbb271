#include <benchmark/benchmark.h>

#include <random>

#include "cevr/experiments.hpp"
#include "cevr/fusion.hpp"
#include "cevr/metrics.hpp"
#include "cevr/model.hpp"
#include "cevr/nn/ops.hpp"
#include "cevr/synthetic.hpp"

using namespace cevr;

namespace {

nn::Tensor noise(nn::Shape s, std::uint64_t seed) {
    nn::Tensor t(s);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : t.data) v = u(rng);
    return t;
}

SyntheticScene scene(int size) { return generate_scene(11, {size, size, 2.2, 9.0, 0.02}); }

}  // namespace

static void BM_Conv3x3Backward(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const nn::Var x = nn::leaf(noise({16, side, side}, 1));
    const nn::Var w = nn::leaf(noise({16, 16, 9}, 2));
    const nn::Var b = nn::leaf(noise({16, 1, 1}, 3));
    const nn::Var zero = nn::constant(nn::Tensor({16, side, side}));
    for (auto _ : state) {
        nn::backward(nn::mean_abs_diff(nn::conv2d(x, w, b, 3), zero));
        benchmark::DoNotOptimize(w->grad.data());
    }
}
BENCHMARK(BM_Conv3x3Backward)->Arg(32)->Arg(64);

static void BM_ModelForward(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const ModelWeights w = init_weights(ModelConfig{}, Direction::Increase, 1);
    const LdrImage img = simulate_exposure(scene(side), EvStep(0.0), true);
    for (auto _ : state) benchmark::DoNotOptimize(forward(w, img, EvStep(1.5)));
}
BENCHMARK(BM_ModelForward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_SolveInverseCrf(benchmark::State& state) {
    const LdrStack st = simulate_stack(scene(64), experiments::integer_evs(), true);
    std::mt19937_64 rng(1);
    const PixelSamples samples = sample_pixels(st, static_cast<int>(state.range(0)), rng);
    for (auto _ : state) benchmark::DoNotOptimize(solve_inverse_crf(samples, 100.0));
}
BENCHMARK(BM_SolveInverseCrf)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_MergeRadiance(benchmark::State& state) {
    const LdrStack st = simulate_stack(scene(128), experiments::integer_evs(), true);
    const InverseCrf crf = InverseCrf::from_gamma(2.2);
    for (auto _ : state) benchmark::DoNotOptimize(merge_radiance(st, crf));
}
BENCHMARK(BM_MergeRadiance)->Unit(benchmark::kMillisecond);

static void BM_MsSsim(benchmark::State& state) {
    const SyntheticScene s = scene(static_cast<int>(state.range(0)));
    const LdrImage a = simulate_exposure(s, EvStep(0.0), true), b = simulate_exposure(s, EvStep(0.3), true);
    for (auto _ : state) benchmark::DoNotOptimize(ms_ssim(a, b));
}
BENCHMARK(BM_MsSsim)->Arg(176)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
