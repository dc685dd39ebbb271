#include "cevr/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>

#include "cevr/error.hpp"
#include "cevr/metrics.hpp"
#include "cevr/stack.hpp"

namespace cevr::experiments {

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string Table::to_csv() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

void Table::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::IoFailure, "cannot write " + path.string());
    out << to_csv();
    if (!out) fail(ErrorKind::IoFailure, "failed writing " + path.string());
}

std::vector<SyntheticScene> make_scenes(std::uint64_t first_seed, int count, int size, double gamma) {
    require(count >= 1 && size >= 16, ErrorKind::InvalidArgument, "make_scenes: need count >= 1 and size >= 16");
    SceneOptions opts;
    opts.height = opts.width = size;
    opts.gamma = gamma;
    std::vector<SyntheticScene> out;
    for (int i = 0; i < count; ++i) out.push_back(generate_scene(first_seed + static_cast<std::uint64_t>(i), opts));
    return out;
}

std::vector<EvStep> integer_evs() { return preset_evs(StackMode::Predefined); }

std::vector<TrainingScene> training_scenes(const std::vector<SyntheticScene>& scenes,
                                           const std::vector<EvStep>& evs, Direction direction) {
    std::vector<TrainingScene> out;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        TrainingScene t{"scene" + std::to_string(i), simulate_exposure(scenes[i], EvStep(0.0), true), {}};
        for (EvStep ev : evs) {
            if (ev.value() == 0.0 || (ev.value() > 0.0) != (direction == Direction::Increase)) continue;
            t.targets.push_back({simulate_exposure(scenes[i], ev, true), ev});
        }
        out.push_back(std::move(t));
    }
    return out;
}

double mean_prediction_psnr(const ModelWeights& w, const std::vector<SyntheticScene>& scenes, EvStep ev) {
    double sum = 0.0;
    for (const auto& s : scenes) {
        const LdrImage input = simulate_exposure(s, EvStep(0.0), true);
        sum += psnr(forward(w, input, ev), simulate_exposure(s, ev, true));
    }
    return sum / static_cast<double>(scenes.size());
}

double mean_identity_psnr(const std::vector<SyntheticScene>& scenes, EvStep ev) {
    double sum = 0.0;
    for (const auto& s : scenes) {
        sum += psnr(simulate_exposure(s, EvStep(0.0), true), simulate_exposure(s, ev, true));
    }
    return sum / static_cast<double>(scenes.size());
}

double hdr_log_psnr(const RadianceMap& estimate, const RadianceMap& truth) {
    require(estimate.pixels().same_shape(truth.pixels()), ErrorKind::DimensionMismatch,
            "hdr_log_psnr: radiance sizes differ");
    const auto e = estimate.pixels().values();
    const auto t = truth.pixels().values();
    const double n = static_cast<double>(e.size());
    double offset = 0.0;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double lt = std::log(t[i]);
        offset += std::log(e[i]) - lt;
        lo = std::min(lo, lt);
        hi = std::max(hi, lt);
    }
    offset /= n;
    double mse = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double d = std::log(e[i]) - offset - std::log(t[i]);
        mse += d * d;
    }
    mse /= n;
    const double peak = std::max(hi - lo, 1e-12);
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

std::uint64_t train_seed(const Options& o) { return o.seed * 1000; }
std::uint64_t eval_seed(const Options& o) { return o.seed * 1000 + 500; }

namespace {

std::vector<EvStep> evenly_spaced(int count) {
    std::vector<EvStep> evs;
    for (int i = 0; i < count; ++i) evs.emplace_back(-3.0 + 6.0 * i / (count - 1));
    return evs;
}

InverseCrf recover(const LdrStack& stack, const Options& o, std::uint64_t salt) {
    std::mt19937_64 rng(o.seed * 7919 + salt);
    return solve_inverse_crf(sample_pixels(stack, o.crf_samples, rng), o.lambda_smooth);
}

ModelWeights train_variant(const Options& o, const std::vector<SyntheticScene>& scenes, Direction direction,
                           bool transform, double lambda, const std::vector<EvStep>& excluded,
                           const EpochCallback& progress) {
    TrainConfig cfg = o.train;
    cfg.direction = direction;
    cfg.lambda_cycle = lambda;
    cfg.model.use_intensity_transform = transform;
    cfg.excluded_evs = excluded;
    return train(training_scenes(scenes, integer_evs(), direction), cfg, progress).weights;
}

}  // namespace

std::vector<DenseStackRow> run_dense_stack(const Options& o) {
    const auto scenes = make_scenes(eval_seed(o), o.eval_scenes, o.image_size, o.gamma);
    std::vector<DenseStackRow> rows;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        for (int count : {3, 7, 13}) {
            const LdrStack stack = simulate_stack(scenes[i], evenly_spaced(count), true);
            const InverseCrf crf = recover(stack, o, i);
            const RadianceMap merged = merge_radiance(stack, crf);
            rows.push_back({static_cast<int>(i), count, hdr_log_psnr(merged, scenes[i].radiance),
                            crf.smoothness_energy()});
        }
    }
    return rows;
}

Table dense_stack_table(const std::vector<DenseStackRow>& rows) {
    Table t{{"scene", "exposures", "hdr_log_psnr", "smoothness_energy"}, {}};
    for (const auto& r : rows) {
        t.rows.push_back({std::to_string(r.scene), std::to_string(r.exposures), format_number(r.hdr_psnr),
                          format_number(r.smoothness)});
    }
    return t;
}

std::vector<AblationRow> run_ablation(const Options& o, bool stack_rows, const EpochCallback& progress) {
    const auto train_set = make_scenes(train_seed(o), o.train_scenes, o.image_size, o.gamma);
    const auto eval_set = make_scenes(eval_seed(o), o.eval_scenes, o.image_size, o.gamma);
    const double lambda = o.train.lambda_cycle > 0.0 ? o.train.lambda_cycle : 0.1;
    const EvStep ev3(3.0);

    std::vector<AblationRow> rows;
    const ModelWeights plain = train_variant(o, train_set, Direction::Increase, false, 0.0, {}, progress);
    rows.push_back({"baseline", false, false, false, "psnr_ev+3", mean_prediction_psnr(plain, eval_set, ev3)});
    const ModelWeights affine = train_variant(o, train_set, Direction::Increase, true, 0.0, {}, progress);
    rows.push_back({"+intensity", true, false, false, "psnr_ev+3", mean_prediction_psnr(affine, eval_set, ev3)});
    const ModelWeights full = train_variant(o, train_set, Direction::Increase, true, lambda, {}, progress);
    rows.push_back({"+cycle", true, true, false, "psnr_ev+3", mean_prediction_psnr(full, eval_set, ev3)});

    if (stack_rows) {
        const ModelWeights full_dec = train_variant(o, train_set, Direction::Decrease, true, lambda, {}, progress);
        for (StackMode mode : {StackMode::Predefined, StackMode::Continuous}) {
            double sum = 0.0;
            for (std::size_t i = 0; i < eval_set.size(); ++i) {
                const LdrImage input = simulate_exposure(eval_set[i], EvStep(0.0), true);
                const LdrStack stack = generate_stack(&full, &full_dec, input, preset_evs(mode));
                sum += hdr_log_psnr(merge_radiance(stack, recover(stack, o, i)), eval_set[i].radiance);
            }
            rows.push_back({mode == StackMode::Predefined ? "+cycle/predefined-stack" : "+cycle/continuous-stack",
                            true, true, mode == StackMode::Continuous, "hdr_log_psnr",
                            sum / static_cast<double>(eval_set.size())});
        }
    }
    return rows;
}

Table ablation_table(const std::vector<AblationRow>& rows) {
    Table t{{"variant", "intensity_transform", "cycle", "continuous_stack", "metric", "value"}, {}};
    for (const auto& r : rows) {
        t.rows.push_back({r.variant, r.intensity_transform ? "1" : "0", r.cycle ? "1" : "0",
                          r.continuous_stack ? "1" : "0", r.metric, format_number(r.value)});
    }
    return t;
}

std::vector<HoldOutRow> run_hold_out(const Options& o, const EpochCallback& progress) {
    const auto train_set = make_scenes(train_seed(o), o.train_scenes, o.image_size, o.gamma);
    const auto eval_set = make_scenes(eval_seed(o), o.eval_scenes, o.image_size, o.gamma);
    const double lambda = o.train.lambda_cycle > 0.0 ? o.train.lambda_cycle : 0.1;
    const std::vector<EvStep> held{EvStep(-1.0), EvStep(1.0)};

    std::vector<HoldOutRow> rows;
    for (const auto& [name, lam] : {std::pair<const char*, double>{"no-cycle", 0.0}, {"cycle", lambda}}) {
        for (Direction d : {Direction::Decrease, Direction::Increase}) {
            const ModelWeights w = train_variant(o, train_set, d, true, lam, held, progress);
            const EvStep ev(d == Direction::Increase ? 1.0 : -1.0);
            rows.push_back({name, ev, mean_prediction_psnr(w, eval_set, ev)});
        }
    }
    return rows;
}

Table hold_out_table(const std::vector<HoldOutRow>& rows) {
    Table t{{"variant", "ev", "psnr"}, {}};
    for (const auto& r : rows) t.rows.push_back({r.variant, format_ev(r.ev), format_number(r.psnr)});
    return t;
}

CrfCurveResult run_crf_curve(const Options& o) {
    const auto scene = make_scenes(eval_seed(o), 1, o.image_size, o.gamma).front();
    CrfCurveResult r;
    r.predefined = recover(simulate_stack(scene, preset_evs(StackMode::Predefined), true), o, 0);
    r.continuous = recover(simulate_stack(scene, preset_evs(StackMode::Continuous), true), o, 0);
    return r;
}

}  // namespace cevr::experiments
