#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cevr/fusion.hpp"
#include "cevr/synthetic.hpp"
#include "cevr/training.hpp"

namespace cevr::experiments {

// Plain string table written as CSV; numbers go through format_number.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void write_csv(const std::filesystem::path& path) const;
    std::string to_csv() const;
};

std::string format_number(double v);

struct Options {
    std::uint64_t seed = 1;
    int train_scenes = 8;
    int eval_scenes = 4;
    int image_size = 64;
    double gamma = 2.2;
    // Template for every model trained by an experiment; direction,
    // lambda_cycle, excluded_evs and the transform flag are set per variant.
    TrainConfig train;
    double lambda_smooth = 100.0;
    int crf_samples = 200;
};

// Scenes [first_seed, first_seed + count) of the synthetic generator.
std::vector<SyntheticScene> make_scenes(std::uint64_t first_seed, int count, int size, double gamma);

// EV-0 inputs with quantized targets at `evs` (of the given direction only).
std::vector<TrainingScene> training_scenes(const std::vector<SyntheticScene>& scenes,
                                           const std::vector<EvStep>& evs, Direction direction);

// Whole stops -3..+3.
std::vector<EvStep> integer_evs();

// Mean PSNR of forward(w, EV-0 input, ev) against the simulated exposure.
double mean_prediction_psnr(const ModelWeights& w, const std::vector<SyntheticScene>& scenes, EvStep ev);
// Same with the EV-0 input itself as the prediction.
double mean_identity_psnr(const std::vector<SyntheticScene>& scenes, EvStep ev);

// PSNR between log radiances after removing the mean log offset (radiance
// is only known up to scale); the peak is the ground truth's log range.
double hdr_log_psnr(const RadianceMap& estimate, const RadianceMap& truth);

// Training and evaluation scene seeds never overlap.
std::uint64_t train_seed(const Options& o);
std::uint64_t eval_seed(const Options& o);

struct DenseStackRow {
    int scene = 0;
    int exposures = 0;
    double hdr_psnr = 0.0;
    double smoothness = 0.0;
};

// Fuses simulated 8-bit stacks of 3, 7 and 13 exposures spanning EV -3..+3
// with a recovered CRF and scores each against the true radiance.
std::vector<DenseStackRow> run_dense_stack(const Options& o);
Table dense_stack_table(const std::vector<DenseStackRow>& rows);

struct AblationRow {
    std::string variant;
    bool intensity_transform = true;
    bool cycle = true;
    bool continuous_stack = false;
    std::string metric;
    double value = 0.0;
};

// EV+3 prediction PSNR for (no transform, no cycle), (transform, no cycle)
// and (transform, cycle). With stack rows, the full variant also gets a
// decrease model and HDR log PSNR rows for predefined vs continuous stacks.
std::vector<AblationRow> run_ablation(const Options& o, bool stack_rows, const EpochCallback& progress = {});
Table ablation_table(const std::vector<AblationRow>& rows);

struct HoldOutRow {
    std::string variant;
    EvStep ev;
    double psnr = 0.0;
};

// EV -1 and +1 withheld from training; cycle vs no-cycle models of both
// directions evaluated at the withheld EVs.
std::vector<HoldOutRow> run_hold_out(const Options& o, const EpochCallback& progress = {});
Table hold_out_table(const std::vector<HoldOutRow>& rows);

struct CrfCurveResult {
    InverseCrf predefined;
    InverseCrf continuous;
};

// CRFs recovered from 7- and 13-exposure simulated stacks of one scene.
CrfCurveResult run_crf_curve(const Options& o);

}  // namespace cevr::experiments
