#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cevr/image.hpp"
#include "cevr/model.hpp"

namespace cevr {

struct TrainConfig {
    int epochs = 200;
    double learning_rate = 2e-4;
    double min_learning_rate = 1e-6;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    // Cosine annealing with warm restarts; 0 means one cycle spanning all epochs.
    int restart_epochs = 0;
    int warmup_epochs = 5;
    double lambda_cycle = 0.1;
    int batch_size = 8;
    int patch_size = 64;
    bool augment_rotate = true;
    bool augment_flip = true;
    std::vector<EvStep> excluded_evs;
    Direction direction = Direction::Increase;
    std::uint64_t seed = 1;
    ModelConfig model;
    // Weight file whose encoder tensors seed the encoder when
    // model.use_pretrained_encoder is set.
    std::string pretrained_encoder;

    void validate() const;
    // The full-length schedule (1250 epochs, restarts every 250).
    static TrainConfig full_scale_preset();
};

// Flat "key = value" document, '#' starts a comment. Keys are listed in
// docs/config.md; unknown keys are rejected.
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::filesystem::path& path);
std::string format_train_config(const TrainConfig& config);

// Learning rate for a zero-based epoch.
double scheduled_learning_rate(const TrainConfig& config, int epoch);

struct CycleSample {
    double a = 0.0;
    EvStep u;
    EvStep v;
};

// u = a * s_m and v = s_m - u, so u + v == s_m holds exactly.
CycleSample make_cycle_sample(EvStep s_m, double a);
// Draws a ~ U[0, 1]; returns nullopt for s_m == 0, where the cycle branch is skipped.
std::optional<CycleSample> sample_cycle_decomposition(EvStep s_m, std::mt19937_64& rng);

struct LossBreakdown {
    double rec = 0.0;
    double cyc = 0.0;
    double total = 0.0;
};

double reconstruction_loss(const LdrImage& pred, const LdrImage& gt);
// L1 distance between gt and forward(forward(input, u), v), both hops using `weights`.
double cycle_loss(const ModelWeights& weights, const LdrImage& input, EvStep s_m, const LdrImage& gt,
                  const CycleSample& sample);
LossBreakdown total_loss(double rec, double cyc, double lambda);

struct AugmentDraw {
    int quarter_turns = 0;  // counter-clockwise, 0..3
    bool flip_horizontal = false;
    bool flip_vertical = false;

    bool is_identity() const { return quarter_turns == 0 && !flip_horizontal && !flip_vertical; }
};

AugmentDraw draw_augmentation(std::mt19937_64& rng, bool rotate, bool flip);
Image apply_augmentation(const Image& image, const AugmentDraw& draw);
// One shared draw applied to every image of the group.
std::vector<Image> augment(const std::vector<Image>& group, std::mt19937_64& rng, bool rotate = true,
                           bool flip = true);

struct HoldOutSplit {
    std::vector<EvStep> train;
    std::vector<EvStep> eval;
};

HoldOutSplit hold_out_split(const std::vector<EvStep>& evs, const std::vector<EvStep>& excluded);

struct TrainingScene {
    std::string name;
    LdrImage input;
    std::vector<StackEntry> targets;
};

// Reads <root>/<scene>/<EV>.png (or .jpg); every scene needs an EV-0 image.
std::vector<TrainingScene> load_dataset(const std::filesystem::path& root);
// Keeps the targets whose EV sign matches the direction (EV 0 kept as well).
std::vector<TrainingScene> filter_for_direction(const std::vector<TrainingScene>& scenes,
                                                Direction direction);

struct EpochLog {
    int epoch = 0;
    double rec = 0.0;
    double cyc = 0.0;
    double total = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    ModelWeights weights;
    // Row 0 is the loss of the initial weights before any update.
    std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

TrainResult train(const std::vector<TrainingScene>& dataset, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});
// Continues from existing weights (e.g. a pretrained encoder already copied in).
TrainResult train(const std::vector<TrainingScene>& dataset, const TrainConfig& config,
                  ModelWeights initial, const EpochCallback& on_epoch = {});

void write_train_log_csv(const std::vector<EpochLog>& log, const std::filesystem::path& path);

}  // namespace cevr
