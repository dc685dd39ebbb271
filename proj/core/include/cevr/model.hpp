#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cevr/image.hpp"
#include "cevr/nn/autograd.hpp"

namespace cevr {

enum class Direction { Increase, Decrease };

const char* to_string(Direction d);
Direction parse_direction(const std::string& text);

struct ModelConfig {
    int num_scales = 4;
    // Feature width per scale, finest first. Decoder blocks reuse the width
    // of the scale they produce.
    std::vector<int> encoder_channels{8, 16, 16, 16};
    int mlp_depth = 3;
    // Hidden width of the implicit MLPs; 0 means "same as the feature width".
    int mlp_hidden = 0;
    bool use_intensity_transform = true;
    bool use_pretrained_encoder = false;

    void validate() const;
    // Stable textual form; the weight manifest stores its FNV-1a hash.
    std::string canonical() const;
    std::string hash() const;
    // Input sides must be multiples of this.
    int alignment() const { return 1 << (num_scales - 1); }
};

// Named parameter tensors in creation order.
class ParameterSet {
public:
    nn::Var& add(const std::string& name, nn::Shape shape);
    const nn::Var& get(const std::string& name) const;
    nn::Var* find(const std::string& name);
    const nn::Var* find(const std::string& name) const;

    std::vector<std::pair<std::string, nn::Var>>& entries() noexcept { return entries_; }
    const std::vector<std::pair<std::string, nn::Var>>& entries() const noexcept { return entries_; }
    std::size_t count() const;

    void zero_grad();
    // Deep copy; the clone shares no storage with the original.
    ParameterSet clone() const;

private:
    std::vector<std::pair<std::string, nn::Var>> entries_;
};

struct ModelWeights {
    ModelConfig config;
    Direction direction = Direction::Increase;
    ParameterSet params;

    ModelWeights clone() const { return {config, direction, params.clone()}; }
};

// He-style uniform initialization from `seed`; intensity heads start at zero
// so every scale begins as the identity transform.
ModelWeights init_weights(const ModelConfig& config, Direction direction, std::uint64_t seed);

// Copies every encoder parameter from `source` (shapes must agree).
void load_encoder_from(ModelWeights& target, const ModelWeights& source);

struct FeatureMap {
    nn::Tensor values;
};

struct AlphaBetaMaps {
    Image alpha;
    Image beta;
};

namespace model {

// Graph-level building blocks. They record into the autograd tape so the
// same code serves inference and training.
std::vector<nn::Var> encode(const ModelWeights& w, const nn::Var& image);
nn::Var implicit_module(const ModelWeights& w, int scale, const nn::Var& x, const nn::Var& s);
nn::Var decoder_block(const ModelWeights& w, int scale, const nn::Var& x, const nn::Var& skip,
                      const nn::Var& s);
std::pair<nn::Var, nn::Var> intensity_transform(const ModelWeights& w, int scale,
                                                const nn::Var& feat, int target_h, int target_w);
nn::Var apply_affine(const nn::Var& image, const nn::Var& alpha, const nn::Var& beta, bool final_scale);

// Full network for image sides divisible by config.alignment(). Encoder
// features may be passed in to share one encoding across several EV steps.
nn::Var forward(const ModelWeights& w, const nn::Var& image, const nn::Var& s,
                const std::vector<nn::Var>* features = nullptr);

}  // namespace model

// Value-level API over the graph functions.
std::vector<FeatureMap> encode(const ModelWeights& w, const LdrImage& image);
FeatureMap implicit_module(const ModelWeights& w, int scale, const FeatureMap& x, EvStep s);
FeatureMap decoder_block(const ModelWeights& w, int scale, const FeatureMap& x,
                         const FeatureMap& skip, EvStep s);
AlphaBetaMaps intensity_transform(const ModelWeights& w, int scale, const FeatureMap& feat,
                                  int target_h, int target_w);
Image apply_affine(const Image& image, const AlphaBetaMaps& maps, bool final_scale);

// Re-exposes `image` by `s` EV. s == 0 returns the input unchanged without
// touching the weights; other sizes are reflect-padded to the alignment and
// cropped back.
LdrImage forward(const ModelWeights& w, const LdrImage& image, EvStep s);

// Picks the model for the sign of s; nullptr for s == 0 (identity shortcut).
const ModelWeights* select_model(const ModelWeights* increase, const ModelWeights* decrease,
                                 EvStep s);

// Mean Rec. 709 luma, used for brightness-ordering checks.
double mean_luminance(const LdrImage& image);

nn::Tensor to_tensor(const Image& image);
Image to_image(const nn::Tensor& tensor);

}  // namespace cevr
