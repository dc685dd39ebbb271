#include "cevr/model.hpp"

#include <cmath>
#include <iostream>
#include <random>
#include <sstream>

#include "cevr/error.hpp"
#include "cevr/nn/ops.hpp"

namespace cevr {

using nn::Shape;
using nn::Tensor;
using nn::Var;

const char* to_string(Direction d) { return d == Direction::Increase ? "increase" : "decrease"; }

Direction parse_direction(const std::string& text) {
    if (text == "increase" || text == "inc") return Direction::Increase;
    if (text == "decrease" || text == "dec") return Direction::Decrease;
    fail(ErrorKind::ParseError, "unknown direction '" + text + "' (expected increase|decrease)");
}

void ModelConfig::validate() const {
    require(num_scales >= 2, ErrorKind::InvalidArgument, "num_scales must be at least 2");
    require(static_cast<int>(encoder_channels.size()) == num_scales, ErrorKind::InvalidArgument,
            "encoder_channels needs one entry per scale");
    for (int c : encoder_channels) {
        require(c > 0, ErrorKind::InvalidArgument, "channel counts must be positive");
    }
    require(mlp_depth >= 2, ErrorKind::InvalidArgument, "implicit MLP needs at least 2 layers");
    require(mlp_hidden >= 0, ErrorKind::InvalidArgument, "mlp_hidden must be >= 0");
}

std::string ModelConfig::canonical() const {
    std::ostringstream os;
    os << "scales=" << num_scales << ";channels=";
    for (std::size_t i = 0; i < encoder_channels.size(); ++i) {
        os << (i ? "," : "") << encoder_channels[i];
    }
    os << ";mlp_depth=" << mlp_depth << ";mlp_hidden=" << mlp_hidden
       << ";intensity_transform=" << use_intensity_transform;
    return os.str();
}

std::string ModelConfig::hash() const {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : canonical()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

Var& ParameterSet::add(const std::string& name, Shape shape) {
    require(find(name) == nullptr, ErrorKind::InvalidArgument, "duplicate parameter " + name);
    entries_.emplace_back(name, nn::leaf(Tensor(shape)));
    return entries_.back().second;
}

Var* ParameterSet::find(const std::string& name) {
    for (auto& [n, v] : entries_) {
        if (n == name) return &v;
    }
    return nullptr;
}

const Var* ParameterSet::find(const std::string& name) const {
    for (const auto& [n, v] : entries_) {
        if (n == name) return &v;
    }
    return nullptr;
}

const Var& ParameterSet::get(const std::string& name) const {
    const Var* v = find(name);
    if (!v) fail(ErrorKind::InvalidArgument, "missing parameter " + name);
    return *v;
}

std::size_t ParameterSet::count() const {
    std::size_t n = 0;
    for (const auto& [name, v] : entries_) n += v->value.data.size();
    return n;
}

void ParameterSet::zero_grad() {
    for (auto& [name, v] : entries_) v->grad.assign(v->value.data.size(), 0.0);
}

ParameterSet ParameterSet::clone() const {
    ParameterSet out;
    for (const auto& [name, v] : entries_) out.entries_.emplace_back(name, nn::leaf(v->value));
    return out;
}

namespace {

std::string implicit_prefix(int scale, int num_scales) {
    return scale == num_scales - 1 ? "bottleneck.mlp" : "decoder.s" + std::to_string(scale) + ".mlp";
}

int mlp_hidden_width(const ModelConfig& c, int width) {
    return c.mlp_hidden > 0 ? c.mlp_hidden : width;
}

void add_conv(ParameterSet& p, const std::string& name, int out, int in, int k) {
    p.add(name + ".weight", Shape{out, in, k * k});
    p.add(name + ".bias", Shape{out, 1, 1});
}

void add_mlp(ParameterSet& p, const std::string& prefix, int width, int hidden, int depth) {
    for (int l = 0; l < depth; ++l) {
        const int in = l == 0 ? width + 1 : hidden;
        const int out = l == depth - 1 ? width : hidden;
        const std::string name = prefix + ".l" + std::to_string(l);
        p.add(name + ".weight", Shape{out, in, 1});
        p.add(name + ".bias", Shape{out, 1, 1});
    }
}

const Var& param(const ModelWeights& w, const std::string& name) { return w.params.get(name); }

Var conv(const ModelWeights& w, const std::string& name, const Var& x, int k) {
    return nn::conv2d(x, param(w, name + ".weight"), param(w, name + ".bias"), k);
}

}  // namespace

ModelWeights init_weights(const ModelConfig& config, Direction direction, std::uint64_t seed) {
    config.validate();
    ModelWeights w;
    w.config = config;
    w.direction = direction;
    auto& p = w.params;
    const auto& ch = config.encoder_channels;
    const int K = config.num_scales;

    for (int k = 0; k < K; ++k) {
        const std::string prefix = "encoder.s" + std::to_string(k);
        add_conv(p, prefix + ".conv1", ch[k], k == 0 ? 3 : ch[k - 1], 3);
        add_conv(p, prefix + ".conv2", ch[k], ch[k], 3);
    }
    add_mlp(p, implicit_prefix(K - 1, K), ch[K - 1], mlp_hidden_width(config, ch[K - 1]),
            config.mlp_depth);
    for (int k = K - 2; k >= 0; --k) {
        const std::string prefix = "decoder.s" + std::to_string(k);
        add_conv(p, prefix + ".up", ch[k], ch[k + 1], 3);
        add_conv(p, prefix + ".fuse", ch[k], 2 * ch[k], 3);
        add_mlp(p, implicit_prefix(k, K), ch[k], mlp_hidden_width(config, ch[k]), config.mlp_depth);
    }
    if (config.use_intensity_transform) {
        for (int k = 0; k < K; ++k) add_conv(p, "head.s" + std::to_string(k), 6, ch[k], 3);
    } else {
        add_conv(p, "output", 3, ch[0], 3);
    }

    std::mt19937_64 rng(seed);
    for (auto& [name, v] : p.entries()) {
        const bool is_bias = name.ends_with(".bias");
        const bool is_head = name.starts_with("head.");
        if (is_bias || is_head) continue;  // zeros
        const Shape& s = v->value.shape;
        const double fan_in = static_cast<double>(s.h) * s.w;
        // Last implicit layer is linear; the rest feed a SiLU.
        const bool linear_out = name.find(".mlp.l" + std::to_string(config.mlp_depth - 1)) !=
                                std::string::npos;
        const double bound = std::sqrt((linear_out ? 3.0 : 6.0) / fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& x : v->value.data) x = dist(rng);
    }
    return w;
}

void load_encoder_from(ModelWeights& target, const ModelWeights& source) {
    for (auto& [name, v] : target.params.entries()) {
        if (!name.starts_with("encoder.")) continue;
        const Var* src = source.params.find(name);
        require(src != nullptr, ErrorKind::ConfigMismatch, "pretrained weights lack " + name);
        require((*src)->value.shape == v->value.shape, ErrorKind::ConfigMismatch,
                "pretrained shape mismatch for " + name);
        v->value.data = (*src)->value.data;
    }
}

namespace model {

std::vector<Var> encode(const ModelWeights& w, const Var& image) {
    const Shape& s = image->shape();
    const int align = w.config.alignment();
    require(s.c == 3, ErrorKind::DimensionMismatch, "encoder expects 3 channels");
    require(s.h % align == 0 && s.w % align == 0, ErrorKind::PaddingRequired,
            "input " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                " must be padded to a multiple of " + std::to_string(align));
    std::vector<Var> features;
    Var x = image;
    for (int k = 0; k < w.config.num_scales; ++k) {
        const std::string prefix = "encoder.s" + std::to_string(k);
        if (k > 0) x = nn::max_pool2(x);
        x = nn::silu(conv(w, prefix + ".conv1", x, 3));
        x = nn::silu(conv(w, prefix + ".conv2", x, 3));
        features.push_back(x);
    }
    return features;
}

Var implicit_module(const ModelWeights& w, int scale, const Var& x, const Var& s) {
    require(std::isfinite(s->value.data.at(0)), ErrorKind::InvalidArgument, "EV step must be finite");
    const std::string prefix = implicit_prefix(scale, w.config.num_scales);
    const int depth = w.config.mlp_depth;
    Var h = nn::linear_with_scalar(x, s, param(w, prefix + ".l0.weight"), param(w, prefix + ".l0.bias"));
    for (int l = 1; l < depth; ++l) {
        h = nn::silu(h);
        h = conv(w, prefix + ".l" + std::to_string(l), h, 1);
    }
    return h;
}

Var decoder_block(const ModelWeights& w, int scale, const Var& x, const Var& skip, const Var& s) {
    const Shape& ss = skip->shape();
    const Shape& xs = x->shape();
    require(ss.h == 2 * xs.h && ss.w == 2 * xs.w, ErrorKind::DimensionMismatch,
            "decoder block: skip " + nn::to_string(ss) + " is not twice input " + nn::to_string(xs));
    const std::string prefix = "decoder.s" + std::to_string(scale);
    Var up = conv(w, prefix + ".up", nn::resample(x, ss.h, ss.w, ResizeMethod::Bicubic), 3);
    Var fused = nn::silu(conv(w, prefix + ".fuse", nn::concat_channels(up, skip), 3));
    return implicit_module(w, scale, fused, s);
}

std::pair<Var, Var> intensity_transform(const ModelWeights& w, int scale, const Var& feat,
                                        int target_h, int target_w) {
    require(target_h > 0 && target_w > 0, ErrorKind::InvalidArgument, "target dims must be positive");
    Var resized = nn::resample(feat, target_h, target_w, ResizeMethod::Bicubic);
    Var raw = conv(w, "head.s" + std::to_string(scale), resized, 3);
    return {nn::exp(nn::slice_channels(raw, 0, 3)), nn::slice_channels(raw, 3, 3)};
}

Var apply_affine(const Var& image, const Var& alpha, const Var& beta, bool final_scale) {
    Var out = nn::add(nn::mul(alpha, image), beta);
    return final_scale ? nn::clamp01(out) : out;
}

Var forward(const ModelWeights& w, const Var& image, const Var& s, const std::vector<Var>* features) {
    const int K = w.config.num_scales;
    std::vector<Var> own;
    if (!features) {
        own = encode(w, image);
        features = &own;
    }
    std::vector<Var> decoded(K);
    decoded[K - 1] = implicit_module(w, K - 1, (*features)[K - 1], s);
    for (int k = K - 2; k >= 0; --k) {
        decoded[k] = decoder_block(w, k, decoded[k + 1], (*features)[k], s);
    }
    if (!w.config.use_intensity_transform) {
        return nn::sigmoid(conv(w, "output", decoded[0], 3));
    }

    // Coarse-to-fine cascade. Each finer scale re-adds the input's own detail
    // band (I_k - up(I_{k+1})) to the upsampled estimate before applying its
    // alpha/beta, so identity maps reproduce the input exactly.
    std::vector<Var> pyramid{image};
    for (int k = 1; k < K; ++k) pyramid.push_back(nn::avg_pool2(pyramid.back()));

    const Shape& cs = pyramid[K - 1]->shape();
    auto [a0, b0] = intensity_transform(w, K - 1, decoded[K - 1], cs.h, cs.w);
    Var estimate = apply_affine(pyramid[K - 1], a0, b0, K - 1 == 0);
    for (int k = K - 2; k >= 0; --k) {
        const Shape& ks = pyramid[k]->shape();
        Var up_estimate = nn::resample(estimate, ks.h, ks.w, ResizeMethod::Bicubic);
        Var detail = nn::sub(pyramid[k], nn::resample(pyramid[k + 1], ks.h, ks.w, ResizeMethod::Bicubic));
        auto [alpha, beta] = intensity_transform(w, k, decoded[k], ks.h, ks.w);
        estimate = apply_affine(nn::add(up_estimate, detail), alpha, beta, k == 0);
    }
    return estimate;
}

}  // namespace model

Tensor to_tensor(const Image& image) {
    Tensor t(Shape{image.channels(), image.height(), image.width()});
    std::copy(image.values().begin(), image.values().end(), t.data.begin());
    return t;
}

Image to_image(const Tensor& tensor) {
    Image img(tensor.shape.h, tensor.shape.w, tensor.shape.c);
    std::copy(tensor.data.begin(), tensor.data.end(), img.values().begin());
    return img;
}

std::vector<FeatureMap> encode(const ModelWeights& w, const LdrImage& image) {
    nn::NoGradGuard no_grad;
    const auto vars = model::encode(w, nn::constant(to_tensor(image.pixels())));
    std::vector<FeatureMap> out;
    for (const auto& v : vars) out.push_back({v->value});
    return out;
}

FeatureMap implicit_module(const ModelWeights& w, int scale, const FeatureMap& x, EvStep s) {
    nn::NoGradGuard no_grad;
    return {model::implicit_module(w, scale, nn::constant(x.values), nn::scalar(s.value()))->value};
}

FeatureMap decoder_block(const ModelWeights& w, int scale, const FeatureMap& x,
                         const FeatureMap& skip, EvStep s) {
    nn::NoGradGuard no_grad;
    return {model::decoder_block(w, scale, nn::constant(x.values), nn::constant(skip.values),
                                 nn::scalar(s.value()))
                ->value};
}

AlphaBetaMaps intensity_transform(const ModelWeights& w, int scale, const FeatureMap& feat,
                                  int target_h, int target_w) {
    auto [a, b] = model::intensity_transform(w, scale, nn::constant(feat.values), target_h, target_w);
    return {to_image(a->value), to_image(b->value)};
}

Image apply_affine(const Image& image, const AlphaBetaMaps& maps, bool final_scale) {
    nn::NoGradGuard no_grad;
    require(image.same_shape(maps.alpha) && image.same_shape(maps.beta), ErrorKind::DimensionMismatch,
            "apply_affine: alpha/beta dims differ from the image");
    auto out = model::apply_affine(nn::constant(to_tensor(image)), nn::constant(to_tensor(maps.alpha)),
                                   nn::constant(to_tensor(maps.beta)), final_scale);
    return to_image(out->value);
}

namespace {

int reflect(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

}  // namespace

LdrImage forward(const ModelWeights& w, const LdrImage& image, EvStep s) {
    if (s.value() == 0.0) return image;
    const bool increase = s.value() > 0.0;
    require(increase == (w.direction == Direction::Increase), ErrorKind::InvalidArgument,
            std::string("EV step sign does not match the ") + to_string(w.direction) + " model");
    if (!s.in_supported_range()) {
        std::clog << "warning: EV step " << format_ev(s) << " is outside [-3, 3]; extrapolating\n";
    }
    const int align = w.config.alignment();
    const int h = image.height(), wd = image.width();
    const int ph = (h + align - 1) / align * align, pw = (wd + align - 1) / align * align;
    Image padded(ph, pw, 3);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < ph; ++y) {
            for (int x = 0; x < pw; ++x) padded.at(c, y, x) = image.at(c, reflect(y, h), reflect(x, wd));
        }
    }
    nn::NoGradGuard no_grad;
    const Var out = model::forward(w, nn::constant(to_tensor(padded)), nn::scalar(s.value()));
    Image result(h, wd, 3);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < wd; ++x) result.at(c, y, x) = out->value.at(c, y, x);
        }
    }
    return LdrImage::clamped(std::move(result));
}

const ModelWeights* select_model(const ModelWeights* increase, const ModelWeights* decrease, EvStep s) {
    if (s.value() == 0.0) return nullptr;
    const ModelWeights* chosen = s.value() > 0.0 ? increase : decrease;
    if (!chosen) {
        fail(ErrorKind::MissingModel, std::string("no ") + (s.value() > 0.0 ? "increase" : "decrease") +
                                          " model loaded for EV " + format_ev(s));
    }
    return chosen;
}

double mean_luminance(const LdrImage& image) {
    const Image y = luma(image.pixels());
    double acc = 0.0;
    for (double v : y.values()) acc += v;
    return acc / static_cast<double>(y.size());
}

}  // namespace cevr
