#include "cevr/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "cevr/error.hpp"
#include "cevr/io.hpp"
#include "cevr/nn/adam.hpp"
#include "cevr/nn/ops.hpp"
#include "cevr/weights_io.hpp"

namespace cevr {

using nn::Var;

// ---------------------------------------------------------------------------
// Configuration

void TrainConfig::validate() const {
    require(epochs >= 1, ErrorKind::InvalidArgument, "epochs must be >= 1");
    require(lambda_cycle >= 0.0, ErrorKind::InvalidArgument, "lambda_cycle must be >= 0");
    require(learning_rate > 0.0 && min_learning_rate >= 0.0 && min_learning_rate <= learning_rate,
            ErrorKind::InvalidArgument, "need 0 <= min_learning_rate <= learning_rate, learning_rate > 0");
    require(batch_size >= 1, ErrorKind::InvalidArgument, "batch_size must be >= 1");
    require(warmup_epochs >= 0 && restart_epochs >= 0, ErrorKind::InvalidArgument,
            "warmup/restart epochs must be >= 0");
    model.validate();
    require(patch_size >= model.alignment() && patch_size % model.alignment() == 0,
            ErrorKind::InvalidArgument,
            "patch_size must be a positive multiple of " + std::to_string(model.alignment()));
}

TrainConfig TrainConfig::full_scale_preset() {
    TrainConfig c;
    c.epochs = 1250;
    c.restart_epochs = 250;
    c.warmup_epochs = 10;
    c.patch_size = 256;
    c.model.encoder_channels = {64, 128, 256, 512};
    return c;
}

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    require(ec == std::errc() && ptr == value.data() + value.size(), ErrorKind::ParseError,
            "config key '" + key + "': not a number: '" + value + "'");
    return v;
}

long long to_int(const std::string& key, const std::string& value) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    require(ec == std::errc() && ptr == value.data() + value.size(), ErrorKind::ParseError,
            "config key '" + key + "': not an integer: '" + value + "'");
    return v;
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    fail(ErrorKind::ParseError, "config key '" + key + "': not a boolean: '" + value + "'");
}

std::string number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

TrainConfig parse_train_config(const std::string& text) {
    TrainConfig c;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos, ErrorKind::ParseError,
                "config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "epochs") c.epochs = static_cast<int>(to_int(key, value));
        else if (key == "learning_rate") c.learning_rate = to_double(key, value);
        else if (key == "min_learning_rate") c.min_learning_rate = to_double(key, value);
        else if (key == "beta1") c.beta1 = to_double(key, value);
        else if (key == "beta2") c.beta2 = to_double(key, value);
        else if (key == "adam_epsilon") c.adam_epsilon = to_double(key, value);
        else if (key == "restart_epochs") c.restart_epochs = static_cast<int>(to_int(key, value));
        else if (key == "warmup_epochs") c.warmup_epochs = static_cast<int>(to_int(key, value));
        else if (key == "lambda_cycle") c.lambda_cycle = to_double(key, value);
        else if (key == "batch_size") c.batch_size = static_cast<int>(to_int(key, value));
        else if (key == "patch_size") c.patch_size = static_cast<int>(to_int(key, value));
        else if (key == "augment_rotate") c.augment_rotate = to_bool(key, value);
        else if (key == "augment_flip") c.augment_flip = to_bool(key, value);
        else if (key == "excluded_evs") {
            c.excluded_evs.clear();
            for (const auto& item : split_list(value)) c.excluded_evs.push_back(parse_ev(item));
        } else if (key == "direction") c.direction = parse_direction(value);
        else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_int(key, value));
        else if (key == "pretrained_encoder") c.pretrained_encoder = value;
        else if (key == "model.num_scales") c.model.num_scales = static_cast<int>(to_int(key, value));
        else if (key == "model.encoder_channels") {
            c.model.encoder_channels.clear();
            for (const auto& item : split_list(value)) {
                c.model.encoder_channels.push_back(static_cast<int>(to_int(key, item)));
            }
        } else if (key == "model.mlp_depth") c.model.mlp_depth = static_cast<int>(to_int(key, value));
        else if (key == "model.mlp_hidden") c.model.mlp_hidden = static_cast<int>(to_int(key, value));
        else if (key == "model.use_intensity_transform") c.model.use_intensity_transform = to_bool(key, value);
        else if (key == "model.use_pretrained_encoder") c.model.use_pretrained_encoder = to_bool(key, value);
        else fail(ErrorKind::ParseError, "unknown config key '" + key + "'");
    }
    c.validate();
    return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::FileNotFound, "cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_train_config(ss.str());
}

std::string format_train_config(const TrainConfig& c) {
    std::ostringstream os;
    os << "epochs = " << c.epochs << "\n"
       << "learning_rate = " << number(c.learning_rate) << "\n"
       << "min_learning_rate = " << number(c.min_learning_rate) << "\n"
       << "beta1 = " << number(c.beta1) << "\n"
       << "beta2 = " << number(c.beta2) << "\n"
       << "adam_epsilon = " << number(c.adam_epsilon) << "\n"
       << "restart_epochs = " << c.restart_epochs << "\n"
       << "warmup_epochs = " << c.warmup_epochs << "\n"
       << "lambda_cycle = " << number(c.lambda_cycle) << "\n"
       << "batch_size = " << c.batch_size << "\n"
       << "patch_size = " << c.patch_size << "\n"
       << "augment_rotate = " << (c.augment_rotate ? "true" : "false") << "\n"
       << "augment_flip = " << (c.augment_flip ? "true" : "false") << "\n"
       << "excluded_evs = ";
    for (std::size_t i = 0; i < c.excluded_evs.size(); ++i) {
        os << (i ? ", " : "") << format_ev(c.excluded_evs[i]);
    }
    os << "\n"
       << "direction = " << to_string(c.direction) << "\n"
       << "seed = " << c.seed << "\n";
    if (!c.pretrained_encoder.empty()) os << "pretrained_encoder = " << c.pretrained_encoder << "\n";
    os << "model.num_scales = " << c.model.num_scales << "\n"
       << "model.encoder_channels = ";
    for (std::size_t i = 0; i < c.model.encoder_channels.size(); ++i) {
        os << (i ? ", " : "") << c.model.encoder_channels[i];
    }
    os << "\n"
       << "model.mlp_depth = " << c.model.mlp_depth << "\n"
       << "model.mlp_hidden = " << c.model.mlp_hidden << "\n"
       << "model.use_intensity_transform = " << (c.model.use_intensity_transform ? "true" : "false") << "\n"
       << "model.use_pretrained_encoder = " << (c.model.use_pretrained_encoder ? "true" : "false") << "\n";
    return os.str();
}

double scheduled_learning_rate(const TrainConfig& c, int epoch) {
    const int period = c.restart_epochs > 0 ? c.restart_epochs : c.epochs;
    const int t = epoch % period;
    const int warmup = std::min(c.warmup_epochs, period - 1);
    const double hi = c.learning_rate, lo = c.min_learning_rate;
    if (t < warmup) return lo + (hi - lo) * (t + 1) / static_cast<double>(warmup);
    const int span = period - warmup;
    const double progress = span > 1 ? static_cast<double>(t - warmup) / (span - 1) : 0.0;
    return lo + 0.5 * (hi - lo) * (1.0 + std::cos(std::numbers::pi * progress));
}

// ---------------------------------------------------------------------------
// Losses and sampling

CycleSample make_cycle_sample(EvStep s_m, double a) {
    require(a >= 0.0 && a <= 1.0, ErrorKind::InvalidArgument, "cycle split a must lie in [0, 1]");
    const double s = s_m.value();
    double u = a * s;
    if (s != 0.0) {
        // Snap u onto the ulp grid of s_m. Then s_m - u is exact and so is
        // u + v; an unsnapped product can leave u + v one ulp away from s_m.
        const double q = std::ldexp(1.0, std::ilogb(s) - std::numeric_limits<double>::digits + 1);
        u = std::round(u / q) * q;
    }
    return {a, EvStep(u), EvStep(s - u)};
}

std::optional<CycleSample> sample_cycle_decomposition(EvStep s_m, std::mt19937_64& rng) {
    if (s_m.value() == 0.0) return std::nullopt;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return make_cycle_sample(s_m, unit(rng));
}

double reconstruction_loss(const LdrImage& pred, const LdrImage& gt) {
    require(pred.pixels().same_shape(gt.pixels()), ErrorKind::DimensionMismatch,
            "reconstruction_loss: image sizes differ");
    const auto a = pred.pixels().values();
    const auto b = gt.pixels().values();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

double cycle_loss(const ModelWeights& weights, const LdrImage& input, EvStep s_m, const LdrImage& gt,
                  const CycleSample& sample) {
    require(std::abs(sample.u.value() + sample.v.value() - s_m.value()) == 0.0, ErrorKind::InvalidArgument,
            "cycle sample does not decompose s_m");
    const LdrImage hop = forward(weights, input, sample.u);
    return reconstruction_loss(forward(weights, hop, sample.v), gt);
}

LossBreakdown total_loss(double rec, double cyc, double lambda) {
    require(lambda >= 0.0, ErrorKind::InvalidArgument, "lambda must be >= 0");
    return {rec, cyc, rec + lambda * cyc};
}

// ---------------------------------------------------------------------------
// Augmentation

AugmentDraw draw_augmentation(std::mt19937_64& rng, bool rotate, bool flip) {
    AugmentDraw d;
    std::uniform_int_distribution<int> turns(0, 3);
    std::uniform_int_distribution<int> coin(0, 1);
    if (rotate) d.quarter_turns = turns(rng);
    if (flip) {
        d.flip_horizontal = coin(rng) == 1;
        d.flip_vertical = coin(rng) == 1;
    }
    return d;
}

Image apply_augmentation(const Image& image, const AugmentDraw& draw) {
    Image cur = image;
    for (int t = 0; t < draw.quarter_turns; ++t) {
        Image next(cur.width(), cur.height(), cur.channels());
        for (int c = 0; c < cur.channels(); ++c) {
            for (int y = 0; y < cur.height(); ++y) {
                for (int x = 0; x < cur.width(); ++x) next.at(c, cur.width() - 1 - x, y) = cur.at(c, y, x);
            }
        }
        cur = std::move(next);
    }
    if (draw.flip_horizontal || draw.flip_vertical) {
        Image next(cur.height(), cur.width(), cur.channels());
        for (int c = 0; c < cur.channels(); ++c) {
            for (int y = 0; y < cur.height(); ++y) {
                for (int x = 0; x < cur.width(); ++x) {
                    const int sy = draw.flip_vertical ? cur.height() - 1 - y : y;
                    const int sx = draw.flip_horizontal ? cur.width() - 1 - x : x;
                    next.at(c, y, x) = cur.at(c, sy, sx);
                }
            }
        }
        cur = std::move(next);
    }
    return cur;
}

std::vector<Image> augment(const std::vector<Image>& group, std::mt19937_64& rng, bool rotate, bool flip) {
    for (const auto& img : group) {
        require(img.same_shape(group.front()), ErrorKind::DimensionMismatch,
                "augment: images in a group must share dimensions");
    }
    const AugmentDraw draw = draw_augmentation(rng, rotate, flip);
    std::vector<Image> out;
    out.reserve(group.size());
    for (const auto& img : group) out.push_back(apply_augmentation(img, draw));
    return out;
}

HoldOutSplit hold_out_split(const std::vector<EvStep>& evs, const std::vector<EvStep>& excluded) {
    HoldOutSplit split;
    for (EvStep e : excluded) {
        require(std::find(evs.begin(), evs.end(), e) != evs.end(), ErrorKind::InvalidArgument,
                "excluded EV " + format_ev(e) + " is not in the EV list");
    }
    for (EvStep e : evs) {
        const bool held = std::find(excluded.begin(), excluded.end(), e) != excluded.end();
        (held ? split.eval : split.train).push_back(e);
    }
    require(!split.train.empty(), ErrorKind::InvalidArgument, "hold-out would exclude every EV");
    return split;
}

// ---------------------------------------------------------------------------
// Dataset

std::vector<TrainingScene> load_dataset(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    std::error_code ec;
    require(fs::is_directory(root, ec), ErrorKind::FileNotFound, "no such data directory: " + root.string());
    std::vector<fs::path> scene_dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) scene_dirs.push_back(entry.path());
    }
    std::sort(scene_dirs.begin(), scene_dirs.end());
    std::vector<TrainingScene> scenes;
    for (const auto& dir : scene_dirs) {
        std::vector<StackEntry> entries;
        for (const auto& entry : fs::directory_iterator(dir)) {
            const auto ext = entry.path().extension().string();
            if (!entry.is_regular_file() || (ext != ".png" && ext != ".jpg" && ext != ".jpeg")) continue;
            entries.push_back({load_ldr(entry.path()), parse_ev(entry.path().stem().string())});
        }
        if (entries.empty()) continue;
        LdrStack stack(std::move(entries));
        const StackEntry* ref = stack.reference();
        require(ref != nullptr, ErrorKind::InvalidArgument, "scene " + dir.string() + " has no EV 0 image");
        TrainingScene scene{dir.filename().string(), ref->image, {}};
        for (const auto& e : stack.entries()) {
            if (e.ev.value() != 0.0) scene.targets.push_back(e);
        }
        scenes.push_back(std::move(scene));
    }
    require(!scenes.empty(), ErrorKind::InvalidArgument, "no scenes found under " + root.string());
    return scenes;
}

std::vector<TrainingScene> filter_for_direction(const std::vector<TrainingScene>& scenes, Direction direction) {
    std::vector<TrainingScene> out;
    for (const auto& s : scenes) {
        TrainingScene f{s.name, s.input, {}};
        for (const auto& t : s.targets) {
            const double v = t.ev.value();
            if (v == 0.0 || (v > 0.0) == (direction == Direction::Increase)) f.targets.push_back(t);
        }
        out.push_back(std::move(f));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Optimization loop

namespace {

struct Prepared {
    Var input;
    std::vector<std::pair<EvStep, Var>> targets;
};

Image crop(const Image& img, int y0, int x0, int h, int w) {
    Image out(h, w, img.channels());
    for (int c = 0; c < img.channels(); ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) out.at(c, y, x) = img.at(c, y0 + y, x0 + x);
        }
    }
    return out;
}

std::vector<Prepared> prepare_epoch(const std::vector<TrainingScene>& scenes,
                                    const std::vector<std::vector<std::size_t>>& usable, const TrainConfig& cfg,
                                    std::mt19937_64& rng) {
    const int align = cfg.model.alignment();
    std::vector<Prepared> out;
    out.reserve(scenes.size());
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const auto& s = scenes[i];
        const int ph = std::min(cfg.patch_size, s.input.height() / align * align);
        const int pw = std::min(cfg.patch_size, s.input.width() / align * align);
        std::uniform_int_distribution<int> dy(0, s.input.height() - ph);
        std::uniform_int_distribution<int> dx(0, s.input.width() - pw);
        const int y0 = dy(rng), x0 = dx(rng);
        std::vector<Image> group{crop(s.input.pixels(), y0, x0, ph, pw)};
        for (std::size_t t : usable[i]) group.push_back(crop(s.targets[t].image.pixels(), y0, x0, ph, pw));
        group = augment(group, rng, cfg.augment_rotate, cfg.augment_flip);
        Prepared p;
        p.input = nn::constant(to_tensor(group[0]));
        for (std::size_t k = 0; k < usable[i].size(); ++k) {
            p.targets.emplace_back(s.targets[usable[i][k]].ev, nn::constant(to_tensor(group[k + 1])));
        }
        out.push_back(std::move(p));
    }
    return out;
}

struct PassTotals {
    double rec = 0.0;
    double cyc = 0.0;
    std::size_t pairs = 0;
};

// One pass over the prepared scenes. With an optimizer the batch loss is
// back-propagated and applied; without one only the losses are measured.
PassTotals run_pass(ModelWeights& w, const std::vector<Prepared>& prepared, const TrainConfig& cfg,
                    std::mt19937_64& rng, nn::Adam* adam, double lr) {
    struct PairRef {
        std::size_t scene, target;
    };
    std::vector<std::size_t> order(prepared.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<PairRef> pairs;
    for (std::size_t i : order) {
        for (std::size_t t = 0; t < prepared[i].targets.size(); ++t) pairs.push_back({i, t});
    }

    PassTotals totals;
    const bool use_cycle = cfg.lambda_cycle > 0.0;
    std::optional<nn::NoGradGuard> no_grad;
    if (!adam) no_grad.emplace();

    for (std::size_t start = 0; start < pairs.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t end = std::min(pairs.size(), start + static_cast<std::size_t>(cfg.batch_size));
        const double inv_batch = 1.0 / static_cast<double>(end - start);
        if (adam) w.params.zero_grad();
        // Pairs from one scene are contiguous, so the encoder runs once per
        // scene and its features feed every EV step of that scene.
        std::size_t i = start;
        while (i < end) {
            const std::size_t scene = pairs[i].scene;
            const Prepared& p = prepared[scene];
            const std::vector<Var> features = model::encode(w, p.input);
            Var loss;
            for (; i < end && pairs[i].scene == scene; ++i) {
                const auto& [ev, gt] = p.targets[pairs[i].target];
                const Var pred = model::forward(w, p.input, nn::scalar(ev.value()), &features);
                Var term = nn::mean_abs_diff(pred, gt);
                totals.rec += term->value.data[0];
                if (use_cycle) {
                    if (const auto cs = sample_cycle_decomposition(ev, rng)) {
                        const Var hop = cs->u.value() == 0.0
                                            ? p.input
                                            : model::forward(w, p.input, nn::scalar(cs->u.value()), &features);
                        const Var two_hop =
                            cs->v.value() == 0.0 ? hop : model::forward(w, hop, nn::scalar(cs->v.value()));
                        const Var cyc = nn::mean_abs_diff(two_hop, gt);
                        totals.cyc += cyc->value.data[0];
                        term = nn::add(term, nn::scale(cyc, cfg.lambda_cycle));
                    }
                }
                loss = loss ? nn::add(loss, term) : term;
                ++totals.pairs;
            }
            if (adam) nn::backward(nn::scale(loss, inv_batch));
        }
        if (adam) adam->step(w.params, lr);
    }
    return totals;
}

EpochLog make_log(int epoch, const PassTotals& t, double lambda, double lr) {
    const double n = static_cast<double>(std::max<std::size_t>(t.pairs, 1));
    const auto b = total_loss(t.rec / n, t.cyc / n, lambda);
    return {epoch, b.rec, b.cyc, b.total, lr};
}

}  // namespace

TrainResult train(const std::vector<TrainingScene>& dataset, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    ModelWeights initial = init_weights(config.model, config.direction, config.seed * 0x9E3779B97F4A7C15ull + 17);
    if (config.model.use_pretrained_encoder) {
        require(!config.pretrained_encoder.empty(), ErrorKind::InvalidArgument,
                "use_pretrained_encoder is set but pretrained_encoder names no file");
        load_encoder_from(initial, load_weights(config.pretrained_encoder));
    }
    return train(dataset, config, std::move(initial), on_epoch);
}

TrainResult train(const std::vector<TrainingScene>& dataset, const TrainConfig& config, ModelWeights initial,
                  const EpochCallback& on_epoch) {
    config.validate();
    require(!dataset.empty(), ErrorKind::InvalidArgument, "training dataset is empty");
    require(initial.config.hash() == config.model.hash(), ErrorKind::ConfigMismatch,
            "initial weights do not match the configured architecture");
    initial.direction = config.direction;

    const bool increase = config.direction == Direction::Increase;
    std::vector<EvStep> all_evs;
    for (const auto& s : dataset) {
        for (const auto& t : s.targets) {
            const double v = t.ev.value();
            require(v == 0.0 || (v > 0.0) == increase, ErrorKind::InvalidArgument,
                    "scene " + s.name + " has EV " + format_ev(t.ev) + ", inconsistent with direction " +
                        to_string(config.direction));
            if (std::find(all_evs.begin(), all_evs.end(), t.ev) == all_evs.end()) all_evs.push_back(t.ev);
        }
    }
    std::sort(all_evs.begin(), all_evs.end());
    std::vector<EvStep> excluded;
    for (EvStep e : config.excluded_evs) {
        if (e.value() != 0.0 && (e.value() > 0.0) == increase) excluded.push_back(e);
    }
    const HoldOutSplit split = hold_out_split(all_evs, excluded);

    // EV 0 targets are skipped: the identity shortcut makes them zero-loss.
    std::vector<std::vector<std::size_t>> usable(dataset.size());
    std::size_t pair_count = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        require(dataset[i].input.height() >= config.model.alignment() &&
                    dataset[i].input.width() >= config.model.alignment(),
                ErrorKind::InvalidArgument, "scene " + dataset[i].name + " is smaller than the model alignment");
        for (std::size_t t = 0; t < dataset[i].targets.size(); ++t) {
            const EvStep ev = dataset[i].targets[t].ev;
            if (ev.value() == 0.0) continue;
            if (std::find(split.train.begin(), split.train.end(), ev) == split.train.end()) continue;
            usable[i].push_back(t);
            ++pair_count;
        }
    }
    require(pair_count > 0, ErrorKind::InvalidArgument, "no training pairs remain for this direction");

    TrainResult result{std::move(initial), {}};
    ModelWeights& w = result.weights;
    nn::Adam adam(config.beta1, config.beta2, config.adam_epsilon);
    std::mt19937_64 rng(config.seed);

    {
        std::mt19937_64 eval_rng(config.seed ^ 0xA5A5A5A5A5A5A5A5ull);
        const auto prepared = prepare_epoch(dataset, usable, config, eval_rng);
        const PassTotals t = run_pass(w, prepared, config, eval_rng, nullptr, 0.0);
        result.log.push_back(make_log(0, t, config.lambda_cycle, 0.0));
        if (on_epoch) on_epoch(result.log.back());
    }
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = scheduled_learning_rate(config, epoch);
        const auto prepared = prepare_epoch(dataset, usable, config, rng);
        const PassTotals t = run_pass(w, prepared, config, rng, &adam, lr);
        result.log.push_back(make_log(epoch + 1, t, config.lambda_cycle, lr));
        if (on_epoch) on_epoch(result.log.back());
    }
    for (auto& [name, v] : w.params.entries()) v->grad.clear();
    return result;
}

void write_train_log_csv(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::IoFailure, "cannot write " + path.string());
    out << "epoch,rec,cyc,total,lr\n";
    char buf[256];
    for (const auto& row : log) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g\n", row.epoch, row.rec, row.cyc, row.total, row.lr);
        out << buf;
    }
    if (!out) fail(ErrorKind::IoFailure, "failed writing " + path.string());
}

}  // namespace cevr
