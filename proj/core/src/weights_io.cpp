#include "cevr/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "cevr/error.hpp"

namespace cevr {
namespace {

constexpr char kMagic[8] = {'C', 'E', 'V', 'R', 'W', 'T', '0', '1'};

static_assert(std::endian::native == std::endian::little,
              "weight files are little-endian; add byte swapping for big-endian hosts");

nlohmann::json config_to_json(const ModelConfig& c) {
    return {{"num_scales", c.num_scales},
            {"encoder_channels", c.encoder_channels},
            {"mlp_depth", c.mlp_depth},
            {"mlp_hidden", c.mlp_hidden},
            {"use_intensity_transform", c.use_intensity_transform},
            {"use_pretrained_encoder", c.use_pretrained_encoder}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.num_scales = j.at("num_scales").get<int>();
    c.encoder_channels = j.at("encoder_channels").get<std::vector<int>>();
    c.mlp_depth = j.at("mlp_depth").get<int>();
    c.mlp_hidden = j.at("mlp_hidden").get<int>();
    c.use_intensity_transform = j.at("use_intensity_transform").get<bool>();
    c.use_pretrained_encoder = j.value("use_pretrained_encoder", false);
    return c;
}

}  // namespace

void save_weights(const ModelWeights& weights, const std::filesystem::path& path) {
    nlohmann::json manifest;
    manifest["format"] = "cevr-weights";
    manifest["version"] = 1;
    manifest["config"] = config_to_json(weights.config);
    manifest["config_hash"] = weights.config.hash();
    manifest["direction"] = to_string(weights.direction);
    manifest["tensors"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, v] : weights.params.entries()) {
        const auto& s = v->value.shape;
        const std::uint64_t count = v->value.data.size();
        manifest["tensors"].push_back({{"name", name},
                                       {"shape", {s.c, s.h, s.w}},
                                       {"dtype", "float32"},
                                       {"offset", offset},
                                       {"count", count}});
        offset += count * sizeof(float);
    }
    const std::string text = manifest.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::IoFailure, "cannot write weights to " + path.string());
    out.write(kMagic, sizeof kMagic);
    const std::uint64_t length = text.size();
    out.write(reinterpret_cast<const char*>(&length), sizeof length);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, v] : weights.params.entries()) {
        std::vector<float> buf(v->value.data.begin(), v->value.data.end());
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!out) fail(ErrorKind::IoFailure, "failed writing " + path.string());
}

ModelWeights load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::FileNotFound, "cannot open weights " + path.string());
    char magic[8];
    std::uint64_t length = 0;
    in.read(magic, sizeof magic);
    in.read(reinterpret_cast<char*>(&length), sizeof length);
    require(in && std::memcmp(magic, kMagic, sizeof kMagic) == 0, ErrorKind::UnsupportedFormat,
            path.string() + " is not a weight file");
    require(length < (1u << 26), ErrorKind::UnsupportedFormat, "implausible manifest length");
    std::string text(length, '\0');
    in.read(text.data(), static_cast<std::streamsize>(length));
    require(static_cast<bool>(in), ErrorKind::IoFailure, "truncated manifest in " + path.string());

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ParseError, path.string() + ": bad manifest: " + e.what());
    }

    ModelConfig config;
    Direction direction{};
    try {
        config = config_from_json(manifest.at("config"));
        direction = parse_direction(manifest.at("direction").get<std::string>());
        require(manifest.at("config_hash").get<std::string>() == config.hash(),
                ErrorKind::ConfigMismatch, path.string() + ": config hash does not match config");
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ParseError, path.string() + ": bad manifest: " + e.what());
    }

    ModelWeights weights = init_weights(config, direction, 0);
    const auto& tensors = manifest.at("tensors");
    require(tensors.size() == weights.params.entries().size(), ErrorKind::ConfigMismatch,
            path.string() + ": tensor count does not match the architecture");
    const auto payload_start = in.tellg();
    for (const auto& t : tensors) {
        const std::string name = t.at("name").get<std::string>();
        nn::Var* v = weights.params.find(name);
        require(v != nullptr, ErrorKind::ConfigMismatch, path.string() + ": unexpected tensor " + name);
        const auto shape = t.at("shape").get<std::vector<int>>();
        const auto& s = (*v)->value.shape;
        require(shape == std::vector<int>{s.c, s.h, s.w} && t.at("dtype") == "float32",
                ErrorKind::ConfigMismatch, path.string() + ": shape/dtype mismatch for " + name);
        std::vector<float> buf(s.size());
        in.seekg(payload_start + static_cast<std::streamoff>(t.at("offset").get<std::uint64_t>()));
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
        require(static_cast<bool>(in), ErrorKind::IoFailure, path.string() + ": truncated tensor " + name);
        std::copy(buf.begin(), buf.end(), (*v)->value.data.begin());
    }
    return weights;
}

}  // namespace cevr
