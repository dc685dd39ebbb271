#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>

#include "../common/oracles.hpp"
#include "cevr/error.hpp"
#include "cevr/model.hpp"
#include "cevr/nn/ops.hpp"
#include "cevr/weights_io.hpp"
#include "helpers.hpp"

using namespace cevr;
using cevr::testing::random_ldr;
using cevr::testing::random_tensor;
using cevr::testing::TempDir;

namespace {

ModelConfig small_config() {
    ModelConfig c;
    c.num_scales = 3;
    c.encoder_channels = {4, 6, 6};
    c.mlp_depth = 3;
    return c;
}

// Heads get random values so the network is not the identity.
ModelWeights random_weights(Direction d = Direction::Increase, std::uint64_t seed = 5) {
    ModelWeights w = init_weights(small_config(), d, seed);
    std::mt19937_64 rng(seed + 1);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    for (auto& [name, v] : w.params.entries()) {
        if (name.starts_with("head.") || name.ends_with(".bias")) {
            for (double& x : v->value.data) x = u(rng);
        }
    }
    return w;
}

}  // namespace

TEST(ModelConfig, ValidatesAndHashes) {
    ModelConfig c = small_config();
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.alignment(), 4);
    const std::string h = c.hash();
    EXPECT_EQ(h, small_config().hash());
    c.mlp_depth = 2;
    EXPECT_NE(c.hash(), h);
    c.encoder_channels = {4, 6};
    EXPECT_THROW(c.validate(), Error);
}

TEST(Direction, ParseAndPrint) {
    EXPECT_EQ(parse_direction("increase"), Direction::Increase);
    EXPECT_EQ(parse_direction("dec"), Direction::Decrease);
    EXPECT_STREQ(to_string(Direction::Decrease), "decrease");
    EXPECT_THROW(parse_direction("sideways"), Error);
}

TEST(ImplicitModule, MatchesPerLocationOracle) {
    const ModelWeights w = random_weights();
    for (int scale = 0; scale < 3; ++scale) {
        const int ch = w.config.encoder_channels[scale];
        const nn::Tensor x = random_tensor({ch, 3, 5}, 10 + scale);
        const double s = 1.75;
        const FeatureMap out = implicit_module(w, scale, FeatureMap{x}, EvStep(s));
        const std::string prefix = scale == 2 ? "bottleneck.mlp" : "decoder.s" + std::to_string(scale) + ".mlp";
        for (int y = 0; y < 3; ++y) {
            for (int xx = 0; xx < 5; ++xx) {
                std::vector<double> v(ch);
                for (int c = 0; c < ch; ++c) v[c] = x.at(c, y, xx);
                const auto expect = oracle::implicit_mlp(w, prefix, v, s);
                for (int c = 0; c < ch; ++c) EXPECT_NEAR(out.values.at(c, y, xx), expect[c], 1e-9);
            }
        }
    }
}

TEST(ImplicitModule, SpatialPermutationEquivariant) {
    const ModelWeights w = random_weights();
    const nn::Tensor x = random_tensor({6, 4, 4}, 3);
    std::vector<int> perm(16);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(4));
    nn::Tensor px(x.shape);
    for (int c = 0; c < 6; ++c) {
        for (int i = 0; i < 16; ++i) px.data[c * 16 + i] = x.data[c * 16 + perm[i]];
    }
    const auto a = implicit_module(w, 1, FeatureMap{x}, EvStep(-2.0)).values;
    const auto b = implicit_module(w, 1, FeatureMap{px}, EvStep(-2.0)).values;
    for (int c = 0; c < 6; ++c) {
        for (int i = 0; i < 16; ++i) EXPECT_DOUBLE_EQ(b.data[c * 16 + i], a.data[c * 16 + perm[i]]);
    }
}

TEST(ImplicitModule, RejectsNonFiniteStep) {
    const ModelWeights w = random_weights();
    EXPECT_THROW(model::implicit_module(w, 0, nn::constant(random_tensor({4, 2, 2}, 1)),
                                        nn::scalar(std::nan(""))),
                 Error);
}

TEST(Encoder, ShapesPerScale) {
    const ModelWeights w = random_weights();
    const auto feats = encode(w, random_ldr(16, 8, 2));
    ASSERT_EQ(feats.size(), 3u);
    EXPECT_EQ(feats[0].values.shape, (nn::Shape{4, 16, 8}));
    EXPECT_EQ(feats[1].values.shape, (nn::Shape{6, 8, 4}));
    EXPECT_EQ(feats[2].values.shape, (nn::Shape{6, 4, 2}));
}

TEST(Encoder, RequiresAlignedInput) {
    const ModelWeights w = random_weights();
    try {
        encode(w, random_ldr(10, 8, 2));
        FAIL() << "expected PaddingRequired";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::PaddingRequired);
    }
}

TEST(Encoder, FlipEquivariantWithMirrorSymmetricKernels) {
    ModelWeights w = random_weights();
    for (auto& [name, v] : w.params.entries()) {
        if (!name.starts_with("encoder.") || !name.ends_with(".weight")) continue;
        auto& d = v->value.data;
        for (std::size_t base = 0; base < d.size(); base += 9) {
            for (int r = 0; r < 3; ++r) d[base + r * 3 + 2] = d[base + r * 3];
        }
    }
    const LdrImage img = random_ldr(8, 12, 7);
    Image flipped(8, 12, 3);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 12; ++x) flipped.at(c, y, x) = img.at(c, y, 11 - x);
        }
    }
    const auto a = encode(w, img), b = encode(w, LdrImage(flipped));
    for (std::size_t k = 0; k < a.size(); ++k) {
        const auto& s = a[k].values.shape;
        for (int c = 0; c < s.c; ++c) {
            for (int y = 0; y < s.h; ++y) {
                for (int x = 0; x < s.w; ++x) {
                    EXPECT_NEAR(b[k].values.at(c, y, x), a[k].values.at(c, y, s.w - 1 - x), 1e-12);
                }
            }
        }
    }
}

TEST(DecoderBlock, OutputMatchesSkipResolution) {
    const ModelWeights w = random_weights();
    const auto feats = encode(w, random_ldr(8, 8, 1));
    const FeatureMap d = decoder_block(w, 1, feats[2], feats[1], EvStep(1.0));
    EXPECT_EQ(d.values.shape, feats[1].values.shape);
    EXPECT_THROW(decoder_block(w, 1, feats[2], feats[0], EvStep(1.0)), Error);
}

TEST(IntensityTransform, ZeroHeadsGiveIdentityMaps) {
    const ModelWeights w = init_weights(small_config(), Direction::Increase, 3);
    const auto feats = encode(w, random_ldr(8, 8, 1));
    const AlphaBetaMaps m = intensity_transform(w, 1, feats[1], 8, 8);
    for (double v : m.alpha.values()) EXPECT_EQ(v, 1.0);
    for (double v : m.beta.values()) EXPECT_EQ(v, 0.0);
}

TEST(ApplyAffine, ClampsOnlyAtFinalScale) {
    Image img(1, 2, 3, 0.8);
    AlphaBetaMaps m{Image(1, 2, 3, 2.0), Image(1, 2, 3, -0.1)};
    EXPECT_NEAR(apply_affine(img, m, false).at(0, 0, 0), 1.5, 1e-12);
    EXPECT_EQ(apply_affine(img, m, true).at(0, 0, 0), 1.0);
}

TEST(Forward, FreshWeightsAreIdentity) {
    const ModelWeights w = init_weights(small_config(), Direction::Increase, 9);
    const LdrImage img = random_ldr(8, 12, 3);
    const LdrImage out = forward(w, img, EvStep(2.0));
    for (std::size_t i = 0; i < img.pixels().size(); ++i) {
        EXPECT_NEAR(out.pixels().values()[i], img.pixels().values()[i], 1e-12);
    }
}

TEST(Forward, ZeroStepIsExactShortcut) {
    const ModelWeights w = random_weights();
    const LdrImage img = random_ldr(5, 7, 3);
    EXPECT_EQ(forward(w, img, EvStep(0.0)), img);
}

TEST(Forward, PadsUnalignedInputsAndCropsBack) {
    const ModelWeights w = random_weights();
    const LdrImage img = random_ldr(9, 6, 3);
    const LdrImage out = forward(w, img, EvStep(1.0));
    EXPECT_EQ(out.height(), 9);
    EXPECT_EQ(out.width(), 6);
    for (double v : out.pixels().values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Forward, DirectionMismatchThrows) {
    const ModelWeights inc = random_weights(Direction::Increase);
    const ModelWeights dec = random_weights(Direction::Decrease);
    const LdrImage img = random_ldr(8, 8, 3);
    EXPECT_THROW(forward(inc, img, EvStep(-1.0)), Error);
    EXPECT_THROW(forward(dec, img, EvStep(1.0)), Error);
    EXPECT_NO_THROW(forward(dec, img, EvStep(-1.0)));
}

TEST(Forward, ValueApiMatchesGraphApi) {
    const ModelWeights w = random_weights();
    const LdrImage img = random_ldr(8, 8, 4);
    const nn::Var g = model::forward(w, nn::constant(to_tensor(img.pixels())), nn::scalar(1.5));
    const LdrImage v = forward(w, img, EvStep(1.5));
    for (std::size_t i = 0; i < g->value.data.size(); ++i) {
        EXPECT_NEAR(v.pixels().values()[i], std::clamp(g->value.data[i], 0.0, 1.0), 1e-12);
    }
}

TEST(Forward, DifferentiableInStep) {
    const ModelWeights w = random_weights();
    const nn::Var img = nn::constant(to_tensor(random_ldr(8, 8, 6).pixels()));
    const nn::Var weights = nn::constant(random_tensor(img->shape(), 7, 1.0));
    // Weighted sum of the output; the large offset keeps |.| on one branch.
    auto reduce = [&](const nn::Var& s) {
        return nn::mean_abs_diff(nn::mul(weights, model::forward(w, img, s)), nn::constant(nn::Tensor(img->shape(), -1000.0)));
    };
    for (double s0 : {0.7, 1.5, 2.6}) {
        const nn::Var s = nn::scalar(s0, true);
        nn::backward(reduce(s));
        const double h = 1e-3;
        const double fd = (reduce(nn::scalar(s0 + h))->value.data[0] - reduce(nn::scalar(s0 - h))->value.data[0]) / (2 * h);
        EXPECT_NEAR(s->grad[0], fd, 1e-3 * std::max(std::abs(fd), 1e-6)) << "s = " << s0;
    }
}

TEST(Forward, NoTransformVariantUsesSigmoidOutput) {
    ModelConfig c = small_config();
    c.use_intensity_transform = false;
    const ModelWeights w = init_weights(c, Direction::Increase, 2);
    EXPECT_NE(w.params.find("output.weight"), nullptr);
    EXPECT_EQ(w.params.find("head.s0.weight"), nullptr);
    const LdrImage out = forward(w, random_ldr(8, 8, 1), EvStep(1.0));
    for (double v : out.pixels().values()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(SelectModel, PicksBySignAndReportsMissing) {
    const ModelWeights inc = random_weights(Direction::Increase);
    EXPECT_EQ(select_model(&inc, nullptr, EvStep(0.0)), nullptr);
    EXPECT_EQ(select_model(&inc, nullptr, EvStep(2.0)), &inc);
    try {
        select_model(&inc, nullptr, EvStep(-1.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingModel);
    }
}

TEST(Parameters, CloneIsDeep) {
    const ModelWeights w = random_weights();
    ModelWeights c = w.clone();
    c.params.entries()[0].second->value.data[0] += 1.0;
    EXPECT_NE(c.params.entries()[0].second->value.data[0], w.params.entries()[0].second->value.data[0]);
}

TEST(Parameters, PretrainedEncoderCopy) {
    const ModelWeights src = random_weights(Direction::Increase, 1);
    ModelWeights dst = init_weights(small_config(), Direction::Increase, 2);
    load_encoder_from(dst, src);
    EXPECT_EQ(dst.params.get("encoder.s1.conv2.weight")->value.data,
              src.params.get("encoder.s1.conv2.weight")->value.data);
    EXPECT_NE(dst.params.get("bottleneck.mlp.l0.weight")->value.data,
              src.params.get("bottleneck.mlp.l0.weight")->value.data);
    ModelConfig other = small_config();
    other.encoder_channels = {4, 8, 8};
    const ModelWeights wrong = init_weights(other, Direction::Increase, 3);
    EXPECT_THROW(load_encoder_from(dst, wrong), Error);
}

TEST(WeightsIo, RoundTripIsFloat32Exact) {
    TempDir dir("weights");
    const ModelWeights w = random_weights(Direction::Decrease);
    save_weights(w, dir / "w.bin");
    const ModelWeights back = load_weights(dir / "w.bin");
    EXPECT_EQ(back.direction, Direction::Decrease);
    EXPECT_EQ(back.config.hash(), w.config.hash());
    ASSERT_EQ(back.params.entries().size(), w.params.entries().size());
    for (std::size_t k = 0; k < w.params.entries().size(); ++k) {
        const auto& a = w.params.entries()[k].second->value.data;
        const auto& b = back.params.entries()[k].second->value.data;
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(b[i], static_cast<double>(static_cast<float>(a[i])));
    }
    // Saving the reloaded weights reproduces the file byte for byte.
    save_weights(back, dir / "w2.bin");
    std::ifstream f1(dir / "w.bin", std::ios::binary), f2(dir / "w2.bin", std::ios::binary);
    EXPECT_EQ(std::string(std::istreambuf_iterator<char>(f1), {}), std::string(std::istreambuf_iterator<char>(f2), {}));
}

TEST(WeightsIo, RejectsCorruptFiles) {
    TempDir dir("weights_bad");
    auto kind = [](const std::filesystem::path& p) {
        try {
            load_weights(p);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::InvalidArgument;
    };
    EXPECT_EQ(kind(dir / "missing.bin"), ErrorKind::FileNotFound);
    std::ofstream(dir / "junk.bin") << "definitely not weights";
    EXPECT_EQ(kind(dir / "junk.bin"), ErrorKind::UnsupportedFormat);

    save_weights(random_weights(), dir / "w.bin");
    std::ifstream in(dir / "w.bin", std::ios::binary);
    const std::string original(std::istreambuf_iterator<char>(in), {});
    std::string bytes = original;
    const auto pos = bytes.find("\"mlp_depth\":3");
    ASSERT_NE(pos, std::string::npos);
    bytes[pos + 12] = '2';
    std::ofstream(dir / "tampered.bin", std::ios::binary) << bytes;
    EXPECT_EQ(kind(dir / "tampered.bin"), ErrorKind::ConfigMismatch);
    std::ofstream(dir / "short.bin", std::ios::binary) << original.substr(0, original.size() - 10);
    EXPECT_EQ(kind(dir / "short.bin"), ErrorKind::IoFailure);
}

TEST(MeanLuminance, Rec709) {
    Image img(1, 1, 3);
    img.at(0, 0, 0) = 1.0;
    EXPECT_NEAR(mean_luminance(LdrImage(img)), 0.2126, 1e-12);
}
