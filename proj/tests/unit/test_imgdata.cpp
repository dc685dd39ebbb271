#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include <png.h>

#include "cevr/error.hpp"
#include "cevr/io.hpp"
#include "cevr/resize.hpp"
#include "cevr/synthetic.hpp"
#include "helpers.hpp"

using namespace cevr;
using cevr::testing::random_image;
using cevr::testing::random_ldr;
using cevr::testing::TempDir;

namespace {

void write_png_raw(const std::filesystem::path& path, int w, int h, png_uint_32 format,
                   const std::vector<std::uint8_t>& bytes) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = w;
    img.height = h;
    img.format = format;
    ASSERT_TRUE(png_image_write_to_file(&img, path.c_str(), 0, bytes.data(), 0, nullptr));
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected cevr::Error";
    return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(LdrImage, RejectsOutOfRangeAndWrongChannels) {
    Image img(2, 2, 3, 0.5);
    img.at(1, 0, 0) = 1.5;
    EXPECT_EQ(kind_of([&] { LdrImage{img}; }), ErrorKind::InvalidArgument);
    img.at(1, 0, 0) = std::nan("");
    EXPECT_EQ(kind_of([&] { LdrImage{img}; }), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of([&] { LdrImage{Image(2, 2, 1, 0.5)}; }), ErrorKind::InvalidArgument);
    img.at(1, 0, 0) = 1.5;
    EXPECT_EQ(LdrImage::clamped(img).at(1, 0, 0), 1.0);
}

TEST(RadianceMap, RequiresStrictlyPositive) {
    EXPECT_THROW(RadianceMap(Image(2, 2, 3, 0.0)), Error);
    EXPECT_THROW(RadianceMap(Image(2, 2, 3, -1.0)), Error);
    EXPECT_NO_THROW(RadianceMap(Image(2, 2, 3, 1e-30)));
}

TEST(EvStep, ParseAndFormat) {
    EXPECT_EQ(parse_ev("-2.5").value(), -2.5);
    EXPECT_EQ(parse_ev("0").value(), 0.0);
    EXPECT_EQ(parse_ev("+3").value(), 3.0);
    EXPECT_EQ(format_ev(EvStep(-2.5)), "-2.5");
    EXPECT_EQ(format_ev(EvStep(0.0)), "0");
    EXPECT_EQ(format_ev(EvStep(3.0)), "+3");
    for (double v : {-3.0, -0.5, 0.25, 1.0, 2.5}) EXPECT_EQ(parse_ev(format_ev(EvStep(v))).value(), v);
    EXPECT_EQ(kind_of([] { parse_ev("abc"); }), ErrorKind::ParseError);
    EXPECT_EQ(kind_of([] { parse_ev("1.5x"); }), ErrorKind::ParseError);
    EXPECT_THROW(EvStep(std::numeric_limits<double>::infinity()), Error);
    EXPECT_TRUE(EvStep(3.0).in_supported_range());
    EXPECT_FALSE(EvStep(3.5).in_supported_range());
}

TEST(LdrStack, SortsAndValidates) {
    const LdrImage a = random_ldr(4, 4, 1), b = random_ldr(4, 4, 2);
    LdrStack stack({{a, EvStep(1.0)}, {b, EvStep(-1.0)}});
    ASSERT_EQ(stack.size(), 2u);
    EXPECT_EQ(stack[0].ev.value(), -1.0);
    EXPECT_EQ(stack.reference(), nullptr);
    EXPECT_THROW(LdrStack({{a, EvStep(1.0)}, {b, EvStep(1.0)}}), Error);
    EXPECT_EQ(kind_of([&] { LdrStack({{a, EvStep(0.0)}, {random_ldr(4, 5, 3), EvStep(1.0)}}); }),
              ErrorKind::DimensionMismatch);
}

TEST(Io, LoadNormalizesLevels) {
    TempDir dir("io");
    write_png_raw(dir / "levels.png", 3, 1, PNG_FORMAT_RGB, {255, 255, 255, 0, 0, 0, 128, 128, 128});
    const LdrImage img = load_ldr(dir / "levels.png");
    EXPECT_EQ(img.at(0, 0, 0), 1.0);
    EXPECT_EQ(img.at(1, 0, 1), 0.0);
    EXPECT_DOUBLE_EQ(img.at(2, 0, 2), 128.0 / 255.0);
}

TEST(Io, DistinctErrorsForMissingAndUnsupported) {
    TempDir dir("io_err");
    EXPECT_EQ(kind_of([&] { load_ldr(dir / "nope.png"); }), ErrorKind::FileNotFound);
    write_png_raw(dir / "gray.png", 2, 1, PNG_FORMAT_GRAY, {10, 20});
    EXPECT_EQ(kind_of([&] { load_ldr(dir / "gray.png"); }), ErrorKind::UnsupportedFormat);
    write_png_raw(dir / "rgba.png", 1, 1, PNG_FORMAT_RGBA, {1, 2, 3, 4});
    EXPECT_EQ(kind_of([&] { load_ldr(dir / "rgba.png"); }), ErrorKind::UnsupportedFormat);
    write_png_raw(dir / "deep.png", 1, 1, PNG_FORMAT_LINEAR_RGB, {0, 1, 0, 2, 0, 3});
    EXPECT_EQ(kind_of([&] { load_ldr(dir / "deep.png"); }), ErrorKind::UnsupportedFormat);
    {
        std::ofstream(dir / "text.bmp") << "not an image";
    }
    EXPECT_EQ(kind_of([&] { load_ldr(dir / "text.bmp"); }), ErrorKind::UnsupportedFormat);
}

TEST(Io, QuantizationRule) {
    EXPECT_EQ(quantize_level(1.0), 255);
    EXPECT_EQ(quantize_level(0.5), 128);
    EXPECT_EQ(quantize_level(0.0), 0);
}

TEST(Io, SaveLoadRoundTripWithinHalfLevel) {
    TempDir dir("roundtrip");
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const LdrImage img = random_ldr(7, 9, seed);
        save_ldr(img, dir / "x.png");
        const LdrImage back = load_ldr(dir / "x.png");
        const auto a = img.pixels().values(), b = back.pixels().values();
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(std::abs(a[i] - b[i]), 1.0 / 510.0 + 1e-12);
    }
}

TEST(Rgbe, KnownEncodings) {
    EXPECT_EQ(rgbe_encode(1.0, 1.0, 1.0), (Rgbe{128, 128, 128, 129}));
    EXPECT_EQ(rgbe_encode(0.0, 0.0, 0.0), (Rgbe{0, 0, 0, 0}));
    const auto zero = rgbe_decode({0, 0, 0, 0});
    EXPECT_EQ(zero[0], 0.0);
}

TEST(Rgbe, RoundTripWithinOnePercent) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lg(std::log(1e-4), std::log(1e4));
    std::uniform_real_distribution<double> ratio(0.5, 1.0);
    for (int i = 0; i < 20000; ++i) {
        const double m = std::exp(lg(rng));
        // Grey pixels and colours whose channels stay within 2x of the maximum.
        const double r = m, g = i % 2 ? m : m * ratio(rng), b = i % 2 ? m : m * ratio(rng);
        const auto d = rgbe_decode(rgbe_encode(r, g, b));
        EXPECT_NEAR(d[0] / r, 1.0, 0.01);
        EXPECT_NEAR(d[1] / g, 1.0, 0.01);
        EXPECT_NEAR(d[2] / b, 1.0, 0.01);
    }
}

TEST(Rgbe, FileRoundTrip) {
    TempDir dir("rgbe");
    Image px = random_image(5, 6, 3, 3, 0.01, 100.0);
    const RadianceMap rad(px);
    write_radiance_rgbe(rad, dir / "x.hdr");
    std::ifstream in(dir / "x.hdr", std::ios::binary);
    std::string first;
    std::getline(in, first);
    EXPECT_EQ(first, "#?RADIANCE");
    const RadianceMap back = read_radiance_rgbe(dir / "x.hdr");
    ASSERT_EQ(back.height(), 5);
    ASSERT_EQ(back.width(), 6);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 6; ++x) {
            const auto expect = rgbe_decode(rgbe_encode(rad.at(0, y, x), rad.at(1, y, x), rad.at(2, y, x)));
            for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(back.at(c, y, x), expect[c]);
        }
    }
}

TEST(Rgbe, ReadsRunLengthScanlines) {
    TempDir dir("rle");
    // One 8-pixel scanline, new-style RLE: every component is a run of 8.
    std::ofstream out(dir / "rle.hdr", std::ios::binary);
    out << "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 1 +X 8\n";
    const unsigned char header[4] = {2, 2, 0, 8};
    out.write(reinterpret_cast<const char*>(header), 4);
    for (unsigned char v : {128, 64, 32, 129}) {
        const unsigned char run[2] = {static_cast<unsigned char>(128 + 8), v};
        out.write(reinterpret_cast<const char*>(run), 2);
    }
    out.close();
    const RadianceMap r = read_radiance_rgbe(dir / "rle.hdr");
    const auto expect = rgbe_decode({128, 64, 32, 129});
    for (int x = 0; x < 8; ++x) {
        EXPECT_DOUBLE_EQ(r.at(0, 0, x), expect[0]);
        EXPECT_DOUBLE_EQ(r.at(2, 0, x), expect[2]);
    }
}

TEST(Resize, PreservesConstants) {
    const Image c(6, 5, 3, 0.37);
    for (auto m : {ResizeMethod::Bicubic, ResizeMethod::Bilinear}) {
        for (auto [h, w] : {std::pair{13, 11}, std::pair{3, 2}, std::pair{1, 1}}) {
            const Image r = resize(c, h, w, m);
            for (double v : r.values()) EXPECT_NEAR(v, 0.37, 1e-15);
        }
    }
}

TEST(Resize, IdentityAtSameSize) {
    const Image img = random_image(8, 8, 3, 5);
    EXPECT_EQ(resize(img, 8, 8), img);
}

TEST(Resize, RejectsBadDims) { EXPECT_THROW(resize(Image(4, 4, 3), 0, 3), Error); }

TEST(Resize, BicubicImpulseMatchesKernelOracle) {
    Image impulse(8, 8, 1, 0.0);
    impulse.at(0, 3, 4) = 1.0;
    const Image up = resize(impulse, 16, 16, ResizeMethod::Bicubic);
    // Direct evaluation: output i samples source position (i + 0.5)/2 - 0.5;
    // clamped borders play no role this far from the edge.
    auto kernel = [](double t) {
        const double a = -0.75;
        t = std::abs(t);
        if (t <= 1) return (a + 2) * t * t * t - (a + 3) * t * t + 1;
        if (t < 2) return a * t * t * t - 5 * a * t * t + 8 * a * t - 4 * a;
        return 0.0;
    };
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
            const double sy = (y + 0.5) / 2 - 0.5, sx = (x + 0.5) / 2 - 0.5;
            EXPECT_NEAR(up.at(0, y, x), kernel(sy - 3) * kernel(sx - 4), 1e-6);
        }
    }
}

TEST(Resize, CommutesWithChannelPermutation) {
    const Image img = random_image(6, 7, 3, 9);
    Image perm(6, 7, 3);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 6; ++y) {
            for (int x = 0; x < 7; ++x) perm.at(c, y, x) = img.at((c + 1) % 3, y, x);
        }
    }
    const Image a = resize(img, 11, 4), b = resize(perm, 11, 4);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 11; ++y) {
            for (int x = 0; x < 4; ++x) EXPECT_EQ(b.at(c, y, x), a.at((c + 1) % 3, y, x));
        }
    }
}

TEST(Resize, LdrOutputClamped) {
    Image img(4, 4, 3, 0.0);
    for (int c = 0; c < 3; ++c) img.at(c, 1, 1) = 1.0;
    const LdrImage up = resize(LdrImage(img), 9, 9);
    for (double v : up.pixels().values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Synthetic, GammaClosedForm) {
    SyntheticScene scene{RadianceMap(Image(1, 1, 3, 0.25)), GammaCrf{2.2}, 1.0};
    const LdrImage img = simulate_exposure(scene, EvStep(0.0), false);
    EXPECT_NEAR(img.at(0, 0, 0), std::pow(0.25, 1 / 2.2), 1e-12);
    EXPECT_NEAR(img.at(0, 0, 0), 0.533, 5e-4);
}

TEST(Synthetic, OneStopDoublesExposure) {
    SyntheticScene scene{RadianceMap(Image(1, 1, 3, 0.1)), GammaCrf{1.0}, 1.0};
    const LdrStack st = simulate_stack(scene, {EvStep(0.0), EvStep(1.0)}, false);
    EXPECT_DOUBLE_EQ(st[1].image.at(0, 0, 0), 2.0 * st[0].image.at(0, 0, 0));
}

TEST(Synthetic, SaturatesAtOne) {
    SyntheticScene scene{RadianceMap(Image(1, 1, 3, 0.6)), GammaCrf{2.2}, 1.0};
    EXPECT_EQ(simulate_exposure(scene, EvStep(1.0), false).at(0, 0, 0), 1.0);
}

TEST(Synthetic, StackMonotoneInEv) {
    const SyntheticScene scene = generate_scene(4, {32, 32, 2.2, 9.0, 0.02});
    std::vector<EvStep> evs;
    for (double s = -3; s <= 3; s += 0.5) evs.emplace_back(s);
    for (bool q : {false, true}) {
        const LdrStack st = simulate_stack(scene, evs, q);
        for (std::size_t j = 1; j < st.size(); ++j) {
            const auto lo = st[j - 1].image.pixels().values(), hi = st[j].image.pixels().values();
            for (std::size_t i = 0; i < lo.size(); ++i) ASSERT_GE(hi[i], lo[i]);
        }
    }
}

TEST(Synthetic, InverseRecoversRadianceWhereUnclipped) {
    const SyntheticScene scene = generate_scene(6, {24, 24, 2.2, 9.0, 0.02});
    const LdrImage img = simulate_exposure(scene, EvStep(-1.0), false);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 24; ++y) {
            for (int x = 0; x < 24; ++x) {
                const double v = img.at(c, y, x);
                if (v <= 0.0 || v >= 1.0) continue;
                const double x_log = scene.crf.inverse_log(v);
                const double expect = std::log(scene.radiance.at(c, y, x) * 0.5 * scene.base_exposure);
                ASSERT_NEAR(x_log, expect, 1e-9);
            }
        }
    }
}

TEST(Synthetic, RejectsUnorderedEvs) {
    const SyntheticScene scene = generate_scene(1, {16, 16, 2.2, 9.0, 0.02});
    EXPECT_THROW(simulate_stack(scene, {EvStep(1.0), EvStep(0.0)}, true), Error);
    EXPECT_THROW(simulate_stack(scene, {}, true), Error);
}

TEST(Synthetic, DeterministicPerSeed) {
    const SceneOptions o{16, 16, 2.2, 9.0, 0.02};
    EXPECT_EQ(generate_scene(3, o).radiance.pixels(), generate_scene(3, o).radiance.pixels());
    EXPECT_NE(generate_scene(3, o).radiance.pixels(), generate_scene(4, o).radiance.pixels());
}
