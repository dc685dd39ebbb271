#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "../common/oracles.hpp"
#include "cevr/error.hpp"
#include "cevr/io.hpp"
#include "cevr/synthetic.hpp"
#include "cevr/training.hpp"
#include "helpers.hpp"

using namespace cevr;
using cevr::testing::random_image;
using cevr::testing::random_ldr;
using cevr::testing::TempDir;

namespace {

TrainConfig tiny_config() {
    TrainConfig c;
    c.epochs = 3;
    c.warmup_epochs = 1;
    c.batch_size = 2;
    c.patch_size = 8;
    c.learning_rate = 1e-3;
    c.model.num_scales = 2;
    c.model.encoder_channels = {4, 4};
    c.model.mlp_depth = 2;
    return c;
}

std::vector<TrainingScene> tiny_dataset(int count = 2) {
    std::vector<TrainingScene> out;
    for (int i = 0; i < count; ++i) {
        const SyntheticScene scene = generate_scene(100 + i, {16, 16, 2.2, 9.0, 0.02});
        TrainingScene t{"s" + std::to_string(i), simulate_exposure(scene, EvStep(0.0), true), {}};
        for (double ev : {1.0, 2.0}) t.targets.push_back({simulate_exposure(scene, EvStep(ev), true), EvStep(ev)});
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

TEST(Losses, ReconstructionMatchesOracle) {
    const LdrImage a = random_ldr(6, 5, 1), b = random_ldr(6, 5, 2);
    EXPECT_NEAR(reconstruction_loss(a, b), oracle::l1(a.pixels(), b.pixels()), 1e-14);
    EXPECT_EQ(reconstruction_loss(a, a), 0.0);
    EXPECT_THROW(reconstruction_loss(a, random_ldr(5, 6, 3)), Error);
}

TEST(Losses, TotalCombinesWithLambda) {
    const LossBreakdown l = total_loss(0.2, 0.5, 0.1);
    EXPECT_DOUBLE_EQ(l.total, 0.25);
    EXPECT_EQ(l.rec, 0.2);
    EXPECT_EQ(l.cyc, 0.5);
    EXPECT_THROW(total_loss(0.1, 0.1, -1.0), Error);
}

TEST(Losses, CycleLossIsTwoHopL1) {
    TrainConfig c = tiny_config();
    ModelWeights w = init_weights(c.model, Direction::Increase, 1);
    for (auto& [name, v] : w.params.entries()) {
        if (name.starts_with("head.")) {
            for (double& x : v->value.data) x = 0.01;
        }
    }
    const LdrImage in = random_ldr(8, 8, 4), gt = random_ldr(8, 8, 5);
    const CycleSample sm = make_cycle_sample(EvStep(2.0), 0.25);
    const LdrImage two_hop = forward(w, forward(w, in, EvStep(0.5)), EvStep(1.5));
    EXPECT_NEAR(cycle_loss(w, in, EvStep(2.0), gt, sm), oracle::l1(two_hop.pixels(), gt.pixels()), 1e-14);
    CycleSample bad = sm;
    bad.v = EvStep(1.0);
    EXPECT_THROW(cycle_loss(w, in, EvStep(2.0), gt, bad), Error);
}

TEST(CycleSample, ExactDecomposition) {
    std::mt19937_64 rng(3);
    for (double s : {-3.0, -1.0, 0.5, 2.0, 3.0}) {
        for (int i = 0; i < 1000; ++i) {
            const auto sm = sample_cycle_decomposition(EvStep(s), rng);
            ASSERT_TRUE(sm);
            ASSERT_EQ(sm->u.value() + sm->v.value(), s);
            ASSERT_GE(sm->a, 0.0);
            ASSERT_LE(sm->a, 1.0);
        }
    }
    EXPECT_FALSE(sample_cycle_decomposition(EvStep(0.0), rng));
    EXPECT_THROW(make_cycle_sample(EvStep(1.0), 1.5), Error);
}

TEST(Augment, QuarterTurnIsCounterClockwise) {
    Image img(2, 3, 1);
    double v = 0;
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 3; ++x) img.at(0, y, x) = v++;
    }
    // [0 1 2; 3 4 5] turned CCW is [2 5; 1 4; 0 3].
    const Image r = apply_augmentation(img, {1, false, false});
    ASSERT_EQ(r.height(), 3);
    ASSERT_EQ(r.width(), 2);
    EXPECT_EQ(r.at(0, 0, 0), 2);
    EXPECT_EQ(r.at(0, 0, 1), 5);
    EXPECT_EQ(r.at(0, 2, 0), 0);
    EXPECT_EQ(r.at(0, 2, 1), 3);
}

TEST(Augment, FourTurnsAndDoubleFlipsAreIdentity) {
    const Image img = random_image(4, 6, 3, 2);
    EXPECT_EQ(apply_augmentation(apply_augmentation(img, {2, false, false}), {2, false, false}), img);
    const Image f = apply_augmentation(img, {0, true, true});
    EXPECT_EQ(apply_augmentation(f, {0, true, true}), img);
    // Flipping both axes equals a half turn.
    EXPECT_EQ(f, apply_augmentation(img, {2, false, false}));
}

TEST(Augment, GroupSharesOneDraw) {
    const Image a = random_image(4, 4, 3, 1);
    std::mt19937_64 rng(8);
    for (int i = 0; i < 20; ++i) {
        const auto out = augment({a, a, a}, rng);
        EXPECT_EQ(out[0], out[1]);
        EXPECT_EQ(out[1], out[2]);
    }
    EXPECT_THROW(augment({a, random_image(4, 5, 3, 1)}, rng), Error);
}

TEST(Augment, DisabledDrawIsIdentity) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 10; ++i) EXPECT_TRUE(draw_augmentation(rng, false, false).is_identity());
}

TEST(HoldOut, SplitsAndValidates) {
    const std::vector<EvStep> evs{EvStep(-1), EvStep(1), EvStep(2), EvStep(3)};
    const HoldOutSplit s = hold_out_split(evs, {EvStep(-1), EvStep(1)});
    EXPECT_EQ(s.train, (std::vector<EvStep>{EvStep(2), EvStep(3)}));
    EXPECT_EQ(s.eval, (std::vector<EvStep>{EvStep(-1), EvStep(1)}));
    EXPECT_THROW(hold_out_split(evs, {EvStep(4)}), Error);
    EXPECT_THROW(hold_out_split({EvStep(1)}, {EvStep(1)}), Error);
}

TEST(Config, RoundTripsThroughText) {
    TrainConfig c = TrainConfig::full_scale_preset();
    c.excluded_evs = {EvStep(-1), EvStep(1.5)};
    c.direction = Direction::Decrease;
    c.seed = 77;
    c.learning_rate = 3.25e-4;
    const TrainConfig back = parse_train_config(format_train_config(c));
    EXPECT_EQ(format_train_config(back), format_train_config(c));
    EXPECT_EQ(back.epochs, 1250);
    EXPECT_EQ(back.restart_epochs, 250);
    EXPECT_EQ(back.excluded_evs, c.excluded_evs);
    EXPECT_EQ(back.learning_rate, 3.25e-4);
}

TEST(Config, DefaultsAndErrors) {
    const TrainConfig d = parse_train_config("# nothing\n\n");
    EXPECT_EQ(d.epochs, 200);
    EXPECT_EQ(d.lambda_cycle, 0.1);
    EXPECT_EQ(parse_train_config("epochs = 7 # short\n").epochs, 7);
    auto kind = [](const std::string& text) {
        try {
            parse_train_config(text);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::IoFailure;
    };
    EXPECT_EQ(kind("epochs = seven"), ErrorKind::ParseError);
    EXPECT_EQ(kind("no_such_key = 1"), ErrorKind::ParseError);
    EXPECT_EQ(kind("just a line"), ErrorKind::ParseError);
    EXPECT_NE(kind("epochs = 0"), ErrorKind::IoFailure);
    EXPECT_NE(kind("lambda_cycle = -1"), ErrorKind::IoFailure);
}

TEST(Config, LoadMissingFile) {
    try {
        load_train_config("/nonexistent/cevr.cfg");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::FileNotFound);
    }
}

TEST(Schedule, WarmupThenCosine) {
    TrainConfig c;
    c.epochs = 20;
    c.warmup_epochs = 4;
    c.learning_rate = 1e-3;
    c.min_learning_rate = 1e-5;
    EXPECT_NEAR(scheduled_learning_rate(c, 0), 1e-5 + (1e-3 - 1e-5) / 4, 1e-15);
    EXPECT_NEAR(scheduled_learning_rate(c, 3), 1e-3, 1e-15);
    EXPECT_NEAR(scheduled_learning_rate(c, 4), 1e-3, 1e-15);
    EXPECT_NEAR(scheduled_learning_rate(c, 19), 1e-5, 1e-15);
    for (int e = 4; e < 19; ++e) EXPECT_GE(scheduled_learning_rate(c, e), scheduled_learning_rate(c, e + 1));
}

TEST(Schedule, WarmRestartsRepeat) {
    TrainConfig c = TrainConfig::full_scale_preset();
    for (int e = 0; e < 250; e += 17) {
        EXPECT_EQ(scheduled_learning_rate(c, e), scheduled_learning_rate(c, e + 250));
    }
}

TEST(Dataset, LoadsScenesAndFiltersDirection) {
    TempDir dir("dataset");
    const SyntheticScene scene = generate_scene(1, {8, 8, 2.2, 9.0, 0.02});
    std::filesystem::create_directories(dir / "a");
    for (double ev : {-1.0, 0.0, 2.0}) {
        save_ldr(simulate_exposure(scene, EvStep(ev), true), dir / "a" / (format_ev(EvStep(ev)) + ".png"));
    }
    const auto scenes = load_dataset(dir.path());
    ASSERT_EQ(scenes.size(), 1u);
    EXPECT_EQ(scenes[0].name, "a");
    const auto inc = filter_for_direction(scenes, Direction::Increase);
    for (const auto& t : inc[0].targets) EXPECT_GE(t.ev.value(), 0.0);
    const auto dec = filter_for_direction(scenes, Direction::Decrease);
    for (const auto& t : dec[0].targets) EXPECT_LE(t.ev.value(), 0.0);

    std::filesystem::create_directories(dir / "b");
    save_ldr(simulate_exposure(scene, EvStep(1.0), true), dir / "b" / "+1.png");
    EXPECT_THROW(load_dataset(dir.path()), Error);
}

TEST(Train, LossDecreasesAndLogHasInitialRow) {
    TrainConfig c = tiny_config();
    c.epochs = 12;
    const TrainResult r = train(tiny_dataset(), c);
    ASSERT_EQ(r.log.size(), 13u);
    EXPECT_EQ(r.log[0].epoch, 0);
    EXPECT_LT(r.log.back().rec, r.log[0].rec);
    for (const auto& row : r.log) EXPECT_NEAR(row.total, row.rec + c.lambda_cycle * row.cyc, 1e-12);
}

TEST(Train, DeterministicForSeed) {
    TrainConfig c = tiny_config();
    const TrainResult a = train(tiny_dataset(), c), b = train(tiny_dataset(), c);
    ASSERT_EQ(a.log.size(), b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].total, b.log[i].total);
    c.seed = 2;
    const TrainResult d = train(tiny_dataset(), c);
    EXPECT_NE(d.log.back().total, a.log.back().total);
}

TEST(Train, RejectsWrongDirectionAndEmptyData) {
    TrainConfig c = tiny_config();
    c.direction = Direction::Decrease;
    EXPECT_THROW(train(tiny_dataset(), c), Error);
    EXPECT_THROW(train({}, tiny_config()), Error);
}

TEST(Train, LogCsvLayout) {
    TempDir dir("log");
    write_train_log_csv({{0, 0.5, 0.25, 0.525, 1e-4}}, dir / "log.csv");
    std::ifstream in(dir / "log.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header, "epoch,rec,cyc,total,lr");
    EXPECT_EQ(row, "0,0.5,0.25,0.525,0.0001");
}
