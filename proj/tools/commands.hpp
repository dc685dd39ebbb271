#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace cevr::cli {

// 0 success, 2 usage or validation failure, 1 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct TrainArgs {
    std::filesystem::path config;  // empty: defaults
    std::filesystem::path data_dir;
    std::filesystem::path out_weights;
    std::filesystem::path log_csv;  // empty: <out_weights stem>_log.csv next to it
    std::string direction = "increase";
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;
    bool quiet = false;
};

struct StackArgs {
    std::filesystem::path weights_inc;
    std::filesystem::path weights_dec;
    std::filesystem::path input;
    std::string mode = "predefined";
    std::filesystem::path out_dir;
};

struct FuseArgs {
    std::filesystem::path stack_dir;
    std::filesystem::path out_hdr;
    double lambda_smooth = 100.0;
    int samples = 200;
    std::filesystem::path export_crf;  // empty: none
    std::uint64_t seed = 1;
};

struct TonemapArgs {
    std::filesystem::path hdr;
    std::string op = "rh";
    std::filesystem::path out_png;
    double key = 0.18;
    std::optional<double> white;
    double display_max = 300.0;
    double display_min = 0.3;
    double gamma = 2.2;
};

struct EvalArgs {
    std::filesystem::path pred_dir;
    std::filesystem::path gt_dir;
    std::filesystem::path report_csv;
    std::filesystem::path rows_csv;  // empty: none
};

struct ReproduceArgs {
    std::string experiment;
    std::filesystem::path work_dir;
    std::uint64_t seed = 1;
    int epochs = 60;
    int scenes = 8;
    int eval_scenes = 4;
    int size = 64;
    int patch = 32;
    bool quiet = false;
};

struct SynthArgs {
    std::filesystem::path out_dir;
    int scenes = 8;
    int size = 64;
    double gamma = 2.2;
    std::uint64_t seed = 1;
};

int cmd_train(const TrainArgs& args);
int cmd_stack(const StackArgs& args);
int cmd_fuse(const FuseArgs& args);
int cmd_tonemap(const TonemapArgs& args);
int cmd_eval(const EvalArgs& args);
int cmd_reproduce(const ReproduceArgs& args);
int cmd_synth(const SynthArgs& args);

// Parses argv and dispatches; returns the process exit code.
int run(int argc, char** argv);

}  // namespace cevr::cli
