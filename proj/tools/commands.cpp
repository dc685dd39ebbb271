#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>

#include "cevr/error.hpp"
#include "cevr/experiments.hpp"
#include "cevr/fusion.hpp"
#include "cevr/io.hpp"
#include "cevr/metrics.hpp"
#include "cevr/stack.hpp"
#include "cevr/synthetic.hpp"
#include "cevr/tonemap.hpp"
#include "cevr/training.hpp"
#include "cevr/weights_io.hpp"

namespace fs = std::filesystem;

namespace cevr::cli {
namespace {

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::IoFailure:
        case ErrorKind::RankDeficient:
            return kExitRuntime;
        default:
            return kExitUsage;
    }
}

template <class F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        std::cerr << "cevr: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "cevr: " << e.what() << "\n";
        return kExitRuntime;
    }
}

bool is_ldr_file(const fs::path& p) {
    const auto ext = p.extension().string();
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<fs::path> ldr_files(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && is_ldr_file(e.path())) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void require_dir(const fs::path& dir, const char* what) {
    std::error_code ec;
    require(fs::is_directory(dir, ec), ErrorKind::FileNotFound,
            std::string(what) + " directory not found: " + dir.string());
}

void require_file(const fs::path& file, const char* what) {
    std::error_code ec;
    require(fs::is_regular_file(file, ec), ErrorKind::FileNotFound,
            std::string(what) + " not found: " + file.string());
}

void ensure_dir(const fs::path& dir) {
    if (dir.empty()) return;
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, ErrorKind::IoFailure, "cannot create directory " + dir.string() + ": " + ec.message());
}

LdrStack read_stack_dir(const fs::path& dir) {
    std::vector<StackEntry> entries;
    for (const auto& f : ldr_files(dir)) entries.push_back({load_ldr(f), parse_ev(f.stem().string())});
    return LdrStack(std::move(entries));
}

ModelWeights load_directed(const fs::path& path, Direction expected) {
    require_file(path, "weight file");
    ModelWeights w = load_weights(path);
    require(w.direction == expected, ErrorKind::ConfigMismatch,
            path.string() + " holds a " + to_string(w.direction) + " model, expected " + to_string(expected));
    return w;
}

}  // namespace

int cmd_train(const TrainArgs& a) {
    return guarded([&] {
        TrainConfig cfg = a.config.empty() ? TrainConfig{} : load_train_config(a.config);
        cfg.direction = parse_direction(a.direction);
        if (a.seed) cfg.seed = *a.seed;
        if (a.epochs) cfg.epochs = *a.epochs;
        cfg.validate();
        require_dir(a.data_dir, "data");
        require(!a.out_weights.empty(), ErrorKind::InvalidArgument, "no output weight path given");
        const auto dataset = filter_for_direction(load_dataset(a.data_dir), cfg.direction);
        const fs::path log_path = a.log_csv.empty()
                                      ? a.out_weights.parent_path() / (a.out_weights.stem().string() + "_log.csv")
                                      : a.log_csv;

        const TrainResult r = train(dataset, cfg, [&](const EpochLog& l) {
            if (!a.quiet) {
                std::fprintf(stderr, "epoch %d  rec %.6f  cyc %.6f  total %.6f  lr %.3g\n", l.epoch, l.rec, l.cyc,
                             l.total, l.lr);
            }
        });
        ensure_dir(a.out_weights.parent_path());
        ensure_dir(log_path.parent_path());
        save_weights(r.weights, a.out_weights);
        write_train_log_csv(r.log, log_path);
        return kExitOk;
    });
}

int cmd_stack(const StackArgs& a) {
    return guarded([&] {
        const StackMode mode = parse_stack_mode(a.mode);
        require_file(a.input, "input image");
        const ModelWeights inc = load_directed(a.weights_inc, Direction::Increase);
        const ModelWeights dec = load_directed(a.weights_dec, Direction::Decrease);
        const LdrImage input = load_ldr(a.input);
        const LdrStack stack = generate_stack(&inc, &dec, input, preset_evs(mode));

        ensure_dir(a.out_dir);
        for (const auto& e : stack.entries()) {
            const fs::path out = a.out_dir / (format_ev(e.ev) + ".png");
            if (e.ev.value() == 0.0 && a.input.extension() == ".png") {
                fs::copy_file(a.input, out, fs::copy_options::overwrite_existing);
            } else {
                save_ldr(e.image, out);
            }
        }
        return kExitOk;
    });
}

int cmd_fuse(const FuseArgs& a) {
    return guarded([&] {
        require_dir(a.stack_dir, "stack");
        const LdrStack stack = read_stack_dir(a.stack_dir);
        require(stack.size() >= 2, ErrorKind::InvalidArgument,
                "fusion needs at least 2 images in " + a.stack_dir.string());
        std::mt19937_64 rng(a.seed);
        const InverseCrf crf = solve_inverse_crf(sample_pixels(stack, a.samples, rng), a.lambda_smooth);
        const RadianceMap radiance = merge_radiance(stack, crf);
        ensure_dir(a.out_hdr.parent_path());
        write_radiance_rgbe(radiance, a.out_hdr);
        if (!a.export_crf.empty()) {
            ensure_dir(a.export_crf.parent_path());
            write_crf_csv(crf, a.export_crf);
        }
        return kExitOk;
    });
}

int cmd_tonemap(const TonemapArgs& a) {
    return guarded([&] {
        require(a.op == "rh" || a.op == "kk", ErrorKind::InvalidArgument,
                "unknown tone-mapping operator '" + a.op + "' (expected rh|kk)");
        require_file(a.hdr, "HDR file");
        const RadianceMap radiance = read_radiance_rgbe(a.hdr);
        LdrImage out;
        if (a.op == "rh") {
            ReinhardParams p;
            p.key = a.key;
            p.white = a.white;
            p.gamma = a.gamma;
            out = reinhard_global(radiance, p);
        } else {
            KimKautzParams p;
            p.display_max = a.display_max;
            p.display_min = a.display_min;
            p.gamma = a.gamma;
            out = kim_kautz(radiance, p);
        }
        ensure_dir(a.out_png.parent_path());
        save_ldr(out, a.out_png);
        return kExitOk;
    });
}

namespace {

struct EvalRow {
    std::string scene;
    std::string label;
    std::string metric;
    double value;
};

// Numeric EV labels first (ascending), then the tone-mapped HDR labels.
bool label_less(const std::string& a, const std::string& b) {
    const bool ha = a.rfind("HDR", 0) == 0, hb = b.rfind("HDR", 0) == 0;
    if (ha != hb) return hb;
    if (ha) return a > b;  // HDR-RH before HDR-KK
    return parse_ev(a) < parse_ev(b);
}

int metric_rank(const std::string& m) { return m == "psnr" ? 0 : m == "ssim" ? 1 : 2; }

void score(std::vector<EvalRow>& rows, const std::string& scene, const std::string& label, const LdrImage& pred,
           const LdrImage& gt) {
    rows.push_back({scene, label, "psnr", psnr(pred, gt)});
    rows.push_back({scene, label, "ssim", ssim(pred, gt)});
    rows.push_back({scene, label, "ms_ssim", ms_ssim(pred, gt)});
}

}  // namespace

int cmd_eval(const EvalArgs& a) {
    return guarded([&] {
        require_dir(a.pred_dir, "prediction");
        require_dir(a.gt_dir, "ground-truth");
        require(!a.report_csv.empty(), ErrorKind::InvalidArgument, "no report path given");

        // A directory holding images directly is a single scene.
        std::vector<std::pair<std::string, fs::path>> scenes;
        if (!ldr_files(a.pred_dir).empty()) scenes.emplace_back(".", fs::path{});
        std::vector<fs::path> subdirs;
        for (const auto& e : fs::directory_iterator(a.pred_dir)) {
            if (e.is_directory()) subdirs.push_back(e.path().filename());
        }
        std::sort(subdirs.begin(), subdirs.end());
        for (const auto& d : subdirs) scenes.emplace_back(d.string(), d);

        // Pair everything up before computing, so a missing counterpart fails
        // before any output is written.
        struct Job {
            std::string scene, label;
            fs::path pred, gt;
            bool hdr;
        };
        std::vector<Job> jobs;
        for (const auto& [name, rel] : scenes) {
            const fs::path pdir = a.pred_dir / rel, gdir = a.gt_dir / rel;
            const auto preds = ldr_files(pdir);
            const bool has_hdr = fs::is_regular_file(pdir / "hdr.hdr") && fs::is_regular_file(gdir / "hdr.hdr");
            if (preds.empty() && !has_hdr) continue;
            require_dir(gdir, "ground-truth scene");
            for (const auto& p : preds) {
                const EvStep ev = parse_ev(p.stem().string());
                fs::path match;
                for (const auto& g : ldr_files(gdir)) {
                    if (parse_ev(g.stem().string()) == ev) match = g;
                }
                require(!match.empty(), ErrorKind::FileNotFound,
                        "no ground truth for " + p.string() + " in " + gdir.string());
                jobs.push_back({name, format_ev(ev), p, match, false});
            }
            if (has_hdr) jobs.push_back({name, "HDR", pdir / "hdr.hdr", gdir / "hdr.hdr", true});
        }
        require(!jobs.empty(), ErrorKind::InvalidArgument,
                "nothing to compare: no prediction images with ground truth under " + a.pred_dir.string());

        std::vector<EvalRow> rows;
        for (const auto& j : jobs) {
            if (!j.hdr) {
                score(rows, j.scene, j.label, load_ldr(j.pred), load_ldr(j.gt));
                continue;
            }
            const RadianceMap p = read_radiance_rgbe(j.pred), g = read_radiance_rgbe(j.gt);
            score(rows, j.scene, "HDR-RH", reinhard_global(p), reinhard_global(g));
            score(rows, j.scene, "HDR-KK", kim_kautz(p), kim_kautz(g));
        }

        struct Key {
            std::string label, metric;
            bool operator<(const Key& o) const {
                if (label != o.label) return label_less(label, o.label);
                return metric_rank(metric) < metric_rank(o.metric);
            }
        };
        std::map<Key, std::vector<double>> groups;
        for (const auto& r : rows) groups[{r.label, r.metric}].push_back(r.value);

        experiments::Table summary{{"ev", "metric", "m", "sigma", "count"}, {}};
        for (const auto& [key, values] : groups) {
            const double n = static_cast<double>(values.size());
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= n;
            double var = 0.0;
            for (double v : values) var += (v - mean) * (v - mean);
            summary.rows.push_back({key.label, key.metric, experiments::format_number(mean),
                                    experiments::format_number(std::sqrt(var / n)), std::to_string(values.size())});
        }
        ensure_dir(a.report_csv.parent_path());
        summary.write_csv(a.report_csv);
        if (!a.rows_csv.empty()) {
            experiments::Table detail{{"scene", "ev", "metric", "value"}, {}};
            for (const auto& r : rows) {
                detail.rows.push_back({r.scene, r.label, r.metric, experiments::format_number(r.value)});
            }
            ensure_dir(a.rows_csv.parent_path());
            detail.write_csv(a.rows_csv);
        }
        return kExitOk;
    });
}

int cmd_reproduce(const ReproduceArgs& a) {
    return guarded([&] {
        const std::vector<std::string> known{"dense-stack", "ablation", "hold-out", "crf-curve"};
        require(std::find(known.begin(), known.end(), a.experiment) != known.end(), ErrorKind::InvalidArgument,
                "unknown experiment '" + a.experiment + "' (expected dense-stack|ablation|hold-out|crf-curve)");
        require(!a.work_dir.empty(), ErrorKind::InvalidArgument, "no work directory given");
        experiments::Options o;
        o.seed = a.seed;
        o.train_scenes = a.scenes;
        o.eval_scenes = a.eval_scenes;
        o.image_size = a.size;
        o.train.seed = a.seed;
        o.train.epochs = a.epochs;
        o.train.patch_size = a.patch;
        o.train.warmup_epochs = std::min(o.train.warmup_epochs, std::max(0, a.epochs - 1));
        o.train.validate();
        require(a.scenes >= 1 && a.eval_scenes >= 1, ErrorKind::InvalidArgument, "scene counts must be >= 1");
        require(a.size >= o.train.patch_size, ErrorKind::InvalidArgument, "--size must be at least --patch");

        int done = 0;
        const EpochCallback progress = [&](const EpochLog& l) {
            if (!a.quiet && l.epoch == a.epochs) std::fprintf(stderr, "model %d trained, loss %.6f\n", ++done, l.total);
        };
        ensure_dir(a.work_dir);
        if (a.experiment == "dense-stack") {
            experiments::dense_stack_table(experiments::run_dense_stack(o)).write_csv(a.work_dir / "dense_stack.csv");
        } else if (a.experiment == "ablation") {
            experiments::ablation_table(experiments::run_ablation(o, true, progress))
                .write_csv(a.work_dir / "ablation.csv");
        } else if (a.experiment == "hold-out") {
            experiments::hold_out_table(experiments::run_hold_out(o, progress)).write_csv(a.work_dir / "hold_out.csv");
        } else {
            const auto r = experiments::run_crf_curve(o);
            write_crf_csv(r.predefined, a.work_dir / "crf_predefined.csv");
            write_crf_csv(r.continuous, a.work_dir / "crf_continuous.csv");
            experiments::Table t{{"stack", "exposures", "smoothness_energy"}, {}};
            t.rows.push_back({"predefined", "7", experiments::format_number(r.predefined.smoothness_energy())});
            t.rows.push_back({"continuous", "13", experiments::format_number(r.continuous.smoothness_energy())});
            t.write_csv(a.work_dir / "crf_summary.csv");
        }
        return kExitOk;
    });
}

int cmd_synth(const SynthArgs& a) {
    return guarded([&] {
        require(a.scenes >= 1, ErrorKind::InvalidArgument, "--scenes must be >= 1");
        const auto scenes = experiments::make_scenes(a.seed, a.scenes, a.size, a.gamma);
        ensure_dir(a.out_dir);
        for (std::size_t i = 0; i < scenes.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "scene%03zu", i);
            const fs::path dir = a.out_dir / name;
            ensure_dir(dir);
            const LdrStack stack = simulate_stack(scenes[i], experiments::integer_evs(), true);
            for (const auto& e : stack.entries()) save_ldr(e.image, dir / (format_ev(e.ev) + ".png"));
            write_radiance_rgbe(scenes[i].radiance, dir / "hdr.hdr");
        }
        return kExitOk;
    });
}

int run(int argc, char** argv) {
    CLI::App app{"Single-image HDR toolkit: exposure re-rendering, stack fusion, tone mapping, metrics"};
    app.require_subcommand(1);

    TrainArgs train_args;
    std::uint64_t train_seed = 0;
    int train_epochs = 0;
    auto* train = app.add_subcommand("train", "Train one direction model");
    train->add_option("--config", train_args.config, "Training config file (key = value)");
    train->add_option("--data", train_args.data_dir, "Dataset root: <scene>/<EV>.png")->required();
    train->add_option("--out", train_args.out_weights, "Output weight file")->required();
    train->add_option("--log", train_args.log_csv, "Training log CSV (default: <out>_log.csv)");
    train->add_option("--direction", train_args.direction, "increase | decrease")->capture_default_str();
    auto* seed_opt = train->add_option("--seed", train_seed, "Override the config seed");
    auto* epochs_opt = train->add_option("--epochs", train_epochs, "Override the config epoch count");
    train->add_flag("--quiet", train_args.quiet, "No per-epoch progress");

    StackArgs stack_args;
    auto* stack = app.add_subcommand("stack", "Generate an LDR stack from one image");
    stack->add_option("--inc", stack_args.weights_inc, "Increase-direction weights")->required();
    stack->add_option("--dec", stack_args.weights_dec, "Decrease-direction weights")->required();
    stack->add_option("--input", stack_args.input, "EV-0 input image")->required();
    stack->add_option("--mode", stack_args.mode, "predefined | continuous")->capture_default_str();
    stack->add_option("--out", stack_args.out_dir, "Output directory")->required();

    FuseArgs fuse_args;
    auto* fuse = app.add_subcommand("fuse", "Recover the CRF and merge a stack into an HDR image");
    fuse->add_option("--stack", fuse_args.stack_dir, "Directory of <EV>.png images")->required();
    fuse->add_option("--out", fuse_args.out_hdr, "Output Radiance .hdr")->required();
    fuse->add_option("--lambda", fuse_args.lambda_smooth, "Smoothness weight")->capture_default_str();
    fuse->add_option("--samples", fuse_args.samples, "Pixel locations sampled")->capture_default_str();
    fuse->add_option("--export-crf", fuse_args.export_crf, "Write the inverse CRF as CSV");
    fuse->add_option("--seed", fuse_args.seed, "Sampling seed")->capture_default_str();

    TonemapArgs tm_args;
    double white = 0.0;
    auto* tonemap = app.add_subcommand("tonemap", "Tone-map a Radiance .hdr file");
    tonemap->add_option("--in", tm_args.hdr, "Input .hdr")->required();
    tonemap->add_option("--op", tm_args.op, "rh (Reinhard) | kk (Kim-Kautz)")->capture_default_str();
    tonemap->add_option("--out", tm_args.out_png, "Output PNG")->required();
    tonemap->add_option("--key", tm_args.key, "Reinhard key")->capture_default_str();
    auto* white_opt = tonemap->add_option("--white", white, "Reinhard white point (default: max)");
    tonemap->add_option("--dmax", tm_args.display_max, "Kim-Kautz display max")->capture_default_str();
    tonemap->add_option("--dmin", tm_args.display_min, "Kim-Kautz display min")->capture_default_str();
    tonemap->add_option("--gamma", tm_args.gamma, "Display gamma")->capture_default_str();

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "PSNR / SSIM / MS-SSIM report");
    eval->add_option("--pred", eval_args.pred_dir, "Prediction directory")->required();
    eval->add_option("--gt", eval_args.gt_dir, "Ground-truth directory")->required();
    eval->add_option("--out", eval_args.report_csv, "Summary CSV (ev,metric,m,sigma,count)")->required();
    eval->add_option("--rows-csv", eval_args.rows_csv, "Per-image CSV (scene,ev,metric,value)");

    ReproduceArgs rep_args;
    auto* reproduce = app.add_subcommand("reproduce", "Run a synthetic experiment");
    reproduce->add_option("experiment", rep_args.experiment, "dense-stack | ablation | hold-out | crf-curve")
        ->required();
    reproduce->add_option("--work", rep_args.work_dir, "Output directory")->required();
    reproduce->add_option("--seed", rep_args.seed, "Seed for scenes and training")->capture_default_str();
    reproduce->add_option("--epochs", rep_args.epochs, "Epochs per trained model")->capture_default_str();
    reproduce->add_option("--scenes", rep_args.scenes, "Training scenes")->capture_default_str();
    reproduce->add_option("--eval-scenes", rep_args.eval_scenes, "Evaluation scenes")->capture_default_str();
    reproduce->add_option("--size", rep_args.size, "Scene side in pixels")->capture_default_str();
    reproduce->add_option("--patch", rep_args.patch, "Training patch side")->capture_default_str();
    reproduce->add_flag("--quiet", rep_args.quiet, "No progress output");

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Write a synthetic dataset (<scene>/<EV>.png + hdr.hdr)");
    synth->add_option("--out", synth_args.out_dir, "Output directory")->required();
    synth->add_option("--scenes", synth_args.scenes, "Scene count")->capture_default_str();
    synth->add_option("--size", synth_args.size, "Scene side in pixels")->capture_default_str();
    synth->add_option("--gamma", synth_args.gamma, "CRF gamma")->capture_default_str();
    synth->add_option("--seed", synth_args.seed, "First scene seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (train->parsed()) {
        if (seed_opt->count()) train_args.seed = train_seed;
        if (epochs_opt->count()) train_args.epochs = train_epochs;
        return cmd_train(train_args);
    }
    if (stack->parsed()) return cmd_stack(stack_args);
    if (fuse->parsed()) return cmd_fuse(fuse_args);
    if (tonemap->parsed()) {
        if (white_opt->count()) tm_args.white = white;
        return cmd_tonemap(tm_args);
    }
    if (eval->parsed()) return cmd_eval(eval_args);
    if (reproduce->parsed()) return cmd_reproduce(rep_args);
    return cmd_synth(synth_args);
}

}  // namespace cevr::cli
