#include "commands.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "patchtrack/bench.hpp"
#include "patchtrack/config.hpp"
#include "patchtrack/error.hpp"
#include "patchtrack/overlay.hpp"
#include "patchtrack/synthetic.hpp"
#include "patchtrack/tracker.hpp"

namespace fs = std::filesystem;

namespace patchtrack::cli {

namespace {

struct UsageError : Error {
    using Error::Error;
};

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

// Write to a sibling temp file, then rename over the target.
void write_atomically(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << text;
        if (!out) throw IoError("failed writing " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

int thread_setting(int flag) {
    if (flag >= 0) return flag;
    if (const char* env = std::getenv("PATCHTRACK_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v >= 0) return v;
        } catch (const std::exception&) {
        }
        throw UsageError("PATCHTRACK_THREADS must be a nonnegative integer");
    }
    return 0;
}

struct TrackArgs {
    std::string seq;
    std::string init;
    bool gt_init = false;
    std::string out;
    std::string config;
    std::optional<std::uint64_t> seed;
    int threads = -1;
    int max_frames = 0;
    bool quiet = false;
};

int cmd_track(const TrackArgs& a) {
    if (a.gt_init == !a.init.empty()) throw UsageError("track needs exactly one of --init or --gt-init");

    TrackerConfig cfg;
    if (!a.config.empty()) cfg = load_config(a.config);
    if (a.seed) cfg.seed = *a.seed;
    cfg.threads = thread_setting(a.threads);
    cfg.validate();

    const Sequence seq = load_sequence(a.seq, a.gt_init);
    Box init;
    if (a.gt_init) {
        if (seq.ground_truth.empty()) throw IoError("ground truth of " + a.seq + " is empty");
        init = seq.ground_truth.front();
    } else {
        try {
            init = parse_box(a.init);
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--init: ") + e.what());
        }
        init.x -= 1.0;  // same 1-based convention as ground-truth files
        init.y -= 1.0;
    }

    std::size_t n_frames = seq.frames.size();
    if (a.max_frames > 0) n_frames = std::min<std::size_t>(n_frames, static_cast<std::size_t>(a.max_frames));

    const fs::path out_dir(a.out);
    ensure_dir(out_dir);

    using Clock = std::chrono::steady_clock;
    std::vector<double> ms;
    std::vector<TrackRecord> records;
    ms.reserve(n_frames);

    auto t0 = Clock::now();
    GrayImage frame = load_gray(seq.frames[0]);
    Tracker tracker(frame, init, cfg);
    records.push_back(tracker.history().front());
    ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());

    for (std::size_t f = 1; f < n_frames; ++f) {
        t0 = Clock::now();
        frame = load_gray(seq.frames[f]);
        try {
            records.push_back(tracker.step(frame));
        } catch (const DimensionError& e) {
            throw IoError(seq.frames[f].string() + ": " + e.what());
        }
        ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
        if (!a.quiet && (f % 25 == 0 || f + 1 == n_frames))
            std::cerr << "frame " << f + 1 << "/" << n_frames << "  " << ms.back() << " ms\n";
    }

    std::vector<int> indices;
    std::vector<Box> boxes;
    for (const auto& r : records) {
        indices.push_back(r.frame_index);
        boxes.push_back(r.box);
    }
    write_results(out_dir / "results.txt", indices, boxes);

    std::ofstream diag(out_dir / "diagnostics.csv");
    if (!diag) throw IoError("cannot write diagnostics in " + out_dir.string());
    diag << "frame,gamma,clear_small,clear_large,likelihood,dictionary_gate,degenerate,ms\n";
    char line[256];
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%.6f,%.8f,%d,%d,%.3f\n", r.frame_index, r.gamma,
                      r.clear_small, r.clear_large, r.likelihood, r.dictionary_gate ? 1 : 0,
                      r.degenerate ? 1 : 0, ms[i]);
        diag << line;
    }
    if (!diag) throw IoError("failed writing diagnostics");

    double total_ms = 0.0;
    for (double v : ms) total_ms += v;
    nlohmann::json manifest;
    manifest["sequence"] = fs::absolute(a.seq).string();
    manifest["config"] = a.config.empty() ? nlohmann::json(nullptr) : nlohmann::json(fs::absolute(a.config).string());
    manifest["output_dir"] = fs::absolute(out_dir).string();
    manifest["seed"] = cfg.seed;
    manifest["frames"] = records.size();
    manifest["init_box"] = {init.x + 1.0, init.y + 1.0, init.w, init.h};
    manifest["effective_config"] = nlohmann::json::parse(config_to_json(cfg));
    manifest["timing_ms"] = ms;
    manifest["fps"] = total_ms > 0.0 ? 1000.0 * static_cast<double>(records.size()) / total_ms : 0.0;
    write_atomically(out_dir / "manifest.json", manifest.dump(2) + "\n");

    if (!a.quiet)
        std::cerr << "tracked " << records.size() << " frames, " << manifest["fps"].get<double>() << " fps\n";
    return kOk;
}

int cmd_eval(const std::string& results, const std::string& gt_path, const std::string& out) {
    const std::vector<Box> track = read_results(results);
    const std::vector<Box> gt = read_ground_truth(gt_path);
    if (track.size() != gt.size())
        throw IoError("results have " + std::to_string(track.size()) + " boxes but ground truth has " +
                      std::to_string(gt.size()));
    const MetricCurves curves = compute_curves(track, gt);
    const fs::path out_dir(out);
    ensure_dir(out_dir);
    write_curve_csv(out_dir / "precision.csv", curves.precision_thresholds, curves.precision);
    write_curve_csv(out_dir / "success.csv", curves.success_thresholds, curves.success);
    const std::string summary = format_summary(curves);
    write_atomically(out_dir / "summary.txt", summary + "\n");
    std::cout << summary << "\n";
    return kOk;
}

int cmd_overlay(const std::string& seq_dir, const std::string& results, const std::string& gt_path,
                const std::string& out) {
    const Sequence seq = load_sequence(seq_dir, false);
    const std::vector<Box> track = read_results(results);
    std::vector<Box> gt;
    if (!gt_path.empty()) gt = read_ground_truth(gt_path);

    const fs::path out_dir(out);
    ensure_dir(out_dir);
    const RgbImage::Color red{255, 0, 0};
    const RgbImage::Color green{0, 255, 0};
    const std::size_t n = std::min(seq.frames.size(), track.size());
    for (std::size_t f = 0; f < n; ++f) {
        RgbImage img = RgbImage::from_gray(load_gray(seq.frames[f]));
        if (f < gt.size()) draw_box(img, gt[f], green);
        draw_box(img, track[f], red);
        char name[32];
        std::snprintf(name, sizeof name, "%04zu.png", f + 1);
        save_rgb(out_dir / name, img);
    }
    return kOk;
}

int cmd_synth(const std::string& out, int frames, int occ_first, int occ_last, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.frames = frames;
    spec.seed = seed;
    spec.occlusion.first_frame = occ_first;
    spec.occlusion.last_frame = occ_last;
    write_sequence(out, make_synthetic(spec));
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Patchwise joint-sparse object tracker"};
    app.require_subcommand(1);

    TrackArgs track;
    auto* track_cmd = app.add_subcommand("track", "Track a target through an image sequence");
    track_cmd->add_option("--seq", track.seq, "Sequence directory")->required();
    track_cmd->add_option("--init", track.init, "Initial box x,y,w,h (1-based, like groundtruth_rect.txt)");
    track_cmd->add_flag("--gt-init", track.gt_init, "Initialise from the first ground-truth line");
    track_cmd->add_option("--out", track.out, "Output directory")->required();
    track_cmd->add_option("--config", track.config, "JSON config overriding the defaults");
    track_cmd->add_option("--seed", track.seed, "Random seed");
    track_cmd->add_option("--threads", track.threads, "Scoring threads, 0 = auto (default: $PATCHTRACK_THREADS or auto)");
    track_cmd->add_option("--frames", track.max_frames, "Stop after this many frames");
    track_cmd->add_flag("--quiet", track.quiet, "No progress output");

    std::string results, gt, out, seq_dir;
    auto* eval_cmd = app.add_subcommand("eval", "Precision/success curves of a results file");
    eval_cmd->add_option("--results", results, "Results file")->required();
    eval_cmd->add_option("--gt", gt, "Ground-truth file")->required();
    eval_cmd->add_option("--out", out, "Output directory")->required();

    std::string ov_results, ov_gt, ov_out;
    auto* overlay_cmd = app.add_subcommand("overlay", "Draw result (red) and ground-truth (green) boxes");
    overlay_cmd->add_option("--seq", seq_dir, "Sequence directory")->required();
    overlay_cmd->add_option("--results", ov_results, "Results file")->required();
    overlay_cmd->add_option("--gt", ov_gt, "Ground-truth file");
    overlay_cmd->add_option("--out", ov_out, "Output directory")->required();

    std::string syn_out;
    int syn_frames = 200, occ_first = 0, occ_last = 0;
    std::uint64_t syn_seed = 7;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic test sequence");
    synth_cmd->add_option("--out", syn_out, "Output sequence directory")->required();
    synth_cmd->add_option("--frames", syn_frames, "Frame count");
    synth_cmd->add_option("--occlude-from", occ_first, "First occluded frame (1-based)");
    synth_cmd->add_option("--occlude-to", occ_last, "Last occluded frame");
    synth_cmd->add_option("--seed", syn_seed, "Texture seed");

    std::vector<const char*> argv;
    for (const auto& s : args) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kBadArguments;
    }

    try {
        if (track_cmd->parsed()) return cmd_track(track);
        if (eval_cmd->parsed()) return cmd_eval(results, gt, out);
        if (overlay_cmd->parsed()) return cmd_overlay(seq_dir, ov_results, ov_gt, ov_out);
        if (synth_cmd->parsed()) return cmd_synth(syn_out, syn_frames, occ_first, occ_last, syn_seed);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadArguments;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadArguments;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericFailure;
    } catch (const InvalidStateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericFailure;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kBadArguments;
}

}  // namespace patchtrack::cli
