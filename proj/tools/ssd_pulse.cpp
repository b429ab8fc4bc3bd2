// Command-line front end: synthetic data generation, model forward pass,
// evaluation pipeline, and the SSD formulation benchmark.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "ssdpulse/bench.hpp"
#include "ssdpulse/dsp.hpp"
#include "ssdpulse/model.hpp"
#include "ssdpulse/synth.hpp"
#include "ssdpulse/threads.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ssdpulse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct SynthFlags {
    double hr = 72.0, seconds = 30.0, fps = 30.0, noise = 0.0, motion = 0.0,
           harmonic = 0.3;
    std::int64_t count = 1;
    std::string out;
};

struct ForwardFlags {
    std::string clip, out, ckpt;
    std::int64_t init_seed = -1;
    double fps = 30.0;
};

struct EvalFlags {
    std::vector<std::string> pred, label;
    double fs = 30.0, band_lo = 0.75, band_hi = 2.5;
    std::string out;
};

struct BenchFlags {
    int reps = 3;
    std::string out;
};

struct GlobalFlags {
    std::string config;
    std::uint64_t seed = 1;
    int threads = 0;
};

int cmd_synth(const SynthFlags& f, const GlobalFlags& g) {
    if (f.out.empty()) {
        std::cerr << "error: synth requires --out\n";
        return kExitUsage;
    }
    if (f.count < 1) {
        std::cerr << "error: --count must be >= 1\n";
        return kExitUsage;
    }
    std::error_code ec;
    fs::create_directories(f.out, ec);
    if (ec) {
        std::cerr << "error: cannot create " << f.out << ": " << ec.message() << "\n";
        return kExitUsage;
    }
    json manifest;
    manifest["fps"] = f.fps;
    json clips = json::array();
    for (std::int64_t i = 0; i < f.count; ++i) {
        SynthSpec spec;
        spec.hr_bpm = f.hr;
        spec.duration_s = f.seconds;
        spec.fps = f.fps;
        spec.noise_std = f.noise;
        spec.motion_amp = f.motion;
        spec.harmonic_ratio = f.harmonic;
        spec.seed = g.seed + static_cast<std::uint64_t>(i);
        SynthClip sc = gen_video(spec);
        char id[32];
        std::snprintf(id, sizeof(id), "clip_%04lld", static_cast<long long>(i));
        const std::string clip_file = std::string(id) + ".ptnsr";
        const std::string label_file = std::string(id) + "_label.csv";
        write_ptnsr((fs::path(f.out) / clip_file).string(), sc.clip.data);
        write_waveform_csv((fs::path(f.out) / label_file).string(), sc.label);
        clips.push_back({{"id", id},
                         {"seed", spec.seed},
                         {"hr_bpm", spec.hr_bpm},
                         {"fps", spec.fps},
                         {"frames", spec.frame_count()},
                         {"noise_std", spec.noise_std},
                         {"motion_amp", spec.motion_amp},
                         {"harmonic_ratio", spec.harmonic_ratio},
                         {"clip", clip_file},
                         {"label", label_file}});
    }
    manifest["clips"] = clips;
    atomic_write_file((fs::path(f.out) / "manifest.json").string(),
                      manifest.dump(2) + "\n");
    std::cout << "wrote " << f.count << " clip(s) to " << f.out << "\n";
    return kExitOk;
}

int cmd_forward(const ForwardFlags& f, const GlobalFlags& g) {
    if (f.clip.empty() || f.out.empty()) {
        std::cerr << "error: forward requires --clip and --out\n";
        return kExitUsage;
    }
    if (f.ckpt.empty() == (f.init_seed < 0)) {
        std::cerr << "error: forward needs exactly one of --ckpt or --init-seed\n";
        return kExitUsage;
    }
    if (!fs::exists(f.clip)) {
        std::cerr << "error: clip file " << f.clip << " does not exist\n";
        return kExitUsage;
    }
    if (!f.ckpt.empty() && !fs::exists(fs::path(f.ckpt) / "manifest.json")) {
        std::cerr << "error: checkpoint " << f.ckpt << " has no manifest.json\n";
        return kExitUsage;
    }
    (void)g;
    VideoClip clip;
    clip.data = read_ptnsr(f.clip);
    clip.fps = f.fps;
    PhysMambaConfig cfg;
    PhysMambaWeights weights;
    if (!f.ckpt.empty()) {
        LoadedCheckpoint ck = load_checkpoint(f.ckpt);
        cfg = ck.config;
        weights = std::move(ck.weights);
    } else {
        // fresh weights carry no shape commitments, so size the config to
        // the clip at hand
        if (clip.data.rank() == 4) {
            cfg.clip_len = clip.data.dim(1);
            cfg.input_h = clip.data.dim(2);
            cfg.input_w = clip.data.dim(3);
        }
        cfg.validate();
        weights = init_weights(cfg, static_cast<std::uint64_t>(f.init_seed));
    }
    BvpSignal pred = forward(clip, weights, cfg);
    write_waveform_csv(f.out, pred);
    std::cout << "wrote " << pred.samples.size() << " samples to " << f.out << "\n";
    return kExitOk;
}

BvpSignal load_signal(const std::string& path, double fallback_fs) {
    if (path.size() >= 6 && path.substr(path.size() - 6) == ".ptnsr") {
        Tensor t = read_ptnsr(path);
        if (t.rank() != 1) {
            throw ShapeError(path + ": expected a 1-d waveform, got " + t.shape_str());
        }
        BvpSignal s;
        s.fs = fallback_fs;
        s.samples.assign(t.data(), t.data() + t.numel());
        return s;
    }
    return read_waveform_csv(path);
}

int cmd_eval(const EvalFlags& f, const GlobalFlags&) {
    if (f.pred.empty() || f.pred.size() != f.label.size()) {
        std::cerr << "error: eval needs matching --pred/--label lists\n";
        return kExitUsage;
    }
    if (f.out.empty()) {
        std::cerr << "error: eval requires --out\n";
        return kExitUsage;
    }
    for (const auto& p : f.pred) {
        if (!fs::exists(p)) {
            std::cerr << "error: prediction file " << p << " does not exist\n";
            return kExitUsage;
        }
    }
    for (const auto& p : f.label) {
        if (!fs::exists(p)) {
            std::cerr << "error: label file " << p << " does not exist\n";
            return kExitUsage;
        }
    }
    std::error_code ec;
    fs::create_directories(f.out, ec);
    if (ec) {
        std::cerr << "error: cannot create " << f.out << ": " << ec.message() << "\n";
        return kExitUsage;
    }
    // data-dependent failures below (band/fs inconsistencies etc.) are data
    // errors, not usage errors
    try {
        const HrBand band{f.band_lo, f.band_hi};
        std::vector<ClipResult> rows;
        std::vector<double> pred_hrs, gt_hrs, snrs;
        for (std::size_t i = 0; i < f.pred.size(); ++i) {
            BvpSignal pred = load_signal(f.pred[i], f.fs);
            BvpSignal label = load_signal(f.label[i], f.fs);
            FilterCoeffs coeffs = butter_bandpass_coeffs(band.lo_hz, band.hi_hz, pred.fs);
            BvpSignal pred_f = filtfilt(pred, coeffs);
            const double gt_hr = hr_from_signal(label, band);
            const double pred_hr = estimate_hr_bpm(
                welch_psd(pred_f, std::min<std::int64_t>(
                                      256, static_cast<std::int64_t>(
                                               pred_f.samples.size()))),
                band);
            ClipResult r;
            r.clip_id = fs::path(f.pred[i]).stem().string();
            r.gt_hr = gt_hr;
            r.pred_hr = pred_hr;
            r.snr_db = snr_db(pred_f, gt_hr);
            rows.push_back(r);
            pred_hrs.push_back(pred_hr);
            gt_hrs.push_back(gt_hr);
            snrs.push_back(r.snr_db);
        }
        MetricsReport report = metrics_report(pred_hrs, gt_hrs, snrs);
        write_per_clip_csv((fs::path(f.out) / "per_clip.csv").string(), rows);
        write_summary_json((fs::path(f.out) / "summary.json").string(), report);
        write_bland_altman_csv((fs::path(f.out) / "bland_altman.csv").string(), rows);
        std::cout << format_metrics_row(report) << "\n";
        return kExitOk;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const CorrelationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}

int cmd_bench(const BenchFlags& f, const GlobalFlags& g) {
    SsdConfig cfg;
    const std::vector<std::int64_t> lengths{512, 1024, 2048, 4096};
    SsdBenchResult res = run_ssd_bench(cfg, lengths, f.reps, g.seed);
    const std::string csv = bench_csv(res);
    if (!f.out.empty()) {
        atomic_write_file(f.out, csv);
    }
    std::cout << csv;
    std::printf("max_rel_err %.3g (< 1e-4)\n", res.max_rel_err);
    std::printf("chunked ratio T=4096/T=512: %.2f (<= 12)\n", res.chunked_ratio);
    std::printf("quadratic ratio T=4096/T=512: %.2f (>= 30)\n", res.quadratic_ratio);
    const bool ok = res.max_rel_err < 1e-4 && res.chunked_ratio <= 12.0 &&
                    res.quadratic_ratio >= 30.0;
    std::printf("scaling criteria: %s\n", ok ? "PASS" : "FAIL");
    return ok ? kExitOk : 1;
}

// JSON config overlay: fills in flags the user did not pass on the command
// line. Returns tokens to insert after the subcommand name.
std::vector<std::string> overlay_tokens(const json& cfg,
                                        const std::vector<std::string>& allowed,
                                        const std::vector<std::string>& user_args) {
    if (!cfg.is_object()) {
        throw ArgumentError("config file must hold a JSON object");
    }
    auto user_passed = [&user_args](const std::string& key) {
        const std::string flag = "--" + key;
        for (const auto& a : user_args) {
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        }
        return false;
    };
    std::vector<std::string> tokens;
    for (const auto& [key, value] : cfg.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ArgumentError("config file: unknown key '" + key + "'");
        }
        if (user_passed(key)) continue;  // flags override file values
        auto push_scalar = [&tokens, &key](const json& v) {
            tokens.push_back("--" + key);
            if (v.is_string()) {
                tokens.push_back(v.get<std::string>());
            } else {
                tokens.push_back(v.dump());
            }
        };
        if (value.is_array()) {
            for (const auto& v : value) push_scalar(v);
        } else {
            push_scalar(value);
        }
    }
    return tokens;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dual-pathway state-space rPPG toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags are accepted after the subcommand

    GlobalFlags g;
    app.add_option("--config", g.config, "JSON config overlay (flags win)");
    app.add_option("--seed", g.seed, "base RNG seed");
    CLI::Option* threads_opt =
        app.add_option("--threads", g.threads,
                       "worker threads (default: SSD_PULSE_THREADS or hardware)");

    SynthFlags sf;
    CLI::App* synth = app.add_subcommand("synth", "generate synthetic clips");
    synth->add_option("--hr", sf.hr, "heart rate, bpm");
    synth->add_option("--seconds", sf.seconds, "clip duration");
    synth->add_option("--fps", sf.fps, "frame rate");
    synth->add_option("--noise", sf.noise, "noise level");
    synth->add_option("--motion", sf.motion, "jitter amplitude, px");
    synth->add_option("--harmonic", sf.harmonic, "first-harmonic ratio");
    synth->add_option("--count", sf.count, "number of clips");
    synth->add_option("--out", sf.out, "output directory");

    ForwardFlags ff;
    CLI::App* fwd = app.add_subcommand("forward", "run the model on a clip");
    fwd->add_option("--clip", ff.clip, "input clip (.ptnsr)");
    fwd->add_option("--out", ff.out, "output waveform CSV");
    fwd->add_option("--ckpt", ff.ckpt, "checkpoint directory");
    fwd->add_option("--init-seed", ff.init_seed, "random weights from this seed");
    fwd->add_option("--fps", ff.fps, "clip frame rate");

    EvalFlags ef;
    CLI::App* eval = app.add_subcommand("eval", "evaluate predictions");
    eval->add_option("--pred", ef.pred, "prediction waveform files");
    eval->add_option("--label", ef.label, "label waveform files");
    eval->add_option("--fs", ef.fs, "sample rate for headerless inputs");
    eval->add_option("--band-lo", ef.band_lo, "HR band low edge, Hz");
    eval->add_option("--band-hi", ef.band_hi, "HR band high edge, Hz");
    eval->add_option("--out", ef.out, "output directory");

    BenchFlags bf;
    CLI::App* bench = app.add_subcommand("bench", "time the SSD formulations");
    bench->add_option("--reps", bf.reps, "repetitions per measurement");
    bench->add_option("--out", bf.out, "also write the CSV here");

    const std::map<std::string, std::vector<std::string>> overlay_keys = {
        {"synth", {"seed", "threads", "hr", "seconds", "fps", "noise", "motion",
                   "harmonic", "count", "out"}},
        {"forward", {"seed", "threads", "clip", "out", "ckpt", "init-seed", "fps"}},
        {"eval", {"seed", "threads", "pred", "label", "fs", "band-lo", "band-hi",
                  "out"}},
        {"bench", {"seed", "threads", "reps", "out"}},
    };

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        // locate --config and the subcommand before the real parse so the
        // file's values can be spliced in as defaults
        std::string config_path;
        std::size_t sub_at = args.size();
        std::string sub_name;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--config" && i + 1 < args.size()) {
                config_path = args[i + 1];
            } else if (args[i].rfind("--config=", 0) == 0) {
                config_path = args[i].substr(9);
            } else if (sub_name.empty() && overlay_keys.count(args[i])) {
                sub_name = args[i];
                sub_at = i;
            }
        }
        if (!config_path.empty() && !sub_name.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "error: cannot open config " << config_path << "\n";
                return kExitUsage;
            }
            json cfg;
            try {
                in >> cfg;
            } catch (const json::exception& e) {
                std::cerr << "error: config " << config_path << ": " << e.what()
                          << "\n";
                return kExitUsage;
            }
            std::vector<std::string> user_args(args.begin() + sub_at + 1, args.end());
            std::vector<std::string> extra =
                overlay_tokens(cfg, overlay_keys.at(sub_name), user_args);
            args.insert(args.begin() + sub_at + 1, extra.begin(), extra.end());
        }

        // CLI11 parses reversed argv
        std::vector<std::string> rargs(args.rbegin(), args.rend());
        try {
            app.parse(rargs);
        } catch (const CLI::ParseError& e) {
            const int code = app.exit(e);
            return code == 0 ? kExitOk : kExitUsage;
        }

        if (threads_opt->count() == 0) {
            if (const char* env = std::getenv("SSD_PULSE_THREADS")) {
                try {
                    g.threads = std::stoi(env);
                } catch (const std::exception&) {
                    std::cerr << "error: SSD_PULSE_THREADS is not a number: " << env
                              << "\n";
                    return kExitUsage;
                }
            }
        }
        set_thread_count(g.threads);
        if (synth->parsed()) return cmd_synth(sf, g);
        if (fwd->parsed()) return cmd_forward(ff, g);
        if (eval->parsed()) return cmd_eval(ef, g);
        if (bench->parsed()) return cmd_bench(bf, g);
        std::cerr << "error: no subcommand\n";
        return kExitUsage;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const CorrelationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
