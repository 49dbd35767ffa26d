#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spinquant/embedding.hpp"
#include "spinquant/errors.hpp"
#include "spinquant/io.hpp"
#include "spinquant/mechsim.hpp"
#include "spinquant/metrics.hpp"
#include "spinquant/render.hpp"
#include "spinquant/spectral.hpp"
#include "spinquant/spiral.hpp"
#include "spinquant/svgplot.hpp"
#include "spinquant/types.hpp"

namespace spinquant {

// Exit codes: 0 success, 1 usage, 2 I/O, 3 numeric/stage failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitNumeric = 3;

namespace cli_detail {

/// Settings shared by subcommands; configuration precedence is
/// CLI flag > --config JSON file > built-in default, implemented by loading
/// the config file into these variables before CLI11 parses the flags.
struct Options {
    // simulate
    std::string preset = "3dp";
    std::uint64_t seed = 1;
    int runs = 1;
    std::string noise = "mri";
    double noise_level = std::nan(""); // NaN: per-kind default (mri .05, us .1)
    double blur_sigma = 1.0;
    double speckle_grain = 1.5;
    int resolution = 128;
    double duration = 0.0; // 0: preset value
    double fps = 0.0;      // 0: preset value
    double dt = 1e-3;
    int pgm_every = 0; // also export every Nth rendered frame as PGM
    bool dump_preset = false;

    // analyze
    std::string input;
    int target_side = 64;
    int knn = 0;
    double f_min = 0.25;
    double window_s = 8.0;
    double hop_s = 1.0;
    int pad_factor = 4;
    double knot_spacing = 2.0;
    double sample_hz = 10.0;

    // compare
    std::vector<std::string> group_a;
    std::vector<std::string> group_b;
    double grid_hz = 10.0;
    bool anova_per_run = false;

    // spiral
    double r0 = 0.003;
    double r1 = 0.020;
    double turns = 5.0;
    int samples_per_turn = 256;
    double stroke_mm = 0.5;
    bool as_written = false;

    std::string out;
};

inline void apply_config_file(const std::string& path, Options& o) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw parse_error("config file " + path + ": " + e.what(), 1);
    }
    for (const auto& [key, val] : j.items()) {
        if (key == "preset") o.preset = val.get<std::string>();
        else if (key == "seed") o.seed = val.get<std::uint64_t>();
        else if (key == "runs") o.runs = val.get<int>();
        else if (key == "noise") o.noise = val.get<std::string>();
        else if (key == "noise-level") o.noise_level = val.get<double>();
        else if (key == "blur-sigma") o.blur_sigma = val.get<double>();
        else if (key == "speckle-grain") o.speckle_grain = val.get<double>();
        else if (key == "resolution") o.resolution = val.get<int>();
        else if (key == "duration") o.duration = val.get<double>();
        else if (key == "fps") o.fps = val.get<double>();
        else if (key == "dt") o.dt = val.get<double>();
        else if (key == "target-side") o.target_side = val.get<int>();
        else if (key == "knn") o.knn = val.get<int>();
        else if (key == "f-min") o.f_min = val.get<double>();
        else if (key == "window") o.window_s = val.get<double>();
        else if (key == "hop") o.hop_s = val.get<double>();
        else if (key == "pad") o.pad_factor = val.get<int>();
        else if (key == "knot-spacing") o.knot_spacing = val.get<double>();
        else if (key == "sample-hz") o.sample_hz = val.get<double>();
        else if (key == "grid-hz") o.grid_hz = val.get<double>();
        else if (key == "anova-per-run") o.anova_per_run = val.get<bool>();
        else if (key == "r0") o.r0 = val.get<double>();
        else if (key == "r1") o.r1 = val.get<double>();
        else if (key == "turns") o.turns = val.get<double>();
        else if (key == "samples-per-turn") o.samples_per_turn = val.get<int>();
        else if (key == "stroke") o.stroke_mm = val.get<double>();
        else throw value_error("config file " + path + ": unknown key '" + key + "'");
    }
}

inline NoisePreset make_noise(const Options& o) {
    const NoiseKind kind = noise_kind_from_string(o.noise);
    NoisePreset np;
    np.kind = kind;
    np.blur_sigma = o.blur_sigma;
    np.speckle_grain = o.speckle_grain;
    if (std::isnan(o.noise_level))
        np.noise_level = kind == NoiseKind::mri ? 0.05 : (kind == NoiseKind::us ? 0.1 : 0.0);
    else
        np.noise_level = o.noise_level;
    return np;
}

inline int cmd_simulate(const Options& o) {
    const auto presets = builtin_presets();
    const SimPreset& preset = find_preset(presets, o.preset);

    if (o.dump_preset) {
        std::fputs((preset_to_json(preset).dump(2) + "\n").c_str(), stdout);
        return kExitOk;
    }
    if (o.out.empty())
        throw value_error("simulate: --out is required");
    if (o.runs < 1)
        throw value_error("simulate: --runs must be >= 1");

    const double duration = o.duration > 0.0 ? o.duration : preset.duration;
    const double fps = o.fps > 0.0 ? o.fps : preset.fps;
    const AngleTrace angles = simulate_release(preset.model, duration, o.dt);
    const VelocityTrace truth = derivative_trace(angles);

    BarGeometry geom;
    geom.resolution = o.resolution;
    const NoisePreset noise = make_noise(o);

    for (int r = 0; r < o.runs; ++r) {
        const std::string stem = o.out + "_run" + std::to_string(r);
        const ImageSequence seq =
            render_sequence(angles, geom, noise, fps, o.seed + static_cast<std::uint64_t>(r));
        write_sequence(seq, stem + ".mpsq");
        write_trace(truth, stem + "_truth.csv");
        for (const auto& w : seq.warnings)
            std::fprintf(stderr, "warning (%s): %s\n", stem.c_str(), w.c_str());
        if (o.pgm_every > 0)
            for (std::size_t k = 0; k < seq.size(); k += static_cast<std::size_t>(o.pgm_every))
                write_pgm(seq.frames[k], stem + "_frame" + std::to_string(k) + ".pgm");
    }
    return kExitOk;
}

inline int cmd_analyze(const Options& o) {
    if (o.input.empty() || o.out.empty())
        throw value_error("analyze: --in and --out are required");

    const ImageSequence seq = read_sequence(o.input);
    AnalysisConfig cfg;
    cfg.target_side = o.target_side;
    cfg.knn = o.knn;
    cfg.f_min_hz = o.f_min;
    cfg.window_s = o.window_s;
    cfg.hop_s = o.hop_s;
    cfg.pad_factor = o.pad_factor;
    cfg.knot_spacing_s = o.knot_spacing;
    cfg.sample_hz = o.sample_hz;

    const AnalyzeResult res = analyze(seq, cfg);

    write_text_file(encode_trace(res.velocity), o.out + "_velocity.csv");
    write_text_file(encode_embedding_csv(res.embedding), o.out + "_embedding.csv");
    write_text_file(encode_spectrogram_csv(res.spectrogram), o.out + "_spectrogram.csv");
    write_text_file(
        svg_line_plot(res.embedding.times, res.embedding.coords, "time (s)", "coordinate"),
        o.out + "_embedding.svg");
    write_text_file(
        svg_line_plot(res.velocity.times, res.velocity.velocities, "time (s)", "velocity (Hz)"),
        o.out + "_velocity.svg");

    nlohmann::ordered_json params;
    params["command"] = "analyze";
    params["input"] = o.input;
    params["config"] = {{"target_side", cfg.target_side},
                        {"knn", cfg.knn == 0 ? default_knn(static_cast<int>(seq.size())) : cfg.knn},
                        {"f_min_hz", cfg.f_min_hz},
                        {"window_s", cfg.window_s},
                        {"hop_s", cfg.hop_s},
                        {"pad_factor", cfg.pad_factor},
                        {"knot_spacing_s", cfg.knot_spacing_s},
                        {"sample_hz", cfg.sample_hz}};
    params["embedding"] = {{"eigenvalue", res.embedding.eigenvalue},
                           {"residual", res.embedding.residual}};
    params["spectrogram"] = {{"fs_hz", res.spectrogram.fs},
                             {"bin_width_hz", res.spectrogram.bin_width()},
                             {"windows", res.spectrogram.n_windows()},
                             {"bins", res.spectrogram.n_bins()}};
    params["aliasing_risk"] = res.aliasing_risk;
    params["warnings"] = res.warnings;
    write_text_file(params.dump(2) + "\n", o.out + "_params.json");

    for (const auto& w : res.warnings)
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    return kExitOk;
}

inline int cmd_compare(const Options& o) {
    if (o.group_a.size() < 2)
        throw value_error("compare: need at least 2 traces in group A (--a)");
    if (o.out.empty())
        throw value_error("compare: --out is required");

    const auto load_group = [](const std::vector<std::string>& paths) {
        std::vector<VelocityTrace> traces;
        for (const auto& p : paths) traces.push_back(read_trace(p));
        return traces;
    };
    const auto group_a = load_group(o.group_a);
    const auto group_b = load_group(o.group_b);

    ReportOptions ropt;
    ropt.grid_hz = o.grid_hz;
    ropt.anova_per_run_mean = o.anova_per_run;
    const ConsistencyReport rep = build_report(group_a, group_b, ropt);

    nlohmann::ordered_json j = report_to_json(rep);
    j["group_a_files"] = o.group_a;
    j["group_b_files"] = o.group_b;
    write_text_file(j.dump(2) + "\n", o.out + "_report.json");
    const std::string table = report_table(rep);
    write_text_file(table, o.out + "_table.txt");
    std::fputs(table.c_str(), stdout);
    return kExitOk;
}

inline int cmd_spiral(const Options& o) {
    if (o.out.empty())
        throw value_error("spiral: --out is required");
    if (!(o.r0 > 0.0) || !(o.r1 > o.r0))
        throw value_error("spiral: need 0 < r0 < r1");

    SpiralSpec spec;
    spec.r0 = o.r0;
    spec.r1 = o.r1;
    spec.turns = o.turns;
    spec.samples_per_turn = o.samples_per_turn;
    const auto pts = spiral_polyline(spec, !o.as_written);
    write_text_file(export_svg(pts, o.stroke_mm), o.out + ".svg");
    write_text_file(encode_points_csv(pts), o.out + ".csv");
    std::fprintf(stdout, "spiral: %zu points, %.4f m of material\n", pts.size(),
                 polyline_length(pts));
    return kExitOk;
}

} // namespace cli_detail

/// Entry point behind the spinquant executable; returns the process exit
/// code (0 success, 1 usage, 2 I/O, 3 numeric/stage failure).
inline int run_cli(const std::vector<std::string>& args) {
    cli_detail::Options o;

    // --config is honoured before flag parsing so flags override it.
    try {
        for (std::size_t i = 0; i + 1 < args.size(); ++i)
            if (args[i] == "--config")
                cli_detail::apply_config_file(args[i + 1], o);
    } catch (const io_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const parse_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }

    CLI::App app{"Rotary-motion quantification for mechanically powered imaging phantoms"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags take precedence)");

    auto* sim = app.add_subcommand("simulate", "Simulate a release and render an image sequence");
    sim->fallthrough();
    sim->add_option("--preset", o.preset, "Mechanism preset (3dp, lego)")->capture_default_str();
    sim->add_option("--seed", o.seed, "Master noise seed")->capture_default_str();
    sim->add_option("--runs", o.runs, "Number of seeded repetitions")->capture_default_str();
    sim->add_option("--noise", o.noise, "Noise preset: none, mri, us")->capture_default_str();
    sim->add_option("--noise-level", o.noise_level,
                    "Noise sigma relative to foreground (default 0.05 mri, 0.1 us)");
    sim->add_option("--blur-sigma", o.blur_sigma, "MRI blur sigma, pixels")->capture_default_str();
    sim->add_option("--speckle-grain", o.speckle_grain, "US speckle grain, pixels")
        ->capture_default_str();
    sim->add_option("--resolution", o.resolution, "Rendered image side, pixels")
        ->capture_default_str();
    sim->add_option("--duration", o.duration, "Override preset duration, s");
    sim->add_option("--fps", o.fps, "Override preset frame rate, Hz");
    sim->add_option("--dt", o.dt, "Integrator step, s")->capture_default_str();
    sim->add_option("--pgm-every", o.pgm_every, "Export every Nth frame as 16-bit PGM (0 = off)")
        ->capture_default_str();
    sim->add_flag("--dump-preset", o.dump_preset, "Print the preset as JSON and exit");
    sim->add_option("--out", o.out, "Output path prefix");

    auto* ana = app.add_subcommand("analyze", "Recover the velocity trace from an MPSQ sequence");
    ana->fallthrough();
    ana->add_option("--in", o.input, "Input .mpsq file")->required();
    ana->add_option("--out", o.out, "Output path prefix")->required();
    ana->add_option("--target-side", o.target_side, "Preprocess downsample size, pixels")
        ->capture_default_str();
    ana->add_option("--knn", o.knn, "Affinity graph neighbours (0 = max(10, 2% of n))")
        ->capture_default_str();
    ana->add_option("--f-min", o.f_min, "Lowest resolvable embedded frequency, Hz")
        ->capture_default_str();
    ana->add_option("--window", o.window_s, "STFT window, s (>= 2/f-min)")->capture_default_str();
    ana->add_option("--hop", o.hop_s, "STFT hop, s")->capture_default_str();
    ana->add_option("--pad", o.pad_factor, "STFT zero-padding factor")->capture_default_str();
    ana->add_option("--knot-spacing", o.knot_spacing, "Spline knot spacing, s")
        ->capture_default_str();
    ana->add_option("--sample-hz", o.sample_hz, "Output velocity sampling rate, Hz")
        ->capture_default_str();

    auto* cmp = app.add_subcommand("compare", "Consistency report across velocity traces");
    cmp->fallthrough();
    cmp->add_option("--a", o.group_a, "Group A velocity CSV files")->required()->expected(-1);
    cmp->add_option("--b", o.group_b, "Group B velocity CSV files (optional)")->expected(-1);
    cmp->add_option("--out", o.out, "Output path prefix")->required();
    cmp->add_option("--grid-hz", o.grid_hz, "Common resampling grid, Hz")->capture_default_str();
    cmp->add_flag("--anova-per-run", o.anova_per_run,
                  "ANOVA on per-run mean velocities instead of pooled per-time samples");

    auto* spi = app.add_subcommand("spiral", "Mainspring spiral profile (SVG + CSV)");
    spi->fallthrough();
    spi->add_option("--r0", o.r0, "Inner (axle) radius, m")->capture_default_str();
    spi->add_option("--r1", o.r1, "Outer radius, m")->capture_default_str();
    spi->add_option("--turns", o.turns, "Turns at rest")->capture_default_str();
    spi->add_option("--samples-per-turn", o.samples_per_turn, "Polyline samples per turn")
        ->capture_default_str();
    spi->add_option("--stroke", o.stroke_mm, "SVG stroke width, mm")->capture_default_str();
    spi->add_flag("--as-written", o.as_written, "Legacy spiral parameterization");
    spi->add_option("--out", o.out, "Output path prefix");

    std::vector<const char*> argv;
    argv.push_back("spinquant");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim->parsed()) return cli_detail::cmd_simulate(o);
        if (ana->parsed()) return cli_detail::cmd_analyze(o);
        if (cmp->parsed()) return cli_detail::cmd_compare(o);
        return cli_detail::cmd_spiral(o);
    } catch (const io_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const format_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const truncated_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const parse_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const value_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    }
}

} // namespace spinquant
