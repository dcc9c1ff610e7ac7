#include "xwalk/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "xwalk/geometry.hpp"
#include "xwalk/pipeline.hpp"
#include "xwalk/report.hpp"
#include "xwalk/synthetic.hpp"

namespace xwalk {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Thrown to leave a command with a specific exit code after printing `what`.
struct Exit {
    int code;
    std::string what;
};

double elapsed_ms(std::chrono::steady_clock::time_point since)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

void write_file(const fs::path& p, const std::string& content)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << content;
    if (!out) throw IoError("write failed for " + p.string());
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

// File stems, de-duplicated in input order.
std::vector<std::string> labels_for(const std::vector<std::string>& inputs)
{
    std::vector<std::string> labels;
    for (const auto& in : inputs) {
        std::string base = fs::path(in).stem().string();
        std::string label = base;
        for (int k = 2; std::find(labels.begin(), labels.end(), label) != labels.end(); ++k)
            label = fmt::format("{}_{}", base, k);
        labels.push_back(label);
    }
    return labels;
}

std::string quote_csv(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string fraction(long num, long den)
{
    const long g = std::gcd(num, den);
    return fmt::format("{}/{}", num / g, den / g);
}

// ---- calibrate -------------------------------------------------------------

int cmd_calibrate(const std::string& config_path, std::ostream& out)
{
    const SceneConfig cfg = load_scene_config(config_path);
    const Homography h = estimate_homography(cfg.anchors);

    out << "homography (image -> overhead pixels):\n";
    for (int r = 0; r < 3; ++r)
        out << fmt::format("  [ {:>16.9g} {:>16.9g} {:>16.9g} ]\n", h(r, 0), h(r, 1), h(r, 2));
    out << "anchor residuals (px):\n";
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& a = cfg.anchors[i];
        const OverheadPoint q = project(h, a.image);
        out << fmt::format("  anchors[{}] ({}, {}) -> ({}, {}): {:.3e}\n", i, a.image.x, a.image.y,
                           a.overhead.x, a.overhead.y, distance(q, a.overhead));
    }
    out << fmt::format("max residual: {:.3e} px (tolerance {:.0e})\n", max_anchor_residual(h, cfg.anchors),
                       kAnchorTolerancePx);

    const double F = cfg.frame_interval();
    std::string f_exact;
    if (std::floor(cfg.source_fps) == cfg.source_fps)
        f_exact = fmt::format(" = {} s", fraction(cfg.stride, static_cast<long>(cfg.source_fps)));
    out << fmt::format("frame interval F = stride / fps = {} / {}{} = {:.6f} s\n", cfg.stride, cfg.source_fps,
                       f_exact, F);
    const double P = cfg.pixels_per_meter();
    out << fmt::format("pixels per meter P = crosswalk_px / crosswalk_m = {} / {} = {} px/m\n",
                       cfg.crosswalk_pixel_length, cfg.crosswalk_real_length, P);
    if (cfg.stated_pixels_per_meter && *cfg.stated_pixels_per_meter != P) {
        out << fmt::format("note: stated pixels_per_meter {} disagrees with the derived quotient {} / {} = {}; "
                           "the derived value is used\n",
                           *cfg.stated_pixels_per_meter, cfg.crosswalk_pixel_length, cfg.crosswalk_real_length, P);
    }
    out << fmt::format("speed limit: {} km/h; thresholds: vehicle {} m, pedestrian {} m per step\n",
                       cfg.speed_limit_kmh, cfg.thresholds.vehicle_m, cfg.thresholds.pedestrian_m);
    return kExitOk;
}

// ---- extract ---------------------------------------------------------------

struct ExtractOptions {
    std::string config;
    std::string out_dir;
    std::vector<std::string> inputs;
    int stride = 0;                    // 0: use config
    double max_reject_fraction = 0.5;
};

json counts_json(const ExtractCounts& c)
{
    return {
        {"lines_read", c.lines_read},
        {"lines_accepted", c.lines_accepted},
        {"lines_rejected", c.lines_rejected},
        {"frames_in", c.frames_in},
        {"frames_resampled", c.frames_resampled},
        {"detections_in", c.detections_in},
        {"detections_projected", c.detections_projected},
        {"discarded_at_infinity", c.discarded_at_infinity},
        {"bbox_fallbacks", c.bbox_fallbacks},
        {"missing_lane_axis", c.missing_lane_axis},
        {"tracks", c.tracks},
        {"feature_records", c.feature_records},
    };
}

int cmd_extract(const ExtractOptions& opt, std::ostream& out)
{
    const auto start = std::chrono::steady_clock::now();
    SceneConfig cfg = load_scene_config(opt.config);
    if (opt.stride != 0) {
        if (opt.stride < 1) throw ConfigError("stride", "override must be a positive integer");
        cfg.stride = opt.stride;
    }
    const auto labels = labels_for(opt.inputs);

    // Clips run in parallel; results are consumed in input order.
    std::vector<std::future<ExtractResult>> jobs;
    for (std::size_t i = 0; i < opt.inputs.size(); ++i) {
        jobs.push_back(std::async(std::launch::async, [&cfg, path = opt.inputs[i], label = labels[i]] {
            std::ifstream in(path);
            if (!in) throw IoError("cannot open detections " + path);
            return run_extract(in, cfg, label);
        }));
    }
    std::vector<ExtractResult> results;
    for (auto& j : jobs) results.push_back(j.get());

    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& c = results[i].counts;
        if (c.lines_read > 0 && results[i].rejected.size() > opt.max_reject_fraction * c.lines_read) {
            throw Exit{kExitIngestQuality,
                       fmt::format("{}: {} of {} lines rejected (limit {:.0f}%)", opt.inputs[i],
                                   results[i].rejected.size(), c.lines_read, 100.0 * opt.max_reject_fraction)};
        }
    }

    const auto write_start = std::chrono::steady_clock::now();
    const fs::path dir(opt.out_dir);
    ensure_dir(dir);
    std::ostringstream tracks, features, rejects;
    tracks << "clip_id,track_id,class,frame,x_m,y_m\n";
    features << "clip_id,frame,track_id,class,speed_kmh,accel_kmh_per_s,dist_m,nearest_id\n";
    rejects << "clip_id,line,reason\n";
    RunManifest manifest;
    manifest.command = "extract";
    manifest.inputs = opt.inputs;
    manifest.config = opt.config;
    manifest.out_dir = opt.out_dir;
    json clips = json::object();
    json timings = json::object();
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        write_tracks_csv(tracks, labels[i], r.tracks, cfg.pixels_per_meter(), false, false);
        write_features_csv(features, r.features, false);
        for (const auto& rej : r.rejected) rejects << labels[i] << ',' << rej.line << ',' << quote_csv(rej.reason) << '\n';
        clips[labels[i]] = counts_json(r.counts);
        json t = json::object();
        for (const auto& [stage, ms] : r.stage_ms) t[stage] = ms;
        timings[labels[i]] = t;
        out << fmt::format("{}: {} lines ({} rejected), {} -> {} frames, {} tracks, {} feature records\n",
                           labels[i], r.counts.lines_read, r.counts.lines_rejected, r.counts.frames_in,
                           r.counts.frames_resampled, r.counts.tracks, r.counts.feature_records);
    }
    write_file(dir / "tracks.csv", tracks.str());
    write_file(dir / "features.csv", features.str());
    write_file(dir / "rejects.csv", rejects.str());
    manifest.counts = {{"stride", cfg.stride}, {"clips", clips}};
    for (const char* name : {"tracks.csv", "features.csv", "rejects.csv"}) manifest.add_artifact(dir, name);
    timings["write"] = elapsed_ms(write_start);
    timings["total"] = elapsed_ms(start);
    manifest.stage_timings_ms = timings;
    write_file(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
    return kExitOk;
}

// ---- analyze ---------------------------------------------------------------

struct AnalyzeOptions {
    std::string config;
    std::string out_dir;
    std::vector<std::string> inputs;
    std::size_t bins = 20;
    std::string bounds;
};

OutlierBounds merge_bounds(OutlierBounds base, const std::string& spec)
{
    json j;
    if (!spec.empty() && spec.front() == '{') {
        j = json::parse(spec, nullptr, false);
    } else {
        std::ifstream in(spec);
        if (!in) throw IoError("cannot open bounds file " + spec);
        j = json::parse(in, nullptr, false);
    }
    if (j.is_discarded() || !j.is_object()) throw ConfigError("--bounds", "expected a JSON object");
    for (const auto& [name, v] : j.items()) {
        if (v.is_null()) {
            base.erase(name);
            continue;
        }
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ConfigError("--bounds." + name, "expected [min, max]");
        base[name] = {v[0].get<double>(), v[1].get<double>()};
        if (base[name].lo > base[name].hi) throw ConfigError("--bounds." + name, "min exceeds max");
    }
    return base;
}

int cmd_analyze(const AnalyzeOptions& opt, std::ostream& out)
{
    const auto start = std::chrono::steady_clock::now();
    OutlierBounds bounds = default_outlier_bounds();
    if (!opt.config.empty()) bounds = load_scene_config(opt.config).outlier_bounds;
    if (!opt.bounds.empty()) bounds = merge_bounds(bounds, opt.bounds);
    if (opt.bins < 1) throw ConfigError("--bins", "must be >= 1");
    const auto labels = labels_for(opt.inputs);

    std::vector<SummaryReport> reports;
    for (std::size_t i = 0; i < opt.inputs.size(); ++i) {
        std::ifstream in(opt.inputs[i]);
        if (!in) throw IoError("cannot open feature table " + opt.inputs[i]);
        const FeatureTable t = read_features_csv(in);
        reports.push_back(analyze_table(t, bounds, opt.bins, labels[i]));
        if (reports.back().rows_after == 0)
            throw Exit{kExitEmptyAnalysis, fmt::format("{}: no usable rows after filtering", opt.inputs[i])};
    }
    const double analysis_ms = elapsed_ms(start);

    const fs::path dir(opt.out_dir);
    ensure_dir(dir);
    RunManifest manifest;
    manifest.command = "analyze";
    manifest.inputs = opt.inputs;
    manifest.config = opt.config;
    manifest.out_dir = opt.out_dir;

    nlohmann::ordered_json all = nlohmann::ordered_json::array();
    json rows = json::object();
    for (const auto& r : reports) {
        const auto j = report_to_json(r);
        all.push_back(j);
        const std::string name = "report_" + r.label + ".json";
        write_file(dir / name, j.dump(2) + "\n");
        manifest.add_artifact(dir, name);
        rows[r.label] = {{"before", r.rows_before}, {"after", r.rows_after}, {"interaction_rows", r.interaction_rows}};
    }
    write_file(dir / "summary.json", all.dump(2) + "\n");
    const std::string text = render_text_report(reports);
    write_file(dir / "summary.txt", text);
    std::ostringstream hist, box;
    write_histogram_csv(hist, reports);
    write_boxplot_csv(box, reports);
    write_file(dir / "histograms.csv", hist.str());
    write_file(dir / "boxplots.csv", box.str());
    for (const char* name : {"summary.json", "summary.txt", "histograms.csv", "boxplots.csv"})
        manifest.add_artifact(dir, name);
    manifest.counts = {{"bins", opt.bins}, {"rows", rows}};
    manifest.stage_timings_ms = {{"analyze", analysis_ms}, {"total", elapsed_ms(start)}};
    write_file(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
    out << text;
    return kExitOk;
}

// ---- simulate --------------------------------------------------------------

struct SimulateOptions {
    std::string spec;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string clip_id;
};

int cmd_simulate(const SimulateOptions& opt, std::ostream& out)
{
    const auto start = std::chrono::steady_clock::now();
    SceneSpec spec = load_scene_spec(opt.spec);
    if (opt.seed) spec.seed = opt.seed;
    const Simulation sim = simulate_scene(spec);
    const std::string clip = opt.clip_id.empty() ? fs::path(opt.spec).stem().string() : opt.clip_id;

    const fs::path dir(opt.out_dir);
    ensure_dir(dir);
    write_file(dir / "detections.jsonl", sim.jsonl);
    std::ostringstream truth;
    write_tracks_csv(truth, clip, sim.truth, spec.scene.pixels_per_meter(), true);
    write_file(dir / "truth_tracks.csv", truth.str());

    RunManifest manifest;
    manifest.command = "simulate";
    manifest.inputs = {opt.spec};
    manifest.out_dir = opt.out_dir;
    manifest.counts = {{"seed", *spec.seed},
                       {"detections", sim.detections.size()},
                       {"truth_tracks", sim.truth.size()},
                       {"clipped", sim.clipped},
                       {"dropped", sim.dropped}};
    manifest.add_artifact(dir, "detections.jsonl");
    manifest.add_artifact(dir, "truth_tracks.csv");
    manifest.stage_timings_ms = {{"total", elapsed_ms(start)}};
    write_file(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
    out << fmt::format("{} detections, {} truth tracks ({} samples clipped, {} dropped)\n", sim.detections.size(),
                       sim.truth.size(), sim.clipped, sim.dropped);
    if (sim.clipped > 0) out << fmt::format("warning: {} agent samples left the visible region\n", sim.clipped);
    return kExitOk;
}

// ---- validate --------------------------------------------------------------

int cmd_validate(const std::string& config_path, const std::vector<std::string>& inputs, std::ostream& out)
{
    const SceneConfig cfg = load_scene_config(config_path);
    bool clean = true;
    for (const auto& path : inputs) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open detections " + path);
        const ParseResult r = parse_detections(in, cfg);
        out << fmt::format("{}: {} lines, {} accepted, {} rejected\n", path, r.lines_read, r.accepted,
                           r.rejected.size());
        for (const auto& rej : r.rejected) out << fmt::format("  line {}: {}\n", rej.line, rej.reason);
        clean = clean && r.rejected.empty();
    }
    return clean ? kExitOk : kExitIngestQuality;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Crosswalk trajectory and behavioral feature extraction", "xwalk"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    std::string calib_config;
    auto* calibrate = app.add_subcommand("calibrate", "Fit the anchor homography and print F, P and residuals");
    calibrate->add_option("--config", calib_config, "Scene config JSON")->required();

    ExtractOptions ex;
    auto* extract = app.add_subcommand("extract", "Detections JSONL -> tracks.csv, features.csv, manifest.json");
    extract->add_option("--config", ex.config, "Scene config JSON")->required();
    extract->add_option("--out", ex.out_dir, "Output directory")->required();
    extract->add_option("--stride", ex.stride, "Override the config's sampling stride");
    extract->add_option("--max-reject-fraction", ex.max_reject_fraction, "Fail when more lines are rejected")
        ->check(CLI::Range(0.0, 1.0));
    extract->add_option("detections", ex.inputs, "Detection JSONL files, one per clip")->required();

    AnalyzeOptions an;
    auto* analyze = app.add_subcommand("analyze", "Feature CSVs -> summary reports, histograms, boxplots, correlations");
    analyze->add_option("--config", an.config, "Scene config JSON (outlier bounds)");
    analyze->add_option("--out", an.out_dir, "Output directory")->required();
    analyze->add_option("--bins", an.bins, "Histogram bin count");
    analyze->add_option("--bounds", an.bounds, "Outlier bounds: inline JSON object or JSON file");
    analyze->add_option("features", an.inputs, "Feature CSV files, one per spot")->required();

    SimulateOptions sim;
    std::uint64_t seed = 0;
    auto* simulate = app.add_subcommand("simulate", "Scene spec JSON -> synthetic detections and truth tracks");
    simulate->add_option("--spec", sim.spec, "Scene spec JSON")->required();
    simulate->add_option("--out", sim.out_dir, "Output directory")->required();
    auto* seed_opt = simulate->add_option("--seed", seed, "RNG seed (overrides the spec)");
    simulate->add_option("--clip-id", sim.clip_id, "Clip id for truth_tracks.csv");

    std::string val_config;
    std::vector<std::string> val_inputs;
    auto* validate = app.add_subcommand("validate", "Check detection JSONL files against the wire format");
    validate->add_option("--config", val_config, "Scene config JSON")->required();
    validate->add_option("detections", val_inputs, "Detection JSONL files")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitIo;
    }

    try {
        if (*calibrate) return cmd_calibrate(calib_config, out);
        if (*extract) return cmd_extract(ex, out);
        if (*analyze) return cmd_analyze(an, out);
        if (*simulate) {
            if (*seed_opt) sim.seed = seed;
            return cmd_simulate(sim, out);
        }
        if (*validate) return cmd_validate(val_config, val_inputs, out);
    } catch (const Exit& e) {
        err << "error: " << e.what << '\n';
        return e.code;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const GeometryError& e) {
        err << "calibration error: " << e.what() << '\n';
        return kExitCalibration;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitCalibration;
    } catch (const IngestError& e) {
        err << "ingest error: " << e.what() << '\n';
        return kExitIngestQuality;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitIo;
}

} // namespace xwalk
