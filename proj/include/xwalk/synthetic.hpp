#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "xwalk/features.hpp"
#include "xwalk/ingest.hpp"
#include "xwalk/tracking.hpp"

namespace xwalk {

// Position of an agent in overhead meters at time t (seconds).
struct Waypoint {
    double t = 0.0;
    double x_m = 0.0;
    double y_m = 0.0;
};

struct AgentSpec {
    ObjectClass cls = ObjectClass::pedestrian;
    std::vector<Waypoint> path;       // strictly increasing t, piecewise linear
    bool emit_contact = true;         // false: only mask + bbox, contact recovered by geometry
    double mask_size_px = 12.0;       // side of the square mask sitting on the contact point
};

struct SceneSpec {
    double duration_s = 0.0;
    SceneConfig scene;                 // fps, stride, anchors, P
    std::vector<AgentSpec> agents;
    double noise_px = 0.0;             // Gaussian sigma per image axis
    double dropout = 0.0;              // probability a detection is not emitted
    std::optional<std::uint64_t> seed;
};

SceneSpec scene_spec_from_json(const nlohmann::json& j);
SceneSpec load_scene_spec(const std::filesystem::path& path);

struct Simulation {
    std::vector<Track> truth;          // overhead pixels, every source frame, id = agent index + 1
    std::vector<Detection> detections;
    std::string jsonl;
    std::size_t clipped = 0;           // samples outside the frame or beyond the horizon
    std::size_t dropped = 0;
};

// Throws ConfigError("seed") when no seed is set.
Simulation simulate_scene(const SceneSpec& spec);

struct AgentScore {
    TrackId truth_id = 0;
    std::optional<TrackId> recovered_id;
    std::optional<double> speed_mae_kmh;
    std::optional<double> position_rmse_m;
    std::size_t id_switches = 0;
};

struct RecoveryScore {
    std::vector<AgentScore> agents;
    std::optional<double> speed_mae_kmh;      // over all compared steps
    std::optional<double> position_rmse_m;    // over all aligned points
    std::size_t track_count_delta = 0;        // |recovered - truth|
    std::size_t id_switches = 0;
};

// Aligns truth and recovered tracks greedily by overlap (frames where both are
// within `gate_m`), then scores the aligned pairs. Truth speeds use the same
// step as the recovered tracks (cfg.stride frames).
RecoveryScore compare_to_truth(std::span<const Track> recovered, const FeatureTable& features,
                               std::span<const Track> truth, const SceneConfig& cfg,
                               double gate_m = 1.0);

} // namespace xwalk
