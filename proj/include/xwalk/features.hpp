#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xwalk/ingest.hpp"
#include "xwalk/tracking.hpp"

namespace xwalk {

inline constexpr double kMpsToKmh = 3.6;

struct FeatureRecord {
    std::string clip_id;
    FrameIndex frame = 0;
    TrackId track_id = 0;
    ObjectClass cls = ObjectClass::pedestrian;
    std::optional<double> speed_kmh;           // absent on a track's last point
    std::optional<double> accel_kmh_per_s;     // vehicles only
    std::optional<double> dist_m;              // nearest opposite-class object
    std::optional<TrackId> nearest_id;         // track id of that object
};

using FeatureTable = std::vector<FeatureRecord>;

// Overhead pixel step over one frame interval, km/h.
double speed(const OverheadPoint& p0, const OverheadPoint& p1, double frame_interval_s,
             double pixels_per_meter);

// (v - v0) / F with speeds in m/s, returned in km/h per second.
double acceleration(double v0_mps, double v_mps, double frame_interval_s);

std::optional<double> nearest_opposite_distance(const OverheadPoint& subject,
                                                std::span<const OverheadPoint> others,
                                                double pixels_per_meter);

// One record per track point, ordered by track id then frame. Speed and
// acceleration are left-aligned on the earlier frame of each step. Distances
// use every track point in the same frame, so every projected object counts.
FeatureTable extract_features(std::span<const Track> tracks, const SceneConfig& cfg,
                              const std::string& clip_id = "clip");

} // namespace xwalk
