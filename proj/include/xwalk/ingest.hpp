#pragma once

#include <array>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "xwalk/types.hpp"

namespace xwalk {

struct BBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double center_x() const { return 0.5 * (x_min + x_max); }
    ImagePoint bottom_center() const { return {center_x(), y_max}; }
    friend bool operator==(const BBox&, const BBox&) = default;
};

struct Detection {
    FrameIndex frame = 0;
    ObjectClass cls = ObjectClass::pedestrian;
    double score = 0.0;
    BBox bbox;
    std::vector<ImagePoint> mask;          // empty when absent
    std::optional<ImagePoint> contact;     // precomputed upstream
    bool bbox_fallback = false;            // neither mask nor contact supplied

    friend bool operator==(const Detection&, const Detection&) = default;
};

struct Frame {
    FrameIndex index = 0;
    std::vector<Detection> detections;
};

struct FrameSeq {
    std::vector<Frame> frames;
    double source_fps = 0.0;
    int stride = 1;
};

struct AnchorPair {
    ImagePoint image;
    OverheadPoint overhead;
};

// Lane centre line in image coordinates; travel direction is from -> to.
struct LaneAxis {
    ImagePoint from;
    ImagePoint to;
};

struct Thresholds {
    double vehicle_m = 12.0;
    double pedestrian_m = 2.0;

    double for_class(ObjectClass c) const
    {
        return c == ObjectClass::vehicle ? vehicle_m : pedestrian_m;
    }
};

// Camera/site calibration. Frame interval and pixels-per-meter are derived on
// demand from the stored inputs and never stored themselves.
struct SceneConfig {
    int frame_width = 1280;
    int frame_height = 720;
    double source_fps = 0.0;
    int stride = 1;
    std::array<AnchorPair, 4> anchors{};
    double crosswalk_pixel_length = 0.0;
    double crosswalk_real_length = 0.0;
    std::optional<double> stated_pixels_per_meter;
    double speed_limit_kmh = 30.0;
    Thresholds thresholds;
    OutlierBounds outlier_bounds = default_outlier_bounds();
    std::vector<LaneAxis> lane_axes;
    double leading_fraction = 0.25;

    // Seconds between two retained frames (F).
    double frame_interval() const { return static_cast<double>(stride) / source_fps; }
    // Overhead pixels per meter (P).
    double pixels_per_meter() const { return crosswalk_pixel_length / crosswalk_real_length; }
};

// Throws ConfigError (naming the field) or GeometryError for degenerate anchors.
SceneConfig scene_config_from_json(const nlohmann::json& j);
SceneConfig load_scene_config(const std::filesystem::path& path);
nlohmann::json scene_config_to_json(const SceneConfig& cfg);

// Throws ConfigError on non-positive fps/stride/lengths, GeometryError when three
// anchors are collinear or two coincide.
void validate_scene_config(const SceneConfig& cfg);

struct RejectedLine {
    std::size_t line = 0;  // 1-based
    std::string reason;
};

struct ParseResult {
    FrameSeq seq;
    std::size_t lines_read = 0;   // non-blank lines
    std::size_t accepted = 0;
    std::vector<RejectedLine> rejected;

    double rejected_fraction() const
    {
        return lines_read == 0 ? 0.0 : static_cast<double>(rejected.size()) / lines_read;
    }
};

// Parses one JSONL detection record and checks it against the frame size.
// Returns the rejection reason on failure.
struct LineOutcome {
    std::optional<Detection> detection;
    std::string reason;
};
LineOutcome parse_detection_line(std::string_view line, const SceneConfig& cfg);

// Malformed or invalid records are collected in `rejected`; a frame index that
// goes backwards throws IngestError.
ParseResult parse_detections(std::istream& in, const SceneConfig& cfg);

std::string serialize_detection(const Detection& d);

// Keeps frames whose index is congruent to the first frame's index mod stride.
FrameSeq resample(const FrameSeq& frames, int stride);

} // namespace xwalk
