#pragma once

#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "xwalk/features.hpp"
#include "xwalk/geometry.hpp"
#include "xwalk/ingest.hpp"
#include "xwalk/tracking.hpp"

namespace xwalk {

struct ExtractCounts {
    std::size_t lines_read = 0;
    std::size_t lines_accepted = 0;
    std::size_t lines_rejected = 0;
    std::size_t frames_in = 0;
    std::size_t frames_resampled = 0;
    std::size_t detections_in = 0;        // in retained frames
    std::size_t detections_projected = 0;
    std::size_t discarded_at_infinity = 0;
    std::size_t bbox_fallbacks = 0;
    std::size_t missing_lane_axis = 0;
    std::size_t tracks = 0;
    std::size_t feature_records = 0;
};

struct ExtractResult {
    std::vector<RejectedLine> rejected;
    std::vector<ProjectedFrame> projected;
    std::vector<Track> tracks;
    FeatureTable features;
    ExtractCounts counts;
    std::vector<std::pair<std::string, double>> stage_ms;   // wall time per stage
};

// Contact point + homography for every detection of every frame.
std::vector<ProjectedFrame> project_frames(const FrameSeq& seq, const SceneConfig& cfg,
                                           const Homography& h, ExtractCounts& counts);

// ingest -> resample -> geometry -> tracking -> features, all in memory.
// `cfg.stride` drives resampling and the frame interval.
ExtractResult run_extract(std::istream& detections, const SceneConfig& cfg,
                          const std::string& clip_id);

} // namespace xwalk
