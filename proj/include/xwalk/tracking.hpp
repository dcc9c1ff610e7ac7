#pragma once

#include <span>
#include <vector>

#include "xwalk/ingest.hpp"
#include "xwalk/types.hpp"

namespace xwalk {

struct TrackPoint {
    FrameIndex frame = 0;
    OverheadPoint pos;
};

struct Track {
    enum class Status { active, terminated };

    TrackId id = 0;
    ObjectClass cls = ObjectClass::pedestrian;
    std::vector<TrackPoint> points;
    Status status = Status::active;

    const TrackPoint& head() const { return points.back(); }
};

// One contact point of one object in one retained frame, already in the overhead plane.
struct ProjectedObject {
    ObjectClass cls = ObjectClass::pedestrian;
    OverheadPoint pos;
};

struct ProjectedFrame {
    FrameIndex index = 0;
    std::vector<ProjectedObject> objects;
};

struct TrackHead {
    TrackId id = 0;
    OverheadPoint pos;
};

struct MatchedPair {
    TrackId track_id = 0;
    std::size_t detection = 0;
    double dist = 0.0;
};

struct Matching {
    std::vector<MatchedPair> pairs;          // in acceptance order
    std::vector<TrackId> unmatched_tracks;
    std::vector<std::size_t> unmatched_detections;
};

// Greedy global-minimum association: repeatedly accept the closest free
// (track, detection) pair while its distance is within `threshold`. Ties go to
// the lower track id, then the lower detection index. Units of `threshold`
// match the point coordinates.
Matching associate(std::span<const TrackHead> prev, std::span<const OverheadPoint> next,
                   double threshold);

// Frame-to-frame association per class. Thresholds in cfg are meters and are
// scaled by P. A track that misses a retained frame (no match, or a gap in
// frame index larger than `stride`) terminates; ids start at 1.
std::vector<Track> build_tracks(std::span<const ProjectedFrame> frames, const SceneConfig& cfg);

} // namespace xwalk
