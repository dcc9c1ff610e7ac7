#include "xwalk/tracking.hpp"

#include <algorithm>
#include <tuple>

namespace xwalk {

Matching associate(std::span<const TrackHead> prev, std::span<const OverheadPoint> next, double threshold)
{
    struct Candidate {
        double dist;
        TrackId track;
        std::size_t track_slot;
        std::size_t det;
    };
    std::vector<Candidate> candidates;
    for (std::size_t t = 0; t < prev.size(); ++t) {
        for (std::size_t d = 0; d < next.size(); ++d) {
            const double dist = distance(prev[t].pos, next[d]);
            if (dist <= threshold) candidates.push_back({dist, prev[t].id, t, d});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(a.dist, a.track, a.det) < std::tie(b.dist, b.track, b.det);
    });

    Matching m;
    std::vector<bool> track_used(prev.size(), false);
    std::vector<bool> det_used(next.size(), false);
    for (const Candidate& c : candidates) {
        if (track_used[c.track_slot] || det_used[c.det]) continue;
        track_used[c.track_slot] = true;
        det_used[c.det] = true;
        m.pairs.push_back({c.track, c.det, c.dist});
    }
    for (std::size_t t = 0; t < prev.size(); ++t)
        if (!track_used[t]) m.unmatched_tracks.push_back(prev[t].id);
    for (std::size_t d = 0; d < next.size(); ++d)
        if (!det_used[d]) m.unmatched_detections.push_back(d);
    return m;
}

std::vector<Track> build_tracks(std::span<const ProjectedFrame> frames, const SceneConfig& cfg)
{
    std::vector<Track> tracks;
    std::vector<std::size_t> active;   // indices into `tracks`
    TrackId next_id = 1;
    const double ppm = cfg.pixels_per_meter();
    const FrameIndex step = cfg.stride;

    std::optional<FrameIndex> last_index;
    for (const ProjectedFrame& frame : frames) {
        // A skipped retained frame ends every active track.
        if (last_index && frame.index - *last_index != step) {
            for (std::size_t slot : active) tracks[slot].status = Track::Status::terminated;
            active.clear();
        }
        last_index = frame.index;

        std::vector<std::size_t> still_active;
        for (ObjectClass cls : {ObjectClass::vehicle, ObjectClass::pedestrian}) {
            std::vector<TrackHead> heads;
            std::vector<std::size_t> head_slots;
            for (std::size_t slot : active) {
                if (tracks[slot].cls != cls) continue;
                heads.push_back({tracks[slot].id, tracks[slot].head().pos});
                head_slots.push_back(slot);
            }
            std::vector<OverheadPoint> points;
            for (const auto& obj : frame.objects)
                if (obj.cls == cls) points.push_back(obj.pos);

            const Matching m = associate(heads, points, cfg.thresholds.for_class(cls) * ppm);

            for (const MatchedPair& p : m.pairs) {
                auto it = std::find_if(head_slots.begin(), head_slots.end(),
                                       [&](std::size_t s) { return tracks[s].id == p.track_id; });
                tracks[*it].points.push_back({frame.index, points[p.detection]});
                still_active.push_back(*it);
            }
            for (TrackId id : m.unmatched_tracks) {
                auto it = std::find_if(head_slots.begin(), head_slots.end(),
                                       [&](std::size_t s) { return tracks[s].id == id; });
                tracks[*it].status = Track::Status::terminated;
            }
            for (std::size_t d : m.unmatched_detections) {
                Track t;
                t.id = next_id++;
                t.cls = cls;
                t.points.push_back({frame.index, points[d]});
                tracks.push_back(std::move(t));
                still_active.push_back(tracks.size() - 1);
            }
        }
        std::sort(still_active.begin(), still_active.end());
        active = std::move(still_active);
    }
    return tracks;
}

} // namespace xwalk
