#include "xwalk/features.hpp"

#include <limits>
#include <map>

namespace xwalk {

double speed(const OverheadPoint& p0, const OverheadPoint& p1, double frame_interval_s, double pixels_per_meter)
{
    return distance(p0, p1) / (frame_interval_s * pixels_per_meter) * kMpsToKmh;
}

double acceleration(double v0_mps, double v_mps, double frame_interval_s)
{
    return (v_mps - v0_mps) / frame_interval_s * kMpsToKmh;
}

std::optional<double> nearest_opposite_distance(const OverheadPoint& subject,
                                                std::span<const OverheadPoint> others, double pixels_per_meter)
{
    if (others.empty()) return std::nullopt;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : others) best = std::min(best, distance(subject, o));
    return best / pixels_per_meter;
}

FeatureTable extract_features(std::span<const Track> tracks, const SceneConfig& cfg, const std::string& clip_id)
{
    const double F = cfg.frame_interval();
    const double P = cfg.pixels_per_meter();

    struct Occupant {
        TrackId id;
        OverheadPoint pos;
    };
    // frame -> class -> objects present
    std::map<FrameIndex, std::map<ObjectClass, std::vector<Occupant>>> by_frame;
    for (const Track& t : tracks)
        for (const TrackPoint& p : t.points) by_frame[p.frame][t.cls].push_back({t.id, p.pos});

    FeatureTable table;
    for (const Track& t : tracks) {
        const auto& pts = t.points;
        std::vector<double> step_kmh;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
            step_kmh.push_back(speed(pts[i].pos, pts[i + 1].pos, F, P));

        for (std::size_t i = 0; i < pts.size(); ++i) {
            FeatureRecord r;
            r.clip_id = clip_id;
            r.frame = pts[i].frame;
            r.track_id = t.id;
            r.cls = t.cls;
            if (i < step_kmh.size()) r.speed_kmh = step_kmh[i];
            if (t.cls == ObjectClass::vehicle && i + 1 < step_kmh.size())
                r.accel_kmh_per_s = acceleration(step_kmh[i] / kMpsToKmh, step_kmh[i + 1] / kMpsToKmh, F);

            const auto& classes = by_frame[pts[i].frame];
            auto it = classes.find(opposite(t.cls));
            if (it != classes.end() && !it->second.empty()) {
                const Occupant* nearest = nullptr;
                double best = std::numeric_limits<double>::infinity();
                for (const auto& o : it->second) {
                    const double d = distance(pts[i].pos, o.pos);
                    if (d < best) {
                        best = d;
                        nearest = &o;
                    }
                }
                r.dist_m = best / P;
                r.nearest_id = nearest->id;
            }
            table.push_back(std::move(r));
        }
    }
    return table;
}

} // namespace xwalk
