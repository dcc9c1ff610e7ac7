#include "xwalk/pipeline.hpp"

#include <chrono>

namespace xwalk {

std::vector<ProjectedFrame> project_frames(const FrameSeq& seq, const SceneConfig& cfg, const Homography& h,
                                           ExtractCounts& counts)
{
    std::vector<ProjectedFrame> out;
    out.reserve(seq.frames.size());
    for (const Frame& f : seq.frames) {
        ProjectedFrame pf;
        pf.index = f.index;
        for (const Detection& d : f.detections) {
            ++counts.detections_in;
            const ResolvedContact rc = resolve_contact_point(d, cfg);
            if (rc.contact.fallback) ++counts.bbox_fallbacks;
            if (rc.missing_axis) ++counts.missing_lane_axis;
            try {
                pf.objects.push_back({d.cls, project(h, rc.contact.point)});
                ++counts.detections_projected;
            } catch (const GeometryError&) {
                ++counts.discarded_at_infinity;
            }
        }
        out.push_back(std::move(pf));
    }
    return out;
}

ExtractResult run_extract(std::istream& detections, const SceneConfig& cfg, const std::string& clip_id)
{
    ExtractResult res;
    auto mark = std::chrono::steady_clock::now();
    auto lap = [&](const char* stage) {
        const auto now = std::chrono::steady_clock::now();
        res.stage_ms.emplace_back(stage, std::chrono::duration<double, std::milli>(now - mark).count());
        mark = now;
    };
    const Homography h = estimate_homography(cfg.anchors);

    ParseResult parsed = parse_detections(detections, cfg);
    res.counts.lines_read = parsed.lines_read;
    res.counts.lines_accepted = parsed.accepted;
    res.counts.lines_rejected = parsed.rejected.size();
    res.counts.frames_in = parsed.seq.frames.size();
    res.rejected = std::move(parsed.rejected);

    const FrameSeq sampled = resample(parsed.seq, cfg.stride);
    res.counts.frames_resampled = sampled.frames.size();
    lap("ingest");

    res.projected = project_frames(sampled, cfg, h, res.counts);
    lap("geometry");
    res.tracks = build_tracks(res.projected, cfg);
    res.counts.tracks = res.tracks.size();
    lap("tracking");
    res.features = extract_features(res.tracks, cfg, clip_id);
    res.counts.feature_records = res.features.size();
    lap("features");
    return res;
}

} // namespace xwalk
