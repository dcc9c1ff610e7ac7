#include "xwalk/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <tuple>

#include <fmt/format.h>

#include "xwalk/geometry.hpp"

namespace xwalk {

using nlohmann::json;

namespace {

double num(const json& j, const std::string& key, const std::string& field)
{
    if (!j.contains(key)) throw ConfigError(field, "missing required field");
    if (!j[key].is_number()) throw ConfigError(field, "expected a number");
    return j[key].get<double>();
}

OverheadPoint position_at(const std::vector<Waypoint>& path, double t)
{
    auto it = std::upper_bound(path.begin(), path.end(), t, [](double v, const Waypoint& w) { return v < w.t; });
    if (it == path.begin()) return {path.front().x_m, path.front().y_m};
    if (it == path.end()) return {path.back().x_m, path.back().y_m};
    const Waypoint& b = *it;
    const Waypoint& a = *(it - 1);
    const double u = (t - a.t) / (b.t - a.t);
    return {a.x_m + u * (b.x_m - a.x_m), a.y_m + u * (b.y_m - a.y_m)};
}

} // namespace

SceneSpec scene_spec_from_json(const json& j)
{
    if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
    SceneSpec spec;
    spec.duration_s = num(j, "duration_s", "duration_s");
    if (!(spec.duration_s > 0.0)) throw ConfigError("duration_s", "must be positive");
    if (!j.contains("scene")) throw ConfigError("scene", "missing required field");
    spec.scene = scene_config_from_json(j["scene"]);
    if (j.contains("noise_px")) spec.noise_px = num(j, "noise_px", "noise_px");
    if (spec.noise_px < 0.0) throw ConfigError("noise_px", "must be non-negative");
    if (j.contains("dropout")) spec.dropout = num(j, "dropout", "dropout");
    if (spec.dropout < 0.0 || spec.dropout >= 1.0) throw ConfigError("dropout", "must be in [0, 1)");
    if (j.contains("seed") && !j["seed"].is_null()) {
        if (!j["seed"].is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
        spec.seed = j["seed"].get<std::uint64_t>();
    }

    if (!j.contains("agents") || !j["agents"].is_array()) throw ConfigError("agents", "expected an array");
    for (std::size_t i = 0; i < j["agents"].size(); ++i) {
        const json& a = j["agents"][i];
        const std::string field = fmt::format("agents[{}]", i);
        AgentSpec agent;
        if (!a.contains("class") || !a["class"].is_string()) throw ConfigError(field + ".class", "missing class");
        auto cls = parse_class(a["class"].get<std::string>());
        if (!cls) throw ConfigError(field + ".class", "unknown class");
        agent.cls = *cls;
        if (a.contains("emit_contact")) agent.emit_contact = a["emit_contact"].get<bool>();
        if (a.contains("mask_size_px")) agent.mask_size_px = num(a, "mask_size_px", field + ".mask_size_px");
        if (!(agent.mask_size_px > 0.0)) throw ConfigError(field + ".mask_size_px", "must be positive");
        if (!a.contains("waypoints") || !a["waypoints"].is_array() || a["waypoints"].empty())
            throw ConfigError(field + ".waypoints", "expected a non-empty array of [t, x_m, y_m]");
        for (const json& w : a["waypoints"]) {
            if (!w.is_array() || w.size() != 3 || !w[0].is_number() || !w[1].is_number() || !w[2].is_number())
                throw ConfigError(field + ".waypoints", "expected [t, x_m, y_m]");
            agent.path.push_back({w[0].get<double>(), w[1].get<double>(), w[2].get<double>()});
        }
        for (std::size_t k = 1; k < agent.path.size(); ++k)
            if (!(agent.path[k].t > agent.path[k - 1].t))
                throw ConfigError(field + ".waypoints", "timestamps must be strictly increasing");
        spec.agents.push_back(std::move(agent));
    }
    return spec;
}

SceneSpec load_scene_spec(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scene spec " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError(path.string(), "invalid JSON");
    return scene_spec_from_json(j);
}

Simulation simulate_scene(const SceneSpec& spec)
{
    if (!spec.seed) throw ConfigError("seed", "unseeded simulation refused; set a seed");
    const SceneConfig& cfg = spec.scene;
    const Homography h = estimate_homography(cfg.anchors);
    const Homography h_inv = h.inverse();
    const double ppm = cfg.pixels_per_meter();

    // Overhead points on the far side of the camera's horizon have the opposite w sign.
    OverheadPoint centroid;
    for (const auto& a : cfg.anchors) {
        centroid.x += a.overhead.x / 4.0;
        centroid.y += a.overhead.y / 4.0;
    }
    auto w_of = [&](const OverheadPoint& p) { return h_inv(2, 0) * p.x + h_inv(2, 1) * p.y + h_inv(2, 2); };
    const bool w_positive = w_of(centroid) > 0.0;

    std::mt19937_64 rng(*spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Simulation sim;
    sim.truth.resize(spec.agents.size());
    for (std::size_t i = 0; i < spec.agents.size(); ++i) {
        sim.truth[i].id = static_cast<TrackId>(i + 1);
        sim.truth[i].cls = spec.agents[i].cls;
        sim.truth[i].status = Track::Status::terminated;
    }

    const auto frame_count = static_cast<FrameIndex>(std::floor(spec.duration_s * cfg.source_fps + 1e-9));
    for (FrameIndex k = 0; k <= frame_count; ++k) {
        const double t = static_cast<double>(k) / cfg.source_fps;
        for (std::size_t i = 0; i < spec.agents.size(); ++i) {
            const AgentSpec& agent = spec.agents[i];
            if (t < agent.path.front().t || t > agent.path.back().t) continue;
            const double nx = gauss(rng), ny = gauss(rng), u = unit(rng);

            const OverheadPoint m = position_at(agent.path, t);
            const OverheadPoint truth{m.x * ppm, m.y * ppm};
            if ((w_of(truth) > 0.0) != w_positive || std::abs(w_of(truth)) < 1e-12) {
                ++sim.clipped;
                continue;
            }
            ImagePoint img = project_inverse(h_inv, truth);
            img.x += spec.noise_px * nx;
            img.y += spec.noise_px * ny;

            const double half = 0.5 * agent.mask_size_px;
            Detection d;
            d.frame = k;
            d.cls = agent.cls;
            d.score = 0.9;
            d.bbox = {img.x - half, img.y - agent.mask_size_px, img.x + half, img.y};
            if (d.bbox.x_min < 0.0 || d.bbox.y_min < 0.0 || d.bbox.x_max > cfg.frame_width ||
                d.bbox.y_max > cfg.frame_height) {
                ++sim.clipped;
                continue;
            }
            sim.truth[i].points.push_back({k, truth});
            if (u < spec.dropout) {
                ++sim.dropped;
                continue;
            }
            d.mask = {{d.bbox.x_min, d.bbox.y_min}, {d.bbox.x_max, d.bbox.y_min},
                      {d.bbox.x_max, d.bbox.y_max}, {d.bbox.x_min, d.bbox.y_max}};
            if (agent.emit_contact) d.contact = img;
            sim.jsonl += serialize_detection(d);
            sim.jsonl += '\n';
            sim.detections.push_back(std::move(d));
        }
    }
    std::erase_if(sim.truth, [](const Track& t) { return t.points.empty(); });
    return sim;
}

RecoveryScore compare_to_truth(std::span<const Track> recovered, const FeatureTable& features,
                               std::span<const Track> truth, const SceneConfig& cfg, double gate_m)
{
    const double ppm = cfg.pixels_per_meter();
    const double gate_px = gate_m * ppm;
    const double F = cfg.frame_interval();

    auto index = [](const Track& t) {
        std::map<FrameIndex, OverheadPoint> m;
        for (const auto& p : t.points) m[p.frame] = p.pos;
        return m;
    };
    std::vector<std::map<FrameIndex, OverheadPoint>> rec_at, truth_at;
    for (const auto& t : recovered) rec_at.push_back(index(t));
    for (const auto& t : truth) truth_at.push_back(index(t));

    // Alignment by overlap count, largest first.
    struct Overlap {
        std::size_t count, ti, ri;
    };
    std::vector<Overlap> overlaps;
    for (std::size_t ti = 0; ti < truth.size(); ++ti) {
        for (std::size_t ri = 0; ri < recovered.size(); ++ri) {
            if (truth[ti].cls != recovered[ri].cls) continue;
            std::size_t n = 0;
            for (const auto& [f, pos] : rec_at[ri]) {
                auto it = truth_at[ti].find(f);
                if (it != truth_at[ti].end() && distance(it->second, pos) <= gate_px) ++n;
            }
            if (n > 0) overlaps.push_back({n, ti, ri});
        }
    }
    std::sort(overlaps.begin(), overlaps.end(), [](const Overlap& a, const Overlap& b) {
        return std::tie(b.count, a.ti, a.ri) < std::tie(a.count, b.ti, b.ri);
    });
    std::vector<std::optional<std::size_t>> aligned(truth.size());
    std::vector<bool> rec_used(recovered.size(), false);
    for (const auto& o : overlaps) {
        if (aligned[o.ti] || rec_used[o.ri]) continue;
        aligned[o.ti] = o.ri;
        rec_used[o.ri] = true;
    }

    std::map<std::pair<TrackId, FrameIndex>, double> rec_speed;
    for (const auto& r : features)
        if (r.speed_kmh) rec_speed[{r.track_id, r.frame}] = *r.speed_kmh;

    RecoveryScore score;
    score.track_count_delta = recovered.size() > truth.size() ? recovered.size() - truth.size()
                                                              : truth.size() - recovered.size();
    double all_sq = 0.0, all_abs = 0.0;
    std::size_t all_pts = 0, all_steps = 0;

    for (std::size_t ti = 0; ti < truth.size(); ++ti) {
        AgentScore a;
        a.truth_id = truth[ti].id;
        if (aligned[ti]) {
            const Track& rt = recovered[*aligned[ti]];
            a.recovered_id = rt.id;
            double sq = 0.0, abs_err = 0.0;
            std::size_t pts = 0, steps = 0;
            for (const auto& [f, pos] : rec_at[*aligned[ti]]) {
                auto it = truth_at[ti].find(f);
                if (it == truth_at[ti].end()) continue;
                const double e = distance(it->second, pos) / ppm;
                sq += e * e;
                ++pts;
                auto sp = rec_speed.find({rt.id, f});
                auto next = truth_at[ti].find(f + cfg.stride);
                if (sp != rec_speed.end() && next != truth_at[ti].end()) {
                    abs_err += std::abs(sp->second - speed(it->second, next->second, F, ppm));
                    ++steps;
                }
            }
            if (pts > 0) a.position_rmse_m = std::sqrt(sq / static_cast<double>(pts));
            if (steps > 0) a.speed_mae_kmh = abs_err / static_cast<double>(steps);
            all_sq += sq;
            all_abs += abs_err;
            all_pts += pts;
            all_steps += steps;
        }

        // Identity changes along the truth path, using the nearest gated recovered point.
        std::optional<TrackId> last;
        for (const auto& [f, pos] : truth_at[ti]) {
            std::optional<TrackId> here;
            double best = gate_px;
            for (std::size_t ri = 0; ri < recovered.size(); ++ri) {
                if (recovered[ri].cls != truth[ti].cls) continue;
                auto it = rec_at[ri].find(f);
                if (it == rec_at[ri].end()) continue;
                const double d = distance(it->second, pos);
                if (d <= best) {
                    best = d;
                    here = recovered[ri].id;
                }
            }
            if (!here) continue;
            if (last && *last != *here) ++a.id_switches;
            last = here;
        }
        score.id_switches += a.id_switches;
        score.agents.push_back(a);
    }
    if (all_pts > 0) score.position_rmse_m = std::sqrt(all_sq / static_cast<double>(all_pts));
    if (all_steps > 0) score.speed_mae_kmh = all_abs / static_cast<double>(all_steps);
    return score;
}

} // namespace xwalk
