#include "xwalk/ingest.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

#include "xwalk/geometry.hpp"

namespace xwalk {

using nlohmann::json;

std::string_view to_string(ObjectClass c)
{
    return c == ObjectClass::vehicle ? "vehicle" : "pedestrian";
}

std::optional<ObjectClass> parse_class(std::string_view s)
{
    if (s == "vehicle") return ObjectClass::vehicle;
    if (s == "pedestrian") return ObjectClass::pedestrian;
    return std::nullopt;
}

OutlierBounds default_outlier_bounds()
{
    return {
        {"speed_kmh", {0.0, 120.0}},
        {"accel_kmh_per_s", {-15.0, 15.0}},
        {"dist_m", {0.0, 50.0}},
    };
}

namespace {

const json& require(const json& j, const std::string& key)
{
    if (!j.is_object() || !j.contains(key)) throw ConfigError(key, "missing required field");
    return j.at(key);
}

double number(const json& v, const std::string& field)
{
    if (!v.is_number()) throw ConfigError(field, "expected a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(field, "not finite");
    return d;
}

int integer(const json& v, const std::string& field)
{
    if (!v.is_number_integer()) throw ConfigError(field, "expected an integer");
    return v.get<int>();
}

std::pair<double, double> pair_of(const json& v, const std::string& field)
{
    if (!v.is_array() || v.size() != 2) throw ConfigError(field, "expected [x, y]");
    return {number(v[0], field), number(v[1], field)};
}

ImagePoint image_point(const json& v, const std::string& field)
{
    auto [x, y] = pair_of(v, field);
    return {x, y};
}

} // namespace

void validate_scene_config(const SceneConfig& cfg)
{
    if (cfg.frame_width <= 0) throw ConfigError("frame_width", "must be positive");
    if (cfg.frame_height <= 0) throw ConfigError("frame_height", "must be positive");
    if (!(cfg.source_fps > 0.0) || !std::isfinite(cfg.source_fps))
        throw ConfigError("fps", "must be positive");
    if (cfg.stride < 1) throw ConfigError("stride", "must be a positive integer");
    if (!(cfg.crosswalk_pixel_length > 0.0)) throw ConfigError("crosswalk_px", "must be positive");
    if (!(cfg.crosswalk_real_length > 0.0)) throw ConfigError("crosswalk_m", "must be positive");
    if (!(cfg.thresholds.vehicle_m > 0.0)) throw ConfigError("thresholds.vehicle_m", "must be positive");
    if (!(cfg.thresholds.pedestrian_m > 0.0))
        throw ConfigError("thresholds.pedestrian_m", "must be positive");
    if (!(cfg.leading_fraction > 0.0 && cfg.leading_fraction <= 1.0))
        throw ConfigError("leading_fraction", "must be in (0, 1]");
    for (const auto& [name, b] : cfg.outlier_bounds) {
        if (!(b.lo <= b.hi)) throw ConfigError("outlier_bounds." + name, "min exceeds max");
    }
    for (std::size_t i = 0; i < cfg.lane_axes.size(); ++i) {
        if (distance(cfg.lane_axes[i].from, cfg.lane_axes[i].to) == 0.0)
            throw ConfigError(fmt::format("lane_axes[{}]", i), "endpoints coincide");
    }
    check_general_position(cfg.anchors);
}

SceneConfig scene_config_from_json(const json& j)
{
    if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
    SceneConfig cfg;
    if (j.contains("frame_width")) cfg.frame_width = integer(j["frame_width"], "frame_width");
    if (j.contains("frame_height")) cfg.frame_height = integer(j["frame_height"], "frame_height");
    cfg.source_fps = number(require(j, "fps"), "fps");
    cfg.stride = integer(require(j, "stride"), "stride");

    const json& anchors = require(j, "anchors");
    if (!anchors.is_array() || anchors.size() != 4)
        throw ConfigError("anchors", "expected exactly 4 anchor pairs");
    for (std::size_t i = 0; i < 4; ++i) {
        const std::string field = fmt::format("anchors[{}]", i);
        const json& a = anchors[i];
        if (!a.is_object() || !a.contains("image") || !a.contains("overhead"))
            throw ConfigError(field, "expected {\"image\": [x, y], \"overhead\": [x, y]}");
        cfg.anchors[i].image = image_point(a["image"], field + ".image");
        auto [ox, oy] = pair_of(a["overhead"], field + ".overhead");
        cfg.anchors[i].overhead = {ox, oy};
    }

    cfg.crosswalk_pixel_length = number(require(j, "crosswalk_px"), "crosswalk_px");
    cfg.crosswalk_real_length = number(require(j, "crosswalk_m"), "crosswalk_m");
    if (j.contains("stated_pixels_per_meter"))
        cfg.stated_pixels_per_meter = number(j["stated_pixels_per_meter"], "stated_pixels_per_meter");
    cfg.speed_limit_kmh = number(require(j, "speed_limit_kmh"), "speed_limit_kmh");

    const json& th = require(j, "thresholds");
    cfg.thresholds.vehicle_m = number(require(th, "vehicle_m"), "thresholds.vehicle_m");
    cfg.thresholds.pedestrian_m = number(require(th, "pedestrian_m"), "thresholds.pedestrian_m");

    // Listed features override the defaults; null removes a bound.
    const json& ob = require(j, "outlier_bounds");
    if (!ob.is_object()) throw ConfigError("outlier_bounds", "expected an object");
    for (const auto& [name, v] : ob.items()) {
        if (v.is_null()) {
            cfg.outlier_bounds.erase(name);
            continue;
        }
        auto [lo, hi] = pair_of(v, "outlier_bounds." + name);
        cfg.outlier_bounds[name] = {lo, hi};
    }

    if (j.contains("lane_axes")) {
        const json& axes = j["lane_axes"];
        if (!axes.is_array()) throw ConfigError("lane_axes", "expected an array");
        for (std::size_t i = 0; i < axes.size(); ++i) {
            const std::string field = fmt::format("lane_axes[{}]", i);
            cfg.lane_axes.push_back({image_point(require(axes[i], "from"), field + ".from"),
                                     image_point(require(axes[i], "to"), field + ".to")});
        }
    }
    if (j.contains("leading_fraction"))
        cfg.leading_fraction = number(j["leading_fraction"], "leading_fraction");

    validate_scene_config(cfg);
    return cfg;
}

SceneConfig load_scene_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scene config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
    }
    return scene_config_from_json(j);
}

json scene_config_to_json(const SceneConfig& cfg)
{
    json anchors = json::array();
    for (const auto& a : cfg.anchors) {
        anchors.push_back({{"image", {a.image.x, a.image.y}},
                           {"overhead", {a.overhead.x, a.overhead.y}}});
    }
    json bounds = json::object();
    for (const auto& [name, b] : cfg.outlier_bounds) bounds[name] = {b.lo, b.hi};
    json j = {
        {"frame_width", cfg.frame_width},
        {"frame_height", cfg.frame_height},
        {"fps", cfg.source_fps},
        {"stride", cfg.stride},
        {"anchors", anchors},
        {"crosswalk_px", cfg.crosswalk_pixel_length},
        {"crosswalk_m", cfg.crosswalk_real_length},
        {"speed_limit_kmh", cfg.speed_limit_kmh},
        {"thresholds", {{"vehicle_m", cfg.thresholds.vehicle_m},
                        {"pedestrian_m", cfg.thresholds.pedestrian_m}}},
        {"outlier_bounds", bounds},
        {"leading_fraction", cfg.leading_fraction},
    };
    if (cfg.stated_pixels_per_meter) j["stated_pixels_per_meter"] = *cfg.stated_pixels_per_meter;
    if (!cfg.lane_axes.empty()) {
        json axes = json::array();
        for (const auto& ax : cfg.lane_axes)
            axes.push_back({{"from", {ax.from.x, ax.from.y}}, {"to", {ax.to.x, ax.to.y}}});
        j["lane_axes"] = axes;
    }
    return j;
}

// ---- detections ------------------------------------------------------------

namespace {

constexpr double kMaskSlackPx = 2.0;

struct Reject {
    std::string reason;
};

const json& field(const json& j, const char* key)
{
    if (!j.contains(key)) throw Reject{fmt::format("missing field '{}'", key)};
    return j.at(key);
}

double finite_number(const json& v, const char* what)
{
    if (!v.is_number()) throw Reject{fmt::format("'{}' is not a number", what)};
    double d = v.get<double>();
    if (!std::isfinite(d)) throw Reject{fmt::format("'{}' is not finite", what)};
    return d;
}

ImagePoint point(const json& v, const char* what)
{
    if (!v.is_array() || v.size() != 2) throw Reject{fmt::format("'{}' is not an [x, y] point", what)};
    return {finite_number(v[0], what), finite_number(v[1], what)};
}

bool in_frame(const ImagePoint& p, const SceneConfig& cfg)
{
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= cfg.frame_width && p.y <= cfg.frame_height;
}

Detection detection_from_json(const json& j, const SceneConfig& cfg)
{
    if (!j.is_object()) throw Reject{"record is not a JSON object"};
    Detection d;

    const json& frame = field(j, "frame");
    if (!frame.is_number_integer()) throw Reject{"'frame' is not an integer"};
    d.frame = frame.get<FrameIndex>();
    if (d.frame < 0) throw Reject{"negative frame index"};

    const json& cls = field(j, "class");
    if (!cls.is_string()) throw Reject{"'class' is not a string"};
    auto parsed = parse_class(cls.get<std::string>());
    if (!parsed) throw Reject{fmt::format("unknown class '{}'", cls.get<std::string>())};
    d.cls = *parsed;

    d.score = finite_number(field(j, "score"), "score");
    if (d.score < 0.0 || d.score > 1.0) throw Reject{"score out of range"};

    const json& bbox = field(j, "bbox");
    if (!bbox.is_array() || bbox.size() != 4) throw Reject{"'bbox' is not [x_min, y_min, x_max, y_max]"};
    d.bbox = {finite_number(bbox[0], "bbox"), finite_number(bbox[1], "bbox"),
              finite_number(bbox[2], "bbox"), finite_number(bbox[3], "bbox")};
    if (!(d.bbox.x_min < d.bbox.x_max) || !(d.bbox.y_min < d.bbox.y_max))
        throw Reject{"degenerate bbox"};
    if (!in_frame({d.bbox.x_min, d.bbox.y_min}, cfg) || !in_frame({d.bbox.x_max, d.bbox.y_max}, cfg))
        throw Reject{"bbox outside frame"};

    if (j.contains("mask") && !j["mask"].is_null()) {
        const json& mask = j["mask"];
        if (!mask.is_array()) throw Reject{"'mask' is not an array"};
        for (const auto& v : mask) d.mask.push_back(point(v, "mask"));
        if (!d.mask.empty() && d.mask.size() < 3) throw Reject{"mask has fewer than 3 vertices"};
        for (const auto& v : d.mask) {
            if (v.x < d.bbox.x_min - kMaskSlackPx || v.x > d.bbox.x_max + kMaskSlackPx ||
                v.y < d.bbox.y_min - kMaskSlackPx || v.y > d.bbox.y_max + kMaskSlackPx)
                throw Reject{"mask vertex outside bbox"};
        }
    }
    if (j.contains("contact") && !j["contact"].is_null()) {
        d.contact = point(j["contact"], "contact");
        if (!in_frame(*d.contact, cfg)) throw Reject{"contact outside frame"};
    }
    d.bbox_fallback = d.mask.empty() && !d.contact;
    return d;
}

bool blank(std::string_view s)
{
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

} // namespace

LineOutcome parse_detection_line(std::string_view line, const SceneConfig& cfg)
{
    json j = json::parse(line.begin(), line.end(), nullptr, false);
    if (j.is_discarded()) return {std::nullopt, "malformed JSON"};
    try {
        return {detection_from_json(j, cfg), {}};
    } catch (const Reject& r) {
        return {std::nullopt, r.reason};
    } catch (const json::exception& e) {
        return {std::nullopt, e.what()};
    }
}

ParseResult parse_detections(std::istream& in, const SceneConfig& cfg)
{
    ParseResult res;
    res.seq.source_fps = cfg.source_fps;
    res.seq.stride = 1;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        ++res.lines_read;
        LineOutcome outcome = parse_detection_line(line, cfg);
        if (!outcome.detection) {
            res.rejected.push_back({line_no, std::move(outcome.reason)});
            continue;
        }
        Detection& d = *outcome.detection;
        auto& frames = res.seq.frames;
        if (!frames.empty() && d.frame < frames.back().index) {
            throw IngestError(line_no, fmt::format("frame index regression ({} after {})", d.frame,
                                                   frames.back().index));
        }
        if (frames.empty() || frames.back().index != d.frame) frames.push_back({d.frame, {}});
        frames.back().detections.push_back(std::move(d));
        ++res.accepted;
    }
    return res;
}

std::string serialize_detection(const Detection& d)
{
    nlohmann::ordered_json j;
    j["frame"] = d.frame;
    j["class"] = to_string(d.cls);
    j["score"] = d.score;
    j["bbox"] = {d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max};
    if (!d.mask.empty()) {
        auto mask = nlohmann::ordered_json::array();
        for (const auto& v : d.mask) mask.push_back({v.x, v.y});
        j["mask"] = std::move(mask);
    }
    if (d.contact) j["contact"] = {d.contact->x, d.contact->y};
    return j.dump();
}

FrameSeq resample(const FrameSeq& frames, int stride)
{
    if (stride < 1) throw std::invalid_argument("resample: stride must be >= 1");
    FrameSeq out;
    out.source_fps = frames.source_fps;
    out.stride = stride;
    if (frames.frames.empty()) return out;
    const FrameIndex first = frames.frames.front().index;
    for (const Frame& f : frames.frames) {
        if ((f.index - first) % stride == 0) out.frames.push_back(f);
    }
    return out;
}

} // namespace xwalk
