#include <doctest.h>

#include <random>
#include <sstream>

#include <fmt/format.h>

#include "test_support.hpp"
#include "xwalk/ingest.hpp"

using namespace xwalk;
using xwalk::testing::fixture;

namespace {

nlohmann::json spot_a_json()
{
    std::ifstream in(fixture("spot_a.json"));
    return nlohmann::json::parse(in);
}

ParseResult parse_text(const std::string& text, const SceneConfig& cfg)
{
    std::istringstream in(text);
    return parse_detections(in, cfg);
}

} // namespace

TEST_CASE("scene config derives frame interval and pixels per meter")
{
    const SceneConfig a = load_scene_config(fixture("spot_a.json"));
    CHECK(a.source_fps == 15.0);
    CHECK(a.stride == 5);
    CHECK(a.frame_interval() == 1.0 / 3.0);
    CHECK(a.pixels_per_meter() == 64.0);
    REQUIRE(a.stated_pixels_per_meter);
    CHECK(*a.stated_pixels_per_meter == 46.0);

    const SceneConfig b = load_scene_config(fixture("spot_b.json"));
    CHECK(b.frame_interval() == 5.0 / 11.0);
    CHECK(b.pixels_per_meter() == 64.0);
}

TEST_CASE("derived constants recompute identically after a JSON round trip")
{
    const SceneConfig a = load_scene_config(fixture("spot_a.json"));
    const SceneConfig again = scene_config_from_json(scene_config_to_json(a));
    CHECK(again.frame_interval() == a.frame_interval());
    CHECK(again.pixels_per_meter() == a.pixels_per_meter());
    CHECK(again.outlier_bounds == a.outlier_bounds);
    CHECK(again.lane_axes.size() == a.lane_axes.size());
}

TEST_CASE("config errors name the offending field")
{
    auto expect_field = [](nlohmann::json j, const std::string& field) {
        try {
            scene_config_from_json(j);
            FAIL("expected ConfigError for ", field);
        } catch (const ConfigError& e) {
            CHECK(e.field() == field);
        }
    };
    auto j = spot_a_json();
    j.erase("fps");
    expect_field(j, "fps");

    j = spot_a_json();
    j["stride"] = 0;
    expect_field(j, "stride");

    j = spot_a_json();
    j["fps"] = -3.0;
    expect_field(j, "fps");

    j = spot_a_json();
    j["thresholds"].erase("vehicle_m");
    expect_field(j, "vehicle_m");

    j = spot_a_json();
    j["anchors"].erase(3);
    expect_field(j, "anchors");

    j = spot_a_json();
    j["stride"] = 2.5;
    expect_field(j, "stride");
}

TEST_CASE("collinear anchors are rejected at load")
{
    auto j = spot_a_json();
    j["anchors"][2]["image"] = {665, 610};   // on the line through anchors 0 and 1
    CHECK_THROWS_AS(scene_config_from_json(j), GeometryError);
}

TEST_CASE("outlier bounds override defaults and null removes one")
{
    auto j = spot_a_json();
    j["outlier_bounds"] = {{"speed_kmh", {0, 90}}, {"dist_m", nullptr}};
    const SceneConfig cfg = scene_config_from_json(j);
    CHECK(cfg.outlier_bounds.at("speed_kmh") == Interval{0, 90});
    CHECK(cfg.outlier_bounds.at("accel_kmh_per_s") == Interval{-15, 15});
    CHECK(cfg.outlier_bounds.count("dist_m") == 0);
}

TEST_CASE("two detections in one frame group into one frame")
{
    const auto cfg = xwalk::testing::identity_config();
    const auto r = parse_text(R"({"frame":0,"class":"vehicle","score":0.9,"bbox":[10,10,50,40],"contact":[30,40]}
{"frame":0,"class":"pedestrian","score":0.8,"bbox":[60,10,70,40]}
)",
                              cfg);
    CHECK(r.accepted == 2);
    CHECK(r.rejected.empty());
    REQUIRE(r.seq.frames.size() == 1);
    CHECK(r.seq.frames[0].index == 0);
    REQUIRE(r.seq.frames[0].detections.size() == 2);
    CHECK(r.seq.frames[0].detections[0].cls == ObjectClass::vehicle);
    CHECK_FALSE(r.seq.frames[0].detections[0].bbox_fallback);
    CHECK(r.seq.frames[0].detections[1].bbox_fallback);
}

TEST_CASE("invalid records are rejected with line numbers and reasons")
{
    const auto cfg = xwalk::testing::identity_config();
    const auto r = parse_text(R"({"frame":0,"class":"vehicle","score":0.9,"bbox":[50,10,10,40]}
not json

{"frame":1,"class":"bicycle","score":0.9,"bbox":[10,10,50,40]}
{"frame":1,"class":"vehicle","score":1.5,"bbox":[10,10,50,40]}
{"frame":1,"class":"vehicle","score":0.5,"bbox":[10,10,5000,40]}
{"frame":1,"class":"pedestrian","score":0.5,"bbox":[10,10,50,40],"mask":[[10,10],[20,20]]}
{"frame":1,"class":"pedestrian","score":0.5,"bbox":[10,10,50,40],"mask":[[10,10],[20,20],[60,30]]}
{"frame":1,"class":"pedestrian","score":0.5,"bbox":[10,10,50,40],"mask":[[8.5,10],[20,41.5],[51,30]]}
{"frame":2,"class":"pedestrian","score":0.5,"bbox":[10,10,50,40],"mask":[]}
{"class":"pedestrian","score":0.5,"bbox":[10,10,50,40]}
)",
                              cfg);
    CHECK(r.lines_read == 10);
    CHECK(r.accepted == 2);
    REQUIRE(r.rejected.size() == 8);
    CHECK(r.rejected[0].line == 1);
    CHECK(r.rejected[0].reason == "degenerate bbox");
    CHECK(r.rejected[1].line == 2);
    CHECK(r.rejected[1].reason == "malformed JSON");
    CHECK(r.rejected[2].line == 4);
    CHECK(r.rejected[2].reason.find("unknown class") != std::string::npos);
    CHECK(r.rejected[3].reason == "score out of range");
    CHECK(r.rejected[4].reason == "bbox outside frame");
    CHECK(r.rejected[5].reason == "mask has fewer than 3 vertices");
    CHECK(r.rejected[6].reason == "mask vertex outside bbox");
    CHECK(r.rejected[7].reason == "missing field 'frame'");
    // Mask vertices within the 2 px slack are fine; an empty mask counts as absent.
    CHECK(r.seq.frames[0].detections[0].mask.size() == 3);
    CHECK(r.seq.frames[1].detections[0].bbox_fallback);
}

TEST_CASE("frame index regression is fatal")
{
    const auto cfg = xwalk::testing::identity_config();
    const std::string text = R"({"frame":5,"class":"vehicle","score":0.9,"bbox":[10,10,50,40]}
{"frame":4,"class":"vehicle","score":0.9,"bbox":[10,10,50,40]}
)";
    try {
        parse_text(text, cfg);
        FAIL("expected IngestError");
    } catch (const IngestError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("a 2,635-record stream is accepted in full")
{
    // Same record count as the larger spot; 1-3 detections per frame.
    const auto cfg = xwalk::testing::identity_config();
    std::mt19937_64 rng(2635);
    std::uniform_real_distribution<double> ux(20, 1200), uy(40, 700);
    std::ostringstream os;
    std::size_t written = 0;
    for (FrameIndex f = 0; written < 2635; ++f) {
        const int per_frame = 1 + static_cast<int>(f % 3);
        for (int k = 0; k < per_frame && written < 2635; ++k, ++written) {
            const double x = ux(rng), y = uy(rng);
            os << fmt::format(R"({{"frame":{},"class":"{}","score":0.9,"bbox":[{},{},{},{}],"contact":[{},{}]}})",
                              f, k % 2 ? "pedestrian" : "vehicle", x - 10, y - 30, x + 10, y, x, y)
               << '\n';
        }
    }
    const auto r = parse_text(os.str(), cfg);
    CHECK(r.lines_read == 2635);
    CHECK(r.accepted == 2635);
    CHECK(r.rejected.empty());
    std::size_t n = 0;
    for (const auto& fr : r.seq.frames) n += fr.detections.size();
    CHECK(n == 2635);
}

TEST_CASE("resample keeps every stride-th frame")
{
    FrameSeq s;
    s.source_fps = 15;
    for (FrameIndex i = 0; i < 15; ++i) s.frames.push_back({i, {}});

    const FrameSeq r = resample(s, 5);
    REQUIRE(r.frames.size() == 3);
    CHECK(r.frames[0].index == 0);
    CHECK(r.frames[1].index == 5);
    CHECK(r.frames[2].index == 10);
    CHECK(r.stride == 5);

    const FrameSeq id = resample(s, 1);
    CHECK(id.frames.size() == 15);

    const FrameSeq again = resample(r, 5);
    REQUIRE(again.frames.size() == 3);
    CHECK(again.frames[2].index == 10);

    CHECK(resample(FrameSeq{}, 5).frames.empty());
    CHECK_THROWS_AS(resample(s, 0), std::invalid_argument);
}

TEST_CASE("resample is idempotent on random sequences")
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        FrameSeq s;
        FrameIndex idx = static_cast<FrameIndex>(rng() % 7);
        const int n = static_cast<int>(rng() % 40);
        for (int i = 0; i < n; ++i) {
            s.frames.push_back({idx, {}});
            idx += 1 + static_cast<FrameIndex>(rng() % 3);
        }
        const int k = 1 + static_cast<int>(rng() % 6);
        const FrameSeq once = resample(s, k);
        const FrameSeq twice = resample(once, k);
        REQUIRE(once.frames.size() == twice.frames.size());
        for (std::size_t i = 0; i < once.frames.size(); ++i) CHECK(once.frames[i].index == twice.frames[i].index);
        for (const auto& f : once.frames) CHECK((f.index - once.frames.front().index) % k == 0);
    }
}

TEST_CASE("serialize then parse reproduces accepted detections")
{
    const auto cfg = xwalk::testing::identity_config();
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ux(40, 1200), uy(40, 700), u01(0, 1);
    for (int trial = 0; trial < 300; ++trial) {
        Detection d;
        d.frame = static_cast<FrameIndex>(rng() % 10000);
        d.cls = rng() % 2 ? ObjectClass::vehicle : ObjectClass::pedestrian;
        d.score = u01(rng);
        const double x = ux(rng), y = uy(rng), w = 5 + 60 * u01(rng), h = 5 + 30 * u01(rng);
        d.bbox = {x - w / 2, y - h, x + w / 2, y};
        const int variant = static_cast<int>(rng() % 3);
        if (variant != 1) {
            for (int k = 0; k < 3 + static_cast<int>(rng() % 6); ++k)
                d.mask.push_back({d.bbox.x_min + w * u01(rng), d.bbox.y_min + h * u01(rng)});
        }
        if (variant != 0) d.contact = ImagePoint{x + u01(rng), y - u01(rng)};
        d.bbox_fallback = d.mask.empty() && !d.contact;

        const LineOutcome back = parse_detection_line(serialize_detection(d), cfg);
        REQUIRE_MESSAGE(back.detection, back.reason);
        CHECK(*back.detection == d);
    }
}
