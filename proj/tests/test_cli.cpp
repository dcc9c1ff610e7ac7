#include <doctest.h>

#include <sstream>

#include "scenarios.hpp"
#include "test_support.hpp"
#include "xwalk/cli.hpp"

using namespace xwalk;
using xwalk::testing::fixture;
using xwalk::testing::read_file;
using xwalk::testing::scratch_dir;
using xwalk::testing::write_text;

namespace {

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args)
{
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

bool contains(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

nlohmann::json read_json(const std::filesystem::path& p) { return nlohmann::json::parse(read_file(p)); }

// Simulate a spec into `dir` and extract it; returns the features.csv path.
std::filesystem::path simulate_and_extract(const nlohmann::json& spec, const std::filesystem::path& dir,
                                           const std::string& clip)
{
    const auto spec_path = dir / (clip + "_spec.json");
    write_text(spec_path, spec.dump());
    write_text(dir / (clip + "_config.json"), spec["scene"].dump());
    REQUIRE(cli({"simulate", "--spec", spec_path.string(), "--out", (dir / ("sim_" + clip)).string()}).code == 0);
    const auto det = dir / (clip + ".jsonl");
    std::filesystem::copy_file(dir / ("sim_" + clip) / "detections.jsonl", det);
    const auto out = dir / ("ext_" + clip);
    const CliRun r = cli({"extract", "--config", (dir / (clip + "_config.json")).string(), "--out", out.string(),
                          det.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return out / "features.csv";
}

} // namespace

TEST_CASE("calibrate reports F, P and the stated-scale discrepancy")
{
    const CliRun a = cli({"calibrate", "--config", fixture("spot_a.json").string()});
    CHECK(a.code == 0);
    CHECK(contains(a.out, "= 1/3 s"));
    CHECK(contains(a.out, "960 / 15 = 64 px/m"));
    CHECK(contains(a.out, "stated pixels_per_meter 46"));
    CHECK(contains(a.out, "max residual"));

    const CliRun b = cli({"calibrate", "--config", fixture("spot_b.json").string()});
    CHECK(b.code == 0);
    CHECK(contains(b.out, "= 5/11 s"));
}

TEST_CASE("calibrate on degenerate or identity anchors")
{
    const auto dir = scratch_dir("cli_calibrate");
    auto j = nlohmann::json::parse(read_file(fixture("spot_a.json")));
    j["anchors"][2]["image"] = {665, 610};
    write_text(dir / "collinear.json", j.dump());
    const CliRun bad = cli({"calibrate", "--config", (dir / "collinear.json").string()});
    CHECK(bad.code == 2);
    CHECK(contains(bad.err, "collinear"));
    CHECK(contains(bad.err, "anchors["));

    j = nlohmann::json::parse(read_file(fixture("spot_a.json")));
    for (auto& a : j["anchors"]) a["image"] = a["overhead"];
    j.erase("stated_pixels_per_meter");
    write_text(dir / "identity.json", j.dump());
    const CliRun id = cli({"calibrate", "--config", (dir / "identity.json").string()});
    CHECK(id.code == 0);
    CHECK_FALSE(contains(id.out, "note:"));
    std::istringstream lines(id.out);
    std::string line;
    std::getline(lines, line);
    for (int r = 0; r < 3; ++r) {
        std::getline(lines, line);
        std::istringstream row(line);
        char bracket;
        double v[3];
        row >> bracket >> v[0] >> v[1] >> v[2];
        for (int c = 0; c < 3; ++c) CHECK(std::abs(v[c] - (r == c ? 1.0 : 0.0)) < 1e-9);
    }

    CHECK(cli({"calibrate", "--config", (dir / "missing.json").string()}).code == 1);
}

TEST_CASE("extract writes tracks, features, rejects and a manifest")
{
    const auto dir = scratch_dir("cli_extract");
    const CliRun r = cli({"extract", "--config", fixture("spot_a.json").string(), "--out", dir.string(),
                          fixture("clip_a.jsonl").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    for (const char* f : {"tracks.csv", "features.csv", "rejects.csv", "manifest.json"})
        CHECK(std::filesystem::exists(dir / f));
    CHECK(read_file(dir / "features.csv").rfind("clip_id,frame,track_id,class,speed_kmh,accel_kmh_per_s,dist_m", 0) == 0);
    CHECK(read_file(dir / "tracks.csv").rfind("clip_id,track_id,class,frame,x_m,y_m", 0) == 0);

    const auto m = read_json(dir / "manifest.json");
    CHECK(m["command"] == "extract");
    CHECK(m["counts"]["clips"]["clip_a"]["lines_rejected"] == 0);
    for (const auto& a : m["artifacts"]) CHECK(a["sha256"] == sha256_file(dir / a["path"].get<std::string>()));
}

TEST_CASE("extract on an empty file succeeds with empty tables")
{
    const auto dir = scratch_dir("cli_empty");
    write_text(dir / "empty.jsonl", "");
    const CliRun r = cli({"extract", "--config", fixture("spot_a.json").string(), "--out", (dir / "out").string(),
                          (dir / "empty.jsonl").string()});
    CHECK(r.code == 0);
    CHECK(read_file(dir / "out" / "features.csv") ==
          "clip_id,frame,track_id,class,speed_kmh,accel_kmh_per_s,dist_m,nearest_id\n");
}

TEST_CASE("extract fails with exit 3 when most lines are rejected")
{
    const auto dir = scratch_dir("cli_reject");
    write_text(dir / "dirty.jsonl", R"({"frame":0,"class":"vehicle","score":0.9,"bbox":[10,10,50,40]}
garbage
{"frame":1,"class":"truck","score":0.9,"bbox":[10,10,50,40]}
)");
    const CliRun r = cli({"extract", "--config", fixture("spot_a.json").string(), "--out", (dir / "out").string(),
                          (dir / "dirty.jsonl").string()});
    CHECK(r.code == 3);
    const CliRun lenient = cli({"extract", "--config", fixture("spot_a.json").string(), "--out",
                                (dir / "out").string(), "--max-reject-fraction", "0.9", (dir / "dirty.jsonl").string()});
    CHECK(lenient.code == 0);
    CHECK(contains(read_file(dir / "out" / "rejects.csv"), "dirty,2,\"malformed JSON\""));

    const CliRun v = cli({"validate", "--config", fixture("spot_a.json").string(), (dir / "dirty.jsonl").string()});
    CHECK(v.code == 3);
    CHECK(contains(v.out, "line 3"));
    CHECK(cli({"validate", "--config", fixture("spot_a.json").string(), fixture("clip_a.jsonl").string()}).code == 0);

    write_text(dir / "backwards.jsonl", R"({"frame":3,"class":"vehicle","score":0.9,"bbox":[10,10,50,40]}
{"frame":1,"class":"vehicle","score":0.9,"bbox":[10,10,50,40]}
)");
    CHECK(cli({"extract", "--config", fixture("spot_a.json").string(), "--out", (dir / "out").string(),
               (dir / "backwards.jsonl").string()})
              .code == 3);
}

TEST_CASE("analyze renders both spots side by side")
{
    const auto dir = scratch_dir("cli_analyze");
    REQUIRE(cli({"extract", "--config", fixture("spot_a.json").string(), "--out", (dir / "a").string(),
                 fixture("clip_a.jsonl").string()})
                .code == 0);
    REQUIRE(cli({"extract", "--config", fixture("spot_b.json").string(), "--out", (dir / "b").string(),
                 fixture("clip_b.jsonl").string()})
                .code == 0);
    std::filesystem::copy_file(dir / "a" / "features.csv", dir / "spot_a.csv");
    std::filesystem::copy_file(dir / "b" / "features.csv", dir / "spot_b.csv");

    const CliRun r = cli({"analyze", "--out", (dir / "report").string(), "--bins", "10",
                          (dir / "spot_a.csv").string(), (dir / "spot_b.csv").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(contains(r.out, "spot_a"));
    CHECK(contains(r.out, "spot_b"));
    CHECK(contains(r.out, "max vehicle speed (km/h)"));
    for (const char* f : {"report_spot_a.json", "report_spot_b.json", "summary.json", "summary.txt", "histograms.csv",
                          "boxplots.csv", "manifest.json"})
        CHECK(std::filesystem::exists(dir / "report" / f));

    const auto rep = read_json(dir / "report" / "report_spot_a.json");
    const auto& m = rep["correlation"]["matrix"];
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(m[i][i] == 1.0);
        for (std::size_t j = 0; j < m.size(); ++j) CHECK(m[i][j] == m[j][i]);
    }
}

TEST_CASE("analyze flags a constant column instead of reporting zero")
{
    const auto dir = scratch_dir("cli_constant");
    write_text(dir / "flat.csv", R"(clip_id,frame,track_id,class,speed_kmh,accel_kmh_per_s,dist_m,nearest_id
c,0,1,vehicle,20,0,10,2
c,5,1,vehicle,25,0,8,2
c,10,1,vehicle,31,0,5,2
c,0,2,pedestrian,4,,10,1
c,5,2,pedestrian,4,,8,1
c,10,2,pedestrian,4,,5,1
)");
    const CliRun r = cli({"analyze", "--out", (dir / "out").string(), (dir / "flat.csv").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto rep = read_json(dir / "out" / "report_flat.json");
    const auto& cols = rep["correlation"]["columns"];
    const auto& m = rep["correlation"]["matrix"];
    for (std::size_t i = 0; i < cols.size(); ++i) {
        const bool flat = cols[i] == "vehicle_accel_kmh_per_s" || cols[i] == "pedestrian_speed_kmh";
        if (flat) CHECK(m[i][0].is_null());
    }
    CHECK(m[0][3].get<double>() < 0);   // vehicle speed vs distance
    CHECK(contains(r.out, "n/a"));
}

TEST_CASE("analyze exits 4 when filtering leaves nothing")
{
    const auto dir = scratch_dir("cli_nothing");
    write_text(dir / "fast.csv", R"(clip_id,frame,track_id,class,speed_kmh,accel_kmh_per_s,dist_m,nearest_id
c,0,1,vehicle,300,0,10,
)");
    CHECK(cli({"analyze", "--out", (dir / "out").string(), (dir / "fast.csv").string()}).code == 4);
    CHECK(cli({"analyze", "--out", (dir / "out").string(), "--bounds", R"({"speed_kmh":null})",
               (dir / "fast.csv").string()})
              .code == 0);
}

TEST_CASE("speed-distance correlation sign follows driver behaviour")
{
    const auto dir = scratch_dir("cli_sign");
    const auto risky = simulate_and_extract(xwalk::testing::approach_scene(true, 0.5, 3), dir, "risky");
    const auto safe = simulate_and_extract(xwalk::testing::approach_scene(false, 0.5, 3), dir, "safe");
    const CliRun r = cli({"analyze", "--out", (dir / "report").string(), risky.string(), safe.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto summary = read_json(dir / "report" / "summary.json");
    REQUIRE(summary.size() == 2);
    const double r_risky = summary[0]["correlation"]["matrix"][0][3].get<double>();
    const double r_safe = summary[1]["correlation"]["matrix"][0][3].get<double>();
    CHECK(r_risky < 0);
    CHECK(r_safe > 0);
}

TEST_CASE("simulate writes detections and truth; unseeded specs are refused")
{
    const auto dir = scratch_dir("cli_simulate");
    const CliRun r = cli({"simulate", "--spec", fixture("scene_a.json").string(), "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(read_file(dir / "detections.jsonl") == read_file(fixture("clip_a.jsonl")));
    CHECK(read_file(dir / "truth_tracks.csv").rfind("clip_id,track_id,class,frame,x_m,y_m,truth", 0) == 0);

    auto spec = nlohmann::json::parse(read_file(fixture("scene_a.json")));
    spec.erase("seed");
    write_text(dir / "unseeded.json", spec.dump());
    CHECK(cli({"simulate", "--spec", (dir / "unseeded.json").string(), "--out", (dir / "x").string()}).code == 2);
    CHECK(cli({"simulate", "--spec", (dir / "unseeded.json").string(), "--out", (dir / "x").string(), "--seed", "7"})
              .code == 0);
}

TEST_CASE("usage errors")
{
    CHECK(cli({}).code == 1);
    CHECK(cli({"bogus"}).code == 1);
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({"extract", "--config", fixture("spot_a.json").string()}).code == 1);
}
