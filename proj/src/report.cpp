#include "xwalk/report.hpp"

#include <map>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

namespace xwalk {

std::string format_number(double v)
{
    std::string s = fmt::format("{:.6f}", v);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::optional<double> parse_optional(const std::string& s, std::size_t line)
{
    if (s.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(fmt::format("feature CSV line {}: bad number '{}'", line, s));
    }
}

} // namespace

void write_tracks_csv(std::ostream& out, const std::string& clip_id, std::span<const Track> tracks,
                      double pixels_per_meter, bool truth, bool header)
{
    if (header) out << "clip_id,track_id,class,frame,x_m,y_m" << (truth ? ",truth" : "") << '\n';
    for (const Track& t : tracks) {
        for (const TrackPoint& p : t.points) {
            out << clip_id << ',' << t.id << ',' << to_string(t.cls) << ',' << p.frame << ','
                << format_number(p.pos.x / pixels_per_meter) << ',' << format_number(p.pos.y / pixels_per_meter);
            if (truth) out << ",1";
            out << '\n';
        }
    }
}

void write_features_csv(std::ostream& out, const FeatureTable& table, bool header)
{
    if (header) out << "clip_id,frame,track_id,class,speed_kmh,accel_kmh_per_s,dist_m,nearest_id\n";
    for (const FeatureRecord& r : table) {
        out << r.clip_id << ',' << r.frame << ',' << r.track_id << ',' << to_string(r.cls) << ','
            << cell(r.speed_kmh) << ',' << cell(r.accel_kmh_per_s) << ',' << cell(r.dist_m) << ','
            << (r.nearest_id ? std::to_string(*r.nearest_id) : std::string()) << '\n';
    }
}

FeatureTable read_features_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) return {};
    const auto header = split_csv(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* required : {"clip_id", "frame", "track_id", "class", "speed_kmh", "accel_kmh_per_s", "dist_m"}) {
        if (!col.count(required)) throw Error(fmt::format("feature CSV: missing column '{}'", required));
    }
    const bool has_nearest = col.count("nearest_id") > 0;

    FeatureTable table;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv(line);
        if (f.size() != header.size())
            throw Error(fmt::format("feature CSV line {}: expected {} fields, got {}", line_no, header.size(), f.size()));
        FeatureRecord r;
        r.clip_id = f[col["clip_id"]];
        try {
            r.frame = std::stoll(f[col["frame"]]);
            r.track_id = std::stoll(f[col["track_id"]]);
            if (has_nearest && !f[col["nearest_id"]].empty()) r.nearest_id = std::stoll(f[col["nearest_id"]]);
        } catch (const std::exception&) {
            throw Error(fmt::format("feature CSV line {}: bad integer field", line_no));
        }
        auto cls = parse_class(f[col["class"]]);
        if (!cls) throw Error(fmt::format("feature CSV line {}: unknown class '{}'", line_no, f[col["class"]]));
        r.cls = *cls;
        r.speed_kmh = parse_optional(f[col["speed_kmh"]], line_no);
        r.accel_kmh_per_s = parse_optional(f[col["accel_kmh_per_s"]], line_no);
        r.dist_m = parse_optional(f[col["dist_m"]], line_no);
        table.push_back(std::move(r));
    }
    return table;
}

ColumnTable interaction_table(const FeatureTable& t)
{
    std::map<std::tuple<std::string, FrameIndex, TrackId>, std::optional<double>> ped_speed;
    for (const auto& r : t)
        if (r.cls == ObjectClass::pedestrian) ped_speed[{r.clip_id, r.frame, r.track_id}] = r.speed_kmh;

    ColumnTable ct;
    ct.names = kAnalysisColumns;
    ct.columns.resize(ct.names.size());
    for (const auto& r : t) {
        if (r.cls != ObjectClass::vehicle) continue;
        std::optional<double> ps;
        if (r.nearest_id) {
            auto it = ped_speed.find({r.clip_id, r.frame, *r.nearest_id});
            if (it != ped_speed.end()) ps = it->second;
        }
        ct.columns[0].push_back(r.speed_kmh);
        ct.columns[1].push_back(r.accel_kmh_per_s);
        ct.columns[2].push_back(ps);
        ct.columns[3].push_back(r.dist_m);
    }
    return ct;
}

SummaryReport analyze_table(const FeatureTable& t, const OutlierBounds& bounds, std::size_t bins,
                            const std::string& label)
{
    SummaryReport rep;
    rep.label = label;
    const FilterResult filtered = filter_outliers(t, bounds);
    rep.rows_before = filtered.rows_before;
    rep.rows_after = filtered.kept.size();
    rep.dropped_by = filtered.dropped_by;

    std::map<std::string, std::vector<double>> series;
    for (const auto& name : kAnalysisColumns) series[name];
    for (const auto& r : filtered.kept) {
        if (r.cls == ObjectClass::vehicle) {
            if (r.speed_kmh) series["vehicle_speed_kmh"].push_back(*r.speed_kmh);
            if (r.accel_kmh_per_s) series["vehicle_accel_kmh_per_s"].push_back(*r.accel_kmh_per_s);
            if (r.dist_m) series["distance_m"].push_back(*r.dist_m);
        } else if (r.speed_kmh) {
            series["pedestrian_speed_kmh"].push_back(*r.speed_kmh);
        }
    }
    for (const auto& name : kAnalysisColumns) {
        const auto& s = series[name];
        if (s.empty()) continue;
        rep.features.push_back({name, summarize(s), histogram(s, bins), boxplot_summary(s)});
    }

    const ColumnTable inter = interaction_table(filtered.kept);
    rep.interaction_rows = inter.rows();
    const ColumnTable norm = normalize_columns(inter, &rep.constant_columns);
    rep.correlation = pearson_matrix(norm, kAnalysisColumns);
    return rep;
}

nlohmann::ordered_json report_to_json(const SummaryReport& r)
{
    using oj = nlohmann::ordered_json;
    oj features = oj::object();
    for (const auto& f : r.features) {
        oj edges = oj::array(), counts = oj::array();
        for (double e : f.hist.edges) edges.push_back(e);
        for (auto c : f.hist.counts) counts.push_back(c);
        features[f.name] = {
            {"n", f.stats.n},
            {"min", f.stats.min},
            {"max", f.stats.max},
            {"mean", f.stats.mean},
            {"histogram", {{"edges", edges}, {"counts", counts}}},
            {"boxplot", {{"min", f.box.min}, {"q1", f.box.q1}, {"median", f.box.median}, {"q3", f.box.q3},
                         {"max", f.box.max}, {"iqr", f.box.iqr}, {"whisker_lo", f.box.whisker_lo},
                         {"whisker_hi", f.box.whisker_hi}, {"fliers", f.box.fliers.size()}}},
        };
    }
    oj matrix = oj::array();
    oj undefined = oj::array();
    for (std::size_t i = 0; i < r.correlation.r.size(); ++i) {
        oj row = oj::array();
        for (std::size_t j = 0; j < r.correlation.r[i].size(); ++j) {
            const auto& v = r.correlation.r[i][j];
            row.push_back(v ? oj(*v) : oj(nullptr));
            if (!v && i <= j) undefined.push_back({r.correlation.names[i], r.correlation.names[j]});
        }
        matrix.push_back(row);
    }
    oj dropped = oj::object();
    for (const auto& [k, v] : r.dropped_by) dropped[k] = v;
    oj j = {
        {"label", r.label},
        {"rows", {{"before", r.rows_before}, {"after", r.rows_after}, {"dropped_by", dropped}}},
        {"features", features},
        {"correlation", {{"columns", r.correlation.names},
                         {"normalized", true},
                         {"rows", r.interaction_rows},
                         {"matrix", matrix},
                         {"undefined", undefined}}},
        {"constant_columns", r.constant_columns},
    };
    return j;
}

namespace {

const std::map<std::string, std::string>& feature_titles()
{
    static const std::map<std::string, std::string> titles = {
        {"vehicle_speed_kmh", "vehicle speed (km/h)"},
        {"vehicle_accel_kmh_per_s", "vehicle acceleration (km/h/s)"},
        {"pedestrian_speed_kmh", "pedestrian speed (km/h)"},
        {"distance_m", "vehicle-pedestrian distance (m)"},
    };
    return titles;
}

const FeatureSummary* find_feature(const SummaryReport& r, const std::string& name)
{
    for (const auto& f : r.features)
        if (f.name == name) return &f;
    return nullptr;
}

} // namespace

std::string render_text_report(std::span<const SummaryReport> reports)
{
    std::ostringstream os;
    os << fmt::format("{:<44}", "feature");
    for (const auto& r : reports) os << fmt::format("{:>14}", r.label);
    os << '\n';
    auto row = [&](const std::string& title, auto&& get) {
        os << fmt::format("{:<44}", title);
        for (const auto& r : reports) os << fmt::format("{:>14}", get(r));
        os << '\n';
    };
    row("rows before filtering", [](const SummaryReport& r) { return std::to_string(r.rows_before); });
    row("rows after filtering", [](const SummaryReport& r) { return std::to_string(r.rows_after); });
    for (const auto& name : kAnalysisColumns) {
        const std::string& title = feature_titles().at(name);
        using Getter = double (*)(const SummaryStats&);
        const std::pair<const char*, Getter> stats[] = {
            {"min", [](const SummaryStats& s) { return s.min; }},
            {"max", [](const SummaryStats& s) { return s.max; }},
            {"avg", [](const SummaryStats& s) { return s.mean; }},
        };
        for (const auto& [what, get] : stats) {
            row(fmt::format("{} {}", what, title), [&](const SummaryReport& r) {
                const FeatureSummary* f = find_feature(r, name);
                return f ? fmt::format("{:.2f}", get(f->stats)) : std::string("-");
            });
        }
    }
    for (const auto& r : reports) {
        os << fmt::format("\ncorrelation ({}, {} rows, min-max normalized)\n", r.label, r.interaction_rows);
        os << fmt::format("{:<26}", "");
        for (const auto& n : r.correlation.names) os << fmt::format("{:>26}", n);
        os << '\n';
        for (std::size_t i = 0; i < r.correlation.names.size(); ++i) {
            os << fmt::format("{:<26}", r.correlation.names[i]);
            for (const auto& v : r.correlation.r[i]) os << fmt::format("{:>26}", v ? fmt::format("{:.3f}", *v) : "n/a");
            os << '\n';
        }
        if (!r.constant_columns.empty()) {
            os << "constant columns:";
            for (const auto& c : r.constant_columns) os << ' ' << c;
            os << '\n';
        }
    }
    return os.str();
}

void write_histogram_csv(std::ostream& out, std::span<const SummaryReport> reports)
{
    out << "label,feature,bin,lo,hi,count\n";
    for (const auto& r : reports)
        for (const auto& f : r.features)
            for (std::size_t b = 0; b < f.hist.counts.size(); ++b)
                out << r.label << ',' << f.name << ',' << b << ',' << format_number(f.hist.edges[b]) << ','
                    << format_number(f.hist.edges[b + 1]) << ',' << f.hist.counts[b] << '\n';
}

void write_boxplot_csv(std::ostream& out, std::span<const SummaryReport> reports)
{
    out << "label,feature,n,min,q1,median,q3,max,whisker_lo,whisker_hi,fliers\n";
    for (const auto& r : reports)
        for (const auto& f : r.features)
            out << r.label << ',' << f.name << ',' << f.stats.n << ',' << format_number(f.box.min) << ','
                << format_number(f.box.q1) << ',' << format_number(f.box.median) << ','
                << format_number(f.box.q3) << ',' << format_number(f.box.max) << ','
                << format_number(f.box.whisker_lo) << ',' << format_number(f.box.whisker_hi) << ','
                << f.box.fliers.size() << '\n';
}

} // namespace xwalk
