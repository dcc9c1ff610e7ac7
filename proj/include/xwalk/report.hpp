#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "xwalk/features.hpp"
#include "xwalk/stats.hpp"
#include "xwalk/tracking.hpp"

namespace xwalk {

// ---- CSV interchange -------------------------------------------------------

// clip_id,track_id,class,frame,x_m,y_m[,truth]
void write_tracks_csv(std::ostream& out, const std::string& clip_id, std::span<const Track> tracks,
                      double pixels_per_meter, bool truth = false, bool header = true);

// clip_id,frame,track_id,class,speed_kmh,accel_kmh_per_s,dist_m,nearest_id
void write_features_csv(std::ostream& out, const FeatureTable& table, bool header = true);
FeatureTable read_features_csv(std::istream& in);

// ---- analysis --------------------------------------------------------------

// Analysis columns, one row per vehicle record: its speed, acceleration and
// distance to the nearest pedestrian, plus that pedestrian's speed in the same frame.
inline const std::vector<std::string> kAnalysisColumns = {
    "vehicle_speed_kmh", "vehicle_accel_kmh_per_s", "pedestrian_speed_kmh", "distance_m"};

ColumnTable interaction_table(const FeatureTable& t);

struct FeatureSummary {
    std::string name;
    SummaryStats stats;
    Histogram hist;
    FiveNumber box;
};

struct SummaryReport {
    std::string label;
    std::size_t rows_before = 0;
    std::size_t rows_after = 0;
    std::map<std::string, std::size_t> dropped_by;
    std::vector<FeatureSummary> features;          // empty-series features omitted
    std::vector<std::string> constant_columns;
    CorrelationMatrix correlation;
    std::size_t interaction_rows = 0;
};

// Features summarized: vehicle speed, vehicle acceleration, pedestrian speed
// (from per-class records) and vehicle-pedestrian distance (vehicle records).
SummaryReport analyze_table(const FeatureTable& t, const OutlierBounds& bounds, std::size_t bins,
                            const std::string& label);

nlohmann::ordered_json report_to_json(const SummaryReport& r);

// Min/max/avg block per feature with one column per report, followed by each
// report's correlation matrix.
std::string render_text_report(std::span<const SummaryReport> reports);

// label,feature,bin,lo,hi,count
void write_histogram_csv(std::ostream& out, std::span<const SummaryReport> reports);
// label,feature,n,min,q1,median,q3,max,whisker_lo,whisker_hi,fliers
void write_boxplot_csv(std::ostream& out, std::span<const SummaryReport> reports);

std::string format_number(double v);

} // namespace xwalk
