#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xwalk/features.hpp"
#include "xwalk/types.hpp"

namespace xwalk {

// Column names understood by filter_outliers and column().
inline constexpr const char* kSpeedColumn = "speed_kmh";
inline constexpr const char* kAccelColumn = "accel_kmh_per_s";
inline constexpr const char* kDistColumn = "dist_m";

std::optional<double> feature_value(const FeatureRecord& r, const std::string& column);

struct FilterResult {
    FeatureTable kept;
    std::size_t rows_before = 0;
    std::map<std::string, std::size_t> dropped_by;   // per feature, first violating feature counts
    std::size_t dropped() const { return rows_before - kept.size(); }
};

// Drops every row with a present feature outside its bound.
FilterResult filter_outliers(const FeatureTable& t, const OutlierBounds& bounds);

struct Normalized {
    std::vector<double> values;
    bool constant = false;
};

// (d - min) / (max - min); a constant series maps to zeros and is flagged.
// Throws std::invalid_argument on empty input.
Normalized minmax_normalize(std::span<const double> series);

struct Histogram {
    std::vector<double> edges;          // bin_count + 1 edges
    std::vector<std::size_t> counts;
};

// Equal-width bins over [min, max], rightmost bin closed. A constant series
// uses the range [v - 0.5, v + 0.5].
Histogram histogram(std::span<const double> series, std::size_t bin_count);

struct FiveNumber {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double iqr = 0.0;
    double whisker_lo = 0.0;   // Q1 - 1.5 IQR
    double whisker_hi = 0.0;   // Q3 + 1.5 IQR
    std::vector<double> fliers;
};

// Linear interpolation between order statistics (type 7).
double quantile_sorted(std::span<const double> sorted, double p);
FiveNumber boxplot_summary(std::span<const double> series);

struct SummaryStats {
    std::size_t n = 0;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
};
SummaryStats summarize(std::span<const double> series);

// Named columns with possibly-missing cells; all columns have equal length.
struct ColumnTable {
    std::vector<std::string> names;
    std::vector<std::vector<std::optional<double>>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
    const std::vector<std::optional<double>>& column(const std::string& name) const;
    std::vector<double> present(const std::string& name) const;
};

// Entries are empty where r is undefined (fewer than two pairwise-complete
// rows, or a constant column among them).
struct CorrelationMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<std::optional<double>>> r;
};

std::optional<double> pearson(std::span<const std::optional<double>> x,
                              std::span<const std::optional<double>> y);
CorrelationMatrix pearson_matrix(const ColumnTable& t, const std::vector<std::string>& columns);

// Applies minmax_normalize to the present cells of every column.
ColumnTable normalize_columns(const ColumnTable& t, std::vector<std::string>* constant_columns = nullptr);

} // namespace xwalk
