#include "xwalk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace xwalk {

std::optional<double> feature_value(const FeatureRecord& r, const std::string& column)
{
    if (column == kSpeedColumn) return r.speed_kmh;
    if (column == kAccelColumn) return r.accel_kmh_per_s;
    if (column == kDistColumn) return r.dist_m;
    throw std::invalid_argument("unknown feature column '" + column + "'");
}

FilterResult filter_outliers(const FeatureTable& t, const OutlierBounds& bounds)
{
    FilterResult res;
    res.rows_before = t.size();
    for (const auto& [name, b] : bounds) res.dropped_by[name] = 0;
    for (const FeatureRecord& r : t) {
        bool keep = true;
        for (const auto& [name, b] : bounds) {
            const auto v = feature_value(r, name);
            if (v && !b.contains(*v)) {
                ++res.dropped_by[name];
                keep = false;
                break;
            }
        }
        if (keep) res.kept.push_back(r);
    }
    return res;
}

Normalized minmax_normalize(std::span<const double> series)
{
    if (series.empty()) throw std::invalid_argument("minmax_normalize: empty series");
    const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
    const double lo = *lo_it, hi = *hi_it;
    Normalized out;
    out.values.reserve(series.size());
    if (hi == lo) {
        out.values.assign(series.size(), 0.0);
        out.constant = true;
        return out;
    }
    for (double d : series) out.values.push_back((d - lo) / (hi - lo));
    return out;
}

Histogram histogram(std::span<const double> series, std::size_t bin_count)
{
    if (series.empty()) throw std::invalid_argument("histogram: empty series");
    if (bin_count == 0) throw std::invalid_argument("histogram: bin_count must be >= 1");
    auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
    double lo = *lo_it, hi = *hi_it;
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    Histogram h;
    h.edges.resize(bin_count + 1);
    for (std::size_t i = 0; i < bin_count; ++i)
        h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bin_count);
    h.edges[bin_count] = hi;
    h.counts.assign(bin_count, 0);
    for (double v : series) {
        auto idx = static_cast<std::size_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(bin_count)));
        ++h.counts[std::min(idx, bin_count - 1)];
    }
    return h;
}

double quantile_sorted(std::span<const double> sorted, double p)
{
    if (sorted.empty()) throw std::invalid_argument("quantile: empty series");
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

FiveNumber boxplot_summary(std::span<const double> series)
{
    if (series.empty()) throw std::invalid_argument("boxplot_summary: empty series");
    std::vector<double> s(series.begin(), series.end());
    std::sort(s.begin(), s.end());
    FiveNumber f;
    f.min = s.front();
    f.max = s.back();
    f.q1 = quantile_sorted(s, 0.25);
    f.median = quantile_sorted(s, 0.5);
    f.q3 = quantile_sorted(s, 0.75);
    f.iqr = f.q3 - f.q1;
    f.whisker_lo = f.q1 - 1.5 * f.iqr;
    f.whisker_hi = f.q3 + 1.5 * f.iqr;
    for (double v : s)
        if (v < f.whisker_lo || v > f.whisker_hi) f.fliers.push_back(v);
    return f;
}

SummaryStats summarize(std::span<const double> series)
{
    if (series.empty()) throw std::invalid_argument("summarize: empty series");
    SummaryStats st;
    st.n = series.size();
    st.min = *std::min_element(series.begin(), series.end());
    st.max = *std::max_element(series.begin(), series.end());
    st.mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(series.size());
    return st;
}

const std::vector<std::optional<double>>& ColumnTable::column(const std::string& name) const
{
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::out_of_range("no column '" + name + "'");
    return columns[static_cast<std::size_t>(it - names.begin())];
}

std::vector<double> ColumnTable::present(const std::string& name) const
{
    std::vector<double> out;
    for (const auto& v : column(name))
        if (v) out.push_back(*v);
    return out;
}

std::optional<double> pearson(std::span<const std::optional<double>> x, std::span<const std::optional<double>> y)
{
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        if (x[i] && y[i]) {
            xs.push_back(*x[i]);
            ys.push_back(*y[i]);
        }
    }
    if (xs.size() < 2) return std::nullopt;
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    // Constant columns: r is undefined, not zero.
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    if (std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs.front(); }) ||
        std::all_of(ys.begin(), ys.end(), [&](double v) { return v == ys.front(); }))
        return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMatrix pearson_matrix(const ColumnTable& t, const std::vector<std::string>& columns)
{
    CorrelationMatrix m;
    m.names = columns;
    const std::size_t k = columns.size();
    m.r.assign(k, std::vector<std::optional<double>>(k));
    for (std::size_t i = 0; i < k; ++i) {
        const auto& ci = t.column(columns[i]);
        for (std::size_t j = i; j < k; ++j) {
            std::optional<double> r = pearson(ci, t.column(columns[j]));
            if (i == j && r) r = 1.0;
            m.r[i][j] = r;
            m.r[j][i] = r;
        }
    }
    return m;
}

ColumnTable normalize_columns(const ColumnTable& t, std::vector<std::string>* constant_columns)
{
    ColumnTable out = t;
    for (std::size_t c = 0; c < out.columns.size(); ++c) {
        auto& col = out.columns[c];
        std::vector<double> present;
        for (const auto& v : col)
            if (v) present.push_back(*v);
        if (present.empty()) continue;
        const Normalized n = minmax_normalize(present);
        if (n.constant && constant_columns) constant_columns->push_back(out.names[c]);
        std::size_t k = 0;
        for (auto& v : col)
            if (v) v = n.values[k++];
    }
    return out;
}

} // namespace xwalk
