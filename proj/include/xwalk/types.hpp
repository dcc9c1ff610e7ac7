#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace xwalk {

enum class ObjectClass { vehicle, pedestrian };

std::string_view to_string(ObjectClass c);
std::optional<ObjectClass> parse_class(std::string_view s);

inline ObjectClass opposite(ObjectClass c)
{
    return c == ObjectClass::vehicle ? ObjectClass::pedestrian : ObjectClass::vehicle;
}

// Point in the oblique camera image, pixels.
struct ImagePoint {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const ImagePoint&, const ImagePoint&) = default;
};

// Point in the overhead virtual frame, overhead pixels (meters = pixels / P).
struct OverheadPoint {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const OverheadPoint&, const OverheadPoint&) = default;
};

inline double distance(const OverheadPoint& a, const OverheadPoint& b)
{
    return std::hypot(b.x - a.x, b.y - a.y);
}

inline double distance(const ImagePoint& a, const ImagePoint& b)
{
    return std::hypot(b.x - a.x, b.y - a.y);
}

// Closed range [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double v) const { return v >= lo && v <= hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

// Feature column name ("speed_kmh", "accel_kmh_per_s", "dist_m") -> allowed range.
using OutlierBounds = std::map<std::string, Interval>;

OutlierBounds default_outlier_bounds();

using FrameIndex = std::int64_t;
using TrackId = std::int64_t;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Missing or unreadable file.
class IoError : public Error {
public:
    using Error::Error;
};

// Bad or inconsistent scene configuration. `field` names the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class GeometryError : public Error {
public:
    enum class Kind { degenerate_anchors, singular_system, point_at_infinity };
    GeometryError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

// Unrecoverable problem with a detection stream (e.g. frame index going backwards).
class IngestError : public Error {
public:
    IngestError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace xwalk
