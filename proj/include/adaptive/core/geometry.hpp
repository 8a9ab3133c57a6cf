#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace adaptive {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double k) const { return {x * k, y * k}; }
  bool operator==(const Vec2&) const = default;

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
};

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Vec2 position() const { return {x, y}; }
  bool operator==(const Pose2&) const = default;
};

double normalize_angle(double angle);

// A lane segment's footprint on a path: arc-length interval [s_begin, s_end).
struct SegmentSpan {
  int segment_id = -1;
  double s_begin = 0.0;
  double s_end = 0.0;
};

struct PathProjection {
  double s = 0.0;        // arc length of the closest point
  double lateral = 0.0;  // signed distance, positive to the left
  std::size_t segment = 0;
};

// Polyline parameterized by arc length, with a speed limit per polyline
// segment and the lane-graph segments it was assembled from.
class Path {
 public:
  Path() = default;
  Path(std::vector<Vec2> points, std::vector<double> speed_limits,
       std::vector<SegmentSpan> spans = {});

  // Resamples a polyline at (at most) `spacing` metres, keeping the end point.
  static Path resampled(const Path& source, double spacing);

  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  std::size_t segment_count() const { return points_.empty() ? 0 : points_.size() - 1; }
  std::span<const Vec2> points() const { return points_; }
  std::span<const double> cumulative() const { return cumulative_; }
  std::span<const SegmentSpan> spans() const { return spans_; }

  // Index of the polyline segment containing arc length s (clamped).
  std::size_t segment_at(double s) const;
  Pose2 pose_at(double s) const;
  // Pose shifted by `lateral` metres along the left normal.
  Pose2 pose_at(double s, double lateral) const;
  double speed_limit_at(double s) const;
  double heading_of_segment(std::size_t segment) const;

  PathProjection project(const Vec2& p) const;
  // Projection restricted to polyline segments [first, last] (inclusive, clamped).
  PathProjection project(const Vec2& p, std::size_t first, std::size_t last) const;

  // Arc length where lane segment `segment_id` starts on this path.
  std::optional<double> span_begin(int segment_id) const;

 private:
  std::vector<Vec2> points_;
  std::vector<double> cumulative_;
  std::vector<double> speed_limits_;  // one per polyline segment
  std::vector<SegmentSpan> spans_;
};

// Vehicle footprint as an oriented rectangle centred on the pose.
struct Footprint {
  Pose2 pose;
  double length = 4.5;
  double width = 2.0;
};

bool footprints_overlap(const Footprint& a, const Footprint& b);

// Overlap of the footprints' axis-aligned bounding boxes (conservative).
bool bounding_boxes_overlap(const Footprint& a, const Footprint& b);

}  // namespace adaptive
