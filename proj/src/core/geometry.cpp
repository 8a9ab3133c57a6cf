#include "adaptive/core/geometry.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numbers>

#include "adaptive/core/error.hpp"

namespace adaptive {

double normalize_angle(double angle) {
  const double two_pi = 2.0 * std::numbers::pi;
  angle = std::fmod(angle + std::numbers::pi, two_pi);
  if (angle < 0.0) angle += two_pi;
  return angle - std::numbers::pi;
}

Path::Path(std::vector<Vec2> points, std::vector<double> speed_limits,
           std::vector<SegmentSpan> spans)
    : points_(std::move(points)), speed_limits_(std::move(speed_limits)), spans_(std::move(spans)) {
  if (points_.size() < 2) throw InvariantError("path needs at least 2 points");
  if (speed_limits_.size() != points_.size() - 1) {
    throw InvariantError("path needs one speed limit per polyline segment");
  }
  cumulative_.resize(points_.size());
  cumulative_[0] = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double step = (points_[i] - points_[i - 1]).norm();
    if (step <= 0.0) throw InvariantError("path has repeated consecutive points");
    cumulative_[i] = cumulative_[i - 1] + step;
  }
}

Path Path::resampled(const Path& source, double spacing) {
  if (spacing <= 0.0) throw UsageError("resampling spacing must be positive");
  const double total = source.length();
  std::vector<double> stations;
  for (double s = 0.0; s < total - 1e-6; s += spacing) stations.push_back(s);
  stations.push_back(total);

  std::vector<Vec2> points;
  std::vector<double> limits;
  points.reserve(stations.size());
  for (const double s : stations) points.push_back(source.pose_at(s).position());
  for (std::size_t i = 0; i + 1 < stations.size(); ++i) {
    limits.push_back(source.speed_limit_at(0.5 * (stations[i] + stations[i + 1])));
  }

  // Map span boundaries from source arc length onto the new polyline.
  Path out(points, limits);
  auto remap = [&](double s_source) {
    const auto it = std::lower_bound(stations.begin(), stations.end(), s_source);
    if (it == stations.end()) return out.length();
    const std::size_t k = static_cast<std::size_t>(it - stations.begin());
    if (k == 0) return 0.0;
    const double a = stations[k - 1];
    const double b = stations[k];
    const double t = b > a ? (s_source - a) / (b - a) : 0.0;
    return out.cumulative_[k - 1] + t * (out.cumulative_[k] - out.cumulative_[k - 1]);
  };
  for (const auto& span : source.spans_) {
    out.spans_.push_back({span.segment_id, remap(span.s_begin), remap(span.s_end)});
  }
  return out;
}

std::size_t Path::segment_at(double s) const {
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  std::size_t index = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  return std::min(index, segment_count() - 1);
}

double Path::heading_of_segment(std::size_t segment) const {
  const Vec2 d = points_[segment + 1] - points_[segment];
  return std::atan2(d.y, d.x);
}

Pose2 Path::pose_at(double s) const {
  s = std::clamp(s, 0.0, length());
  const std::size_t i = segment_at(s);
  const Vec2 a = points_[i];
  const Vec2 d = points_[i + 1] - a;
  const double seg_len = cumulative_[i + 1] - cumulative_[i];
  const double t = (s - cumulative_[i]) / seg_len;
  return {a.x + d.x * t, a.y + d.y * t, std::atan2(d.y, d.x)};
}

Pose2 Path::pose_at(double s, double lateral) const {
  Pose2 pose = pose_at(s);
  if (lateral != 0.0) {
    pose.x -= std::sin(pose.heading) * lateral;
    pose.y += std::cos(pose.heading) * lateral;
  }
  return pose;
}

double Path::speed_limit_at(double s) const { return speed_limits_[segment_at(std::clamp(s, 0.0, length()))]; }

PathProjection Path::project(const Vec2& p) const { return project(p, 0, segment_count() - 1); }

PathProjection Path::project(const Vec2& p, std::size_t first, std::size_t last) const {
  last = std::min(last, segment_count() - 1);
  first = std::min(first, last);
  PathProjection best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = first; i <= last; ++i) {
    const Vec2 a = points_[i];
    const Vec2 d = points_[i + 1] - a;
    const Vec2 ap = p - a;
    const double len2 = d.squared_norm();
    const double t = std::clamp(ap.dot(d) / len2, 0.0, 1.0);
    const Vec2 q = a + d * t;
    const double d2 = (p - q).squared_norm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best.segment = i;
      best.s = cumulative_[i] + t * (cumulative_[i + 1] - cumulative_[i]);
      const double side = d.cross(ap);
      best.lateral = side >= 0.0 ? std::sqrt(d2) : -std::sqrt(d2);
    }
  }
  return best;
}

std::optional<double> Path::span_begin(int segment_id) const {
  for (const auto& span : spans_) {
    if (span.segment_id == segment_id) return span.s_begin;
  }
  return std::nullopt;
}

namespace {

std::array<Vec2, 4> corners(const Footprint& f) {
  const double c = std::cos(f.pose.heading);
  const double s = std::sin(f.pose.heading);
  const Vec2 along{c * f.length * 0.5, s * f.length * 0.5};
  const Vec2 across{-s * f.width * 0.5, c * f.width * 0.5};
  const Vec2 center = f.pose.position();
  return {center + along + across, center + along - across, center - along - across,
          center - along + across};
}

bool separated_on(const Vec2& axis, const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b) {
  double a_min = std::numeric_limits<double>::infinity(), a_max = -a_min;
  double b_min = a_min, b_max = -a_min;
  for (const auto& p : a) {
    const double v = axis.dot(p);
    a_min = std::min(a_min, v);
    a_max = std::max(a_max, v);
  }
  for (const auto& p : b) {
    const double v = axis.dot(p);
    b_min = std::min(b_min, v);
    b_max = std::max(b_max, v);
  }
  return a_max < b_min || b_max < a_min;
}

}  // namespace

bool footprints_overlap(const Footprint& a, const Footprint& b) {
  const double reach_a = 0.5 * std::hypot(a.length, a.width);
  const double reach_b = 0.5 * std::hypot(b.length, b.width);
  const double r = reach_a + reach_b;
  if ((a.pose.position() - b.pose.position()).squared_norm() > r * r) return false;
  const auto ca = corners(a);
  const auto cb = corners(b);
  const std::array<Vec2, 4> axes{Vec2{std::cos(a.pose.heading), std::sin(a.pose.heading)},
                                 Vec2{-std::sin(a.pose.heading), std::cos(a.pose.heading)},
                                 Vec2{std::cos(b.pose.heading), std::sin(b.pose.heading)},
                                 Vec2{-std::sin(b.pose.heading), std::cos(b.pose.heading)}};
  for (const auto& axis : axes) {
    if (separated_on(axis, ca, cb)) return false;
  }
  return true;
}

bool bounding_boxes_overlap(const Footprint& a, const Footprint& b) {
  auto extent = [](const Footprint& f) {
    const auto c = corners(f);
    double min_x = c[0].x, max_x = c[0].x, min_y = c[0].y, max_y = c[0].y;
    for (const auto& p : c) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
    return std::array<double, 4>{min_x, max_x, min_y, max_y};
  };
  const auto ea = extent(a);
  const auto eb = extent(b);
  return ea[0] <= eb[1] && eb[0] <= ea[1] && ea[2] <= eb[3] && eb[2] <= ea[3];
}

}  // namespace adaptive
