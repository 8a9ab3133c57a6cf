#include <cmath>
#include <numbers>

#include "adaptive/core/error.hpp"
#include "adaptive/core/fixed_text.hpp"
#include "adaptive/scenario/generator.hpp"

namespace adaptive::scenario {

std::string to_string(LaneTemplate t) {
  switch (t) {
    case LaneTemplate::kStraight: return "straight";
    case LaneTemplate::kCurve: return "curve";
    case LaneTemplate::kMerge: return "merge";
    case LaneTemplate::kMixed: return "mixed";
  }
  return "unknown";
}

LaneTemplate lane_template_from_string(const std::string& name) {
  if (name == "straight") return LaneTemplate::kStraight;
  if (name == "curve") return LaneTemplate::kCurve;
  if (name == "merge") return LaneTemplate::kMerge;
  if (name == "mixed") return LaneTemplate::kMixed;
  throw UsageError("unknown lane template '" + name + "'");
}

namespace {

std::vector<Vec2> line(Vec2 a, Vec2 b) { return {a, b}; }

void link_neighbors(LaneGraph& graph, int lanes, int segments_per_lane) {
  for (auto& seg : graph.segments) {
    const int lane = seg.id / 10;
    const int k = seg.id % 10;
    if (k >= segments_per_lane) continue;
    if (lane + 1 < lanes) seg.left = (lane + 1) * 10 + k;
    if (lane > 0) seg.right = (lane - 1) * 10 + k;
  }
}

LaneLayout straight(const TemplateSettings& s) {
  LaneLayout out;
  out.graph.lane_width = s.lane_width;
  const int pieces = 4;
  const double piece = s.length / pieces;
  for (int lane = 0; lane < 3; ++lane) {
    const double y = (lane - 1) * s.lane_width;
    for (int k = 0; k < pieces; ++k) {
      LaneSegment seg;
      seg.id = lane * 10 + k;
      seg.centerline = line({k * piece, y}, {(k + 1) * piece, y});
      seg.speed_limit = s.speed_limit;
      if (k + 1 < pieces) seg.successors = {seg.id + 1};
      out.graph.segments.push_back(seg);
    }
    out.lane_sources.push_back(lane * 10);
  }
  link_neighbors(out.graph, 3, pieces);
  out.ego_lane = 1;
  out.graph.goal_segment = 10 + pieces - 1;
  return out;
}

// Straight approach, 90 degree left turn on concentric arcs, straight exit.
LaneLayout curve(const TemplateSettings& s) {
  LaneLayout out;
  out.graph.lane_width = s.lane_width;
  const double approach = 100.0;
  const double exit = s.length - approach - 0.5 * std::numbers::pi * s.curve_radius;
  const Vec2 center{approach, s.curve_radius};
  const int arc_points = 31;
  for (int lane = 0; lane < 3; ++lane) {
    const double offset = (lane - 1) * s.lane_width;
    const double r = s.curve_radius - offset;
    LaneSegment a;
    a.id = lane * 10;
    a.centerline = line({0.0, offset}, {approach, offset});
    a.successors = {a.id + 1};
    LaneSegment b;
    b.id = lane * 10 + 1;
    for (int i = 0; i < arc_points; ++i) {
      const double phi = -0.5 * std::numbers::pi + 0.5 * std::numbers::pi * i / (arc_points - 1);
      b.centerline.push_back({center.x + r * std::cos(phi), center.y + r * std::sin(phi)});
    }
    b.centerline.front() = a.centerline.back();
    b.successors = {b.id + 1};
    LaneSegment c;
    c.id = lane * 10 + 2;
    const Vec2 start = b.centerline.back();
    c.centerline = line(start, {start.x, start.y + exit});
    for (auto* seg : {&a, &b, &c}) {
      seg->speed_limit = s.speed_limit;
      out.graph.segments.push_back(*seg);
    }
    out.lane_sources.push_back(lane * 10);
  }
  link_neighbors(out.graph, 3, 3);
  out.ego_lane = 1;
  out.graph.goal_segment = 12;
  return out;
}

// Main lane 0 -> 1 with an on-ramp (segment 10) that tapers into it at the
// halfway point.
LaneLayout merge(const TemplateSettings& s) {
  LaneLayout out;
  out.graph.lane_width = s.lane_width;
  const double half = 0.5 * s.length;
  const double taper = 80.0;
  LaneSegment a1;
  a1.id = 0;
  a1.centerline = line({0.0, 0.0}, {half, 0.0});
  a1.successors = {1};
  a1.right = 10;
  LaneSegment a2;
  a2.id = 1;
  a2.centerline = line({half, 0.0}, {s.length, 0.0});
  LaneSegment ramp;
  ramp.id = 10;
  ramp.successors = {1};
  ramp.left = 0;
  ramp.centerline.push_back({0.0, -s.lane_width});
  for (double x = half - taper; x <= half + 1e-9; x += 5.0) {
    const double t = (x - (half - taper)) / taper;
    ramp.centerline.push_back({x, -s.lane_width * 0.5 * (1.0 + std::cos(std::numbers::pi * t))});
  }
  for (auto* seg : {&a1, &a2, &ramp}) {
    seg->speed_limit = s.speed_limit;
    out.graph.segments.push_back(*seg);
  }
  out.lane_sources = {10, 0};
  out.ego_lane = 1;
  out.graph.goal_segment = 1;
  return out;
}

}  // namespace

LaneLayout make_lane_layout(LaneTemplate kind, const TemplateSettings& settings) {
  LaneLayout out;
  switch (kind) {
    case LaneTemplate::kStraight: out = straight(settings); break;
    case LaneTemplate::kCurve: out = curve(settings); break;
    case LaneTemplate::kMerge: out = merge(settings); break;
    case LaneTemplate::kMixed: throw UsageError("mixed is not a concrete lane template");
  }
  // Persisted geometry is six-decimal; build paths from exactly that.
  for (auto& seg : out.graph.segments) {
    for (auto& p : seg.centerline) p = {quantize(p.x), quantize(p.y)};
    seg.speed_limit = quantize(seg.speed_limit);
  }
  out.graph.lane_width = quantize(out.graph.lane_width);
  out.graph.validate();
  return out;
}

}  // namespace adaptive::scenario
