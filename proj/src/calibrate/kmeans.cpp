#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "adaptive/calibrate/calibrate.hpp"
#include "adaptive/core/error.hpp"
#include "adaptive/core/random.hpp"

namespace adaptive::calibrate {

namespace {

using Point = std::vector<double>;

double squared_distance(const Point& a, const Point& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

// Nearest centroid, ties to the lower index.
std::size_t nearest(const Point& p, const std::vector<Point>& centroids) {
  std::size_t best = 0;
  double best_d = squared_distance(p, centroids[0]);
  for (std::size_t c = 1; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<Point> plus_plus_init(const std::vector<Point>& points, int k, Rng& rng) {
  std::vector<Point> centroids{points[rng.index(points.size())]};
  std::vector<double> d2(points.size());
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      d2[i] = squared_distance(points[i], centroids[nearest(points[i], centroids)]);
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        acc += d2[i];
        if (target < acc && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.index(points.size());
    }
    centroids.push_back(points[pick]);
  }
  return centroids;
}

struct Run {
  std::vector<Point> centroids;
  std::vector<std::size_t> assign;
  std::vector<double> inertia;
  int iterations = 0;
};

Run lloyd(const std::vector<Point>& points, std::vector<Point> centroids, const KMeansOptions& options) {
  const std::size_t k = centroids.size();
  const std::size_t dims = points.front().size();
  Run run;
  run.assign.assign(points.size(), 0);
  auto assign_all = [&] {
    double inertia = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      run.assign[i] = nearest(points[i], centroids);
      inertia += squared_distance(points[i], centroids[run.assign[i]]);
    }
    run.inertia.push_back(inertia);
  };
  for (int it = 0; it < options.max_iterations; ++it) {
    assign_all();
    run.iterations = it + 1;
    std::vector<Point> sums(k, Point(dims, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      ++counts[run.assign[i]];
      for (std::size_t d = 0; d < dims; ++d) sums[run.assign[i]][d] += points[i][d];
    }
    double movement = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (auto& v : sums[c]) v /= static_cast<double>(counts[c]);
      movement = std::max(movement, std::sqrt(squared_distance(sums[c], centroids[c])));
      centroids[c] = sums[c];
    }
    if (movement < options.tolerance) break;
  }
  assign_all();
  run.centroids = std::move(centroids);
  return run;
}

}  // namespace

std::vector<double> ClusterModel::standardize(const BehaviorParams& p) const {
  const auto raw = p.to_array();
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - mean[i]) / stddev[i];
  return out;
}

ClusterModel cluster_behaviors(const std::vector<BehaviorParams>& fits, int k, std::uint64_t seed,
                               const KMeansOptions& options) {
  if (k < 1) throw UsageError("K must be at least 1");
  if (fits.size() < static_cast<std::size_t>(k)) throw UsageError("fewer fits than clusters");

  // Canonical order makes the result independent of input order.
  std::vector<std::size_t> order(fits.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fits[a].to_array() < fits[b].to_array(); });

  ClusterModel model;
  model.k = k;
  const std::size_t dims = 5;
  model.mean.assign(dims, 0.0);
  model.stddev.assign(dims, 0.0);
  for (const auto i : order) {
    const auto v = fits[i].to_array();
    for (std::size_t d = 0; d < dims; ++d) model.mean[d] += v[d];
  }
  for (auto& m : model.mean) m /= static_cast<double>(fits.size());
  for (const auto i : order) {
    const auto v = fits[i].to_array();
    for (std::size_t d = 0; d < dims; ++d) model.stddev[d] += (v[d] - model.mean[d]) * (v[d] - model.mean[d]);
  }
  for (auto& s : model.stddev) {
    s = std::sqrt(s / static_cast<double>(fits.size()));
    if (!(s > 1e-12)) s = 1.0;  // constant dimension
  }

  std::vector<Point> points;
  points.reserve(fits.size());
  for (const auto i : order) points.push_back(model.standardize(fits[i]));

  Rng rng(seed);
  Run best;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    Run run = lloyd(points, plus_plus_init(points, k, rng), options);
    if (r == 0 || run.inertia.back() < best.inertia.back()) best = std::move(run);
  }
  const auto& assign = best.assign;
  const auto& centroids = best.centroids;
  model.inertia_history = best.inertia;
  model.iterations = best.iterations;

  model.assignments.assign(fits.size(), 0);
  for (std::size_t j = 0; j < order.size(); ++j) model.assignments[order[j]] = static_cast<int>(assign[j]);
  for (const auto& c : centroids) {
    std::array<double, 5> raw{};
    for (std::size_t d = 0; d < dims; ++d) raw[d] = c[d] * model.stddev[d] + model.mean[d];
    model.centroids.push_back(BehaviorParams::from_array(raw));
  }
  return model;
}

int assign_cluster(const ClusterModel& model, const BehaviorParams& params) {
  const Point p = model.standardize(params);
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < model.k; ++c) {
    const double d = squared_distance(p, model.standardize(model.centroids[c]));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

namespace {

std::map<int, std::map<std::string, int>> tally(const std::vector<int>& assignments,
                                                const std::vector<std::string>& labels) {
  if (assignments.size() != labels.size()) throw UsageError("one label per assignment required");
  std::map<int, std::map<std::string, int>> counts;
  for (std::size_t i = 0; i < labels.size(); ++i) ++counts[assignments[i]][labels[i]];
  return counts;
}

}  // namespace

double cluster_purity(const std::vector<int>& assignments, const std::vector<std::string>& labels) {
  if (labels.empty()) return 1.0;
  int majority = 0;
  for (const auto& [cluster, by_label] : tally(assignments, labels)) {
    int top = 0;
    for (const auto& [label, n] : by_label) top = std::max(top, n);
    majority += top;
  }
  return static_cast<double>(majority) / static_cast<double>(labels.size());
}

double min_cluster_purity(const std::vector<int>& assignments, const std::vector<std::string>& labels) {
  double worst = 1.0;
  for (const auto& [cluster, by_label] : tally(assignments, labels)) {
    int top = 0, total = 0;
    for (const auto& [label, n] : by_label) {
      top = std::max(top, n);
      total += n;
    }
    worst = std::min(worst, static_cast<double>(top) / total);
  }
  return worst;
}

}  // namespace adaptive::calibrate
