#pragma once

#include "bilip/core.hpp"
#include "bilip/germs.hpp"
#include "bilip/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

namespace bilip {

// ---------------------------------------------------------------------------
// Cloud utilities
// ---------------------------------------------------------------------------

/// Greedy thinning: keeps a vector unless an already kept one lies within `angle`.
inline SphericalCloud dedupe(const SphericalCloud& in, double angle) {
  SphericalCloud out(in.ambient_dim, in.provenance);
  if (in.empty()) return out;
  const double cell = chord_for_angle(angle);
  if (!(cell > 0.0)) {
    out.vectors = in.vectors;
    return out;
  }
  const int n = in.ambient_dim;
  // Hash grid with cell side = radius; neighbours live in the 3^n surrounding cells.
  auto key_of = [&](const Vec& v, int* idx) {
    std::uint64_t h = 1469598103934665603ULL;
    for (int i = 0; i < n; ++i) {
      idx[i] = static_cast<int>(std::floor(v[i] / cell));
      h = (h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(idx[i]))) * 1099511628211ULL;
    }
    return h;
  };
  std::unordered_map<std::uint64_t, std::vector<int>> grid;
  int idx[kMaxDim], nb[kMaxDim];
  const double cell_sq = cell * cell;
  for (const auto& v : in.vectors) {
    key_of(v, idx);
    bool close = false;
    int total = 1;
    for (int i = 0; i < n; ++i) total *= 3;
    for (int c = 0; c < total && !close; ++c) {
      int rem = c;
      std::uint64_t h = 1469598103934665603ULL;
      for (int i = 0; i < n; ++i) {
        nb[i] = idx[i] + (rem % 3) - 1;
        rem /= 3;
        h = (h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(nb[i]))) * 1099511628211ULL;
      }
      auto it = grid.find(h);
      if (it == grid.end()) continue;
      for (int j : it->second)
        if ((out.vectors[j] - v).squaredNorm() < cell_sq) {
          close = true;
          break;
        }
    }
    if (!close) {
      grid[key_of(v, idx)].push_back(static_cast<int>(out.vectors.size()));
      out.vectors.push_back(v);
    }
  }
  return out;
}

namespace detail {

/// Angles from each vector of `from` to its nearest neighbour in `to`.
inline std::vector<double> nearest_angles(const SphericalCloud& from, const KdTree& to) {
  std::vector<double> out;
  out.reserve(from.size());
  for (const auto& v : from.vectors) out.push_back(angle_for_chord(to.nearest(v).dist));
  return out;
}

inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  const std::size_t k = std::min(xs.size() - 1, static_cast<std::size_t>(std::floor(q * (xs.size() - 1) + 0.5)));
  std::nth_element(xs.begin(), xs.begin() + static_cast<long>(k), xs.end());
  return xs[k];
}

}  // namespace detail

/// Symmetric Hausdorff distance in the angle metric.
inline double hausdorff_sphere(const SphericalCloud& a, const SphericalCloud& b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyInput, "Hausdorff distance of an empty cloud");
  require(a.ambient_dim == b.ambient_dim, "Hausdorff distance across dimensions");
  const KdTree ta(a.vectors), tb(b.vectors);
  double h = 0.0;
  for (double x : detail::nearest_angles(a, tb)) h = std::max(h, x);
  for (double x : detail::nearest_angles(b, ta)) h = std::max(h, x);
  return h;
}

/// Hausdorff distance with each directed part replaced by its q-quantile.
inline double hausdorff_quantile(const SphericalCloud& a, const SphericalCloud& b, double q) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyInput, "Hausdorff distance of an empty cloud");
  const KdTree ta(a.vectors), tb(b.vectors);
  return std::max(detail::quantile(detail::nearest_angles(a, tb), q),
                  detail::quantile(detail::nearest_angles(b, ta), q));
}

/// Largest angle from a vector of `a` to the nearest vector of `b` (directed Hausdorff).
inline double directed_hausdorff(const SphericalCloud& a, const SphericalCloud& b) {
  if (a.empty()) return 0.0;
  if (b.empty()) return std::numbers::pi;
  const KdTree tb(b.vectors);
  double h = 0.0;
  for (double x : detail::nearest_angles(a, tb)) h = std::max(h, x);
  return h;
}

/// Every cap of the given angular radius on S^1 holds a point of the cloud:
/// no gap between consecutive angles exceeds twice the radius.
inline bool dense_on_circle(const SphericalCloud& c, double cap_radius) {
  require(c.ambient_dim == 2, "circle density check needs n = 2");
  if (c.empty()) return false;
  std::vector<double> angles;
  for (const auto& v : c.vectors) angles.push_back(std::atan2(v[1], v[0]));
  std::sort(angles.begin(), angles.end());
  double gap = angles.front() + 2.0 * std::numbers::pi - angles.back();
  for (std::size_t i = 1; i < angles.size(); ++i) gap = std::max(gap, angles[i] - angles[i - 1]);
  return gap / 2.0 <= cap_radius;
}

// ---------------------------------------------------------------------------
// Direction sets
// ---------------------------------------------------------------------------

struct DirectionEstimate {
  SphericalCloud stable;
  std::vector<SphericalCloud> per_scale;
  double stability_tol = 0.05;
  int window_begin = 0;           // first scale of the tail the stable set is drawn from
  bool wandering = false;         // per-scale clouds never settle; stable is their union
  bool insufficient_scales = false;
  double refined_radius = 0.0;    // innermost radius of the deep tail behind the stable set, 0 if none
  std::vector<double> drift;      // robust Hausdorff distance of each scale to the innermost one
};

struct DirectionOptions {
  double stability_tol = 0.05;
  int min_window = 3;        // scales that must agree for the germ to count as settled
  double agreement_quantile = 0.9;
  double refine_floor = 1e-12;  // settled germs are resampled this deep; 0 disables
};

namespace detail {

/// Deepest radius at which the germ can still be evaluated without underflow.
inline double evaluable_floor(const SetGerm& germ, double floor) {
  if (const auto* sa = germ.as<Semialgebraic>()) {
    int deg = 1;
    for (const auto& e : sa->equations) deg = std::max(deg, e.degree());
    for (const auto& i : sa->inequalities) deg = std::max(deg, i.poly.degree());
    floor = std::max(floor, std::pow(10.0, -280.0 / deg));
  }
  return floor;
}

}  // namespace detail

/// Direction set estimate from radial projections of the germ sampled per annulus.
///
/// Scales whose projections agree with the innermost scale (robust Hausdorff
/// <= stability_tol) form a tail window. When at least min_window scales agree
/// the germ is settling: the schedule is continued geometrically down to
/// refine_floor and the stable set is the union over the last min_window of
/// those deep annuli (over the window itself for clouds, which cannot be
/// resampled). Otherwise the projections keep moving as the radius shrinks
/// (spirals, zigzags) and the stable set is the union over all scales.
inline DirectionEstimate estimate_direction_set(const SetGerm& germ, const ScaleSchedule& schedule, int per_scale,
                                                std::uint64_t seed, const DirectionOptions& opt = {}) {
  if (schedule.count < 4)
    throw Error(ErrorCode::InsufficientScales, "direction estimation needs at least 4 scales");
  const SetGerm sampled = sample_germ(germ, schedule, per_scale, seed);
  const auto& cloud = *sampled.as<Cloud>();
  const int n = germ.ambient_dim();

  DirectionEstimate est;
  est.stability_tol = opt.stability_tol;
  std::vector<int> nonempty;
  for (const auto& a : cloud.annuli) {
    est.per_scale.push_back(SphericalCloud::from_directions(n, a.points, "scale " + std::to_string(a.scale_index)));
    if (!a.points.empty()) nonempty.push_back(a.scale_index);
  }
  est.drift.assign(est.per_scale.size(), 0.0);
  est.stable = SphericalCloud(n, "D(" + germ.name() + ")");
  if (nonempty.empty()) throw Error(ErrorCode::NoPointsFound, "germ has no samples on the schedule");

  auto union_from = [&](int begin) {
    SphericalCloud u(n, est.stable.provenance);
    for (int k : nonempty)
      if (k >= begin) u.vectors.insert(u.vectors.end(), est.per_scale[k].vectors.begin(), est.per_scale[k].vectors.end());
    return dedupe(u, opt.stability_tol / 4.0);
  };

  if (nonempty.size() < 2) {
    est.insufficient_scales = true;
    est.window_begin = nonempty.front();
    est.stable = union_from(nonempty.front());
    return est;
  }

  const int last = nonempty.back();
  int begin = last;
  bool settled = true;
  for (auto it = nonempty.rbegin(); it != nonempty.rend(); ++it) {
    const int k = *it;
    if (k != last)
      est.drift[k] = hausdorff_quantile(est.per_scale[k], est.per_scale[last], opt.agreement_quantile);
    if (settled && est.drift[k] <= opt.stability_tol)
      begin = k;
    else
      settled = false;
  }
  const auto window = std::count_if(nonempty.begin(), nonempty.end(), [&](int k) { return k >= begin; });
  est.wandering = window < opt.min_window;
  est.window_begin = est.wandering ? nonempty.front() : begin;
  est.stable = union_from(est.window_begin);
  if (est.wandering || germ.as<Cloud>() || !(opt.refine_floor > 0.0)) return est;

  // Continue the schedule: the deep tail starts where min_window annuli still fit above the floor.
  const double floor = detail::evaluable_floor(germ, opt.refine_floor);
  int first = schedule.count;
  while (schedule.radius(first + opt.min_window) > floor) ++first;
  if (first == schedule.count) return est;
  ScaleSchedule deep{schedule.radius(first), schedule.ratio, opt.min_window};
  try {
    const SetGerm tail = sample_germ(germ, deep, per_scale, substream(seed, 0xdee9)());
    SphericalCloud u(n, est.stable.provenance);
    for (const auto& a : tail.as<Cloud>()->annuli)
      for (const auto& p : a.points) u.vectors.push_back(p / p.norm());
    est.stable = dedupe(u, opt.stability_tol / 4.0);
    est.refined_radius = deep.min_radius();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoPointsFound) throw;
  }
  return est;
}

/// Cone over the stable direction set.
inline SetGerm tangent_cone(const SetGerm& germ, const ScaleSchedule& schedule, int per_scale, std::uint64_t seed,
                            const DirectionOptions& opt = {}) {
  const auto est = estimate_direction_set(germ, schedule, per_scale, seed, opt);
  if (est.stable.empty()) throw Error(ErrorCode::EmptyDirectionSet, "stable direction set is empty");
  return cone_over(est.stable, "LD(" + germ.name() + ")");
}

// ---------------------------------------------------------------------------
// Dimension
// ---------------------------------------------------------------------------

inline const std::vector<double>& default_cap_schedule() {
  static const std::vector<double> caps{0.4, 0.28, 0.2, 0.14, 0.1, 0.07, 0.05};
  return caps;
}

struct DimensionReport {
  int dim = -1;
  double slope = 0.0;
  double fit_min = 0.0, fit_max = 0.0;  // cap radii used in the fit
  double residual = 0.0;
  bool confident = true;
  bool degenerate = false;  // every cap count equal: a single cluster
  std::vector<std::pair<double, long>> counts;  // (cap radius, N)
};

/// Insertion radii (angles) of a farthest-point ordering, stopping below `floor_angle`.
inline std::vector<double> farthest_point_radii(const SphericalCloud& c, double floor_angle) {
  std::vector<double> radii;
  if (c.empty()) return radii;
  const std::size_t m = c.size();
  std::vector<double> d(m, std::numeric_limits<double>::infinity());
  std::size_t cur = 0;
  radii.push_back(std::numeric_limits<double>::infinity());
  const double floor_chord = chord_for_angle(floor_angle);
  for (;;) {
    double far = -1.0;
    std::size_t next = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double di = (c.vectors[i] - c.vectors[cur]).norm();
      if (di < d[i]) d[i] = di;
      if (d[i] > far) {
        far = d[i];
        next = i;
      }
    }
    if (!(far > floor_chord)) break;
    radii.push_back(angle_for_chord(far));
    cur = next;
  }
  return radii;
}

/// Box-counting dimension from greedy cap covers N(delta).
inline DimensionReport estimate_dimension(const SphericalCloud& cloud,
                                          const std::vector<double>& caps = default_cap_schedule()) {
  require(caps.size() >= 4, "cap schedule needs at least 4 radii");
  for (std::size_t i = 1; i < caps.size(); ++i) require(caps[i] < caps[i - 1] && caps[i] > 0.0, "cap radii must decrease");
  require(caps.front() / caps.back() >= 7.9, "cap schedule must span at least 0.9 decades");
  DimensionReport rep;
  rep.fit_min = caps.back();
  rep.fit_max = caps.front();
  if (cloud.empty()) return rep;

  const auto radii = farthest_point_radii(cloud, caps.back());
  std::vector<double> xs, ys;
  for (double delta : caps) {
    const long count = std::count_if(radii.begin(), radii.end(), [&](double r) { return r > delta; });
    rep.counts.emplace_back(delta, count);
    xs.push_back(std::log(1.0 / delta));
    ys.push_back(std::log(static_cast<double>(count)));
  }
  if (std::all_of(rep.counts.begin(), rep.counts.end(), [&](const auto& c) { return c.second == rep.counts[0].second; })) {
    rep.dim = 0;
    rep.degenerate = true;
    return rep;
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  rep.slope = sxy / sxx;
  double ss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (my + rep.slope * (xs[i] - mx));
    ss += e * e;
  }
  rep.residual = std::sqrt(ss / n);
  rep.dim = std::clamp(static_cast<int>(std::lround(rep.slope)), 0, cloud.ambient_dim - 1);
  rep.confident = std::abs(rep.slope - rep.dim) <= 0.25;
  return rep;
}

// ---------------------------------------------------------------------------
// Intersections
// ---------------------------------------------------------------------------

/// Proximity join: normalized midpoints of all pairs within angular_tol,
/// thinned at angular_tol / 2.
inline SphericalCloud intersect_direction_sets(const SphericalCloud& a, const SphericalCloud& b, double angular_tol) {
  require(a.ambient_dim == b.ambient_dim, "intersection across dimensions");
  SphericalCloud out(a.ambient_dim, a.provenance + " & " + b.provenance);
  if (a.empty() || b.empty()) return out;
  const KdTree tb(b.vectors);
  const double r = chord_for_angle(angular_tol);
  for (const auto& u : a.vectors) {
    auto hits = tb.within(u, r);
    std::sort(hits.begin(), hits.end());
    for (std::size_t j : hits) {
      if (angle_between(u, b.vectors[j]) > angular_tol) continue;
      const Vec m = u + b.vectors[j];
      const double mn = m.norm();
      if (mn > 0.0) out.vectors.push_back(m / mn);
    }
  }
  return dedupe(out, angular_tol / 2.0);
}

struct DirectionalParams {
  ScaleSchedule schedule;
  int per_scale = 2000;
  double stability_tol = 0.05;
  double angular_tol = 0.05;
  std::vector<double> caps = default_cap_schedule();
  std::uint64_t seed = 42;
};

struct DirectionalResult {
  DirectionEstimate a, b;
  SphericalCloud intersection;
  DimensionReport report;
};

inline DirectionalResult directional_dimension_detail(const SetGerm& a, const SetGerm& b, const DirectionalParams& p) {
  DirectionOptions opt;
  opt.stability_tol = p.stability_tol;
  DirectionalResult r;
  r.a = estimate_direction_set(a, p.schedule, p.per_scale, p.seed, opt);
  r.b = estimate_direction_set(b, p.schedule, p.per_scale, p.seed ^ 0x9e3779b97f4a7c15ULL, opt);
  r.intersection = intersect_direction_sets(r.a.stable, r.b.stable, p.angular_tol);
  r.report = estimate_dimension(r.intersection, p.caps);
  return r;
}

/// dim(D(A) & D(B)) verdict; -1 for an empty intersection.
inline int directional_dimension(const SetGerm& a, const SetGerm& b, const DirectionalParams& p) {
  return directional_dimension_detail(a, b, p).report.dim;
}

}  // namespace bilip
