#pragma once

#include "bilip/core.hpp"
#include "bilip/germs.hpp"

#include <memory>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

namespace bilip {

/// Polar (r, theta) -> (r, theta - log r): a radius-dependent rotation.
struct Spiral2D {};

/// Shear (x, y) -> (x, y + f(x)) with f the zigzag through the nodes a_n = node_ratio^n.
struct Zigzag2D {
  double slope = std::numbers::sqrt3;
  double node_ratio = (std::numbers::sqrt3 - 1.0) / (std::numbers::sqrt3 + 1.0);
};

/// One coordinate raised to an odd power.
struct PowerMap {
  int axis = 0;  // zero-based
  int exponent = 3;
};

struct Linear {
  Mat matrix;
  Mat inverse;
};

struct GermMap;

struct Composite {
  std::vector<GermMap> maps;  // applied first to last
};

struct GermMap {
  using Body = std::variant<Spiral2D, Zigzag2D, PowerMap, Linear, Composite>;

  int ambient_dim = 2;
  Body body;
  std::string name;

  static GermMap spiral() { return {2, Spiral2D{}, "spiral"}; }
  static GermMap zigzag(double slope = std::numbers::sqrt3,
                        double node_ratio = (std::numbers::sqrt3 - 1.0) / (std::numbers::sqrt3 + 1.0)) {
    require(slope > 0.0, "zigzag slope must be positive");
    require(node_ratio > 0.0 && node_ratio < 1.0, "zigzag node ratio must lie in (0,1)");
    return {2, Zigzag2D{slope, node_ratio}, "zigzag"};
  }
  static GermMap power(int dim, int axis, int exponent) {
    require(axis >= 0 && axis < dim, "power map axis out of range");
    require(exponent > 0 && exponent % 2 == 1, "power map exponent must be an odd positive integer");
    return {dim, PowerMap{axis, exponent}, "power"};
  }
  static GermMap linear(const Mat& m) {
    require(m.rows() == m.cols() && m.rows() > 0 && m.rows() <= kMaxDim, "linear map needs a square matrix");
    const Eigen::MatrixXd dense = m;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(dense);
    require(lu.isInvertible(), "linear map matrix is singular");
    Mat inv = lu.inverse();
    return {static_cast<int>(m.rows()), Linear{m, inv}, "linear"};
  }
  static GermMap identity(int dim) { return linear(Mat::Identity(dim, dim)); }
  static GermMap scaling(int dim, double s) { return linear(s * Mat::Identity(dim, dim)); }
  static GermMap composite(std::vector<GermMap> maps) {
    require(!maps.empty(), "composite map needs at least one map");
    const int dim = maps.front().ambient_dim;
    for (const auto& m : maps) require(m.ambient_dim == dim, "composite map dimension mismatch");
    return {dim, Composite{std::move(maps)}, "composite"};
  }
};

/// Zigzag profile: 0 off (0,1); on [a_n, a_{n-1}] rises with the slope from a_n
/// to the midpoint and falls back to 0 at a_{n-1}.
inline double zigzag_value(const Zigzag2D& z, double x) {
  if (!(x > 0.0 && x < 1.0)) return 0.0;
  // a_n <= x < a_{n-1}
  int n = static_cast<int>(std::floor(std::log(x) / std::log(z.node_ratio))) + 1;
  n = std::max(n, 1);
  double hi = std::pow(z.node_ratio, n - 1);
  double lo = hi * z.node_ratio;
  while (x < lo) {
    hi = lo;
    lo *= z.node_ratio;
  }
  while (x >= hi && hi < 1.0) {
    lo = hi;
    hi /= z.node_ratio;
  }
  return z.slope * std::max(0.0, std::min(x - lo, hi - x));
}

namespace detail {

inline Vec rotate2(const Vec& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return make_vec({c * v[0] - s * v[1], s * v[0] + c * v[1]});
}

inline double odd_root(double v, int k) { return std::copysign(std::pow(std::abs(v), 1.0 / k), v); }

}  // namespace detail

inline Vec eval(const GermMap& map, const Vec& x);
inline Vec eval_inverse(const GermMap& map, const Vec& y);

namespace detail {

struct Forward {
  const Vec& x;
  Vec operator()(const Spiral2D&) const {
    const double r = x.norm();
    return rotate2(x, -std::log(r));
  }
  Vec operator()(const Zigzag2D& z) const { return make_vec({x[0], x[1] + zigzag_value(z, x[0])}); }
  Vec operator()(const PowerMap& p) const {
    Vec y = x;
    y[p.axis] = std::pow(x[p.axis], p.exponent);
    return y;
  }
  Vec operator()(const Linear& l) const { return l.matrix * x; }
  Vec operator()(const Composite& c) const {
    Vec y = x;
    for (const auto& m : c.maps) y = eval(m, y);
    return y;
  }
};

struct Inverse {
  const Vec& y;
  Vec operator()(const Spiral2D&) const {
    const double r = y.norm();
    return rotate2(y, std::log(r));
  }
  Vec operator()(const Zigzag2D& z) const { return make_vec({y[0], y[1] - zigzag_value(z, y[0])}); }
  Vec operator()(const PowerMap& p) const {
    Vec x = y;
    x[p.axis] = odd_root(y[p.axis], p.exponent);
    return x;
  }
  Vec operator()(const Linear& l) const { return l.inverse * y; }
  Vec operator()(const Composite& c) const {
    Vec x = y;
    for (auto it = c.maps.rbegin(); it != c.maps.rend(); ++it) x = eval_inverse(*it, x);
    return x;
  }
};

}  // namespace detail

/// Forward evaluation; the origin maps to the origin for every map.
inline Vec eval(const GermMap& map, const Vec& x) {
  require(x.size() == map.ambient_dim, "map dimension mismatch");
  if (x.isZero(0.0)) return x;
  return std::visit(detail::Forward{x}, map.body);
}

inline Vec eval_inverse(const GermMap& map, const Vec& y) {
  require(y.size() == map.ambient_dim, "map dimension mismatch");
  if (y.isZero(0.0)) return y;
  return std::visit(detail::Inverse{y}, map.body);
}

/// Image of a cloud germ; annuli are re-bucketed by the new norms against the same radii.
inline SetGerm pushforward(const GermMap& map, const SetGerm& cloud_germ) {
  const auto* cloud = cloud_germ.as<Cloud>();
  require(cloud != nullptr, "pushforward needs a cloud germ");
  if (cloud->point_count() == 0) throw Error(ErrorCode::EmptyCloud, "pushforward of an empty cloud");
  std::vector<Vec> image;
  image.reserve(cloud->point_count());
  for (const auto& a : cloud->annuli)
    for (const auto& p : a.points) image.push_back(eval(map, p));
  return SetGerm::cloud_from_points(cloud_germ.ambient_dim(), cloud->schedule, image,
                                    map.name + "(" + cloud_germ.name() + ")");
}

/// Exact image germ where one exists: linear images of cones are cones, images
/// of arcs (and of single rays) are arcs. Other bodies are pushed forward
/// through a dense sample on the given schedule.
inline SetGerm image_germ(const GermMap& map, const SetGerm& germ, const ScaleSchedule& schedule, int per_scale,
                          std::uint64_t seed) {
  require(germ.ambient_dim() == map.ambient_dim, "map and germ dimensions differ");
  const std::string name = map.name + "(" + germ.name() + ")";
  auto shared = std::make_shared<GermMap>(map);
  if (const auto* lin = std::get_if<Linear>(&map.body)) {
    if (const auto* cone = germ.as<Cone>()) {
      std::vector<Vec> dirs;
      for (const auto& u : cone->base.vectors) dirs.push_back(lin->matrix * u);
      return cone_over(SphericalCloud::from_directions(germ.ambient_dim(), dirs, name), name);
    }
  }
  if (const auto* arc = germ.as<Arc>()) {
    Arc out = *arc;
    auto inner = arc->transform;
    out.transform = [shared, inner](const Vec& p) { return eval(*shared, inner ? inner(p) : p); };
    out.transform_name = map.name + (arc->transform_name.empty() ? "" : "." + arc->transform_name);
    return SetGerm(germ.ambient_dim(), std::move(out), name);
  }
  if (const auto* cone = germ.as<Cone>(); cone && cone->base.size() == 1) {
    const Vec u = cone->base.vectors.front();
    std::vector<Expr> comps;
    for (int i = 0; i < u.size(); ++i) comps.push_back(Expr::parse("(* " + format_double(u[i]) + " t)"));
    Arc out{std::move(comps), 1.0, {}, {}};
    out.transform = [shared, u](const Vec& p) { return eval(*shared, p.norm() * u); };
    out.transform_name = map.name;
    return SetGerm(germ.ambient_dim(), std::move(out), name);
  }
  return pushforward(map, sample_germ(germ, schedule, per_scale, seed));
}

// ---------------------------------------------------------------------------
// Empirical bi-Lipschitz constants
// ---------------------------------------------------------------------------

struct LipschitzEstimate {
  double k_lower = 0.0;
  double k_upper = 0.0;
  long pair_count = 0;
  std::vector<std::pair<double, double>> min_ratio_trend;  // (scale radius, min ratio)

  /// Flags maps whose per-scale minimum ratio drops by more than 10x across the schedule.
  bool degenerates(double factor = 10.0) const {
    if (min_ratio_trend.size() < 2) return false;
    return min_ratio_trend.front().second > factor * min_ratio_trend.back().second;
  }
};

/// Ratios |phi(x1)-phi(x2)| / |x1-x2| over pairs drawn inside each annulus with
/// separations near |x1|, 0.1|x1| and 0.001|x1| in rotation, in random or
/// coordinate directions.
inline LipschitzEstimate estimate_bilipschitz(const GermMap& map, const ScaleSchedule& schedule, int pairs,
                                              std::uint64_t seed) {
  require(pairs >= 100, "bi-Lipschitz estimation needs at least 100 pairs per scale");
  schedule.validate();
  const int n = map.ambient_dim;
  std::vector<double> lo(schedule.count), hi(schedule.count);
  parallel_for(static_cast<std::size_t>(schedule.count), [&](std::size_t ks) {
    const int k = static_cast<int>(ks);
    double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
    for (int i = 0; i < pairs; ++i) {
      Rng rng = substream(seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i));
      const Vec x1 = random_in_shell(n, schedule.inner(k), schedule.outer(k), rng);
      static constexpr double kSeparation[3] = {1.0, 0.1, 0.001};
      const double sep = kSeparation[i % 3] * x1.norm();
      // Every fourth pair is separated along a coordinate axis, where coordinate-wise maps degenerate.
      Vec dir = random_unit(n, rng);
      if (i % 4 == 3) {
        dir.setZero();
        dir[(i / 4) % n] = uniform01(rng) < 0.5 ? -1.0 : 1.0;
      }
      const Vec x2 = x1 + sep * dir;
      const double d = (x1 - x2).norm();
      if (!(d > 0.0) || x2.isZero(0.0)) continue;
      const double ratio = (eval(map, x1) - eval(map, x2)).norm() / d;
      mn = std::min(mn, ratio);
      mx = std::max(mx, ratio);
    }
    lo[k] = mn;
    hi[k] = mx;
  });
  LipschitzEstimate est;
  est.k_lower = *std::min_element(lo.begin(), lo.end());
  est.k_upper = *std::max_element(hi.begin(), hi.end());
  est.pair_count = static_cast<long>(pairs) * schedule.count;
  for (int k = 0; k < schedule.count; ++k) est.min_ratio_trend.emplace_back(schedule.radius(k), lo[k]);
  return est;
}

}  // namespace bilip
