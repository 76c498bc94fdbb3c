#pragma once

#include "bilip/core.hpp"
#include "bilip/expr.hpp"
#include "bilip/kdtree.hpp"
#include "bilip/polynomial.hpp"

#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace bilip {

// ---------------------------------------------------------------------------
// Scales
// ---------------------------------------------------------------------------

/// Geometric radii eps_k = eps0 * ratio^k. Annulus k is (eps_k * ratio, eps_k].
struct ScaleSchedule {
  double eps0 = 0.1;
  double ratio = 0.5;
  int count = 12;

  void validate() const {
    require(eps0 > 0.0 && std::isfinite(eps0), "schedule eps0 must be positive");
    require(ratio > 0.0 && ratio < 1.0, "schedule ratio must lie in (0,1)");
    require(count > 0, "schedule count must be positive");
    require(radius(count - 1) * ratio > 0.0, "schedule underflows");
  }

  double radius(int k) const { return eps0 * std::pow(ratio, k); }
  double outer(int k) const { return radius(k); }
  double inner(int k) const { return radius(k) * ratio; }
  double min_radius() const { return inner(count - 1); }

  /// Annulus holding a point of norm r, or -1 when r is outside the schedule.
  int annulus_of(double r) const {
    if (!(r > min_radius()) || r > eps0) return -1;
    int k = static_cast<int>(std::floor(std::log(r / eps0) / std::log(ratio)));
    k = std::clamp(k, 0, count - 1);
    // Correct for rounding at the boundaries.
    while (k > 0 && r > outer(k)) --k;
    while (k < count - 1 && r <= inner(k)) ++k;
    return (r > inner(k) && r <= outer(k)) ? k : -1;
  }

  bool operator==(const ScaleSchedule&) const = default;
};

struct AnnulusSample {
  int scale_index = 0;
  double inner_radius = 0.0;
  double outer_radius = 0.0;
  std::vector<Vec> points;
};

// ---------------------------------------------------------------------------
// Spherical clouds
// ---------------------------------------------------------------------------

/// Finite set of unit vectors; an empty cloud stands for the empty set.
struct SphericalCloud {
  int ambient_dim = 0;
  std::vector<Vec> vectors;
  std::string provenance;

  SphericalCloud() = default;
  explicit SphericalCloud(int dim, std::string tag = {}) : ambient_dim(dim), provenance(std::move(tag)) {}

  /// Normalizes every (nonzero) input.
  static SphericalCloud from_directions(int dim, const std::vector<Vec>& dirs, std::string tag = {}) {
    SphericalCloud c(dim, std::move(tag));
    c.vectors.reserve(dirs.size());
    for (const auto& d : dirs) {
      require(d.size() == dim, "direction dimension mismatch");
      const double n = d.norm();
      if (n > 0.0 && std::isfinite(n)) c.vectors.push_back(d / n);
    }
    return c;
  }

  bool empty() const { return vectors.empty(); }
  std::size_t size() const { return vectors.size(); }

  void validate() const {
    for (const auto& v : vectors) {
      require(v.size() == ambient_dim, "spherical cloud dimension mismatch");
      require(std::abs(v.norm() - 1.0) <= 1e-12, "spherical cloud vector is not unit norm");
    }
  }
};

// ---------------------------------------------------------------------------
// Germ bodies
// ---------------------------------------------------------------------------

enum class Sign { Positive, Negative };

struct Inequality {
  Polynomial poly;
  Sign sign = Sign::Positive;

  bool holds(const Vec& x) const {
    const double v = poly(x);
    return sign == Sign::Positive ? v > 0.0 : v < 0.0;
  }
};

struct Semialgebraic {
  std::vector<Polynomial> equations;
  std::vector<Inequality> inequalities;

  bool satisfies_inequalities(const Vec& x) const {
    for (const auto& q : inequalities)
      if (!q.holds(x)) return false;
    return true;
  }
};

/// Parametrized curve t -> transform(components(t)), t in (0, t_max], tending to 0.
struct Arc {
  std::vector<Expr> components;
  double t_max = 1.0;
  std::function<Vec(const Vec&)> transform;  // optional post-map (images under maps)
  std::string transform_name;

  Vec operator()(double t) const {
    Vec p(static_cast<Eigen::Index>(components.size()));
    for (std::size_t i = 0; i < components.size(); ++i) p[static_cast<Eigen::Index>(i)] = components[i](t);
    return transform ? transform(p) : p;
  }
};

struct Cone {
  SphericalCloud base;
  std::shared_ptr<const KdTree> index;  // over base vectors
};

struct Cloud {
  ScaleSchedule schedule;
  std::vector<AnnulusSample> annuli;
  std::shared_ptr<const KdTree> index;  // over all points

  std::size_t point_count() const {
    std::size_t n = 0;
    for (const auto& a : annuli) n += a.points.size();
    return n;
  }
  std::vector<Vec> all_points() const {
    std::vector<Vec> out;
    out.reserve(point_count());
    for (const auto& a : annuli) out.insert(out.end(), a.points.begin(), a.points.end());
    return out;
  }
};

class SetGerm {
 public:
  using Body = std::variant<Semialgebraic, Arc, Cone, Cloud>;

  SetGerm() = default;
  SetGerm(int dim, Body body, std::string name = {}) : dim_(dim), body_(std::move(body)), name_(std::move(name)) {
    require(dim > 0 && dim <= kMaxDim, "ambient dimension out of range");
  }

  static SetGerm semialgebraic(int dim, std::vector<Polynomial> equations, std::vector<Inequality> inequalities = {},
                               std::string name = {}) {
    for (const auto& p : equations) require(p.ambient_dim() == dim, "equation dimension mismatch");
    for (const auto& q : inequalities) require(q.poly.ambient_dim() == dim, "inequality dimension mismatch");
    return SetGerm(dim, Semialgebraic{std::move(equations), std::move(inequalities)}, std::move(name));
  }

  static SetGerm arc(std::vector<Expr> components, double t_max = 1.0, std::string name = {}) {
    require(!components.empty(), "arc needs at least one component");
    require(t_max > 0.0, "arc t_max must be positive");
    const int dim = static_cast<int>(components.size());
    return SetGerm(dim, Arc{std::move(components), t_max, {}, {}}, std::move(name));
  }

  static SetGerm arc(const std::vector<std::string>& components, double t_max = 1.0, std::string name = {}) {
    std::vector<Expr> parsed;
    for (const auto& c : components) parsed.push_back(Expr::parse(c));
    return arc(std::move(parsed), t_max, std::move(name));
  }

  static SetGerm cloud(int dim, ScaleSchedule schedule, std::vector<AnnulusSample> annuli, std::string name = {}) {
    std::vector<Vec> pts;
    for (const auto& a : annuli)
      for (const auto& p : a.points) {
        require(p.size() == dim, "cloud point dimension mismatch");
        require(p.norm() > 0.0, "cloud points must be nonzero");
        pts.push_back(p);
      }
    auto index = std::make_shared<const KdTree>(std::move(pts));
    return SetGerm(dim, Cloud{schedule, std::move(annuli), std::move(index)}, std::move(name));
  }

  /// Buckets raw points onto the schedule; points outside every annulus are dropped.
  static SetGerm cloud_from_points(int dim, const ScaleSchedule& schedule, const std::vector<Vec>& points,
                                   std::string name = {}) {
    schedule.validate();
    std::vector<AnnulusSample> annuli(schedule.count);
    for (int k = 0; k < schedule.count; ++k) annuli[k] = {k, schedule.inner(k), schedule.outer(k), {}};
    for (const auto& p : points) {
      const int k = schedule.annulus_of(p.norm());
      if (k >= 0) annuli[k].points.push_back(p);
    }
    return cloud(dim, schedule, std::move(annuli), std::move(name));
  }

  int ambient_dim() const { return dim_; }
  const Body& body() const { return body_; }
  const std::string& name() const { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }

  template <typename T>
  const T* as() const {
    return std::get_if<T>(&body_);
  }

  const char* kind() const {
    switch (body_.index()) {
      case 0: return "semialgebraic";
      case 1: return "arc";
      case 2: return "cone";
      default: return "cloud";
    }
  }

 private:
  int dim_ = 0;
  Body body_;
  std::string name_;
};

/// Cone { t a : a in base, t >= 0 }.
inline SetGerm cone_over(const SphericalCloud& base, std::string name = {}) {
  if (base.empty()) throw Error(ErrorCode::EmptyBase, "cone base has no points");
  base.validate();
  auto index = std::make_shared<const KdTree>(base.vectors);
  return SetGerm(base.ambient_dim, Cone{base, std::move(index)}, std::move(name));
}

inline SetGerm ray(const Vec& direction, std::string name = {}) {
  return cone_over(SphericalCloud::from_directions(static_cast<int>(direction.size()), {direction}), std::move(name));
}

// ---------------------------------------------------------------------------
// Arc tables: the curve tabulated on a geometric t-grid.
// ---------------------------------------------------------------------------

class ArcTable {
 public:
  static constexpr int kPerOctave = 64;

  /// Tabulates until the curve has stayed below r_min for a full octave.
  ArcTable(const Arc& arc, double r_min) : arc_(&arc) {
    require(r_min > 0.0, "arc table radius must be positive");
    const double step = std::pow(2.0, -1.0 / kPerOctave);
    double t = arc.t_max;
    int below = 0;
    for (int i = 0; i < kPerOctave * 1000 && t > 0.0; ++i, t *= step) {
      Vec p = arc(t);
      const double r = p.norm();
      if (!std::isfinite(r)) throw Error(ErrorCode::InvalidArgument, "arc evaluates to a non-finite point");
      ts_.push_back(t);
      pts_.push_back(p);
      norms_.push_back(r);
      below = r < r_min ? below + 1 : 0;
      if (below >= kPerOctave) break;
    }
    if (below < kPerOctave)
      throw Error(ErrorCode::InvalidArgument, "arc does not tend to the origin at the smallest probe t");
    index_ = KdTree(pts_);
  }

  std::size_t size() const { return ts_.size(); }
  double t(std::size_t i) const { return ts_[i]; }
  const Vec& point(std::size_t i) const { return pts_[i]; }
  double norm(std::size_t i) const { return norms_[i]; }
  const KdTree& index() const { return index_; }
  const Arc& arc() const { return *arc_; }

 private:
  const Arc* arc_;
  std::vector<double> ts_;
  std::vector<Vec> pts_;
  std::vector<double> norms_;
  KdTree index_;
};

// ---------------------------------------------------------------------------
// Semialgebraic numerics
// ---------------------------------------------------------------------------

namespace detail {

/// Projects y onto the common zero set of the equations by (Gauss-)Newton steps.
inline std::optional<Vec> newton_project(const std::vector<Polynomial>& eqs, Vec y, int max_iter = 40) {
  const int n = static_cast<int>(y.size());
  const int m = static_cast<int>(eqs.size());
  const Vec start = y;
  Vec grad;
  for (int it = 0; it < max_iter; ++it) {
    Vec delta;
    if (m == 1) {
      const double f = eqs[0].eval_grad(y, grad);
      const double g2 = grad.squaredNorm();
      if (!(g2 > 0.0) || !std::isfinite(g2)) return std::nullopt;
      delta = (f / g2) * grad;
    } else {
      Eigen::MatrixXd jac(m, n);
      Eigen::VectorXd fv(m);
      for (int i = 0; i < m; ++i) {
        fv[i] = eqs[i].eval_grad(y, grad);
        jac.row(i) = grad.transpose();
      }
      const Eigen::MatrixXd jjt = jac * jac.transpose();
      Eigen::LDLT<Eigen::MatrixXd> ldlt(jjt);
      if (ldlt.info() != Eigen::Success) return std::nullopt;
      const Eigen::VectorXd lam = ldlt.solve(fv);
      if (!lam.allFinite()) return std::nullopt;
      delta = jac.transpose() * lam;
    }
    y -= delta;
    if (!y.allFinite()) return std::nullopt;
    if ((y - start).norm() > 4.0 * (start.norm() + 1e-300)) return std::nullopt;
    if (delta.norm() <= 1e-15 * y.norm()) break;
  }
  // Accept only points whose first-order distance to each zero set is tiny.
  for (const auto& e : eqs) {
    const double f = e.eval_grad(y, grad);
    const double g = grad.norm();
    if (!(std::abs(f) <= 1e-10 * y.norm() * g) && !(f == 0.0)) return std::nullopt;
  }
  return y;
}

/// Tangent-space projection of v at p.
inline Vec tangent_projection(const std::vector<Polynomial>& eqs, const Vec& p, const Vec& v) {
  const int n = static_cast<int>(p.size());
  const int m = static_cast<int>(eqs.size());
  Vec grad;
  if (m == 1) {
    eqs[0].eval_grad(p, grad);
    const double g2 = grad.squaredNorm();
    if (!(g2 > 0.0)) return v;
    return v - (grad.dot(v) / g2) * grad;
  }
  Eigen::MatrixXd jac(m, n);
  for (int i = 0; i < m; ++i) {
    eqs[i].eval_grad(p, grad);
    jac.row(i) = grad.transpose();
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(jac * jac.transpose());
  const Eigen::VectorXd vv = v;
  const Eigen::VectorXd lam = ldlt.solve(jac * vv);
  if (!lam.allFinite()) return v;
  return v - Vec(jac.transpose() * lam);
}

inline bool residual_ok(const Semialgebraic& s, const Vec& p) {
  for (const auto& e : s.equations)
    if (!(std::abs(e(p)) <= 1e-9 * (1.0 + p.norm()))) return false;
  return true;
}

/// Roots of a single equation on the segment a -> b: 256-point sign scan, then bisection.
inline void segment_roots(const Polynomial& f, const Vec& a, const Vec& b, std::vector<Vec>& out, int scan = 256) {
  const Vec dir = b - a;
  double prev_s = 0.0;
  double prev_v = f(a);
  for (int i = 1; i <= scan; ++i) {
    const double s = static_cast<double>(i) / scan;
    const double v = f(a + s * dir);
    if (prev_v == 0.0) {
      out.push_back(a + prev_s * dir);
    } else if ((prev_v < 0.0) != (v < 0.0) && v != 0.0) {
      double lo = prev_s, hi = s, flo = prev_v;
      for (int it = 0; it < 80 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(a + mid * dir);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      out.push_back(a + (0.5 * (lo + hi)) * dir);
    }
    prev_s = s;
    prev_v = v;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

struct SamplerOptions {
  int attempts_per_point = 60;  // budget multiplier per requested point
  int min_attempts = 4000;
  int scan_points = 256;
};

namespace detail {

// Newton converges only linearly onto a double root (x^2 + y^2 = z^6 halves its offset per step).
inline constexpr int kThinNewtonSteps = 120;

inline std::vector<Vec> sample_semialgebraic_annulus(const Semialgebraic& s, int dim, double inner, double outer,
                                                     int per_scale, Rng& rng, const SamplerOptions& opt) {
  std::vector<Vec> pts;
  const long budget = std::max<long>(opt.min_attempts, static_cast<long>(opt.attempts_per_point) * per_scale);
  std::vector<Vec> roots;
  auto accept = [&](const Vec& q) {
    const double r = q.norm();
    if (!(r > inner && r <= outer)) return;
    if (!s.satisfies_inequalities(q) || !residual_ok(s, q)) return;
    pts.push_back(q);
  };
  for (long attempt = 0; attempt < budget && static_cast<int>(pts.size()) < per_scale; ++attempt) {
    if (s.equations.empty()) {
      accept(random_in_shell(dim, inner, outer, rng));
    } else if (s.equations.size() == 1) {
      roots.clear();
      if (attempt % 4 == 3) {
        // Thin germs (cusps, tubes) are rarely crossed by a segment; project onto them instead.
        if (auto q = newton_project(s.equations, random_in_shell(dim, inner, outer, rng), kThinNewtonSteps)) accept(*q);
        continue;
      }
      if (attempt % 4 == 0) {
        // Ray from the origin through the annulus.
        const Vec u = random_unit(dim, rng);
        segment_roots(s.equations[0], inner * u, outer * u, roots, opt.scan_points);
      } else {
        // Chord through a random point of the shell.
        const Vec p = random_in_shell(dim, inner, outer, rng);
        const Vec v = random_unit(dim, rng);
        segment_roots(s.equations[0], p - outer * v, p + outer * v, roots, opt.scan_points);
      }
      for (const auto& q : roots) {
        if (static_cast<int>(pts.size()) >= per_scale) break;
        accept(q);
      }
    } else {
      if (auto q = newton_project(s.equations, random_in_shell(dim, inner, outer, rng), kThinNewtonSteps)) accept(*q);
    }
  }
  return pts;
}

}  // namespace detail

/// Finite-scale stand-in for a germ: up to per_scale points in every annulus
/// of the schedule. Deterministic in (germ, schedule, per_scale, seed).
/// Cloud germs are re-bucketed onto the schedule without subsampling.
inline SetGerm sample_germ(const SetGerm& germ, const ScaleSchedule& schedule, int per_scale, std::uint64_t seed,
                           const SamplerOptions& opt = {}) {
  schedule.validate();
  require(per_scale > 0, "per_scale must be positive");
  const int dim = germ.ambient_dim();

  if (const auto* cloud = germ.as<Cloud>())
    return SetGerm::cloud_from_points(dim, schedule, cloud->all_points(), germ.name());

  std::vector<AnnulusSample> annuli(schedule.count);
  std::optional<ArcTable> table;
  if (const auto* arc = germ.as<Arc>()) table.emplace(*arc, schedule.min_radius());

  parallel_for(static_cast<std::size_t>(schedule.count), [&](std::size_t ks) {
    const int k = static_cast<int>(ks);
    const double inner = schedule.inner(k), outer = schedule.outer(k);
    Rng rng = substream(seed, 0x5a17, static_cast<std::uint64_t>(k));
    AnnulusSample& out = annuli[k];
    out = {k, inner, outer, {}};

    if (const auto* cone = germ.as<Cone>()) {
      const auto& base = cone->base.vectors;
      for (int i = 0; i < per_scale; ++i) {
        const Vec& u = base[static_cast<std::size_t>(uniform01(rng) * base.size())];
        const double r = outer - (outer - inner) * uniform01(rng);
        out.points.push_back(r * u);
      }
    } else if (germ.as<Arc>()) {
      // Grid cells whose norm range meets the annulus; sample log-uniformly in t within them.
      std::vector<std::size_t> cells;
      for (std::size_t i = 0; i + 1 < table->size(); ++i) {
        const double lo = std::min(table->norm(i), table->norm(i + 1));
        const double hi = std::max(table->norm(i), table->norm(i + 1));
        if (hi >= inner * 0.98 && lo <= outer * 1.02) cells.push_back(i);
      }
      const long budget = std::max<long>(opt.min_attempts, static_cast<long>(opt.attempts_per_point) * per_scale);
      for (long a = 0; a < budget && !cells.empty() && static_cast<int>(out.points.size()) < per_scale; ++a) {
        const std::size_t i = cells[static_cast<std::size_t>(uniform01(rng) * cells.size())];
        const double t = table->t(i + 1) * std::pow(table->t(i) / table->t(i + 1), uniform01(rng));
        Vec p = table->arc()(t);
        const double r = p.norm();
        if (r > inner && r <= outer) out.points.push_back(std::move(p));
      }
    } else if (const auto* sa = germ.as<Semialgebraic>()) {
      out.points = detail::sample_semialgebraic_annulus(*sa, dim, inner, outer, per_scale, rng, opt);
    }
    if (out.points.empty())
      throw Error(ErrorCode::NoPointsFound, "no points found at scale " + std::to_string(k) + " (radius " +
                                                std::to_string(outer) + ")");
  });
  return SetGerm::cloud(dim, schedule, std::move(annuli), germ.name());
}

// ---------------------------------------------------------------------------
// Distance
// ---------------------------------------------------------------------------

struct DistanceOptions {
  int restarts = 16;        // descent starts for semialgebraic germs
  int oracle_per_scale = 400;
  std::uint64_t seed = 0x0d15;
};

struct NearestPoint {
  double dist = std::numeric_limits<double>::infinity();
  Vec point;
};

/// Germ prepared for repeated distance queries at norms in roughly [r_min, r_max].
/// Results are upper bounds on dist(x, germ) accurate to about tol.
class GermDistance {
 public:
  GermDistance(const SetGerm& germ, double r_min, double r_max, const DistanceOptions& opt = {})
      : germ_(std::make_shared<SetGerm>(germ)), opt_(opt) {
    require(r_min > 0.0 && r_max >= r_min, "distance range must be positive and ordered");
    if (const auto* arc = germ_->as<Arc>()) {
      table_ = std::make_shared<ArcTable>(*arc, r_min / 8.0);
    } else if (const auto* sa = germ_->as<Semialgebraic>()) {
      ScaleSchedule sched;
      sched.eps0 = 4.0 * r_max;
      sched.ratio = 0.5;
      sched.count = std::max(2, static_cast<int>(std::ceil(std::log2(sched.eps0 / r_min))) + 3);
      std::vector<Vec> pts;
      // Sparse annuli are tolerated: the oracle only needs starting points.
      for (int k = 0; k < sched.count; ++k) {
        Rng rng = substream(opt_.seed, 0xd157, static_cast<std::uint64_t>(k));
        auto got = detail::sample_semialgebraic_annulus(*sa, germ.ambient_dim(), sched.inner(k), sched.outer(k),
                                                        opt_.oracle_per_scale, rng, SamplerOptions{});
        pts.insert(pts.end(), got.begin(), got.end());
      }
      samples_ = std::make_shared<KdTree>(std::move(pts));
    } else if (const auto* cloud = germ_->as<Cloud>()) {
      if (!cloud->index || cloud->index->empty()) throw Error(ErrorCode::Unsupported, "distance to an empty cloud");
    }
  }

  const SetGerm& germ() const { return *germ_; }

  /// Decides dist(x, germ) <= radius + tol, skipping refinement when a cheap
  /// upper or lower bound already settles it.
  bool within(const Vec& x, double radius, double tol) const {
    const double limit = radius + tol;
    if (x.norm() <= limit) return true;
    if (const auto* sa = germ_->as<Semialgebraic>(); sa && !sa->equations.empty() && !samples_->empty()) {
      const double upper = std::min(x.norm(), samples_->nearest(x).dist);
      if (upper <= limit) return true;
      // A zero y with |y - x| <= limit forces |f(x)| <= limit * max|grad f| over B(x, limit).
      for (const auto& e : sa->equations) {
        const double g = e.gradient_bound(x, limit);
        if (std::abs(e(x)) > g * limit) return false;
      }
    }
    return nearest(x, tol, limit).dist <= limit;
  }

  double distance(const Vec& x, double tol) const { return nearest(x, tol).dist; }

  /// Closest point found. Stops refining once a candidate is within stop_below.
  NearestPoint nearest(const Vec& x, double tol, double stop_below = -1.0) const {
    require(tol > 0.0, "distance tolerance must be positive");
    require(x.size() == germ_->ambient_dim(), "query dimension mismatch");
    NearestPoint best{x.norm(), Vec::Zero(x.size())};  // the origin lies in the closure
    if (best.dist == 0.0) return best;
    std::visit([&](const auto& body) { query(body, x, tol, stop_below, best); }, germ_->body());
    return best;
  }

 private:
  static void consider(NearestPoint& best, const Vec& x, const Vec& p) {
    const double d = (x - p).norm();
    if (d < best.dist) best = {d, p};
  }

  void query(const Cone& cone, const Vec& x, double, double, NearestPoint& best) const {
    const double r = x.norm();
    const auto hit = cone.index->nearest(x / r);
    const Vec& u = cone.index->point(hit.index);
    const double along = x.dot(u);
    if (along > 0.0) consider(best, x, along * u);
  }

  void query(const Cloud& cloud, const Vec& x, double, double, NearestPoint& best) const {
    const auto hit = cloud.index->nearest(x);
    consider(best, x, cloud.index->point(hit.index));
  }

  void query(const Arc&, const Vec& x, double tol, double stop_below, NearestPoint& best) const {
    const ArcTable& tab = *table_;
    const auto hits = tab.index().knn(x, 8);
    for (const auto& h : hits) {
      consider(best, x, tab.point(h.index));
      // Golden-section over the neighbouring grid cells in log t.
      const std::size_t i = h.index;
      double lo = std::log(tab.t(std::min(i + 1, tab.size() - 1)));
      double hi = std::log(tab.t(i > 0 ? i - 1 : 0));
      if (hi <= lo) continue;
      const double g = (std::sqrt(5.0) - 1.0) / 2.0;
      auto f = [&](double lt) { return (x - tab.arc()(std::exp(lt))).norm(); };
      double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
      double fa = f(a), fb = f(b);
      for (int it = 0; it < 200; ++it) {
        if (fa < fb) {
          hi = b;
          b = a;
          fb = fa;
          a = hi - g * (hi - lo);
          fa = f(a);
        } else {
          lo = a;
          a = b;
          fa = fb;
          b = lo + g * (hi - lo);
          fb = f(b);
        }
        if ((tab.arc()(std::exp(hi)) - tab.arc()(std::exp(lo))).norm() < tol / 4.0) break;
      }
      const double lt = fa < fb ? a : b;
      consider(best, x, tab.arc()(std::exp(lt)));
      if (best.dist <= stop_below) return;
    }
  }

  void query(const Semialgebraic& sa, const Vec& x, double tol, double stop_below, NearestPoint& best) const {
    if (sa.equations.empty()) {
      if (sa.satisfies_inequalities(x)) {
        best = {0.0, x};
        return;
      }
      if (!samples_->empty()) consider(best, x, samples_->point(samples_->nearest(x).index));
      return;
    }
    if (sa.equations.size() == 1 && sa.inequalities.empty() && sa.equations[0].degree() == 1) {
      // Hyperplane through the origin: closed-form projection.
      const auto& f = sa.equations[0];
      Vec g = Vec::Zero(x.size());
      const double v = f.eval_grad(x, g);
      if (g.squaredNorm() > 0.0 && f(Vec::Zero(x.size())) == 0.0) {
        consider(best, x, x - (v / g.squaredNorm()) * g);
        return;
      }
    }
    if (samples_->empty()) return;
    const auto starts = samples_->knn(x, static_cast<std::size_t>(std::max(1, opt_.restarts)));
    for (const auto& s : starts) {
      consider(best, x, samples_->point(s.index));
      if (best.dist <= stop_below) return;
    }
    for (const auto& s : starts) {
      const Vec p = descend(sa, x, samples_->point(s.index), tol);
      consider(best, x, p);
      if (best.dist <= stop_below) return;
    }
  }

  /// Projected descent on |x - p| over the zero set, step halving, stops when the step < tol/4.
  static Vec descend(const Semialgebraic& sa, const Vec& x, Vec p, double tol) {
    double cur = (x - p).norm();
    double lambda = 1.0;
    for (int it = 0; it < 200; ++it) {
      const Vec step = detail::tangent_projection(sa.equations, p, x - p);
      const double len = lambda * step.norm();
      if (len < tol / 4.0) break;
      auto q = detail::newton_project(sa.equations, p + lambda * step);
      if (q && sa.satisfies_inequalities(*q)) {
        const double d = (x - *q).norm();
        if (d < cur) {
          const double moved = (*q - p).norm();
          p = *q;
          cur = d;
          lambda = std::min(1.0, 2.0 * lambda);
          if (moved < tol / 4.0) break;
          continue;
        }
      }
      lambda *= 0.5;
    }
    return p;
  }

  std::shared_ptr<const SetGerm> germ_;
  DistanceOptions opt_;
  std::shared_ptr<const ArcTable> table_;
  std::shared_ptr<const KdTree> samples_;
};

/// One-off distance query; builds a local oracle around |x|.
inline double distance_to_germ(const SetGerm& germ, const Vec& x, double tol, const DistanceOptions& opt = {}) {
  if (const auto* cloud = germ.as<Cloud>())
    if (!cloud->index || cloud->index->empty()) throw Error(ErrorCode::Unsupported, "distance to an empty cloud");
  const double r = x.norm();
  if (r == 0.0) return 0.0;
  return GermDistance(germ, r / 4.0, 4.0 * r, opt).distance(x, tol);
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// scale_index,x1..xn per row.
inline void write_cloud_csv(std::ostream& os, const SetGerm& cloud_germ) {
  const auto* cloud = cloud_germ.as<Cloud>();
  require(cloud != nullptr, "CSV export needs a cloud germ");
  os << "scale_index";
  for (int i = 1; i <= cloud_germ.ambient_dim(); ++i) os << ",x" << i;
  os << "\n";
  for (const auto& a : cloud->annuli)
    for (const auto& p : a.points) {
      os << a.scale_index;
      for (int i = 0; i < p.size(); ++i) os << "," << format_double(p[i]);
      os << "\n";
    }
}

inline void write_spherical_csv(std::ostream& os, const SphericalCloud& cloud) {
  for (int i = 1; i <= cloud.ambient_dim; ++i) os << (i > 1 ? "," : "") << "u" << i;
  os << "\n";
  for (const auto& v : cloud.vectors) {
    for (int i = 0; i < v.size(); ++i) os << (i ? "," : "") << format_double(v[i]);
    os << "\n";
  }
}

}  // namespace bilip
