#pragma once

#include "bilip/core.hpp"
#include "bilip/directions.hpp"
#include "bilip/germs.hpp"
#include "bilip/maps.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace bilip {

/// Sea-tangle neighbourhood ST_d(A;C) = {x : dist(x,A) <= C|x|^d}.
struct STParams {
  double d = 1.5;
  double C = 1.0;

  void validate() const {
    require(d > 0.0 && C > 0.0, "sea-tangle degree and width must be positive");
  }
  double width_at(double r) const { return C * std::pow(r, d); }
};

/// Default distance tolerance for membership tests: a small fraction of the width.
inline double membership_tol(const STParams& p, double r) { return 1e-3 * p.width_at(r); }

inline bool st_member(const GermDistance& A, const STParams& p, const Vec& x, double tol) {
  require(!x.isZero(0.0), "sea-tangle membership is undefined at the origin");
  return A.within(x, p.width_at(x.norm()), tol);
}

inline bool st_member(const SetGerm& A, const STParams& p, const Vec& x, double tol) {
  require(!x.isZero(0.0), "sea-tangle membership is undefined at the origin");
  p.validate();
  const double r = x.norm();
  return st_member(GermDistance(A, r / 4.0, 4.0 * r), p, x, tol);
}

// ---------------------------------------------------------------------------
// Containment
// ---------------------------------------------------------------------------

struct ContainmentReport {
  std::vector<std::pair<double, double>> per_scale_fraction;  // (outer radius, fraction inside)
  std::vector<long> per_scale_count;
  double max_violation = -std::numeric_limits<double>::infinity();  // max (dist - C|x|^d) / |x|^d
  bool verdict = false;
  STParams params;

  double min_fraction() const {
    double m = 1.0;
    for (const auto& f : per_scale_fraction) m = std::min(m, f.second);
    return m;
  }
};

inline constexpr double kContainmentFraction = 0.99;

namespace detail {

/// Distance of every point to B, each refined to its own tolerance.
inline std::vector<double> distances_to(const GermDistance& B, const std::vector<Vec>& pts,
                                        const std::vector<double>& tols) {
  std::vector<double> out(pts.size());
  const std::size_t block = 256;
  const std::size_t blocks = (pts.size() + block - 1) / block;
  parallel_for(blocks, [&](std::size_t b) {
    for (std::size_t i = b * block; i < std::min(pts.size(), (b + 1) * block); ++i)
      out[i] = B.distance(pts[i], tols[i]);
  });
  return out;
}

inline ContainmentReport summarize(const std::vector<int>& scale_of, const std::vector<double>& dist,
                                   const std::vector<double>& norms, const STParams& p, const ScaleSchedule& s) {
  ContainmentReport rep;
  rep.params = p;
  std::vector<long> inside(s.count, 0), total(s.count, 0);
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const int k = scale_of[i];
    if (k < 0) continue;
    const double w = p.width_at(norms[i]);
    ++total[k];
    if (dist[i] <= w + membership_tol(p, norms[i])) ++inside[k];
    rep.max_violation = std::max(rep.max_violation, (dist[i] - w) / std::pow(norms[i], p.d));
  }
  rep.verdict = true;
  for (int k = 0; k < s.count; ++k) {
    if (total[k] == 0) continue;
    const double f = static_cast<double>(inside[k]) / static_cast<double>(total[k]);
    rep.per_scale_fraction.emplace_back(s.radius(k), f);
    rep.per_scale_count.push_back(total[k]);
    if (f < kContainmentFraction) rep.verdict = false;
  }
  if (rep.per_scale_fraction.empty()) rep.verdict = false;
  return rep;
}

inline GermDistance prepare(const SetGerm& germ, const ScaleSchedule& s) {
  return GermDistance(germ, s.min_radius() / 2.0, 2.0 * s.eps0);
}

}  // namespace detail

/// Tests A ⊂ ST_d(B;C) on the annuli of the schedule: every sample of A is checked
/// for membership in the neighbourhood of B.
inline ContainmentReport check_containment(const SetGerm& A, const SetGerm& B, const STParams& p,
                                           const ScaleSchedule& schedule, int per_scale, std::uint64_t seed) {
  p.validate();
  const SetGerm sample = sample_germ(A, schedule, per_scale, seed);
  const GermDistance dist_b = detail::prepare(B, schedule);
  std::vector<Vec> pts;
  std::vector<int> scale_of;
  std::vector<double> norms, tols;
  for (const auto& a : sample.as<Cloud>()->annuli)
    for (const auto& x : a.points) {
      pts.push_back(x);
      scale_of.push_back(a.scale_index);
      norms.push_back(x.norm());
      tols.push_back(membership_tol(p, x.norm()));
    }
  return detail::summarize(scale_of, detail::distances_to(dist_b, pts, tols), norms, p, schedule);
}

// ---------------------------------------------------------------------------
// ST-equivalence
// ---------------------------------------------------------------------------

inline const std::vector<double>& default_d_grid() {
  static const std::vector<double> g{1.05, 1.1, 1.25, 1.5, 2.0};
  return g;
}
inline const std::vector<double>& default_c_grid() {
  static const std::vector<double> g{0.25, 0.5, 1.0, 2.0, 4.0};
  return g;
}

struct STEquivalence {
  bool found = false;
  std::optional<STParams> b_in_a;  // B ⊂ ST_{d1}(A;C1)
  std::optional<STParams> a_in_b;  // A ⊂ ST_{d2}(B;C2)
  ContainmentReport best_b_in_a, best_a_in_b;
  std::string status;  // "witness" or "inconclusive"
};

namespace detail {

struct Probe {
  std::vector<int> scale_of;
  std::vector<double> norms, dist;
};

/// Distances from samples of `from` to `to`, refined to the narrowest width on the grid.
inline Probe probe_distances(const SetGerm& from, const SetGerm& to, double tightest_c, double largest_d,
                             const ScaleSchedule& schedule, int per_scale, std::uint64_t seed) {
  const SetGerm sample = sample_germ(from, schedule, per_scale, seed);
  const GermDistance g = prepare(to, schedule);
  Probe pr;
  std::vector<Vec> pts;
  std::vector<double> tols;
  for (const auto& a : sample.as<Cloud>()->annuli)
    for (const auto& x : a.points) {
      pts.push_back(x);
      pr.scale_of.push_back(a.scale_index);
      pr.norms.push_back(x.norm());
      tols.push_back(membership_tol({largest_d, tightest_c}, x.norm()));
    }
  pr.dist = distances_to(g, pts, tols);
  return pr;
}

/// A neighbourhood with C r^(d-1) >= 1 contains the whole ball of radius r, so
/// containment there says nothing about the germ.
inline bool vacuous(const STParams& p, double r) { return p.C * std::pow(r, p.d - 1.0) >= 1.0; }

inline std::optional<STParams> first_passing(const Probe& pr, const std::vector<double>& d_grid,
                                             const std::vector<double>& c_grid, const ScaleSchedule& s,
                                             ContainmentReport& best) {
  best = {};
  double best_score = -1.0;
  for (double d : d_grid)
    for (double c : c_grid) {
      if (vacuous({d, c}, s.radius(s.count - 1))) continue;
      auto rep = summarize(pr.scale_of, pr.dist, pr.norms, {d, c}, s);
      if (rep.verdict) {
        best = rep;
        return STParams{d, c};
      }
      if (rep.min_fraction() > best_score) {
        best_score = rep.min_fraction();
        best = rep;
      }
    }
  return std::nullopt;
}

}  // namespace detail

/// Grid search for a witness of mutual sea-tangle containment. Each direction
/// takes the first passing pair, with d in the outer loop and C in the inner one.
/// Pairs whose neighbourhood already fills the ball at the innermost scale are skipped.
inline STEquivalence check_st_equivalence(const SetGerm& A, const SetGerm& B, const std::vector<double>& d_grid,
                                          const std::vector<double>& c_grid, const ScaleSchedule& schedule,
                                          int per_scale, std::uint64_t seed) {
  require(!d_grid.empty() && !c_grid.empty(), "search grids must be nonempty");
  for (double d : d_grid) require(d > 1.0, "ST-equivalence needs degrees above 1");
  for (double c : c_grid) require(c > 0.0, "widths must be positive");
  const double c_min = *std::min_element(c_grid.begin(), c_grid.end());
  const double d_max = *std::max_element(d_grid.begin(), d_grid.end());

  STEquivalence out;
  const auto b_to_a = detail::probe_distances(B, A, c_min, d_max, schedule, per_scale, seed);
  out.b_in_a = detail::first_passing(b_to_a, d_grid, c_grid, schedule, out.best_b_in_a);
  const auto a_to_b = detail::probe_distances(A, B, c_min, d_max, schedule, per_scale, seed ^ 0x5eedULL);
  out.a_in_b = detail::first_passing(a_to_b, d_grid, c_grid, schedule, out.best_a_in_b);
  out.found = out.b_in_a.has_value() && out.a_in_b.has_value();
  out.status = out.found ? "witness" : "inconclusive";
  return out;
}

// ---------------------------------------------------------------------------
// Sampling a sea-tangle neighbourhood
// ---------------------------------------------------------------------------

/// Largest w with w <= C(|g| - w)^d, so that g + (any vector of length <= w)
/// lies in ST_d({g};C).
inline double st_ball_radius(double g_norm, const STParams& p) {
  double lo = 0.0, hi = g_norm;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= p.width_at(g_norm - mid)) lo = mid;
    else hi = mid;
  }
  return lo;
}

/// Points g + w with g sampled on the germ and w uniform in the ball of radius
/// st_ball_radius(|g|); all of them lie in ST_d(germ;C). Re-bucketed by norm.
inline SetGerm sample_st_neighborhood(const SetGerm& germ, const STParams& p, const ScaleSchedule& schedule,
                                      int per_scale, std::uint64_t seed) {
  p.validate();
  const SetGerm base = sample_germ(germ, schedule, per_scale, seed);
  const int n = germ.ambient_dim();
  std::vector<Vec> pts;
  for (const auto& a : base.as<Cloud>()->annuli) {
    Rng rng = substream(seed, 0x57a6, static_cast<std::uint64_t>(a.scale_index));
    for (const auto& g : a.points) pts.push_back(g + random_in_ball(n, st_ball_radius(g.norm(), p), rng));
  }
  return SetGerm::cloud_from_points(n, schedule, pts, "ST(" + germ.name() + ")");
}

// ---------------------------------------------------------------------------
// Sandwich
// ---------------------------------------------------------------------------

struct SandwichReport {
  LipschitzEstimate lipschitz;
  double inner_width = 0.0;  // K K1 / K2^d
  double outer_width = 0.0;  // K K2 / K1^d
  ContainmentReport inner;   // ST_d(phi(A); inner) ⊂ phi(ST_d(A;K))
  ContainmentReport outer;   // phi(ST_d(A;K)) ⊂ ST_d(phi(A); outer)
};

inline SandwichReport check_sandwich(const GermMap& map, const SetGerm& A, double K, double d,
                                     const ScaleSchedule& schedule, int per_scale, std::uint64_t seed,
                                     int lipschitz_pairs = 600) {
  require(d > 1.0, "sandwich check needs d > 1");
  require(K > 0.0, "sandwich width must be positive");
  require(map.ambient_dim == A.ambient_dim(), "map and germ dimensions differ");
  SandwichReport rep;
  rep.lipschitz = estimate_bilipschitz(map, schedule, lipschitz_pairs, seed);
  if (rep.lipschitz.degenerates() || !(rep.lipschitz.k_lower > 0.0))
    throw Error(ErrorCode::NotBiLipschitz, map.name + " is not bi-Lipschitz on the schedule");
  const double k1 = rep.lipschitz.k_lower, k2 = rep.lipschitz.k_upper;
  rep.inner_width = K * k1 / std::pow(k2, d);
  rep.outer_width = K * k2 / std::pow(k1, d);

  const SetGerm image = image_germ(map, A, schedule, per_scale, seed);
  const GermDistance dist_a = detail::prepare(A, schedule);
  const GermDistance dist_image = detail::prepare(image, schedule);

  auto run = [&](const SetGerm& source, const STParams& source_p, const GermDistance& target,
                 const STParams& target_p, bool forward, std::uint64_t s) {
    const SetGerm cloud = sample_st_neighborhood(source, source_p, schedule, per_scale, s);
    std::vector<Vec> pts;
    std::vector<int> scale_of;
    std::vector<double> norms, tols;
    for (const auto& a : cloud.as<Cloud>()->annuli)
      for (const auto& y : a.points) {
        const Vec x = forward ? eval(map, y) : eval_inverse(map, y);
        scale_of.push_back(a.scale_index);
        norms.push_back(x.norm());
        tols.push_back(membership_tol(target_p, x.norm()));
        pts.push_back(x);
      }
    return detail::summarize(scale_of, detail::distances_to(target, pts, tols), norms, target_p, schedule);
  };
  rep.inner = run(image, {d, rep.inner_width}, dist_a, {d, K}, false, seed ^ 0x1111);
  rep.outer = run(A, {d, K}, dist_image, {d, rep.outer_width}, true, seed ^ 0x2222);
  return rep;
}

// ---------------------------------------------------------------------------
// Monte Carlo volume
// ---------------------------------------------------------------------------

struct VolumeEstimate {
  double eps = 0.0;
  double volume = 0.0;
  double ci = 0.0;  // 95% half-width
  long hits = 0;
  long samples = 0;
};

inline constexpr long kMinVolumeSamples = 10000;

/// Vol(ST_d(A;C) ∩ B_eps) from uniform samples of the ball, against a prepared distance oracle.
inline VolumeEstimate mc_volume(const GermDistance& A, const STParams& p, double eps, long n, std::uint64_t seed) {
  require(n >= kMinVolumeSamples, "Monte Carlo volume needs at least 10^4 samples");
  require(eps > 0.0, "ball radius must be positive");
  p.validate();
  const int dim = A.germ().ambient_dim();
  constexpr long kBlock = 4096;
  const long blocks = (n + kBlock - 1) / kBlock;
  std::vector<long> hits(static_cast<std::size_t>(blocks), 0);
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
    Rng rng = substream(seed, 0xb0b, b);
    const long end = std::min(n, static_cast<long>(b + 1) * kBlock);
    long h = 0;
    for (long i = static_cast<long>(b) * kBlock; i < end; ++i) {
      const Vec x = random_in_ball(dim, eps, rng);
      if (x.isZero(0.0)) continue;
      const double r = x.norm();
      if (A.within(x, p.width_at(r), membership_tol(p, r))) ++h;
    }
    hits[b] = h;
  });
  VolumeEstimate v;
  v.eps = eps;
  v.samples = n;
  for (long h : hits) v.hits += h;
  const double frac = static_cast<double>(v.hits) / static_cast<double>(n);
  const double ball = ball_volume(dim, eps);
  v.volume = frac * ball;
  v.ci = 1.96 * std::sqrt(frac * (1.0 - frac) / static_cast<double>(n)) * ball;
  return v;
}

inline VolumeEstimate mc_volume(const SetGerm& A, const STParams& p, double eps, long n, std::uint64_t seed) {
  return mc_volume(GermDistance(A, eps * 1e-3, eps), p, eps, n, seed);
}

struct VolumeCurve {
  struct Entry {
    double eps = 0.0;
    double ratio = 0.0;
    double ci = 0.0;
    VolumeEstimate numerator, denominator;
  };
  std::vector<Entry> entries;
  STParams alpha_params, beta_params;
  long sample_count = 0;
};

inline constexpr long kMinDenominatorHits = 100;

/// Ratios Vol(ST_d(alpha;C1) ∩ B_eps) / Vol(ST_d(beta;C2) ∩ B_eps) along a decreasing eps schedule.
inline VolumeCurve volume_ratio_curve(const SetGerm& alpha, const SetGerm& beta, double d, double c1, double c2,
                                      const std::vector<double>& eps_schedule, long n, std::uint64_t seed) {
  require(eps_schedule.size() >= 5, "ratio curve needs at least 5 radii");
  for (std::size_t i = 1; i < eps_schedule.size(); ++i)
    require(eps_schedule[i] < eps_schedule[i - 1] && eps_schedule[i] > 0.0, "eps schedule must decrease");
  require(alpha.ambient_dim() == beta.ambient_dim(), "ratio of germs in different dimensions");
  const double lo = eps_schedule.back() * 1e-3, hi = eps_schedule.front();
  const GermDistance da(alpha, lo, hi), db(beta, lo, hi);
  VolumeCurve curve;
  curve.alpha_params = {d, c1};
  curve.beta_params = {d, c2};
  curve.sample_count = n;
  for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
    const double eps = eps_schedule[i];
    VolumeCurve::Entry e;
    e.eps = eps;
    // Both volumes use the same ball samples, which keeps the ratio noise low.
    e.numerator = mc_volume(da, curve.alpha_params, eps, n, substream(seed, 0x7a7, i)());
    e.denominator = mc_volume(db, curve.beta_params, eps, n, substream(seed, 0x7a7, i)());
    if (e.denominator.hits < kMinDenominatorHits)
      throw Error(ErrorCode::DivisionUnstable,
                  "denominator has " + std::to_string(e.denominator.hits) + " hits at eps " + format_double(eps));
    e.ratio = e.numerator.volume / e.denominator.volume;
    const double ra = e.numerator.volume > 0.0 ? e.numerator.ci / e.numerator.volume : 0.0;
    const double rb = e.denominator.ci / e.denominator.volume;
    e.ci = e.ratio * std::sqrt(ra * ra + rb * rb);
    curve.entries.push_back(e);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Sequence selection property
// ---------------------------------------------------------------------------

struct SSPReport {
  std::string probe;
  std::vector<std::pair<double, double>> probe_ratios;  // (outer radius, worst probe ratio)
  double threshold = 0.02;
  bool verdict = false;
};

inline constexpr int kSSPTail = 4;

/// Checks that probes approaching 0 along directions of A are shadowed by
/// points of A with vanishing relative gap |a - b| / max(|a|, |b|).
///
/// Probe tags: "midpoint" (midpoint of each sample and its nearest sample of
/// smaller norm), "scaled:<f>" (f times each sample), "directions" (r u for u
/// in the estimated direction set, r the geometric mean of each annulus).
inline SSPReport check_ssp(const SetGerm& A, const std::string& probe, const ScaleSchedule& schedule,
                           double threshold, std::uint64_t seed, int per_scale = 500) {
  require(threshold > 0.0, "SSP threshold must be positive");
  const SetGerm sample = sample_germ(A, schedule, per_scale, seed);
  const auto pts = sample.as<Cloud>()->all_points();
  std::vector<Vec> probes;
  if (probe == "midpoint") {
    const KdTree tree(pts);
    for (const auto& b : pts) {
      // Nearest sample of strictly smaller norm, found by widening the neighbour set.
      for (std::size_t k = 8;; k *= 4) {
        const auto near = tree.knn(b, std::min(k, pts.size()));
        const Vec* best = nullptr;
        for (const auto& h : near)
          if (tree.point(h.index).norm() < b.norm()) {
            best = &tree.point(h.index);
            break;
          }
        if (best) {
          probes.push_back(0.5 * (b + *best));
          break;
        }
        if (near.size() == pts.size()) break;
      }
    }
  } else if (probe.rfind("scaled:", 0) == 0) {
    double f = 0.0;
    try {
      f = std::stod(probe.substr(7));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad SSP probe '" + probe + "'");
    }
    require(f > 0.0 && f < 1.0, "SSP scale factor must lie in (0,1)");
    for (const auto& b : pts) probes.push_back(f * b);
  } else if (probe == "directions") {
    const auto est = estimate_direction_set(A, schedule, per_scale, seed);
    for (int k = 0; k < schedule.count; ++k)
      for (const auto& u : est.stable.vectors) probes.push_back(std::sqrt(schedule.inner(k) * schedule.outer(k)) * u);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown SSP probe '" + probe + "'");
  }

  const GermDistance dist = detail::prepare(A, schedule);
  const auto* cloud = A.as<Cloud>();
  std::vector<double> ratio(probes.size());
  parallel_for(probes.size(), [&](std::size_t i) {
    const Vec& a = probes[i];
    const auto hit = dist.nearest(a, 1e-6 * a.norm());
    ratio[i] = hit.dist / std::max(a.norm(), hit.point.norm());
    // Stored points tie often (a probe halfway between two of them); take the best normalized gap.
    if (cloud)
      for (const auto& h : cloud->index->knn(a, 8)) {
        const Vec& b = cloud->index->point(h.index);
        ratio[i] = std::min(ratio[i], (a - b).norm() / std::max(a.norm(), b.norm()));
      }
  });

  SSPReport rep;
  rep.probe = probe;
  rep.threshold = threshold;
  std::vector<double> worst(schedule.count, -1.0);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const int k = schedule.annulus_of(probes[i].norm());
    if (k >= 0) worst[k] = std::max(worst[k], ratio[i]);
  }
  for (int k = 0; k < schedule.count; ++k)
    if (worst[k] >= 0.0) rep.probe_ratios.emplace_back(schedule.radius(k), worst[k]);
  if (rep.probe_ratios.empty()) return rep;
  const std::size_t tail = std::min<std::size_t>(kSSPTail, rep.probe_ratios.size());
  rep.verdict = std::all_of(rep.probe_ratios.end() - static_cast<long>(tail), rep.probe_ratios.end(),
                            [&](const auto& r) { return r.second < threshold; });
  return rep;
}

}  // namespace bilip
