#pragma once

// Named experiments. Each one wires germs, maps, direction sets and sea-tangle
// checks into assertions, writes JSON/CSV/SVG under <out>/<name>/ and reports
// pass as the conjunction of its assertions.

#include "bilip/core.hpp"
#include "bilip/directions.hpp"
#include "bilip/expectations_data.hpp"
#include "bilip/germs.hpp"
#include "bilip/io.hpp"
#include "bilip/maps.hpp"
#include "bilip/seatangle.hpp"
#include "bilip/svg.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace bilip {

// ---------------------------------------------------------------------------
// Test germs
// ---------------------------------------------------------------------------

namespace catalog {

/// f_t = x^8 + y^16 + z^16 + t x^5 z^2 + x^3 y z^3.
inline Polynomial oka(double t) {
  std::vector<Monomial> m{{1.0, {8, 0, 0}}, {1.0, {0, 16, 0}}, {1.0, {0, 0, 16}}, {1.0, {3, 1, 3}}};
  if (t != 0.0) m.push_back({t, {5, 0, 2}});
  return Polynomial(3, std::move(m));
}

/// Sign conditions as (axis, +1 or -1).
inline SetGerm oka_piece(double t, const std::vector<std::pair<int, int>>& signs, std::string name) {
  std::vector<Inequality> ineqs;
  for (const auto& [axis, sign] : signs) {
    std::vector<int> e(3, 0);
    e[axis] = 1;
    ineqs.push_back({Polynomial(3, {{1.0, e}}), sign > 0 ? Sign::Positive : Sign::Negative});
  }
  return SetGerm::semialgebraic(3, {oka(t)}, std::move(ineqs), std::move(name));
}

/// S1..S4: the zero set of f_0 in the octants x>0,y>0,z<0 / x>0,y<0,z>0 / x<0,y>0,z>0 / x<0,y<0,z<0.
inline std::vector<SetGerm> oka_sheets() {
  return {oka_piece(0.0, {{0, 1}, {1, 1}, {2, -1}}, "S1"), oka_piece(0.0, {{0, 1}, {1, -1}, {2, 1}}, "S2"),
          oka_piece(0.0, {{0, -1}, {1, 1}, {2, 1}}, "S3"), oka_piece(0.0, {{0, -1}, {1, -1}, {2, -1}}, "S4")};
}

/// P3 = f_t^{-1}(0) ∩ {x<0, z>0}, P4 = f_t^{-1}(0) ∩ {x<0, z<0}.
inline SetGerm oka_p3(double t) { return oka_piece(t, {{0, -1}, {2, 1}}, "P3"); }
inline SetGerm oka_p4(double t) { return oka_piece(t, {{0, -1}, {2, -1}}, "P4"); }

inline SetGerm ray_at(double angle, std::string name = {}) {
  return ray(make_vec({std::cos(angle), std::sin(angle)}), std::move(name));
}

inline SetGerm axis_ray(int dim, int axis, double sign = 1.0, std::string name = {}) {
  Vec u = zeros(dim);
  u[axis] = sign;
  return ray(u, std::move(name));
}

/// Both rays of a coordinate axis.
inline SetGerm axis_line(int dim, int axis, std::string name = {}) {
  Vec u = zeros(dim);
  u[axis] = 1.0;
  return cone_over(SphericalCloud::from_directions(dim, {u, Vec(-u)}), std::move(name));
}

/// Coordinate hyperplane {x_axis = 0}.
inline SetGerm hyperplane(int dim, int axis, std::string name = {}) {
  std::vector<int> e(dim, 0);
  e[axis] = 1;
  return SetGerm::semialgebraic(dim, {Polynomial(dim, {{1.0, e}})}, {}, std::move(name));
}

inline SetGerm parabola() { return SetGerm::arc(std::vector<std::string>{"t", "(pow t 2)"}, 1.0, "parabola"); }
inline SetGerm cusp_arc() {
  return SetGerm::arc(std::vector<std::string>{"(pow t 2)", "(pow t 3)"}, 1.0, "cusp arc");
}

/// V = {x^2 + y^2 = z^6}.
inline SetGerm power_v() {
  return SetGerm::semialgebraic(3, {Polynomial(3, {{1.0, {2, 0, 0}}, {1.0, {0, 2, 0}}, {-1.0, {0, 0, 6}}})}, {}, "V");
}

/// W = {x^2 + y^2 = z^2}.
inline SetGerm power_w() {
  return SetGerm::semialgebraic(3, {Polynomial(3, {{1.0, {2, 0, 0}}, {1.0, {0, 2, 0}}, {-1.0, {0, 0, 2}}})}, {}, "W");
}

/// z = x^2 + y^2.
inline SetGerm paraboloid() {
  return SetGerm::semialgebraic(3, {Polynomial(3, {{1.0, {2, 0, 0}}, {1.0, {0, 2, 0}}, {-1.0, {0, 0, 1}}})}, {},
                                "paraboloid");
}

/// z^3 = x^2 + y^2.
inline SetGerm cusp_surface() {
  return SetGerm::semialgebraic(3, {Polynomial(3, {{1.0, {2, 0, 0}}, {1.0, {0, 2, 0}}, {-1.0, {0, 0, 3}}})}, {},
                                "cusp surface");
}

/// Cone over the great circle orthogonal to the given axis, discretized.
inline SetGerm great_circle_cone(int axis, int count, std::string name = {}) {
  std::vector<Vec> dirs;
  const int a = (axis + 1) % 3, b = (axis + 2) % 3;
  for (int i = 0; i < count; ++i) {
    const double th = 2.0 * std::numbers::pi * i / count;
    Vec u = zeros(3);
    u[a] = std::cos(th);
    u[b] = std::sin(th);
    dirs.push_back(u);
  }
  return cone_over(SphericalCloud::from_directions(3, dirs), std::move(name));
}

/// Points b_m = start * q^m e_1 down to the innermost annulus.
inline SetGerm geometric_sequence(const ScaleSchedule& s, double start, double q, std::string name) {
  std::vector<Vec> pts;
  for (double r = start; r > s.min_radius(); r *= q) pts.push_back(make_vec({r, 0.0}));
  return SetGerm::cloud_from_points(2, s, pts, std::move(name));
}

/// Points 1/m e_1 inside the schedule's range.
inline SetGerm harmonic_sequence(const ScaleSchedule& s, std::string name) {
  std::vector<Vec> pts;
  for (long m = 1; 1.0 / static_cast<double>(m) > s.min_radius(); ++m)
    if (1.0 / static_cast<double>(m) <= s.eps0) pts.push_back(make_vec({1.0 / static_cast<double>(m), 0.0}));
  return SetGerm::cloud_from_points(2, s, pts, std::move(name));
}

}  // namespace catalog

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Config file: {"name": ..., "seed": ..., "params": {...}}. Unset params take
/// the experiment defaults; the report echoes every value actually used.
struct ExperimentConfig {
  std::string name;
  json params = json::object();
  std::uint64_t seed = 42;
  std::string out_dir;  // empty: nothing is written
};

struct Expectation {
  std::string key;
  std::string label;  // which instance of the check
  json expected;
  json measured;
  bool pass = false;
  std::string provenance;
  std::string anchor;
};

struct ExperimentReport {
  std::string name;
  json measured = json::object();
  std::vector<Expectation> expectations;
  bool pass = false;
  double runtime_s = 0.0;
  json echo = json::object();
  std::string error;
  std::vector<std::string> files;
};

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "experiment config must be an object");
  c.name = j.value("name", std::string{});
  c.seed = j.value("seed", std::uint64_t{42});
  c.params = j.value("params", json::object());
  if (!c.params.is_object()) throw Error(ErrorCode::ParseError, "config params must be an object");
  return c;
}

inline json to_json(const Expectation& e) {
  return {{"key", e.key},           {"case", e.label},   {"expected", e.expected}, {"measured", e.measured},
          {"pass", e.pass},         {"provenance", e.provenance}, {"anchor", e.anchor}};
}

inline json to_json(const ExperimentReport& r) {
  json ex = json::array();
  for (const auto& e : r.expectations) ex.push_back(to_json(e));
  json j{{"name", r.name}, {"pass", r.pass}, {"runtime_s", r.runtime_s}};
  if (!r.error.empty()) j["error"] = r.error;
  j["expectations"] = std::move(ex);
  j["measured"] = r.measured;
  j["echo"] = r.echo;
  j["files"] = r.files;
  return j;
}

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"oka",           "spiral",   "zigzag",    "power-cusp",
                                              "volume-ratios", "st-props", "ssp-suite", "main-theorem-suite"};
  return names;
}

namespace lab_detail {

inline std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline const json& expectation_table() {
  static const json table = json::parse(kExpectationsJson);
  return table;
}

class Lab {
 public:
  Lab(const ExperimentConfig& cfg, ExperimentReport& rep) : cfg_(cfg), rep_(rep) {
    rep_.echo = {{"name", rep_.name}, {"seed", cfg.seed}, {"params", json::object()}};
  }

  template <typename T>
  T param(const std::string& key, T fallback) {
    T v = fallback;
    if (cfg_.params.contains(key)) {
      try {
        v = cfg_.params.at(key).get<T>();
      } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, "param '" + key + "': " + e.what());
      }
    }
    rep_.echo["params"][key] = v;
    return v;
  }

  ScaleSchedule schedule(const std::string& key, ScaleSchedule fallback) {
    const ScaleSchedule s = cfg_.params.contains(key) ? parse_schedule(cfg_.params.at(key), fallback) : fallback;
    s.validate();
    rep_.echo["params"][key] = schedule_to_json(s);
    return s;
  }

  std::uint64_t seed() const { return cfg_.seed; }
  std::uint64_t seed(std::uint64_t tag) const { return substream(cfg_.seed, tag)(); }

  json& measured() { return rep_.measured; }

  bool expect(const std::string& key, const std::string& label, json expected, json measured, bool pass) {
    const auto& table = expectation_table();
    if (!table.contains(key)) throw Error(ErrorCode::InvalidArgument, "no expectation registered for " + key);
    const auto& row = table.at(key);
    rep_.expectations.push_back({key, label, std::move(expected), std::move(measured), pass,
                                 row.at("provenance").get<std::string>(), row.at("anchor").get<std::string>()});
    return pass;
  }

  void write(const std::string& file, const std::string& text) {
    if (cfg_.out_dir.empty()) return;
    const auto dir = std::filesystem::path(cfg_.out_dir) / rep_.name;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());
    write_file((dir / file).string(), text);
    rep_.files.push_back(rep_.name + "/" + file);
  }

  void write_directions(const std::string& stem, const SphericalCloud& c, const std::string& title) {
    write(stem + ".csv", to_text([&](std::ostream& os) { write_spherical_csv(os, c); }));
    write(stem + ".svg", cloud_svg(c, title));
  }

 private:
  const ExperimentConfig& cfg_;
  ExperimentReport& rep_;
};

inline DirectionalParams directional_params(Lab& lab, double angular_tol = 0.05) {
  DirectionalParams p;
  p.schedule = lab.schedule("schedule", {0.1, 0.5, 12});
  p.per_scale = lab.param("per_scale", 2000);
  p.stability_tol = lab.param("stability_tol", 0.05);
  p.angular_tol = lab.param("angular_tol", angular_tol);
  p.seed = lab.seed();
  return p;
}

inline json dim_json(const DimensionReport& r, std::size_t size) {
  return {{"dim", r.dim}, {"slope", r.slope}, {"confident", r.confident}, {"directions", size}};
}

/// Directional dimension of a pair with its clouds written out.
inline DirectionalResult pair_dimension(Lab& lab, const std::string& stem, const SetGerm& a, const SetGerm& b,
                                        const DirectionalParams& p) {
  auto r = directional_dimension_detail(a, b, p);
  lab.write(stem + "_dimension.csv", to_text([&](std::ostream& os) { write_dimension_csv(os, r.report); }));
  lab.write_directions(stem + "_intersection", r.intersection,
                       "D(" + a.name() + ") ∩ D(" + b.name() + "), dim " + std::to_string(r.report.dim));
  return r;
}

inline bool nonincreasing_within_ci(const VolumeCurve& c, int allowed) {
  int violations = 0;
  for (std::size_t i = 1; i < c.entries.size(); ++i) {
    const auto& prev = c.entries[i - 1];
    const auto& cur = c.entries[i];
    if (cur.ratio < prev.ratio) continue;
    if (cur.ratio - prev.ratio > cur.ci + prev.ci) return false;
    ++violations;
  }
  return violations <= allowed;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

inline void run_oka(Lab& lab) {
  const auto p = directional_params(lab);
  const auto ts = lab.param("t_values", std::vector<double>{0.0, 1.0});
  DirectionOptions opt;
  opt.stability_tol = p.stability_tol;

  auto estimate = [&](const SetGerm& g, std::uint64_t tag, const std::string& key) {
    auto e = estimate_direction_set(g, p.schedule, p.per_scale, lab.seed(tag), opt);
    lab.measured()["direction_sets"][key] = to_json(e);
    return e;
  };
  auto intersect = [&](const std::string& label, const DirectionEstimate& a, const DirectionEstimate& b) {
    const auto in = intersect_direction_sets(a.stable, b.stable, p.angular_tol);
    const auto rep = estimate_dimension(in, p.caps);
    lab.write(label + "_dimension.csv", to_text([&](std::ostream& os) { write_dimension_csv(os, rep); }));
    lab.write_directions(label + "_intersection", in, label + " intersection, dim " + std::to_string(rep.dim));
    lab.measured()["pairs"][label] = dim_json(rep, in.size());
    return rep.dim;
  };

  for (double t : ts) {
    if (t == 0.0) {
      const auto sheets = catalog::oka_sheets();
      std::vector<DirectionEstimate> est;
      for (std::size_t i = 0; i < sheets.size(); ++i) {
        est.push_back(estimate(sheets[i], i + 1, sheets[i].name()));
        lab.write_directions("D_" + sheets[i].name(), est.back().stable, "D(" + sheets[i].name() + ")");
      }
      for (std::size_t i = 0; i < est.size(); ++i)
        for (std::size_t j = i + 1; j < est.size(); ++j) {
          const std::string label = sheets[i].name() + sheets[j].name();
          const int dim = intersect(label, est[i], est[j]);
          lab.expect("oka.f0_pair", label, 0, dim, dim == 0);
        }
      continue;
    }
    // Other t: the P3/P4 pieces, asserted at t = 1 only.
    const std::uint64_t tag = 100 + static_cast<std::uint64_t>(std::llround(std::abs(t) * 1000.0));
    const auto p3 = catalog::oka_p3(t), p4 = catalog::oka_p4(t);
    const std::string suffix = "_t" + short_num(t);
    const auto e3 = estimate(p3, tag, "P3" + suffix), e4 = estimate(p4, tag + 7919, "P4" + suffix);
    lab.write_directions("D_P3" + suffix, e3.stable, "D(P3), t = " + short_num(t));
    lab.write_directions("D_P4" + suffix, e4.stable, "D(P4), t = " + short_num(t));
    const int dim = intersect("P3P4" + suffix, e3, e4);
    if (t == 1.0) lab.expect("oka.f1_p3p4", "P3P4", 1, dim, dim == 1);
  }
}

inline void run_spiral(Lab& lab) {
  const auto p = directional_params(lab);
  const double cap = lab.param("density_cap", 0.05);
  const GermMap h = GermMap::spiral();
  const SetGerm A = catalog::axis_ray(2, 0, 1.0, "A"), B = catalog::axis_ray(2, 1, 1.0, "B");
  const SetGerm hA = image_germ(h, A, p.schedule, p.per_scale, p.seed);
  const SetGerm hB = image_germ(h, B, p.schedule, p.per_scale, p.seed);

  const auto pre = pair_dimension(lab, "pre", A, B, p);
  const auto post = pair_dimension(lab, "image", hA, hB, p);
  lab.write_directions("D_hA", post.a.stable, "D(h(A))");
  lab.write_directions("D_hB", post.b.stable, "D(h(B))");
  auto& m = lab.measured();
  m["pre"] = dim_json(pre.report, pre.intersection.size());
  m["image"] = dim_json(post.report, post.intersection.size());
  m["D_hA"] = to_json(post.a);
  m["D_hB"] = to_json(post.b);

  lab.expect("spiral.pre_dim", "A,B", -1, pre.report.dim, pre.report.dim == -1);
  lab.expect("spiral.image_dim", "h(A),h(B)", 1, post.report.dim, post.report.dim == 1);
  const bool dense_a = dense_on_circle(post.a.stable, cap), dense_b = dense_on_circle(post.b.stable, cap);
  lab.expect("spiral.dense", "D(h(A))", true, dense_a, dense_a);
  lab.expect("spiral.dense", "D(h(B))", true, dense_b, dense_b);

  // D(h(A)) ⊂ D(h(B)) although D(A) ⊄ D(B): the "if" direction fails.
  const double tol = 2.0 * p.stability_tol;
  const double img = directed_hausdorff(post.a.stable, post.b.stable);
  const double src = directed_hausdorff(pre.a.stable, pre.b.stable);
  m["subset"] = {{"image_directed_hausdorff", img}, {"pre_directed_hausdorff", src}, {"tolerance", tol}};
  lab.expect("spiral.images_nested", "D(h(A)) ⊂ D(h(B)) and D(A) ⊄ D(B)", true, img <= tol && src > tol,
             img <= tol && src > tol);
}

inline void run_zigzag(Lab& lab) {
  const auto p = directional_params(lab, 0.025);
  const double angle = lab.param("angle", 0.05);
  const GermMap h = GermMap::zigzag();
  const SetGerm A = catalog::axis_ray(2, 0, 1.0, "A"), B = catalog::ray_at(angle, "B");
  const SetGerm hA = image_germ(h, A, p.schedule, p.per_scale, p.seed);
  const SetGerm hB = image_germ(h, B, p.schedule, p.per_scale, p.seed);
  const auto pre = pair_dimension(lab, "pre", A, B, p);
  const auto post = pair_dimension(lab, "image", hA, hB, p);
  lab.write_directions("D_hA", post.a.stable, "D(h(A))");
  lab.write_directions("D_hB", post.b.stable, "D(h(B))");
  auto& m = lab.measured();
  m["pre"] = dim_json(pre.report, pre.intersection.size());
  m["image"] = dim_json(post.report, post.intersection.size());
  m["D_hA"] = to_json(post.a);
  m["D_hB"] = to_json(post.b);
  lab.expect("zigzag.pre_dim", "A,B", -1, pre.report.dim, pre.report.dim == -1);
  lab.expect("zigzag.image_dim", "h(A),h(B)", 1, post.report.dim, post.report.dim == 1);
}

inline void run_power_cusp(Lab& lab) {
  const auto p = directional_params(lab);
  const int pairs = lab.param("lipschitz_pairs", 1000);
  const double factor = lab.param("degeneration_factor", 10.0);
  DirectionOptions opt;
  opt.stability_tol = p.stability_tol;
  auto& m = lab.measured();

  for (const auto& [germ, key, expected, tag] :
       {std::tuple{catalog::power_v(), "power.dim_v", 0, 1ULL}, std::tuple{catalog::power_w(), "power.dim_w", 1, 2ULL}}) {
    const auto est = estimate_direction_set(germ, p.schedule, p.per_scale, lab.seed(tag), opt);
    const auto rep = estimate_dimension(est.stable, p.caps);
    lab.write_directions("D_" + germ.name(), est.stable, "D(" + germ.name() + ")");
    lab.write("D_" + germ.name() + "_dimension.csv", to_text([&](std::ostream& os) { write_dimension_csv(os, rep); }));
    m[germ.name()] = dim_json(rep, est.stable.size());
    m[germ.name()]["estimate"] = to_json(est);
    lab.expect(key, "dim D(" + germ.name() + ")", expected, rep.dim, rep.dim == expected);
  }

  const auto lip = estimate_bilipschitz(GermMap::power(3, 2, 3), p.schedule, pairs, lab.seed(3));
  m["lipschitz"] = to_json(lip);
  lab.write("min_ratio_trend.csv",
            to_text([&](std::ostream& os) { write_pairs_csv(os, lip.min_ratio_trend, "radius", "min_ratio"); }));
  std::vector<CurvePoint> pts;
  for (const auto& [r, v] : lip.min_ratio_trend) pts.push_back({r, v, 0.0});
  lab.write("min_ratio_trend.svg", curve_svg(pts, {"min |h(x)-h(y)|/|x-y| per scale", "radius", "min ratio"}));
  const double drop = lip.min_ratio_trend.front().second / lip.min_ratio_trend.back().second;
  lab.expect("power.degenerates", "min ratio drop across scales", "> " + short_num(factor), drop,
             lip.degenerates(factor));
}

inline void run_volume_ratios(Lab& lab) {
  const std::uint64_t n = lab.param("samples", std::uint64_t{1000000});
  const double d = lab.param("d", 1.5);
  const double c = lab.param("C", 0.5);
  const auto eps = lab.param("eps", std::vector<double>{0.1, 0.07, 0.049, 0.0343, 0.02401, 0.016807, 0.0117649});
  const std::uint64_t n_cusp = lab.param("cusp_samples", std::uint64_t{20000});
  const double d_cusp = lab.param("cusp_d", 1.05);
  const double c_cusp = lab.param("cusp_C", 1.0);
  auto eps_cusp = lab.param("cusp_eps", std::vector<double>{});
  if (eps_cusp.empty()) {
    for (int k = 0; k < 8; ++k) eps_cusp.push_back(0.1 * std::pow(0.5, k));
    lab.param("cusp_eps", eps_cusp);
  }
  const double band = lab.param("cusp_band", 0.15);
  auto& m = lab.measured();

  const auto line = catalog::axis_line(3, 2, "z-axis");
  const auto plane = catalog::hyperplane(3, 2, "xy-plane");
  const auto curve = volume_ratio_curve(line, plane, d, c, c, eps, static_cast<long>(n), lab.seed(1));
  m["line_plane"] = to_json(curve);
  lab.write("line_plane.csv", to_text([&](std::ostream& os) { write_curve_csv(os, curve); }));
  lab.write("line_plane.svg", curve_svg(curve, {"line vs plane volume ratio", "eps", "ratio"}));
  const bool decreasing = nonincreasing_within_ci(curve, 1);
  const double final_ratio = curve.entries.back().ratio;
  lab.expect("volume.line_plane", "decreasing, at most one violation within CI", true, decreasing, decreasing);
  lab.expect("volume.line_plane", "final ratio", "< 0.2", final_ratio, final_ratio < 0.2);

  const auto zray = catalog::axis_ray(3, 2, 1.0, "positive z-axis");
  const auto cusp = catalog::cusp_surface();
  const auto cc = volume_ratio_curve(zray, cusp, d_cusp, c_cusp, c_cusp, eps_cusp, static_cast<long>(n_cusp),
                                     lab.seed(2));
  m["ray_cusp"] = to_json(cc);
  lab.write("ray_cusp.csv", to_text([&](std::ostream& os) { write_curve_csv(os, cc); }));
  lab.write("ray_cusp.svg", curve_svg(cc, {"z-ray vs cusp surface volume ratio", "eps", "ratio"}));
  for (std::size_t i = cc.entries.size() - 2; i < cc.entries.size(); ++i) {
    const auto& e = cc.entries[i];
    const bool ok = e.ratio - e.ci >= 1.0 - band && e.ratio + e.ci <= 1.0 + band;
    lab.expect("volume.cusp", "eps " + short_num(e.eps),
               "[" + short_num(1.0 - band) + ", " + short_num(1.0 + band) + "]",
               json{{"ratio", e.ratio}, {"ci", e.ci}}, ok);
  }
}

inline std::vector<SetGerm> st_test_germs() {
  return {catalog::axis_ray(2, 0, 1.0, "ray"), catalog::parabola(), catalog::cusp_arc(),
          catalog::power_v(),                   catalog::power_w(), catalog::paraboloid()};
}

inline void run_st_props(Lab& lab) {
  const auto schedule = lab.schedule("schedule", {0.1, 0.5, 12});
  const auto deep = lab.schedule("deep_schedule", {1e-6, 0.5, 12});
  const int per_scale = lab.param("per_scale", 1000);
  const double tol = lab.param("stability_tol", 0.05);
  const auto d_list = lab.param("st_d", std::vector<double>{1.2, 1.5});
  const auto c_list = lab.param("st_C", std::vector<double>{0.5, 1.0});
  const double max_angle = lab.param("st_max_angle", 0.1);
  const auto d_grid = lab.param("d_grid", default_d_grid());
  const auto c_grid = lab.param("c_grid", default_c_grid());
  const int sandwich_per_scale = lab.param("sandwich_per_scale", 500);
  DirectionOptions opt;
  opt.stability_tol = tol;
  auto& m = lab.measured();

  const auto germs = st_test_germs();
  std::string dir_rows = "germ,d,C,hausdorff\n";
  std::string equiv_rows = "germ,found,d_b_in_a,C_b_in_a,d_a_in_b,C_a_in_b\n";
  for (std::size_t g = 0; g < germs.size(); ++g) {
    const auto& G = germs[g];
    const auto base = estimate_direction_set(G, deep, per_scale, lab.seed(10 + g), opt);
    std::uint64_t case_tag = 100 + 100 * g;
    for (double d : d_list)
      for (double c : c_list) {
        const STParams sp{d, c};
        const auto st = sample_st_neighborhood(G, sp, deep, per_scale, lab.seed(case_tag++));
        const auto est = estimate_direction_set(st, deep, per_scale, 0, opt);
        const double h = hausdorff_sphere(est.stable, base.stable);
        const std::string label = G.name() + " d=" + short_num(d) + " C=" + short_num(c);
        dir_rows += G.name() + "," + short_num(d) + "," + short_num(c) + "," + format_double(h) + "\n";
        lab.expect("st.directions", label, "<= " + short_num(max_angle), h, h <= max_angle);
      }

    const auto cone = tangent_cone(G, schedule, per_scale, lab.seed(20 + g), opt);
    const auto eq = check_st_equivalence(G, cone, d_grid, c_grid, schedule, per_scale, lab.seed(30 + g));
    m["cone_equivalence"][G.name()] = to_json(eq);
    auto pstr = [](const std::optional<STParams>& p, bool d) { return p ? short_num(d ? p->d : p->C) : ""; };
    equiv_rows += G.name() + "," + (eq.found ? "1" : "0") + "," + pstr(eq.b_in_a, true) + "," + pstr(eq.b_in_a, false) +
                "," + pstr(eq.a_in_b, true) + "," + pstr(eq.a_in_b, false) + "\n";
    lab.expect("st.cone_equiv", G.name(), "witness", eq.status, eq.found);

    const auto prop = check_containment(G, cone, {1.1, 1.0}, schedule, per_scale, lab.seed(40 + g));
    m["cone_containment"][G.name()] = to_json(prop);
    lab.expect("st.cone_containment", G.name() + " d=1.1 C=1", true, prop.verdict, prop.verdict);
  }
  lab.write("st_directions.csv", dir_rows);
  lab.write("cone_equivalence.csv", equiv_rows);

  const std::vector<std::pair<GermMap, std::string>> maps{{GermMap::identity(2), "identity"},
                                                          {GermMap::scaling(2, 2.0), "2I"},
                                                          {GermMap::spiral(), "spiral"},
                                                          {GermMap::zigzag(), "zigzag"}};
  const std::vector<SetGerm> sandwich_germs{catalog::axis_ray(2, 0, 1.0, "ray"), catalog::parabola()};
  std::string rows = "map,germ,k_lower,k_upper,inner_width,outer_width,inner_min_fraction,outer_min_fraction\n";
  std::uint64_t tag = 50;
  for (const auto& [map, mname] : maps)
    for (const auto& A : sandwich_germs) {
      const auto rep = check_sandwich(map, A, 1.0, 1.5, schedule, sandwich_per_scale, lab.seed(tag++));
      const std::string label = mname + " on " + A.name();
      m["sandwich"][label] = to_json(rep);
      rows += mname + "," + A.name() + "," + format_double(rep.lipschitz.k_lower) + "," +
              format_double(rep.lipschitz.k_upper) + "," + format_double(rep.inner_width) + "," +
              format_double(rep.outer_width) + "," + format_double(rep.inner.min_fraction()) + "," +
              format_double(rep.outer.min_fraction()) + "\n";
      const bool ok = rep.inner.verdict && rep.outer.verdict;
      lab.expect("st.sandwich", label, "both containments",
                 json{{"inner", rep.inner.min_fraction()}, {"outer", rep.outer.min_fraction()}}, ok);
    }
  lab.write("sandwich.csv", rows);
}

inline void run_ssp_suite(Lab& lab) {
  const auto schedule = lab.schedule("schedule", {0.1, 0.5, 12});
  const double threshold = lab.param("threshold", 0.02);
  const double eps = lab.param("epsilon", 0.2);
  const int per_scale = lab.param("per_scale", 500);
  auto& m = lab.measured();
  std::string rows = "case,radius,ratio\n";
  auto record = [&](const std::string& label, const SSPReport& r) {
    m[label] = to_json(r);
    for (const auto& [rad, v] : r.probe_ratios) rows += label + "," + format_double(rad) + "," + format_double(v) + "\n";
  };

  const auto geo = catalog::geometric_sequence(schedule, schedule.eps0, 1.0 - 2.0 * eps, "geometric");
  const auto rg = check_ssp(geo, "scaled:" + short_num(1.0 - eps), schedule, threshold, lab.seed(1), per_scale);
  record("geometric", rg);
  double worst = 0.0;
  for (const auto& [r, v] : rg.probe_ratios) worst = std::max(worst, std::abs(v - eps));
  lab.expect("ssp.geometric", "verdict", false, rg.verdict, !rg.verdict);
  lab.expect("ssp.geometric", "max |ratio - " + short_num(eps) + "|", "<= 0.01", worst,
             !rg.probe_ratios.empty() && worst <= 0.01);

  const auto harm = catalog::harmonic_sequence(schedule, "harmonic");
  const auto rh = check_ssp(harm, "scaled:" + short_num(1.0 - eps), schedule, threshold, lab.seed(2), per_scale);
  record("harmonic", rh);
  lab.expect("ssp.harmonic", "verdict", true, rh.verdict, rh.verdict);

  const std::vector<SetGerm> cones{
      catalog::axis_ray(2, 0, 1.0, "ray"),
      cone_over(SphericalCloud::from_directions(2, {make_vec({1.0, 0.0}), make_vec({0.0, 1.0})}), "two rays"),
      catalog::great_circle_cone(2, 360, "plane cone"), catalog::power_w()};
  std::uint64_t tag = 10;
  for (const auto& c : cones) {
    const auto r = check_ssp(c, "scaled:0.999", schedule, threshold, lab.seed(tag++), per_scale);
    record(c.name(), r);
    lab.expect("ssp.cone", c.name(), true, r.verdict, r.verdict);
  }
  lab.write("ssp.csv", rows);
}

inline void run_main_theorem(Lab& lab) {
  const auto base = directional_params(lab);
  auto& m = lab.measured();
  std::string rows = "map,A,B,pre_dim,image_dim\n";
  struct Case {
    GermMap map;
    SetGerm a, b;
    double angular_tol;
    bool representable;  // image subanalytic: dimensions must agree
  };
  Mat shear(2, 2);
  shear << 1.0, 0.5, 0.2, 1.0;
  Mat shear3(3, 3);
  shear3 << 1.0, 0.3, 0.0, 0.0, 1.0, 0.2, 0.1, 0.0, 1.0;
  const GermMap lin2 = GermMap::linear(shear), lin3 = GermMap::linear(shear3), zz = GermMap::zigzag();
  const double small = lab.param("zigzag_angle", 0.05);
  const std::vector<std::pair<std::string, Case>> cases{
      {"linear", {lin2, catalog::axis_ray(2, 0, 1.0, "e1"), catalog::axis_ray(2, 1, 1.0, "e2"), 0.05, true}},
      {"linear", {lin2, catalog::axis_ray(2, 0, 1.0, "e1"), catalog::parabola(), 0.05, true}},
      {"linear", {lin2, catalog::parabola(), catalog::cusp_arc(), 0.05, true}},
      {"linear", {lin3, catalog::power_w(), catalog::hyperplane(3, 0, "x=0"), 0.05, true}},
      {"zigzag", {zz, catalog::ray_at(std::numbers::pi, "-e1"), catalog::ray_at(std::numbers::pi - small, "-e1'"),
                  0.025, true}},
      {"zigzag",
       {zz, catalog::ray_at(std::numbers::pi, "-e1"),
        SetGerm::arc(std::vector<std::string>{"(- 0 t)", "(pow t 2)"}, 1.0, "left parabola"), 0.05, true}},
      {"spiral", {GermMap::spiral(), catalog::axis_ray(2, 0, 1.0, "e1"), catalog::axis_ray(2, 1, 1.0, "e2"), 0.05,
                  false}},
      {"zigzag", {zz, catalog::axis_ray(2, 0, 1.0, "e1"), catalog::ray_at(small, "e1'"), 0.025, false}},
  };
  std::uint64_t tag = 1;
  for (const auto& [mname, c] : cases) {
    DirectionalParams p = base;
    p.angular_tol = c.angular_tol;
    p.seed = lab.seed(tag++);
    const SetGerm ha = image_germ(c.map, c.a, p.schedule, p.per_scale, p.seed);
    const SetGerm hb = image_germ(c.map, c.b, p.schedule, p.per_scale, p.seed ^ 0xb);
    const auto pre = directional_dimension_detail(c.a, c.b, p);
    const auto post = directional_dimension_detail(ha, hb, p);
    const std::string label = mname + ": " + c.a.name() + ", " + c.b.name();
    m[label] = {{"pre", dim_json(pre.report, pre.intersection.size())},
                {"image", dim_json(post.report, post.intersection.size())}};
    rows += mname + "," + c.a.name() + "," + c.b.name() + "," + std::to_string(pre.report.dim) + "," +
            std::to_string(post.report.dim) + "\n";
    const json measured{{"pre", pre.report.dim}, {"image", post.report.dim}};
    if (c.representable)
      lab.expect("main.equal", label, "equal", measured, pre.report.dim == post.report.dim);
    else
      lab.expect("main.witness", label, "different", measured, pre.report.dim != post.report.dim);
  }
  lab.write("dimensions.csv", rows);
}

using Runner = void (*)(Lab&);

inline const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> r{{"oka", run_oka},
                                               {"spiral", run_spiral},
                                               {"zigzag", run_zigzag},
                                               {"power-cusp", run_power_cusp},
                                               {"volume-ratios", run_volume_ratios},
                                               {"st-props", run_st_props},
                                               {"ssp-suite", run_ssp_suite},
                                               {"main-theorem-suite", run_main_theorem}};
  return r;
}

}  // namespace lab_detail

/// Runs a named experiment. Unknown names throw; component errors end up in
/// the report with pass = false.
inline ExperimentReport run_experiment(const std::string& name, const ExperimentConfig& config) {
  const auto& table = lab_detail::runners();
  const auto it = table.find(name);
  if (it == table.end()) throw Error(ErrorCode::UnknownExperiment, "unknown experiment '" + name + "'");

  ExperimentReport rep;
  rep.name = name;
  const auto start = std::chrono::steady_clock::now();
  lab_detail::Lab lab(config, rep);
  try {
    it->second(lab);
  } catch (const std::exception& e) {
    rep.error = e.what();
  }
  rep.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rep.pass = rep.error.empty() && !rep.expectations.empty() &&
             std::all_of(rep.expectations.begin(), rep.expectations.end(), [](const auto& e) { return e.pass; });
  if (!config.out_dir.empty()) {
    try {
      lab.write("report.json", to_json(rep).dump(2) + "\n");
    } catch (const Error& e) {
      rep.error = e.what();
      rep.pass = false;
    }
  }
  return rep;
}

}  // namespace bilip
