#pragma once

// JSON descriptions of germs, maps and schedules, and JSON/CSV forms of reports.
//
// Germ specs ("kind" selects the body):
//   {"kind": "semialgebraic", "dim": 3,
//    "equations": [[{"coeff": 1, "exps": [2,0,0]}, ...], ...],
//    "inequalities": [{"poly": [...], "sign": ">"}, ...]}
//   {"kind": "arc", "components": ["t", "(* t t)"], "t_max": 1}
//   {"kind": "cone", "directions": [[0,0,1], [0,0,-1]]}
//   {"kind": "ray", "direction": [1, 0]}
//   {"kind": "image", "map": <map spec>, "germ": <germ spec>}
// Every germ spec may carry a "name".
//
// Map specs ("tag" selects the map):
//   {"tag": "spiral"}   {"tag": "zigzag", "slope": 1.732, "node_ratio": 0.268}
//   {"tag": "power", "dim": 3, "axis": 2, "exponent": 3}
//   {"tag": "linear", "matrix": [[2,0],[0,2]]}   {"tag": "composite", "maps": [...]}

#include "bilip/directions.hpp"
#include "bilip/germs.hpp"
#include "bilip/maps.hpp"
#include "bilip/seatangle.hpp"

#include <json.hpp>

#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace bilip {

using json = nlohmann::ordered_json;

namespace detail {

inline const json& field(const json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key))
    throw Error(ErrorCode::ParseError, what + ": missing field '" + key + "'");
  return j.at(key);
}

template <typename T>
T get_as(const json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, what + ": " + e.what());
  }
}

inline Vec parse_vec(const json& j, const std::string& what) {
  const auto xs = get_as<std::vector<double>>(j, what);
  require(!xs.empty() && static_cast<int>(xs.size()) <= kMaxDim, what + ": bad vector length");
  return from_std(xs);
}

}  // namespace detail

inline Polynomial parse_polynomial(const json& j, int dim) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "polynomial must be a list of terms");
  std::vector<Monomial> terms;
  for (const auto& t : j) {
    Monomial m;
    m.coeff = detail::get_as<double>(detail::field(t, "coeff", "term"), "term coeff");
    m.exps = detail::get_as<std::vector<int>>(detail::field(t, "exps", "term"), "term exps");
    if (static_cast<int>(m.exps.size()) != dim)
      throw Error(ErrorCode::ParseError, "term exponent list must have length " + std::to_string(dim));
    terms.push_back(std::move(m));
  }
  return Polynomial(dim, terms);
}

inline json polynomial_to_json(const Polynomial& p) {
  json out = json::array();
  for (const auto& t : p.terms()) out.push_back({{"coeff", t.coeff}, {"exps", t.exps}});
  return out;
}

inline GermMap parse_map(const json& j) {
  const auto tag = detail::get_as<std::string>(detail::field(j, "tag", "map"), "map tag");
  if (tag == "spiral") return GermMap::spiral();
  if (tag == "zigzag") {
    const Zigzag2D def;
    return GermMap::zigzag(j.value("slope", def.slope), j.value("node_ratio", def.node_ratio));
  }
  if (tag == "power")
    return GermMap::power(j.value("dim", 3), j.value("axis", 2), j.value("exponent", 3));
  if (tag == "linear") {
    const auto rows = detail::get_as<std::vector<std::vector<double>>>(detail::field(j, "matrix", "linear map"),
                                                                         "linear map matrix");
    const int n = static_cast<int>(rows.size());
    require(n > 0 && n <= kMaxDim, "linear map matrix has a bad size");
    Mat m(n, n);
    for (int r = 0; r < n; ++r) {
      require(static_cast<int>(rows[r].size()) == n, "linear map matrix must be square");
      for (int c = 0; c < n; ++c) m(r, c) = rows[r][c];
    }
    return GermMap::linear(m);
  }
  if (tag == "composite") {
    std::vector<GermMap> maps;
    for (const auto& m : detail::field(j, "maps", "composite map")) maps.push_back(parse_map(m));
    return GermMap::composite(std::move(maps));
  }
  throw Error(ErrorCode::ParseError, "unknown map tag '" + tag + "'");
}

inline json map_to_json(const GermMap& m) {
  struct V {
    int dim;
    json operator()(const Spiral2D&) const { return {{"tag", "spiral"}}; }
    json operator()(const Zigzag2D& z) const {
      return {{"tag", "zigzag"}, {"slope", z.slope}, {"node_ratio", z.node_ratio}};
    }
    json operator()(const PowerMap& p) const {
      return {{"tag", "power"}, {"dim", dim}, {"axis", p.axis}, {"exponent", p.exponent}};
    }
    json operator()(const Linear& l) const {
      json rows = json::array();
      for (int r = 0; r < l.matrix.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < l.matrix.cols(); ++c) row.push_back(l.matrix(r, c));
        rows.push_back(row);
      }
      return {{"tag", "linear"}, {"matrix", rows}};
    }
    json operator()(const Composite& c) const {
      json maps = json::array();
      for (const auto& m : c.maps) maps.push_back(map_to_json(m));
      return {{"tag", "composite"}, {"maps", maps}};
    }
  };
  return std::visit(V{m.ambient_dim}, m.body);
}

inline ScaleSchedule parse_schedule(const json& j, ScaleSchedule s = {}) {
  s.eps0 = j.value("eps0", s.eps0);
  s.ratio = j.value("ratio", s.ratio);
  s.count = j.value("count", s.count);
  s.validate();
  return s;
}

inline json schedule_to_json(const ScaleSchedule& s) {
  return {{"eps0", s.eps0}, {"ratio", s.ratio}, {"count", s.count}};
}

/// Germ from a spec. Image germs need a schedule and seed only when the image
/// has no closed form and is pushed forward through a sample.
inline SetGerm parse_germ(const json& j, const ScaleSchedule& schedule = {}, int per_scale = 2000,
                          std::uint64_t seed = 42) {
  const auto kind = detail::get_as<std::string>(detail::field(j, "kind", "germ"), "germ kind");
  const std::string name = j.value("name", kind);
  if (kind == "semialgebraic") {
    const int dim = detail::get_as<int>(detail::field(j, "dim", "semialgebraic germ"), "germ dim");
    require(dim > 0 && dim <= kMaxDim, "germ dimension out of range");
    std::vector<Polynomial> eqs;
    for (const auto& e : j.value("equations", json::array())) eqs.push_back(parse_polynomial(e, dim));
    std::vector<Inequality> ineqs;
    for (const auto& i : j.value("inequalities", json::array())) {
      const auto sign = detail::get_as<std::string>(detail::field(i, "sign", "inequality"), "inequality sign");
      if (sign != ">" && sign != "<") throw Error(ErrorCode::ParseError, "inequality sign must be '>' or '<'");
      ineqs.push_back({parse_polynomial(detail::field(i, "poly", "inequality"), dim),
                       sign == ">" ? Sign::Positive : Sign::Negative});
    }
    return SetGerm::semialgebraic(dim, std::move(eqs), std::move(ineqs), name);
  }
  if (kind == "arc") {
    const auto comps = detail::get_as<std::vector<std::string>>(detail::field(j, "components", "arc"), "arc components");
    return SetGerm::arc(comps, j.value("t_max", 1.0), name);
  }
  if (kind == "cone") {
    std::vector<Vec> dirs;
    int dim = 0;
    for (const auto& d : detail::field(j, "directions", "cone")) {
      dirs.push_back(detail::parse_vec(d, "cone direction"));
      dim = static_cast<int>(dirs.back().size());
    }
    for (const auto& d : dirs) require(d.size() == dim, "cone directions differ in length");
    return cone_over(SphericalCloud::from_directions(dim, dirs, name), name);
  }
  if (kind == "ray") return ray(detail::parse_vec(detail::field(j, "direction", "ray"), "ray direction"), name);
  if (kind == "image") {
    const GermMap m = parse_map(detail::field(j, "map", "image germ"));
    const SetGerm g = parse_germ(detail::field(j, "germ", "image germ"), schedule, per_scale, seed);
    SetGerm out = image_germ(m, g, schedule, per_scale, seed);
    if (j.contains("name")) out.set_name(name);
    return out;
  }
  throw Error(ErrorCode::ParseError, "unknown germ kind '" + kind + "'");
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json pairs_to_json(const std::vector<std::pair<double, double>>& xs, const char* a, const char* b) {
  json out = json::array();
  for (const auto& [x, y] : xs) out.push_back({{a, x}, {b, y}});
  return out;
}

inline json to_json(const LipschitzEstimate& e) {
  return {{"k_lower", e.k_lower},
          {"k_upper", e.k_upper},
          {"pair_count", e.pair_count},
          {"degenerates", e.degenerates()},
          {"min_ratio_trend", pairs_to_json(e.min_ratio_trend, "scale", "min_ratio")}};
}

inline json to_json(const DimensionReport& r) {
  json counts = json::array();
  for (const auto& [delta, n] : r.counts) counts.push_back({{"cap", delta}, {"count", n}});
  return {{"dim", r.dim},
          {"slope", r.slope},
          {"fit_range", {r.fit_min, r.fit_max}},
          {"residual", r.residual},
          {"confident", r.confident},
          {"degenerate", r.degenerate},
          {"counts", counts}};
}

inline json to_json(const DirectionEstimate& e) {
  json sizes = json::array();
  for (const auto& c : e.per_scale) sizes.push_back(c.size());
  return {{"stable_size", e.stable.size()},
          {"stability_tol", e.stability_tol},
          {"window_begin", e.window_begin},
          {"wandering", e.wandering},
          {"insufficient_scales", e.insufficient_scales},
          {"refined_radius", e.refined_radius},
          {"per_scale_sizes", sizes},
          {"drift", e.drift}};
}

inline json to_json(const STParams& p) { return {{"d", p.d}, {"C", p.C}}; }

inline json to_json(const ContainmentReport& r) {
  return {{"params", to_json(r.params)},
          {"verdict", r.verdict},
          {"min_fraction", r.per_scale_fraction.empty() ? 0.0 : r.min_fraction()},
          {"max_violation", std::isfinite(r.max_violation) ? json(r.max_violation) : json(nullptr)},
          {"per_scale_fraction", pairs_to_json(r.per_scale_fraction, "scale", "fraction")}};
}

inline json to_json(const STEquivalence& e) {
  json out{{"status", e.status}, {"found", e.found}};
  out["b_in_a"] = e.b_in_a ? to_json(*e.b_in_a) : json(nullptr);
  out["a_in_b"] = e.a_in_b ? to_json(*e.a_in_b) : json(nullptr);
  out["best_b_in_a"] = to_json(e.best_b_in_a);
  out["best_a_in_b"] = to_json(e.best_a_in_b);
  return out;
}

inline json to_json(const SandwichReport& s) {
  return {{"lipschitz", to_json(s.lipschitz)},
          {"inner_width", s.inner_width},
          {"outer_width", s.outer_width},
          {"inner", to_json(s.inner)},
          {"outer", to_json(s.outer)}};
}

inline json to_json(const VolumeEstimate& v) {
  return {{"eps", v.eps}, {"volume", v.volume}, {"ci", v.ci}, {"hits", v.hits}, {"samples", v.samples}};
}

inline json to_json(const VolumeCurve& c) {
  json entries = json::array();
  for (const auto& e : c.entries)
    entries.push_back({{"eps", e.eps},
                       {"ratio", e.ratio},
                       {"ci", e.ci},
                       {"numerator", to_json(e.numerator)},
                       {"denominator", to_json(e.denominator)}});
  return {{"alpha_params", to_json(c.alpha_params)},
          {"beta_params", to_json(c.beta_params)},
          {"sample_count", c.sample_count},
          {"entries", entries}};
}

inline json to_json(const SSPReport& r) {
  return {{"probe", r.probe},
          {"threshold", r.threshold},
          {"verdict", r.verdict},
          {"probe_ratios", pairs_to_json(r.probe_ratios, "scale", "ratio")}};
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline void write_curve_csv(std::ostream& os, const VolumeCurve& c) {
  os << "eps,ratio,ci,num_volume,num_ci,num_hits,den_volume,den_ci,den_hits,samples\n";
  for (const auto& e : c.entries)
    os << format_double(e.eps) << ',' << format_double(e.ratio) << ',' << format_double(e.ci) << ','
       << format_double(e.numerator.volume) << ',' << format_double(e.numerator.ci) << ',' << e.numerator.hits << ','
       << format_double(e.denominator.volume) << ',' << format_double(e.denominator.ci) << ','
       << e.denominator.hits << ',' << e.numerator.samples << '\n';
}

inline void write_pairs_csv(std::ostream& os, const std::vector<std::pair<double, double>>& xs, const char* a,
                            const char* b) {
  os << a << ',' << b << '\n';
  for (const auto& [x, y] : xs) os << format_double(x) << ',' << format_double(y) << '\n';
}

inline void write_dimension_csv(std::ostream& os, const DimensionReport& r) {
  os << "cap,count\n";
  for (const auto& [delta, n] : r.counts) os << format_double(delta) << ',' << n << '\n';
}

/// Writes text to a file, creating nothing but the file itself.
inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path);
}

template <typename Writer>
std::string to_text(Writer&& w) {
  std::ostringstream os;
  w(os);
  return os.str();
}

}  // namespace bilip
