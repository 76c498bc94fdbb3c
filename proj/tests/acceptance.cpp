// Runs every experiment at its default configuration and checks the
// acceptance criteria. Prints one PASS/FAIL line per criterion.
#include "bilip/lab.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

using namespace bilip;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::map<std::string, ExperimentReport> g_reports;

const ExperimentReport& report(const std::string& name) { return g_reports.at(name); }

std::vector<const Expectation*> rows(const std::string& key) {
  std::vector<const Expectation*> out;
  for (const auto& [name, rep] : g_reports)
    for (const auto& e : rep.expectations)
      if (e.key == key) out.push_back(&e);
  return out;
}

/// All rows under the given keys pass, and there is at least `min_rows` of them.
Verdict keys_pass(const std::vector<std::string>& keys, std::size_t min_rows = 1) {
  std::size_t n = 0, failed = 0;
  std::string first_failure;
  for (const auto& k : keys)
    for (const auto* e : rows(k)) {
      ++n;
      if (!e->pass) {
        if (!failed++) first_failure = k + " [" + e->label + "] measured " + e->measured.dump();
      }
    }
  Verdict v;
  v.pass = n >= min_rows && failed == 0;
  v.detail = std::to_string(n - failed) + "/" + std::to_string(n) + " checks";
  if (n < min_rows) v.detail += ", need at least " + std::to_string(min_rows);
  if (failed) v.detail += ", first failure: " + first_failure;
  return v;
}

Verdict no_error(const std::string& name, Verdict v) {
  const auto& rep = report(name);
  if (!rep.error.empty()) {
    v.pass = false;
    v.detail += ", error: " + rep.error;
  }
  return v;
}

Verdict within(const std::string& name, double limit_s, Verdict v) {
  const double t = report(name).runtime_s;
  if (t >= limit_s) {
    v.pass = false;
    v.detail += ", runtime " + lab_detail::short_num(t) + " s over " + lab_detail::short_num(limit_s) + " s";
  }
  return no_error(name, v);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentReport run(const std::string& name, const fs::path& out) {
  ExperimentConfig c;
  c.name = name;
  c.out_dir = out.string();
  return run_experiment(name, c);
}

Verdict determinism(const fs::path& first, const fs::path& second) {
  long compared = 0;
  std::vector<std::string> differing;
  for (const auto& name : experiment_names()) {
    const auto again = run(name, second);
    const auto& orig = report(name);
    if (!again.error.empty()) differing.push_back(name + " (rerun error: " + again.error + ")");
    for (const auto& f : orig.files) {
      if (fs::path(f).extension() != ".csv") continue;
      ++compared;
      if (!fs::exists(second / f) || slurp(first / f) != slurp(second / f)) differing.push_back(f);
    }
  }
  Verdict v;
  v.pass = compared > 0 && differing.empty();
  v.detail = std::to_string(compared) + " CSV files compared";
  if (!differing.empty()) v.detail += ", differing: " + differing.front();
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  fs::remove_all(out);
  const fs::path first = out / "run1", second = out / "run2";

  for (const auto& name : experiment_names()) {
    g_reports[name] = run(name, first);
    const auto& r = g_reports[name];
    std::printf("ran %-20s %s in %.1f s%s%s\n", name.c_str(), r.pass ? "pass" : "fail", r.runtime_s,
                r.error.empty() ? "" : ", error: ", r.error.c_str());
    std::fflush(stdout);
  }

  struct Criterion {
    int id;
    std::string title;
    std::string experiment;
    std::function<Verdict()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "oka directional dimensions", "oka", [] { return within("oka", 300, keys_pass({"oka.f0_pair", "oka.f1_p3p4"}, 7)); }},
      {2, "spiral counterexample", "spiral",
       [] { return within("spiral", 60, keys_pass({"spiral.pre_dim", "spiral.image_dim", "spiral.dense"}, 4)); }},
      {3, "zigzag counterexample", "zigzag",
       [] { return within("zigzag", 60, keys_pass({"zigzag.pre_dim", "zigzag.image_dim"}, 2)); }},
      {4, "power map", "power-cusp",
       [] { return no_error("power-cusp", keys_pass({"power.dim_v", "power.dim_w", "power.degenerates"}, 3)); }},
      {5, "line vs plane volume limit", "volume-ratios",
       [] { return within("volume-ratios", 600, keys_pass({"volume.line_plane"}, 2)); }},
      {6, "ray vs cusp surface ratio", "volume-ratios",
       [] { return no_error("volume-ratios", keys_pass({"volume.cusp"}, 2)); }},
      {7, "direction set of ST neighbourhoods", "st-props",
       [] { return no_error("st-props", keys_pass({"st.directions"}, 24)); }},
      {8, "ST-equivalence with the tangent cone", "st-props",
       [] { return no_error("st-props", keys_pass({"st.cone_equiv"}, 6)); }},
      {9, "sequence selection", "ssp-suite",
       [] { return no_error("ssp-suite", keys_pass({"ssp.geometric", "ssp.harmonic", "ssp.cone"}, 4)); }},
      {10, "sandwich containments", "st-props",
       [] { return no_error("st-props", keys_pass({"st.sandwich"}, 8)); }},
  };

  bool all = true;
  auto line = [&](int id, const std::string& title, double seconds, const Verdict& v) {
    all = all && v.pass;
    std::printf("%s criterion %2d  %-40s %8.1f s  %s\n", v.pass ? "PASS" : "FAIL", id, title.c_str(), seconds,
                v.detail.c_str());
    std::fflush(stdout);
  };
  for (const auto& c : criteria) line(c.id, c.title, report(c.experiment).runtime_s, c.check());

  const auto t0 = std::chrono::steady_clock::now();
  const auto det = determinism(first, second);
  line(11, "byte-identical CSV on rerun", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
       det);

  const auto& mt = report("main-theorem-suite");
  Verdict extra = no_error("main-theorem-suite", keys_pass({"main.equal", "main.witness"}, 8));
  all = all && extra.pass;
  std::printf("%s supplementary main-theorem-suite %8.1f s  %s\n", extra.pass ? "PASS" : "FAIL", mt.runtime_s,
              extra.detail.c_str());
  return all ? 0 : 1;
}
