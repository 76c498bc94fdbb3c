#include "bilip/lab.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace bilip;

namespace {

constexpr const char* kOutEnv = "BILIP_OUT_DIR";

struct ScheduleOpts {
  double eps0 = 0.1;
  double ratio = 0.5;
  int count = 12;
  int per_scale = 2000;
  std::uint64_t seed = 42;

  void attach(CLI::App* app) {
    app->add_option("--eps0", eps0, "outermost radius")->capture_default_str();
    app->add_option("--ratio", ratio, "radius ratio between scales")->capture_default_str();
    app->add_option("--count", count, "number of scales")->capture_default_str();
    app->add_option("--per-scale", per_scale, "samples per annulus")->capture_default_str();
    app->add_option("--seed", seed, "random seed")->capture_default_str();
  }
  ScaleSchedule schedule() const {
    ScaleSchedule s{eps0, ratio, count};
    s.validate();
    return s;
  }
  SetGerm germ(const std::string& path) const { return parse_germ(read_json_file(path), schedule(), per_scale, seed); }
};

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

int run_named(const std::string& name, const std::string& config_path, const std::uint64_t* seed,
              const std::string& out_dir) {
  ExperimentConfig cfg;
  if (!config_path.empty()) {
    cfg = parse_config(read_json_file(config_path));
    if (!cfg.name.empty() && cfg.name != name)
      throw Error(ErrorCode::InvalidArgument, "config is for '" + cfg.name + "', not '" + name + "'");
  }
  cfg.name = name;
  if (seed) cfg.seed = *seed;
  cfg.out_dir = out_dir;
  const auto rep = run_experiment(name, cfg);
  for (const auto& e : rep.expectations)
    std::cout << (e.pass ? "PASS " : "FAIL ") << e.key << " [" << e.label << "] expected " << e.expected.dump()
              << " measured " << e.measured.dump() << "\n";
  if (!rep.error.empty()) std::cout << "ERROR " << rep.error << "\n";
  std::cout << name << ": " << (rep.pass ? "pass" : "fail") << " in " << lab_detail::short_num(rep.runtime_s) << " s";
  if (!out_dir.empty()) std::cout << ", report in " << out_dir << "/" << name << "/report.json";
  std::cout << "\n";
  return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Directional dimension and sea-tangle experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "worker thread cap (0: all cores)")->check(CLI::NonNegativeNumber);

  // run
  auto* run = app.add_subcommand("run", "run a named experiment");
  std::string name, config_path, out_dir = "lab_out";
  std::uint64_t run_seed = 42;
  run->add_option("name", name, "experiment name")->required();
  run->add_option("--config", config_path, "JSON config {name, seed, params}")->check(CLI::ExistingFile);
  auto* seed_opt = run->add_option("--seed", run_seed, "seed (overrides the config)");
  run->add_option("--out", out_dir, "output directory")->envname(kOutEnv)->capture_default_str();

  app.add_subcommand("list", "list experiment names");

  // directions
  auto* dirs = app.add_subcommand("directions", "estimate D(A), its dimension, and dim(D(A) ∩ D(B)) with --other");
  ScheduleOpts dir_opts;
  dir_opts.attach(dirs);
  std::string germ_path, other_path, csv_path;
  double stability_tol = 0.05, angular_tol = 0.05;
  dirs->add_option("--germ", germ_path, "germ spec")->required()->check(CLI::ExistingFile);
  dirs->add_option("--other", other_path, "second germ spec")->check(CLI::ExistingFile);
  dirs->add_option("--stability-tol", stability_tol)->capture_default_str();
  dirs->add_option("--angular-tol", angular_tol)->capture_default_str();
  dirs->add_option("--csv", csv_path, "write the stable directions (or the intersection) here");

  // st-volume
  auto* vol = app.add_subcommand("st-volume", "Monte Carlo volume of ST_d(A;C) ∩ B_eps, or a ratio curve with --beta");
  std::string vol_germ, beta_path, vol_csv;
  double vd = 1.5, vc = 1.0, vc2 = 1.0;
  std::vector<double> eps;
  long samples = 1000000;
  std::uint64_t vol_seed = 42;
  vol->add_option("--germ", vol_germ, "germ spec")->required()->check(CLI::ExistingFile);
  vol->add_option("--d", vd)->capture_default_str();
  vol->add_option("--C", vc)->capture_default_str();
  vol->add_option("--eps", eps, "ball radii")->required();
  vol->add_option("--samples", samples)->capture_default_str();
  vol->add_option("--seed", vol_seed)->capture_default_str();
  vol->add_option("--beta", beta_path, "denominator germ spec")->check(CLI::ExistingFile);
  vol->add_option("--C2", vc2, "denominator width")->capture_default_str();
  vol->add_option("--csv", vol_csv, "write the ratio curve here");

  // containment
  auto* cont = app.add_subcommand("containment", "test A ⊂ ST_d(B;C) per scale");
  ScheduleOpts cont_opts;
  cont_opts.attach(cont);
  std::string a_path, b_path;
  double cd = 1.5, cc = 1.0;
  cont->add_option("--a", a_path)->required()->check(CLI::ExistingFile);
  cont->add_option("--b", b_path)->required()->check(CLI::ExistingFile);
  cont->add_option("--d", cd)->capture_default_str();
  cont->add_option("--C", cc)->capture_default_str();

  // st-equiv
  auto* eq = app.add_subcommand("st-equiv", "grid search for an ST-equivalence witness");
  ScheduleOpts eq_opts;
  eq_opts.attach(eq);
  std::string ea_path, eb_path;
  std::vector<double> d_grid = default_d_grid(), c_grid = default_c_grid();
  eq->add_option("--a", ea_path)->required()->check(CLI::ExistingFile);
  eq->add_option("--b", eb_path, "defaults to the tangent cone of A")->check(CLI::ExistingFile);
  eq->add_option("--d-grid", d_grid)->capture_default_str();
  eq->add_option("--c-grid", c_grid)->capture_default_str();

  // sandwich
  auto* sw = app.add_subcommand("sandwich", "check both sandwich containments for a map");
  ScheduleOpts sw_opts;
  sw_opts.attach(sw);
  std::string map_path, sw_germ;
  double sk = 1.0, sd = 1.5;
  sw->add_option("--map", map_path, "map spec")->required()->check(CLI::ExistingFile);
  sw->add_option("--germ", sw_germ)->required()->check(CLI::ExistingFile);
  sw->add_option("--K", sk)->capture_default_str();
  sw->add_option("--d", sd)->capture_default_str();

  // ssp
  auto* ssp = app.add_subcommand("ssp", "sequence selection check");
  ScheduleOpts ssp_opts;
  ssp_opts.per_scale = 500;
  ssp_opts.attach(ssp);
  std::string ssp_germ, probe = "midpoint";
  double threshold = 0.02;
  ssp->add_option("--germ", ssp_germ)->required()->check(CLI::ExistingFile);
  ssp->add_option("--probe", probe, "midpoint | scaled:<f> | directions")->capture_default_str();
  ssp->add_option("--threshold", threshold)->capture_default_str();

  // lipschitz
  auto* lip = app.add_subcommand("lipschitz", "empirical bi-Lipschitz constants of a map");
  ScheduleOpts lip_opts;
  lip_opts.attach(lip);
  std::string lip_map;
  int pairs = 1000;
  lip->add_option("--map", lip_map)->required()->check(CLI::ExistingFile);
  lip->add_option("--pairs", pairs, "pairs per scale")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  set_max_threads(threads);

  try {
    if (*run) return run_named(name, config_path, seed_opt->count() ? &run_seed : nullptr, out_dir);
    if (app.got_subcommand("list")) {
      for (const auto& n : experiment_names()) std::cout << n << "\n";
      return 0;
    }
    if (*dirs) {
      const auto s = dir_opts.schedule();
      DirectionOptions opt;
      opt.stability_tol = stability_tol;
      const SetGerm a = dir_opts.germ(germ_path);
      if (other_path.empty()) {
        const auto est = estimate_direction_set(a, s, dir_opts.per_scale, dir_opts.seed, opt);
        print({{"germ", a.name()}, {"estimate", to_json(est)}, {"dimension", to_json(estimate_dimension(est.stable))}});
        if (!csv_path.empty())
          write_file(csv_path, to_text([&](std::ostream& os) { write_spherical_csv(os, est.stable); }));
        return 0;
      }
      DirectionalParams p;
      p.schedule = s;
      p.per_scale = dir_opts.per_scale;
      p.stability_tol = stability_tol;
      p.angular_tol = angular_tol;
      p.seed = dir_opts.seed;
      const auto r = directional_dimension_detail(a, dir_opts.germ(other_path), p);
      print({{"a", to_json(r.a)}, {"b", to_json(r.b)}, {"intersection_size", r.intersection.size()},
             {"dimension", to_json(r.report)}});
      if (!csv_path.empty())
        write_file(csv_path, to_text([&](std::ostream& os) { write_spherical_csv(os, r.intersection); }));
      return 0;
    }
    if (*vol) {
      const SetGerm a = parse_germ(read_json_file(vol_germ));
      if (beta_path.empty()) {
        json out = json::array();
        std::uint64_t i = 0;
        for (double e : eps) out.push_back(to_json(mc_volume(a, {vd, vc}, e, samples, substream(vol_seed, i++)())));
        print(out);
        return 0;
      }
      const auto curve = volume_ratio_curve(a, parse_germ(read_json_file(beta_path)), vd, vc, vc2, eps, samples, vol_seed);
      print(to_json(curve));
      if (!vol_csv.empty()) write_file(vol_csv, to_text([&](std::ostream& os) { write_curve_csv(os, curve); }));
      return 0;
    }
    if (*cont) {
      const auto r = check_containment(cont_opts.germ(a_path), cont_opts.germ(b_path), {cd, cc}, cont_opts.schedule(),
                                       cont_opts.per_scale, cont_opts.seed);
      print(to_json(r));
      return r.verdict ? 0 : 1;
    }
    if (*eq) {
      const SetGerm a = eq_opts.germ(ea_path);
      const SetGerm b = eb_path.empty() ? tangent_cone(a, eq_opts.schedule(), eq_opts.per_scale, eq_opts.seed)
                                        : eq_opts.germ(eb_path);
      const auto r = check_st_equivalence(a, b, d_grid, c_grid, eq_opts.schedule(), eq_opts.per_scale, eq_opts.seed);
      print(to_json(r));
      return r.found ? 0 : 1;
    }
    if (*sw) {
      const auto r = check_sandwich(parse_map(read_json_file(map_path)), sw_opts.germ(sw_germ), sk, sd,
                                    sw_opts.schedule(), sw_opts.per_scale, sw_opts.seed);
      print(to_json(r));
      return r.inner.verdict && r.outer.verdict ? 0 : 1;
    }
    if (*ssp) {
      const auto r = check_ssp(ssp_opts.germ(ssp_germ), probe, ssp_opts.schedule(), threshold, ssp_opts.seed,
                               ssp_opts.per_scale);
      print(to_json(r));
      return r.verdict ? 0 : 1;
    }
    if (*lip) {
      const auto r = estimate_bilipschitz(parse_map(read_json_file(lip_map)), lip_opts.schedule(), pairs, lip_opts.seed);
      print(to_json(r));
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
