#include "bilip/lab.hpp"
#include "bilip/svg.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace bilip;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long count_of(const std::string& s, const std::string& needle) {
  long n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

fs::path scratch(const std::string& leaf) {
  const auto p = fs::temp_directory_path() / ("bilip_test_" + leaf);
  fs::remove_all(p);
  return p;
}

ExperimentConfig quick_zigzag(const fs::path& out) {
  ExperimentConfig c;
  c.name = "zigzag";
  c.seed = 7;
  c.params = {{"per_scale", 600}};
  c.out_dir = out.string();
  return c;
}

}  // namespace

TEST(Svg, EmptyCloudIsAnnotated) {
  const auto s = cloud_svg(SphericalCloud(2), "nothing");
  EXPECT_NE(s.find("∅ (dim −1)"), std::string::npos);
  EXPECT_EQ(s.rfind("<svg", 0), 0u);
}

TEST(Svg, CurveHasMarkersAndBars) {
  std::vector<CurvePoint> pts;
  for (int i = 0; i < 5; ++i) pts.push_back({0.1 * std::pow(0.5, i), 1.0 - 0.1 * i, 0.05});
  PlotOptions opt;
  opt.title = "ratio";
  const auto s = curve_svg(pts, opt);
  EXPECT_EQ(count_of(s, "<circle"), 5);
  // One vertical bar and two caps per point.
  EXPECT_EQ(count_of(s, "#888888"), 15);
  EXPECT_THROW(curve_svg(std::vector<CurvePoint>{}, opt), Error);
}

TEST(Svg, SphereCloudHasTwoViews) {
  Rng rng = substream(1);
  SphericalCloud c(3);
  for (int i = 0; i < 50; ++i) c.vectors.push_back(random_unit(3, rng));
  const auto s = cloud_svg(c, "S2");
  EXPECT_NE(s.find("x-y view"), std::string::npos);
  EXPECT_NE(s.find("x-z view"), std::string::npos);
  EXPECT_EQ(count_of(s, "<circle"), 2 + 2 * 50);
  EXPECT_EQ(s, cloud_svg(c, "S2"));
}

TEST(Lab, UnknownExperimentThrows) {
  try {
    run_experiment("no-such-thing", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownExperiment);
  }
}

TEST(Lab, BadParamIsReported) {
  ExperimentConfig c;
  c.params = {{"per_scale", "many"}};
  const auto rep = run_experiment("zigzag", c);
  EXPECT_FALSE(rep.pass);
  EXPECT_NE(rep.error.find("per_scale"), std::string::npos);
}

TEST(Lab, ConfigParsing) {
  const auto c = parse_config(json::parse(R"({"name":"spiral","seed":9,"params":{"angle":0.1}})"));
  EXPECT_EQ(c.name, "spiral");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_DOUBLE_EQ(c.params.at("angle").get<double>(), 0.1);
  EXPECT_THROW(parse_config(json::parse("[1]")), Error);
  EXPECT_THROW(parse_config(json::parse(R"({"params":3})")), Error);
}

TEST(Lab, ArtifactsAreByteIdentical) {
  const auto a = scratch("a"), b = scratch("b");
  set_max_threads(1);
  const auto ra = run_experiment("zigzag", quick_zigzag(a));
  set_max_threads(3);
  const auto rb = run_experiment("zigzag", quick_zigzag(b));
  set_max_threads(0);
  ASSERT_TRUE(ra.error.empty()) << ra.error;
  ASSERT_EQ(ra.files, rb.files);
  int csvs = 0;
  for (const auto& f : ra.files) {
    if (fs::path(f).extension() == ".json") continue;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    csvs += fs::path(f).extension() == ".csv";
  }
  EXPECT_GE(csvs, 4);
  EXPECT_TRUE(fs::exists(a / "zigzag" / "report.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Lab, EchoReproducesTheRun) {
  ExperimentConfig c;
  c.seed = 11;
  c.params = {{"per_scale", 400}, {"angle", 0.08}};
  const auto first = run_experiment("zigzag", c);
  ASSERT_TRUE(first.error.empty()) << first.error;
  EXPECT_EQ(first.echo.at("seed").get<std::uint64_t>(), 11u);
  EXPECT_TRUE(first.echo.at("params").contains("schedule"));
  const auto again = run_experiment("zigzag", parse_config(first.echo));
  EXPECT_EQ(again.measured, first.measured);
  EXPECT_EQ(again.echo, first.echo);
}

TEST(Lab, ExpectationsCarryProvenance) {
  const auto rep = run_experiment("ssp-suite", {});
  ASSERT_FALSE(rep.expectations.empty());
  for (const auto& e : rep.expectations) {
    EXPECT_FALSE(e.provenance.empty()) << e.key;
    EXPECT_FALSE(e.anchor.empty()) << e.key;
  }
  EXPECT_TRUE(rep.pass);
}

TEST(Lab, EveryRunnerIsListed) {
  for (const auto& n : experiment_names()) EXPECT_TRUE(lab_detail::runners().contains(n)) << n;
  EXPECT_EQ(lab_detail::runners().size(), experiment_names().size());
}
