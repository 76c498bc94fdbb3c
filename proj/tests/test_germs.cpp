#include "bilip/germs.hpp"
#include "bilip/io.hpp"
#include "bilip/lab.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace bilip;

namespace {

const ScaleSchedule kShort{0.1, 0.5, 6};

double min_arc_distance_grid(const Vec& x, double t_max, long n) {
  double best = std::numeric_limits<double>::infinity();
  for (long i = 0; i <= n; ++i) {  // t = 0: distances are to the closure
    const double t = t_max * static_cast<double>(i) / static_cast<double>(n);
    best = std::min(best, std::hypot(x[0] - t, x[1] - t * t));
  }
  return best;
}

}  // namespace

TEST(ScaleSchedule, RadiiAndAnnuli) {
  const ScaleSchedule s{0.1, 0.5, 4};
  EXPECT_DOUBLE_EQ(s.radius(0), 0.1);
  EXPECT_DOUBLE_EQ(s.radius(3), 0.0125);
  EXPECT_DOUBLE_EQ(s.min_radius(), 0.00625);
  EXPECT_EQ(s.annulus_of(0.07), 0);
  EXPECT_EQ(s.annulus_of(0.02), 2);
  EXPECT_EQ(s.annulus_of(0.2), -1);
  EXPECT_EQ(s.annulus_of(0.001), -1);
  EXPECT_THROW((ScaleSchedule{0.1, 1.5, 4}.validate()), Error);
}

TEST(SampleGerm, ConeOverOneDirectionIsARay) {
  const auto g = sample_germ(catalog::axis_ray(3, 2), kShort, 100, 1);
  for (const auto& a : g.as<Cloud>()->annuli) {
    EXPECT_FALSE(a.points.empty());
    for (const auto& p : a.points) {
      EXPECT_EQ(p[0], 0.0);
      EXPECT_EQ(p[1], 0.0);
      EXPECT_GT(p[2], 0.0);
      EXPECT_GT(p.norm(), a.inner_radius);
      EXPECT_LE(p.norm(), a.outer_radius);
    }
  }
}

TEST(SampleGerm, ParabolaPointsSatisfyTheEquation) {
  const auto g = sample_germ(catalog::parabola(), {0.1, 0.5, 4}, 200, 2);
  for (const auto& p : g.as<Cloud>()->all_points()) EXPECT_NEAR(p[1], p[0] * p[0], 1e-15 * p[1] + 1e-300);
}

TEST(SampleGerm, OkaSheetNonemptyAtEveryScale) {
  const auto s1 = catalog::oka_sheets()[0];
  const auto* sa = s1.as<Semialgebraic>();
  const auto g = sample_germ(s1, {0.1, 0.5, 12}, 100, 3);
  for (const auto& a : g.as<Cloud>()->annuli) {
    EXPECT_FALSE(a.points.empty()) << "scale " << a.scale_index;
    for (const auto& p : a.points) {
      EXPECT_LE(std::abs(sa->equations[0](p)), 1e-9 * (1.0 + p.norm()));
      EXPECT_GT(p[0], 0.0);
      EXPECT_GT(p[1], 0.0);
      EXPECT_LT(p[2], 0.0);
    }
  }
}

TEST(SampleGerm, ResidualSoundnessOnThinVariety) {
  const auto v = catalog::power_v();
  const auto g = sample_germ(v, kShort, 200, 4);
  const auto& eq = v.as<Semialgebraic>()->equations[0];
  for (const auto& p : g.as<Cloud>()->all_points()) EXPECT_LE(std::abs(eq(p)), 1e-9 * (1.0 + p.norm()));
}

TEST(SampleGerm, DeterministicAcrossThreadCounts) {
  const auto w = catalog::power_w();
  set_max_threads(1);
  const auto a = sample_germ(w, kShort, 150, 9);
  set_max_threads(3);
  const auto b = sample_germ(w, kShort, 150, 9);
  set_max_threads(0);
  std::ostringstream sa, sb;
  write_cloud_csv(sa, a);
  write_cloud_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  const auto c = sample_germ(w, kShort, 150, 10);
  std::ostringstream sc;
  write_cloud_csv(sc, c);
  EXPECT_NE(sa.str(), sc.str());
}

TEST(SampleGerm, EmptyGermReportsNoPoints) {
  // x^2 + y^2 + z^2 + 1 = 0 has no real points.
  const auto g = SetGerm::semialgebraic(3, {Polynomial(3, {{1, {2, 0, 0}}, {1, {0, 2, 0}}, {1, {0, 0, 2}}, {1, {0, 0, 0}}})});
  try {
    sample_germ(g, {0.1, 0.5, 4}, 10, 1);
    FAIL() << "expected NoPointsFound";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoPointsFound);
  }
}

TEST(Distance, ConeClosedForms) {
  const auto z = catalog::axis_ray(3, 2);
  EXPECT_NEAR(distance_to_germ(z, make_vec({0, 0, 2}), 1e-9), 0.0, 1e-12);
  EXPECT_NEAR(distance_to_germ(z, make_vec({1, 0, 0}), 1e-9), 1.0, 1e-12);
  EXPECT_NEAR(distance_to_germ(catalog::axis_ray(2, 0), make_vec({2, 0}), 1e-9), 0.0, 1e-12);
  const auto y = catalog::axis_line(2, 1);
  EXPECT_NEAR(distance_to_germ(y, make_vec({3, 0}), 1e-9), 3.0, 1e-12);
}

TEST(Distance, DiscreteCircleConeChordBound) {
  std::vector<Vec> base;
  for (int i = 0; i < 360; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 360.0;
    base.push_back(make_vec({std::cos(a), std::sin(a)}));
  }
  const auto cone = cone_over(SphericalCloud::from_directions(2, base));
  const GermDistance d(cone, 0.5, 2.0);
  Rng rng = substream(17);
  const double bound = std::sin(std::numbers::pi / 360.0);
  for (int i = 0; i < 5000; ++i) EXPECT_LE(d.distance(random_unit(2, rng), 1e-12), bound + 1e-12);
}

TEST(Distance, ArcAgainstDenseGrid) {
  const auto arc = SetGerm::arc(std::vector<std::string>{"t", "(pow t 2)"}, 2.0);
  for (const Vec& x : {make_vec({1.0, 0.0}), make_vec({0.3, 0.5}), make_vec({-0.2, 0.1})}) {
    const double oracle = min_arc_distance_grid(x, 2.0, 1000000);
    EXPECT_NEAR(distance_to_germ(arc, x, 1e-9), oracle, 1e-6) << x.transpose();
  }
}

TEST(Distance, HyperplaneIsExact) {
  const auto plane = catalog::hyperplane(3, 2);
  EXPECT_NEAR(distance_to_germ(plane, make_vec({0.01, -0.02, 0.003}), 1e-12), 0.003, 1e-15);
}

TEST(Distance, SampledPointsAreOnTheGerm) {
  const auto w = catalog::power_w();
  const auto g = sample_germ(w, kShort, 50, 5);
  const GermDistance d(w, kShort.min_radius() / 2, 2 * kShort.eps0);
  for (const auto& p : g.as<Cloud>()->all_points()) EXPECT_LE(d.distance(p, 1e-9 * p.norm()), 1e-9 * (1 + p.norm()) + 1e-9 * p.norm());
}

TEST(Distance, TriangleSanity) {
  const auto g = catalog::paraboloid();
  const GermDistance d(g, 0.01, 0.2);
  Rng rng = substream(21);
  const double tol = 1e-7;
  for (int i = 0; i < 100; ++i) {
    const Vec x = random_in_shell(3, 0.03, 0.1, rng);
    const Vec y = x + random_in_ball(3, 0.02, rng);
    EXPECT_LE(std::abs(d.distance(x, tol) - d.distance(y, tol)), (x - y).norm() + 2 * tol + 1e-12);
  }
}

TEST(Distance, EmptyCloudUnsupported) {
  const auto empty = SetGerm::cloud(2, kShort, {});
  try {
    distance_to_germ(empty, make_vec({1, 0}), 1e-6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unsupported);
  }
}

TEST(ConeOver, EmptyBaseThrows) {
  try {
    cone_over(SphericalCloud(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyBase);
  }
}

TEST(ParseGerm, AllKinds) {
  const auto sa = parse_germ(json::parse(R"({"kind":"semialgebraic","dim":3,"name":"W",
      "equations":[[{"coeff":1,"exps":[2,0,0]},{"coeff":1,"exps":[0,2,0]},{"coeff":-1,"exps":[0,0,2]}]],
      "inequalities":[{"poly":[{"coeff":1,"exps":[0,0,1]}],"sign":">"}]})"));
  ASSERT_NE(sa.as<Semialgebraic>(), nullptr);
  EXPECT_EQ(sa.name(), "W");
  EXPECT_EQ(sa.as<Semialgebraic>()->inequalities.size(), 1u);
  EXPECT_NE(parse_germ(json::parse(R"j({"kind":"arc","components":["t","(pow t 2)"]})j")).as<Arc>(), nullptr);
  EXPECT_NE(parse_germ(json::parse(R"({"kind":"cone","directions":[[0,0,1],[0,0,-1]]})")).as<Cone>(), nullptr);
  EXPECT_NE(parse_germ(json::parse(R"({"kind":"ray","direction":[1,0]})")).as<Cone>(), nullptr);
  const auto img = parse_germ(json::parse(R"({"kind":"image","map":{"tag":"spiral"},"germ":{"kind":"ray","direction":[1,0]}})"));
  EXPECT_NE(img.as<Arc>(), nullptr);
}

TEST(ParseGerm, Errors) {
  auto code = [](const char* text) {
    try {
      parse_germ(json::parse(text));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  EXPECT_EQ(code(R"({"kind":"blob"})"), ErrorCode::ParseError);
  EXPECT_EQ(code(R"({"dim":2})"), ErrorCode::ParseError);
  EXPECT_EQ(code(R"j({"kind":"arc","components":["(frob t)"]})j"), ErrorCode::ParseError);
  EXPECT_EQ(code(R"({"kind":"cone","directions":[]})"), ErrorCode::EmptyBase);
}

TEST(CloudCsv, HeaderAndRows) {
  const auto g = sample_germ(catalog::axis_ray(2, 0), {0.1, 0.5, 4}, 2, 1);
  std::ostringstream os;
  write_cloud_csv(os, g);
  const auto text = os.str();
  EXPECT_EQ(text.rfind("scale_index,x1,x2\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 8);
}
