#include "bilip/directions.hpp"
#include "bilip/lab.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace bilip;

namespace {

const ScaleSchedule kSched{0.1, 0.5, 10};

double max_angle_to(const SphericalCloud& c, const std::vector<Vec>& targets) {
  double worst = 0.0;
  for (const auto& v : c.vectors) {
    double best = std::numbers::pi;
    for (const auto& t : targets) best = std::min(best, angle_between(v, t));
    worst = std::max(worst, best);
  }
  return worst;
}

SphericalCloud sphere_cloud(int n, std::uint64_t seed) {
  Rng rng = substream(seed);
  SphericalCloud c(3);
  for (int i = 0; i < n; ++i) c.vectors.push_back(random_unit(3, rng));
  return c;
}

SphericalCloud circle_cloud(int n) {
  SphericalCloud c(3);
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    c.vectors.push_back(make_vec({std::cos(a), std::sin(a), 0.0}));
  }
  return c;
}

}  // namespace

TEST(DirectionSet, RayGivesItsDirection) {
  const auto est = estimate_direction_set(catalog::axis_ray(2, 0), kSched, 200, 1);
  ASSERT_FALSE(est.stable.empty());
  EXPECT_FALSE(est.wandering);
  EXPECT_LT(max_angle_to(est.stable, {make_vec({1, 0})}), 1e-12);
}

TEST(DirectionSet, ThinCuspGivesVerticalAxis) {
  const auto est = estimate_direction_set(catalog::power_v(), kSched, 500, 2);
  ASSERT_FALSE(est.stable.empty());
  EXPECT_LT(max_angle_to(est.stable, {make_vec({0, 0, 1}), make_vec({0, 0, -1})}), 0.01);
  bool up = false, down = false;
  for (const auto& v : est.stable.vectors) (v[2] > 0 ? up : down) = true;
  EXPECT_TRUE(up && down);
}

TEST(DirectionSet, ParabolaTangentConeIsTheAxis) {
  const auto cone = tangent_cone(catalog::parabola(), kSched, 300, 3);
  EXPECT_NEAR(distance_to_germ(cone, make_vec({0.05, 0}), 1e-12), 0.0, 1e-6);
  EXPECT_NEAR(distance_to_germ(cone, make_vec({0, 0.05}), 1e-12), 0.05, 1e-6);
}

TEST(DirectionSet, ConeRecoversItsBase) {
  std::vector<Vec> base{make_vec({1, 1, 0}), make_vec({0, -1, 2}), make_vec({-1, 0, -1})};
  const auto cone = cone_over(SphericalCloud::from_directions(3, base));
  const auto est = estimate_direction_set(cone, kSched, 300, 4);
  const auto truth = SphericalCloud::from_directions(3, base);
  EXPECT_LT(hausdorff_sphere(est.stable, truth), 1e-12);
}

TEST(DirectionSet, TooFewScales) {
  try {
    estimate_direction_set(catalog::parabola(), {0.1, 0.5, 3}, 100, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientScales);
  }
}

TEST(Dimension, EmptyAndPoint) {
  EXPECT_EQ(estimate_dimension(SphericalCloud(3)).dim, -1);
  const auto one = estimate_dimension(SphericalCloud::from_directions(3, {make_vec({0, 0, 1})}));
  EXPECT_EQ(one.dim, 0);
  EXPECT_TRUE(one.degenerate);
}

TEST(Dimension, FiniteSetIsZero) {
  std::vector<Vec> pts;
  for (int i = 0; i < 6; ++i) pts.push_back(make_vec({std::cos(i * 1.0), std::sin(i * 1.0), 0.3 * i}));
  EXPECT_EQ(estimate_dimension(SphericalCloud::from_directions(3, pts)).dim, 0);
}

TEST(Dimension, GreatCircleIsOne) {
  const auto rep = estimate_dimension(circle_cloud(3600));
  EXPECT_EQ(rep.dim, 1);
  EXPECT_TRUE(rep.confident);
}

TEST(Dimension, SphereIsTwo) {
  const auto rep = estimate_dimension(sphere_cloud(10000, 6));
  EXPECT_EQ(rep.dim, 2);
  EXPECT_GE(rep.slope, 1.75);
  EXPECT_LE(rep.slope, 2.25);
}

TEST(Dimension, CoverCountsNondecreasing) {
  const auto rep = estimate_dimension(sphere_cloud(3000, 7));
  for (std::size_t i = 1; i < rep.counts.size(); ++i) EXPECT_GE(rep.counts[i].second, rep.counts[i - 1].second);
}

TEST(Dimension, RejectsShortCapSchedules) {
  EXPECT_THROW(estimate_dimension(circle_cloud(10), {0.4, 0.3, 0.2}), Error);
  EXPECT_THROW(estimate_dimension(circle_cloud(10), {0.4, 0.3, 0.2, 0.1}), Error);
}

TEST(Intersection, CircleAndSphere) {
  const auto sphere = sphere_cloud(20000, 8);
  const auto circle = circle_cloud(2000);
  const auto x = intersect_direction_sets(circle, sphere, 0.05);
  ASSERT_FALSE(x.empty());
  // Every midpoint stays within half the tolerance of both inputs.
  EXPECT_LE(directed_hausdorff(x, circle), 0.025 + 1e-12);
  EXPECT_LE(directed_hausdorff(x, sphere), 0.025 + 1e-12);
  EXPECT_EQ(estimate_dimension(x).dim, 1);
}

TEST(Intersection, DimensionBoundedByFactors) {
  const auto circle = circle_cloud(2000);
  std::vector<Vec> pts{make_vec({1, 0, 0}), make_vec({0, 1, 0}), make_vec({0, 0, 1})};
  const auto few = SphericalCloud::from_directions(3, pts);
  const auto x = intersect_direction_sets(circle, few, 0.05);
  const int dx = estimate_dimension(x).dim;
  EXPECT_LE(dx, std::min(estimate_dimension(circle).dim, estimate_dimension(few).dim));
  EXPECT_EQ(dx, 0);
}

TEST(Intersection, OrthogonalRaysAreDisjoint) {
  DirectionalParams p;
  p.schedule = kSched;
  p.per_scale = 200;
  EXPECT_EQ(directional_dimension(catalog::ray_at(0.0), catalog::ray_at(std::numbers::pi / 2), p), -1);
}

TEST(Hausdorff, Examples) {
  const auto a = SphericalCloud::from_directions(2, {make_vec({1, 0})});
  const auto b = SphericalCloud::from_directions(2, {make_vec({0, 1})});
  const auto ab = SphericalCloud::from_directions(2, {make_vec({1, 0}), make_vec({0, 1})});
  EXPECT_NEAR(hausdorff_sphere(a, b), std::numbers::pi / 2, 1e-12);
  EXPECT_NEAR(hausdorff_sphere(a, a), 0.0, 1e-12);
  EXPECT_NEAR(directed_hausdorff(a, ab), 0.0, 1e-12);
  EXPECT_NEAR(directed_hausdorff(ab, a), std::numbers::pi / 2, 1e-12);
  try {
    hausdorff_sphere(a, SphericalCloud(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
}

TEST(Density, CircleCaps) {
  SphericalCloud c(2);
  for (int i = 0; i < 100; ++i) {
    const double t = 2.0 * std::numbers::pi * i / 100;
    c.vectors.push_back(make_vec({std::cos(t), std::sin(t)}));
  }
  // Largest gap is 2 pi / 100, so caps of half that size cover.
  EXPECT_TRUE(dense_on_circle(c, std::numbers::pi / 100 + 1e-12));
  EXPECT_FALSE(dense_on_circle(c, std::numbers::pi / 100 * 0.9));
}
