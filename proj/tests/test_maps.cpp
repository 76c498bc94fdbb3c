#include "bilip/io.hpp"
#include "bilip/lab.hpp"
#include "bilip/maps.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace bilip;

namespace {

// Singular values of the shear [[1, 0], [s, 1]]: the exact local stretch bounds
// of a map whose Jacobian is such a shear in some orthonormal frame.
std::pair<double, double> shear_singular_values(double s) {
  const double big = (2.0 + s * s + s * std::sqrt(s * s + 4.0)) / 2.0;
  return {1.0 / std::sqrt(big), std::sqrt(big)};
}

std::vector<std::pair<std::string, GermMap>> zoo() {
  Mat m(3, 3);
  m << 2, 1, 0, 0, 1, 0.5, 0.3, 0, 1;
  return {{"spiral", GermMap::spiral()},
          {"zigzag", GermMap::zigzag()},
          {"power", GermMap::power(3, 2, 3)},
          {"linear", GermMap::linear(m)},
          {"composite", GermMap::composite({GermMap::spiral(), GermMap::zigzag(), GermMap::scaling(2, 3.0)})}};
}

const double kA1 = (std::numbers::sqrt3 - 1.0) / (std::numbers::sqrt3 + 1.0);

}  // namespace

TEST(Eval, SpecExamples) {
  EXPECT_LT((eval(GermMap::spiral(), make_vec({1, 0})) - make_vec({1, 0})).norm(), 1e-15);
  EXPECT_LT((eval(GermMap::zigzag(), make_vec({kA1, 0})) - make_vec({kA1, 0})).norm(), 1e-15);
  EXPECT_LT((eval(GermMap::power(3, 2, 3), make_vec({1, 1, 1})) - make_vec({1, 1, 1})).norm(), 1e-15);
}

TEST(Eval, OriginIsFixed) {
  for (const auto& [name, m] : zoo()) EXPECT_TRUE(eval(m, zeros(m.ambient_dim)).isZero(0.0)) << name;
}

TEST(Eval, RoundTripEveryScale) {
  const ScaleSchedule s{0.1, 0.5, 12};
  for (const auto& [name, m] : zoo())
    for (int k = 0; k < s.count; ++k) {
      Rng rng = substream(31, k);
      double worst = 0.0;
      for (int i = 0; i < 10000; ++i) {
        const Vec x = random_in_shell(m.ambient_dim, s.inner(k), s.outer(k), rng);
        worst = std::max(worst, (eval_inverse(m, eval(m, x)) - x).norm() / x.norm());
      }
      EXPECT_LE(worst, 1e-9) << name << " scale " << k;
    }
}

TEST(Eval, SpiralPreservesNorms) {
  Rng rng = substream(4);
  for (int i = 0; i < 1000; ++i) {
    const Vec x = random_in_ball(2, 0.1, rng);
    EXPECT_NEAR(eval(GermMap::spiral(), x).norm(), x.norm(), 1e-15);
  }
}

TEST(Zigzag, ProfileValues) {
  const Zigzag2D z;
  EXPECT_EQ(zigzag_value(z, -0.5), 0.0);
  EXPECT_EQ(zigzag_value(z, 1.5), 0.0);
  for (int n = 0; n < 12; ++n) EXPECT_NEAR(zigzag_value(z, std::pow(kA1, n)), 0.0, 1e-14 * std::pow(kA1, n));
  // Ascending piece [a1, a0 sqrt3/(1+sqrt3)]: f(x) = sqrt3 (x - a1).
  const double top = std::numbers::sqrt3 / (1.0 + std::numbers::sqrt3);
  const double mid = 0.5 * (kA1 + top);
  EXPECT_NEAR(zigzag_value(z, mid), std::numbers::sqrt3 * (mid - kA1), 1e-14);
  // Descending piece: f(x) = sqrt3 (a0 - x); both formulas agree at the peak.
  EXPECT_NEAR(zigzag_value(z, 0.9), std::numbers::sqrt3 * (1.0 - 0.9), 1e-14);
  EXPECT_NEAR(std::numbers::sqrt3 * (top - kA1), std::numbers::sqrt3 * (1.0 - top), 1e-14);
  EXPECT_NEAR(zigzag_value(z, top - 1e-9), zigzag_value(z, top + 1e-9), 1e-8);
}

TEST(Zigzag, LipschitzBound) {
  const Zigzag2D z;
  Rng rng = substream(8);
  for (int i = 0; i < 100000; ++i) {
    const double x = -0.2 + 1.4 * uniform01(rng);
    const double y = i % 2 ? x + 1e-3 * (uniform01(rng) - 0.5) : -0.2 + 1.4 * uniform01(rng);
    ASSERT_LE(std::abs(zigzag_value(z, x) - zigzag_value(z, y)), std::numbers::sqrt3 * std::abs(x - y) + 1e-12);
  }
}

TEST(Lipschitz, ScalingIsExact) {
  const auto e = estimate_bilipschitz(GermMap::scaling(2, 2.0), {0.1, 0.5, 12}, 300, 1);
  EXPECT_NEAR(e.k_lower, 2.0, 1e-9);
  EXPECT_NEAR(e.k_upper, 2.0, 1e-9);
  EXPECT_EQ(e.pair_count, 300 * 12);
  EXPECT_FALSE(e.degenerates());
}

TEST(Lipschitz, SpiralWithinShearBounds) {
  const auto [lo, hi] = shear_singular_values(1.0);
  const auto e = estimate_bilipschitz(GermMap::spiral(), {0.1, 0.5, 12}, 1000, 2);
  EXPECT_GE(e.k_lower, lo - 1e-9);
  EXPECT_LE(e.k_upper, hi + 1e-9);
  EXPECT_GT(e.k_lower, 0.5 * lo);
  EXPECT_LT(e.k_upper, 2.0 * hi);
  EXPECT_FALSE(e.degenerates());
}

TEST(Lipschitz, ZigzagWithinShearBounds) {
  const auto [lo, hi] = shear_singular_values(std::numbers::sqrt3);
  const auto e = estimate_bilipschitz(GermMap::zigzag(), {0.1, 0.5, 12}, 1000, 3);
  EXPECT_GE(e.k_lower, lo - 1e-9);
  EXPECT_LE(e.k_upper, hi + 1e-9);
  EXPECT_FALSE(e.degenerates());
}

TEST(Lipschitz, PowerMapDegenerates) {
  const auto e = estimate_bilipschitz(GermMap::power(3, 2, 3), {0.1, 0.5, 12}, 1000, 4);
  EXPECT_TRUE(e.degenerates());
  // 3 z^2 at |z| <= 5e-5 is far below any fixed bound.
  EXPECT_LT(e.min_ratio_trend.back().second, 1e-6);
}

TEST(Pushforward, IdentityKeepsCloud) {
  const auto g = sample_germ(catalog::parabola(), {0.1, 0.5, 5}, 50, 1);
  const auto h = pushforward(GermMap::identity(2), g);
  EXPECT_EQ(h.as<Cloud>()->all_points(), g.as<Cloud>()->all_points());
}

TEST(Pushforward, SpiralAnglesOnARay) {
  const auto g = sample_germ(catalog::axis_ray(2, 0), {0.1, 0.5, 8}, 50, 2);
  const auto h = pushforward(GermMap::spiral(), g);
  for (const auto& p : h.as<Cloud>()->all_points()) {
    const double r = p.norm();
    const double diff = std::remainder(std::atan2(p[1], p[0]) + std::log(r), 2.0 * std::numbers::pi);
    EXPECT_NEAR(diff, 0.0, 1e-12);
  }
}

TEST(Pushforward, CommutesWithSubsetting) {
  const ScaleSchedule s{0.1, 0.5, 5};
  const auto g = sample_germ(catalog::cusp_arc(), s, 40, 3);
  auto pts = g.as<Cloud>()->all_points();
  std::vector<Vec> half(pts.begin(), pts.begin() + static_cast<long>(pts.size() / 2));
  const auto sub = SetGerm::cloud_from_points(2, s, half);
  const auto image_all = pushforward(GermMap::zigzag(), g).as<Cloud>()->all_points();
  for (const auto& q : pushforward(GermMap::zigzag(), sub).as<Cloud>()->all_points())
    EXPECT_NE(std::find(image_all.begin(), image_all.end(), q), image_all.end());
}

TEST(Pushforward, EmptyCloudThrows) {
  try {
    pushforward(GermMap::spiral(), SetGerm::cloud(2, {0.1, 0.5, 4}, {}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCloud);
  }
}

TEST(MapJson, RoundTrip) {
  for (const auto& [name, m] : zoo()) {
    const auto j = map_to_json(m);
    EXPECT_EQ(map_to_json(parse_map(j)), j) << name;
  }
  EXPECT_THROW(parse_map(json::parse(R"({"tag":"warp"})")), Error);
}
