#include "bilip/core.hpp"
#include "bilip/expr.hpp"
#include "bilip/kdtree.hpp"
#include "bilip/polynomial.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace bilip;

TEST(Substream, SameKeysSameStream) {
  Rng a = substream(7, 1, 2), b = substream(7, 1, 2), c = substream(7, 2, 1);
  const auto x = a(), y = b(), z = c();
  EXPECT_EQ(x, y);
  EXPECT_NE(x, z);
}

TEST(Sampling, BallAndShellRadii) {
  Rng rng = substream(3);
  for (int i = 0; i < 2000; ++i) {
    const Vec b = random_in_ball(3, 0.5, rng);
    EXPECT_LE(b.norm(), 0.5);
    const Vec s = random_in_shell(4, 0.25, 0.5, rng);
    EXPECT_GT(s.norm(), 0.25);
    EXPECT_LE(s.norm(), 0.5);
    EXPECT_NEAR(random_unit(5, rng).norm(), 1.0, 1e-12);
  }
}

TEST(BallVolume, LowDimensions) {
  EXPECT_NEAR(ball_volume(2, 1.0), std::numbers::pi, 1e-12);
  EXPECT_NEAR(ball_volume(3, 2.0), 4.0 / 3.0 * std::numbers::pi * 8.0, 1e-12);
}

TEST(ParallelFor, ResultsIndependentOfWorkers) {
  std::vector<double> one(97), many(97);
  set_max_threads(1);
  parallel_for(one.size(), [&](std::size_t i) {
    Rng r = substream(5, i);
    one[i] = uniform01(r);
  });
  set_max_threads(4);
  parallel_for(many.size(), [&](std::size_t i) {
    Rng r = substream(5, i);
    many[i] = uniform01(r);
  });
  set_max_threads(0);
  EXPECT_EQ(one, many);
}

TEST(KdTree, KnnMatchesBruteForce) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> g;
  std::vector<Vec> pts;
  for (int i = 0; i < 500; ++i) pts.push_back(make_vec({g(gen), g(gen), g(gen)}));
  const KdTree tree(pts);
  for (int q = 0; q < 50; ++q) {
    const Vec x = make_vec({g(gen), g(gen), g(gen)});
    std::vector<double> d;
    for (const auto& p : pts) d.push_back((p - x).norm());
    std::sort(d.begin(), d.end());
    const auto hits = tree.knn(x, 5);
    ASSERT_EQ(hits.size(), 5u);
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(hits[k].dist, d[k], 1e-12);
    EXPECT_NEAR(tree.nearest(x).dist, d[0], 1e-12);
  }
}

TEST(Polynomial, EvalAndGradient) {
  // x^2 y - 3 z^3 + 1
  const Polynomial p(3, {{1.0, {2, 1, 0}}, {-3.0, {0, 0, 3}}, {1.0, {0, 0, 0}}});
  const Vec x = make_vec({0.7, -1.1, 0.4});
  EXPECT_NEAR(p(x), 0.49 * -1.1 - 3.0 * 0.064 + 1.0, 1e-14);
  Vec grad;
  p.eval_grad(x, grad);
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    Vec a = x, b = x;
    a[i] += h;
    b[i] -= h;
    EXPECT_NEAR(grad[i], (p(a) - p(b)) / (2 * h), 1e-7);
  }
  EXPECT_EQ(p.degree(), 3);
}

TEST(Polynomial, MergesRepeatedExponents) {
  const Polynomial p(2, {{1.0, {1, 1}}, {2.0, {1, 1}}});
  ASSERT_EQ(p.terms().size(), 1u);
  EXPECT_DOUBLE_EQ(p.terms()[0].coeff, 3.0);
}

TEST(Expr, ParsesPrefixForms) {
  const Expr e = Expr::parse("(* t (cos (- 0 (log t))))");
  const double t = 0.3;
  EXPECT_NEAR(e(t), t * std::cos(-std::log(t)), 1e-15);
  EXPECT_NEAR(Expr::parse("(pow t 1.5)")(0.25), 0.125, 1e-15);
  EXPECT_NEAR(Expr::parse("(/ (sin t) t)")(1e-3), std::sin(1e-3) / 1e-3, 1e-15);
}

TEST(Expr, RejectsMalformedInput) {
  EXPECT_THROW(Expr::parse("(* t"), Error);
  EXPECT_THROW(Expr::parse("(frob t)"), Error);
  EXPECT_THROW(Expr::parse("(/ t)"), Error);
}
