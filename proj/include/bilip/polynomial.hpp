#pragma once

#include "bilip/core.hpp"

#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace bilip {

struct Monomial {
  double coeff = 0.0;
  std::vector<int> exps;
};

/// Real polynomial in ambient_dim variables. Terms with equal exponent
/// tuples are merged on construction; zero coefficients are dropped.
class Polynomial {
 public:
  Polynomial() = default;

  Polynomial(int ambient_dim, const std::vector<Monomial>& terms) : dim_(ambient_dim) {
    require(ambient_dim > 0 && ambient_dim <= kMaxDim, "polynomial dimension out of range");
    std::map<std::vector<int>, double> merged;
    for (const auto& t : terms) {
      require(static_cast<int>(t.exps.size()) == ambient_dim, "monomial exponent length mismatch");
      for (int e : t.exps) require(e >= 0, "negative exponent");
      merged[t.exps] += t.coeff;
    }
    for (auto& [exps, c] : merged) {
      if (c == 0.0) continue;
      terms_.push_back({c, exps});
      for (int i = 0; i < dim_; ++i) max_exp_ = std::max(max_exp_, exps[i]);
    }
    require(max_exp_ < kMaxPow, "polynomial exponent too large");
  }

  int ambient_dim() const { return dim_; }
  const std::vector<Monomial>& terms() const { return terms_; }
  int degree() const {
    int d = 0;
    for (const auto& t : terms_) {
      int s = 0;
      for (int e : t.exps) s += e;
      d = std::max(d, s);
    }
    return d;
  }

  double operator()(const Vec& x) const {
    double powers[kMaxDim][kMaxPow];
    fill_powers(x, powers);
    double sum = 0.0;
    for (const auto& t : terms_) {
      double v = t.coeff;
      for (int i = 0; i < dim_; ++i) v *= powers[i][t.exps[i]];
      sum += v;
    }
    return sum;
  }

  /// Value and gradient in one pass.
  double eval_grad(const Vec& x, Vec& grad) const {
    double powers[kMaxDim][kMaxPow];
    fill_powers(x, powers);
    grad = Vec::Zero(dim_);
    double sum = 0.0;
    for (const auto& t : terms_) {
      double v = t.coeff;
      for (int i = 0; i < dim_; ++i) v *= powers[i][t.exps[i]];
      sum += v;
      for (int j = 0; j < dim_; ++j) {
        const int e = t.exps[j];
        if (e == 0) continue;
        double g = t.coeff * e;
        for (int i = 0; i < dim_; ++i) g *= powers[i][i == j ? e - 1 : t.exps[i]];
        grad[j] += g;
      }
    }
    return sum;
  }

  /// Sum of absolute term values; the natural scale for rounding error in eval.
  double magnitude(const Vec& x) const {
    double powers[kMaxDim][kMaxPow];
    fill_powers(x, powers);
    double sum = 0.0;
    for (const auto& t : terms_) {
      double v = std::abs(t.coeff);
      for (int i = 0; i < dim_; ++i) v *= std::abs(powers[i][t.exps[i]]);
      sum += v;
    }
    return sum;
  }

  /// Upper bound on |grad f| over the ball of radius r around x.
  double gradient_bound(const Vec& x, double r) const {
    double bound = 0.0;
    for (const auto& t : terms_) {
      for (int j = 0; j < dim_; ++j) {
        const int e = t.exps[j];
        if (e == 0) continue;
        double g = std::abs(t.coeff) * e;
        for (int i = 0; i < dim_; ++i) g *= std::pow(std::abs(x[i]) + r, i == j ? e - 1 : t.exps[i]);
        bound += g;
      }
    }
    return bound;
  }

  std::string to_string() const {
    static const char* names[] = {"x", "y", "z", "w", "u", "v", "s", "r"};
    std::ostringstream os;
    bool first = true;
    for (const auto& t : terms_) {
      os << (first ? "" : " + ") << t.coeff;
      for (int i = 0; i < dim_; ++i)
        if (t.exps[i] > 0) os << "*" << names[i] << (t.exps[i] > 1 ? "^" + std::to_string(t.exps[i]) : "");
      first = false;
    }
    return first ? "0" : os.str();
  }

 private:
  static constexpr int kMaxPow = 64;

  void fill_powers(const Vec& x, double (&powers)[kMaxDim][kMaxPow]) const {
    for (int i = 0; i < dim_; ++i) {
      powers[i][0] = 1.0;
      for (int e = 1; e <= max_exp_; ++e) powers[i][e] = powers[i][e - 1] * x[i];
    }
  }

  int dim_ = 0;
  int max_exp_ = 0;
  std::vector<Monomial> terms_;
};

}  // namespace bilip
