#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace bilip {

// Ambient spaces are small; points live on the stack.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

enum class ErrorCode {
  InvalidArgument,
  ParseError,
  NoPointsFound,
  Unsupported,
  EmptyBase,
  EmptyCloud,
  EmptyInput,
  InsufficientScales,
  EmptyDirectionSet,
  NotBiLipschitz,
  DivisionUnstable,
  UnknownExperiment,
  IoFailure,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NoPointsFound: return "NoPointsFound";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::EmptyBase: return "EmptyBase";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InsufficientScales: return "InsufficientScales";
    case ErrorCode::EmptyDirectionSet: return "EmptyDirectionSet";
    case ErrorCode::NotBiLipschitz: return "NotBiLipschitz";
    case ErrorCode::DivisionUnstable: return "DivisionUnstable";
    case ErrorCode::UnknownExperiment: return "UnknownExperiment";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorCode::InvalidArgument, what);
}

inline Vec zeros(int n) { return Vec::Zero(n); }

inline Vec make_vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

inline Vec from_std(const std::vector<double>& xs) {
  require(!xs.empty() && xs.size() <= kMaxDim, "vector dimension out of range");
  Vec v(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) v[static_cast<Eigen::Index>(i)] = xs[i];
  return v;
}

/// Angle between two unit vectors, stable near 0 and pi.
inline double angle_between(const Vec& u, const Vec& v) {
  const double chord = (u - v).norm();
  return 2.0 * std::asin(std::min(1.0, chord / 2.0));
}

inline double chord_for_angle(double angle) {
  return 2.0 * std::sin(std::min(angle, std::numbers::pi) / 2.0);
}

inline double angle_for_chord(double chord) { return 2.0 * std::asin(std::min(1.0, chord / 2.0)); }

/// Volume of the n-ball of the given radius.
inline double ball_volume(int n, double radius) {
  return std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0) * std::pow(radius, n);
}

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

/// Independent generator keyed by (seed, a, b). Results never depend on which
/// worker consumes the stream.
inline Rng substream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (a + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ (b + 0x85157af5ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(a),
                    static_cast<std::uint32_t>(b)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) {
  // 53 random bits; never returns 1.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double gaussian(Rng& rng) {
  // Box-Muller on our own uniforms so streams are identical across standard libraries.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline Vec random_unit(int n, Rng& rng) {
  Vec v(n);
  double norm = 0.0;
  do {
    for (int i = 0; i < n; ++i) v[i] = gaussian(rng);
    norm = v.norm();
  } while (norm < 1e-12);
  return v / norm;
}

/// Uniform point in the shell inner < |x| <= outer.
inline Vec random_in_shell(int n, double inner, double outer, Rng& rng) {
  const double a = std::pow(inner, n), b = std::pow(outer, n);
  const double r = std::pow(a + (b - a) * (1.0 - uniform01(rng)), 1.0 / n);
  return random_unit(n, rng) * std::clamp(r, std::nextafter(inner, outer), outer);
}

inline Vec random_in_ball(int n, double radius, Rng& rng) {
  return random_unit(n, rng) * (radius * std::pow(uniform01(rng), 1.0 / n));
}

// ---------------------------------------------------------------------------
// Parallelism
// ---------------------------------------------------------------------------

inline std::atomic<int>& thread_cap() {
  static std::atomic<int> cap{0};
  return cap;
}

/// Caps worker threads; 0 means hardware concurrency.
inline void set_max_threads(int n) { thread_cap().store(std::max(0, n)); }

inline int max_threads() {
  const int cap = thread_cap().load();
  const int hw = std::max(1u, std::thread::hardware_concurrency());
  return cap > 0 ? std::min(cap, hw) : hw;
}

/// Runs body(i) for i in [0, count). Each index is processed exactly once;
/// callers write into index-addressed slots so output never depends on the
/// number of workers.
template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
  const int workers = static_cast<int>(std::min<std::size_t>(count, max_threads()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto run = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      if (failed.load()) return;
      try {
        body(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace bilip
