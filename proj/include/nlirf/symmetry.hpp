#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "irf.hpp"
#include "random.hpp"

namespace nlirf {

struct SampleStats {
  double mean = 0.0;
  double sd = 0.0;
  double skewness = 0.0;
  double q80 = 0.0;
  std::size_t n = 0;
};

namespace detail {

/// Sum taken over sorted values paired from both ends, so that a sample of
/// the form x U -x sums to exactly zero.
inline double symmetric_sum(std::vector<double>& sorted_scratch) {
  std::sort(sorted_scratch.begin(), sorted_scratch.end());
  const std::size_t n = sorted_scratch.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n / 2; ++i) s += sorted_scratch[i] + sorted_scratch[n - 1 - i];
  if (n % 2 == 1) s += sorted_scratch[n / 2];
  return s;
}

/// Median with the midpoint convention for even n; `v` must be sorted.
inline double sorted_median(const std::vector<double>& v) {
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Mean, sd (n - 1), skewness m3 / m2^1.5 (central moments over n) and the
/// inclusive 80th percentile.
inline SampleStats sample_stats(std::span<const double> x) {
  if (x.size() < 3) throw DataError("summary statistics need at least 3 observations");
  std::vector<double> v(x.begin(), x.end());
  const double n = static_cast<double>(v.size());
  SampleStats s;
  s.n = v.size();
  s.mean = detail::symmetric_sum(v) / n;
  double m2 = 0.0, m3 = 0.0;
  for (double e : v) {
    const double d = e - s.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  s.sd = std::sqrt(m2 / (n - 1.0));
  m2 /= n;
  m3 /= n;
  s.skewness = m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0;
  s.q80 = inclusive_quantile(v, 0.8);
  return s;
}

/// Location/scale summaries the three symmetry statistics are built from.
struct SymmetryMoments {
  double mean = 0.0;
  double median = 0.0;
  double sd = 0.0;
  double mean_abs_dev_median = 0.0;  // (1/n) sum |x - median|
  std::size_t n = 0;

  double cm() const { return std::sqrt(static_cast<double>(n)) * (mean - median) / sd; }
  double mgg() const {
    const double j = std::sqrt(std::numbers::pi / 2.0) * mean_abs_dev_median;
    return std::sqrt(static_cast<double>(n)) * (mean - median) / j;
  }
  double mira_gamma() const { return 2.0 * (mean - median); }
};

inline SymmetryMoments symmetry_moments(std::vector<double> v) {
  SymmetryMoments m;
  m.n = v.size();
  const double n = static_cast<double>(v.size());
  m.mean = detail::symmetric_sum(v) / n;  // leaves v sorted
  m.median = detail::sorted_median(v);
  double ss = 0.0;
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    ss += (v[i] - m.mean) * (v[i] - m.mean);
    dev[i] = std::abs(v[i] - m.median);
  }
  m.sd = std::sqrt(ss / (n - 1.0));
  m.mean_abs_dev_median = detail::symmetric_sum(dev) / n;
  return m;
}

struct SymmetryTestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

struct SymmetryTests {
  SymmetryTestResult cm;    // Cabilio-Masaro
  SymmetryTestResult mgg;   // Miao-Gel-Gastwirth (M1)
  SymmetryTestResult mira;  // Mira (M2)
  int replicates = 0;
  std::uint64_t seed = 0;
};

struct SymmetryOptions {
  int replicates = 4999;
  std::uint64_t seed = 19960101;
};

namespace detail {

/// Cheap counter-based generator: output k of key s is splitmix64(s + k).
class CounterRng {
 public:
  using result_type = std::uint64_t;
  explicit CounterRng(std::uint64_t key) : key_(key) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * counter_++); }
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace detail

/// The three mean-minus-median symmetry tests with p-values from a
/// symmetrization bootstrap: resample n values from {x_i - m} U {-(x_i - m)}
/// (m the sample median), recompute each statistic, and report the share of
/// replicates at least as extreme in absolute value (two-sided). The Mira
/// statistic 2 (mean - median) is studentized by the variance of its
/// bootstrap replicates.
inline SymmetryTests symmetry_tests(std::span<const double> x, const SymmetryOptions& opt = {}) {
  if (x.size() < 20) throw DataError("symmetry tests need at least 20 observations");
  if (opt.replicates < 1) throw ConfigError("bootstrap replicate count must be positive");
  const auto obs = symmetry_moments(std::vector<double>(x.begin(), x.end()));
  if (!(obs.sd > 0)) throw NumericalError("symmetry tests: sample has zero standard deviation");

  const std::size_t n = x.size();
  std::vector<double> pool(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    pool[i] = x[i] - obs.median;
    pool[n + i] = -(x[i] - obs.median);
  }

  const auto b = static_cast<std::size_t>(opt.replicates);
  std::vector<double> cm(b), mgg(b), gam(b);
  const std::uint64_t key = splitmix64(opt.seed);
  parallel_for(b, [&](std::size_t rep) {
    detail::CounterRng rng(splitmix64(key ^ (rep + 1)));
    std::vector<double> draw(n);
    for (auto& d : draw) d = pool[rng.index(2 * n)];
    const auto m = symmetry_moments(std::move(draw));
    if (m.sd > 0) {
      cm[rep] = m.cm();
      mgg[rep] = m.mean_abs_dev_median > 0 ? m.mgg() : 0.0;
    }
    gam[rep] = m.mira_gamma();
  });

  auto tail = [&](const std::vector<double>& reps, double stat) {
    std::size_t count = 0;
    for (double r : reps)
      if (std::abs(r) >= std::abs(stat)) ++count;
    return (1.0 + static_cast<double>(count)) / (static_cast<double>(b) + 1.0);
  };

  SymmetryTests t;
  t.replicates = opt.replicates;
  t.seed = opt.seed;
  t.cm = {obs.cm(), tail(cm, obs.cm())};
  if (!(obs.mean_abs_dev_median > 0)) throw NumericalError("symmetry tests: zero mean absolute deviation");
  t.mgg = {obs.mgg(), tail(mgg, obs.mgg())};

  double mean_g = 0.0;
  for (double g : gam) mean_g += g;
  mean_g /= static_cast<double>(b);
  double var_g = 0.0;
  for (double g : gam) var_g += (g - mean_g) * (g - mean_g);
  var_g /= static_cast<double>(b > 1 ? b - 1 : 1);
  const double gamma = obs.mira_gamma();
  t.mira = {var_g > 0 ? gamma / std::sqrt(var_g) : 0.0, tail(gam, gamma)};
  return t;
}

inline SymmetryTestResult cm_test(std::span<const double> x, const SymmetryOptions& opt = {}) {
  return symmetry_tests(x, opt).cm;
}
inline SymmetryTestResult mgg_test(std::span<const double> x, const SymmetryOptions& opt = {}) {
  return symmetry_tests(x, opt).mgg;
}
inline SymmetryTestResult mira_test(std::span<const double> x, const SymmetryOptions& opt = {}) {
  return symmetry_tests(x, opt).mira;
}

struct SymmetryReport {
  std::vector<std::string> shocks;
  std::vector<SampleStats> stats;
  std::vector<SymmetryTests> tests;
};

}  // namespace nlirf
