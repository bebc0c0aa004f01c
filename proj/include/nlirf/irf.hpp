#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "panel.hpp"
#include "transform.hpp"

namespace nlirf {

enum class IrfSpec { linear, sign, size };
enum class IrfFlavor { unconditional, conditional_pos, conditional_neg, scaled };

inline std::string to_string(IrfSpec s) {
  switch (s) {
    case IrfSpec::linear: return "linear";
    case IrfSpec::sign: return "sign";
    case IrfSpec::size: return "size";
  }
  return "?";
}

/// Per-horizon response values, h = 0..H, with provenance.
struct IrfCurve {
  int shock = 0;
  std::string outcome;
  IrfSpec spec = IrfSpec::linear;
  IrfFlavor flavor = IrfFlavor::unconditional;
  double scale = 1.0;  // the multiplier a of a scaled curve
  double delta = 1.0;
  std::vector<double> values;

  std::string flavor_label() const {
    switch (flavor) {
      case IrfFlavor::unconditional: return "unconditional";
      case IrfFlavor::conditional_pos: return "conditional_pos";
      case IrfFlavor::conditional_neg: return "conditional_neg";
      case IrfFlavor::scaled: {
        std::string s = csv::format_double(scale);
        return "scaled(" + s + ")";
      }
    }
    return "?";
  }
};

/// Inclusive empirical quantile: the ceil(n * prob)-th order statistic.
inline double inclusive_quantile(std::vector<double> v, double prob) {
  if (v.empty()) throw DataError("quantile of an empty sample");
  if (!(prob > 0.0 && prob <= 1.0)) throw ConfigError("quantile probability must be in (0, 1]");
  std::sort(v.begin(), v.end());
  auto rank = static_cast<std::size_t>(std::ceil(static_cast<double>(v.size()) * prob - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, v.size());
  return v[rank - 1];
}

/// Threshold b with P(|x| <= b) ~ coverage over conference months.
inline double threshold_from_quantile(const ShockSeries& shocks, double coverage = 0.6) {
  if (!(coverage > 0.0 && coverage < 1.0)) throw ConfigError("coverage must be in (0, 1)");
  auto v = shocks.conference_values();
  if (v.empty()) throw DataError("no conference months to compute the threshold from");
  for (auto& x : v) x = std::abs(x);
  return inclusive_quantile(std::move(v), coverage);
}

struct PlugInEstimate {
  double delta = 0.0;
  double a_hat = 0.0;
};

/// Which months enter the average in estimate_A.
enum class AhatSample { all_months, conference_months };

/// Sample mean of f(x + delta) - f(x).
inline double mean_transform_shift(std::span<const double> x, double delta, const ShockTransform& t) {
  if (x.empty()) throw DataError("shock sample is empty");
  double s = 0.0;
  for (double v : x) s += t(v + delta) - t(v);
  return s / static_cast<double>(x.size());
}

inline PlugInEstimate estimate_A(const ShockSeries& shocks, double delta, const ShockTransform& t,
                                 AhatSample sample = AhatSample::all_months) {
  if (sample == AhatSample::all_months) return {delta, mean_transform_shift(shocks.values, delta, t)};
  return {delta, mean_transform_shift(shocks.conference_values(), delta, t)};
}

/// psi_h * delta + gamma_h * A_hat for every horizon. With gamma = 0 this is
/// the linear response psi_h * delta.
inline IrfCurve unconditional_irf(std::span<const double> psi, std::span<const double> gamma, const PlugInEstimate& est) {
  if (psi.size() != gamma.size()) throw ConfigError("psi and gamma must cover the same horizons");
  IrfCurve c;
  c.delta = est.delta;
  c.values.resize(psi.size());
  for (std::size_t h = 0; h < psi.size(); ++h) c.values[h] = psi[h] * est.delta + gamma[h] * est.a_hat;
  return c;
}

inline IrfCurve linear_irf(std::span<const double> psi, double delta) {
  std::vector<double> zero(psi.size(), 0.0);
  auto c = unconditional_irf(psi, zero, {delta, 0.0});
  c.spec = IrfSpec::linear;
  return c;
}

/// Sign-specification responses conditional on the shock sign:
/// pos = gamma + psi, neg = gamma - psi. `flip_negative` multiplies the
/// negative curve by -1 for side-by-side display.
inline std::pair<IrfCurve, IrfCurve> conditional_irfs(std::span<const double> psi, std::span<const double> gamma,
                                                      IrfSpec spec = IrfSpec::sign, bool flip_negative = false) {
  if (spec != IrfSpec::sign) throw ConfigError("conditional responses are defined for the sign specification only");
  if (psi.size() != gamma.size()) throw ConfigError("psi and gamma must cover the same horizons");
  IrfCurve pos, neg;
  pos.spec = neg.spec = IrfSpec::sign;
  pos.flavor = IrfFlavor::conditional_pos;
  neg.flavor = IrfFlavor::conditional_neg;
  for (std::size_t h = 0; h < psi.size(); ++h) {
    pos.values.push_back(gamma[h] + psi[h]);
    neg.values.push_back(flip_negative ? -(gamma[h] - psi[h]) : gamma[h] - psi[h]);
  }
  return {pos, neg};
}

enum class ScaledFormula {
  as_printed,    // (1/a) (psi a sigma + A_{a sigma} a gamma)
  per_unit_scale  // (1/a) (psi a sigma + A_{a sigma} gamma)
};

/// Scaled responses to shocks of size a * sigma, one curve per a.
inline std::vector<IrfCurve> scaled_irf_family(std::span<const double> psi, std::span<const double> gamma,
                                               std::span<const double> shocks, const ShockTransform& t, double sigma,
                                               std::span<const double> scales = std::vector<double>{0.5, 0.75, 1.0, 1.25, 1.5},
                                               ScaledFormula formula = ScaledFormula::as_printed) {
  if (t.kind != ShockTransform::Kind::threshold_shift)
    throw ConfigError("scaled response family is defined for the size specification only");
  if (psi.size() != gamma.size()) throw ConfigError("psi and gamma must cover the same horizons");
  std::vector<IrfCurve> out;
  for (double a : scales) {
    if (!(a > 0)) throw ConfigError("scale multipliers must be positive");
    const double ahat = mean_transform_shift(shocks, a * sigma, t);
    const double inner = formula == ScaledFormula::as_printed ? a : 1.0;
    IrfCurve c;
    c.spec = IrfSpec::size;
    c.flavor = IrfFlavor::scaled;
    c.scale = a;
    c.delta = a * sigma;
    for (std::size_t h = 0; h < psi.size(); ++h)
      c.values.push_back((1.0 / a) * (psi[h] * a * sigma + ahat * inner * gamma[h]));
    out.push_back(std::move(c));
  }
  return out;
}

struct Ar1Check {
  double coefficient = 0.0;
  double std_error = 0.0;
  double p_value = 1.0;
  bool warn = false;
};

/// AR(1) slope of the shock series without intercept (the series is
/// standardized), HC3 standard error, two-sided normal p-value. Warns when
/// |coef| >= 0.1 or p < 0.05.
inline Ar1Check ar1_check(std::span<const double> x) {
  if (x.size() < 20) throw DataError("AR(1) check needs at least 20 observations");
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t t = 1; t < x.size(); ++t) {
    sxx += x[t - 1] * x[t - 1];
    sxy += x[t - 1] * x[t];
  }
  if (!(sxx > 0)) throw NumericalError("AR(1) check: lagged series is identically zero");
  Ar1Check r;
  r.coefficient = sxy / sxx;
  double meat = 0.0;
  for (std::size_t t = 1; t < x.size(); ++t) {
    const double lev = x[t - 1] * x[t - 1] / sxx;
    const double u = (x[t] - r.coefficient * x[t - 1]) / std::max(1.0 - lev, 1e-12);
    meat += x[t - 1] * x[t - 1] * u * u;
  }
  r.std_error = std::sqrt(meat) / sxx;
  if (r.std_error > 0) {
    r.p_value = std::erfc(std::abs(r.coefficient / r.std_error) / std::sqrt(2.0));
  } else {
    r.p_value = r.coefficient == 0.0 ? 1.0 : 0.0;
  }
  r.warn = std::abs(r.coefficient) >= 0.1 || r.p_value < 0.05;
  return r;
}

}  // namespace nlirf
