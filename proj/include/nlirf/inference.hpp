#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "csv.hpp"
#include "error.hpp"
#include "lp.hpp"

namespace nlirf {

enum class RestrictionKind { gamma_only, plugin_irf, conditional_pos, conditional_neg };

inline std::string to_string(RestrictionKind k) {
  switch (k) {
    case RestrictionKind::gamma_only: return "gamma_only";
    case RestrictionKind::plugin_irf: return "plugin_irf";
    case RestrictionKind::conditional_pos: return "conditional_pos";
    case RestrictionKind::conditional_neg: return "conditional_neg";
  }
  return "?";
}

/// A single linear restriction R over a named coefficient layout.
struct Restriction {
  Eigen::RowVectorXd r;
  RestrictionKind kind = RestrictionKind::gamma_only;
  int shock = 0;
};

/// gamma_only:      1 on gamma_s
/// plugin_irf:      delta on psi_s, A_hat on gamma_s
/// conditional_pos: 1 on psi_s, 1 on gamma_s
/// conditional_neg: -1 on psi_s, 1 on gamma_s
/// A_hat enters as a constant; its sampling error is not propagated.
inline Restriction build_restriction(RestrictionKind kind, int shock, const std::vector<std::string>& layout,
                                     double delta = std::nan(""), double a_hat = std::nan("")) {
  auto find = [&](const std::string& name) {
    for (std::size_t i = 0; i < layout.size(); ++i)
      if (layout[i] == name) return static_cast<Eigen::Index>(i);
    throw ConfigError("coefficient layout has no '" + name + "'");
  };
  Restriction res{Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(layout.size())), kind, shock};
  const auto psi = find(psi_name(shock));
  const auto gamma = find(gamma_name(shock));
  switch (kind) {
    case RestrictionKind::gamma_only:
      res.r(gamma) = 1.0;
      break;
    case RestrictionKind::plugin_irf:
      if (std::isnan(delta) || std::isnan(a_hat)) throw ConfigError("plug-in restriction needs delta and A_hat");
      res.r(psi) = delta;
      res.r(gamma) = a_hat;
      break;
    case RestrictionKind::conditional_pos:
      res.r(psi) = 1.0;
      res.r(gamma) = 1.0;
      break;
    case RestrictionKind::conditional_neg:
      res.r(psi) = -1.0;
      res.r(gamma) = 1.0;
      break;
  }
  if (res.r.isZero(0.0)) throw ConfigError("restriction row is identically zero");
  return res;
}

struct WaldResult {
  double w = 0.0;
  int df = 1;
  double p_value = 1.0;
};

/// Upper tail of the chi-square(1) distribution, erfc(sqrt(w / 2)).
inline double chi2_1_sf(double w) {
  if (std::isnan(w) || w < 0) return std::nan("");
  return std::erfc(std::sqrt(0.5 * w));
}

/// W = (R b)^2 / (R Omega R').
inline WaldResult wald_test(const Eigen::RowVectorXd& r, const Eigen::VectorXd& beta, const Eigen::MatrixXd& omega) {
  if (r.size() != beta.size() || omega.rows() != beta.size() || omega.cols() != beta.size())
    throw ConfigError("wald_test: dimension mismatch");
  const double var = (r * omega * r.transpose())(0, 0);
  if (!(var > 1e-14)) throw NumericalError("wald_test: degenerate restriction variance");
  const double rb = r.dot(beta);
  WaldResult res;
  res.w = rb * rb / var;
  res.p_value = chi2_1_sf(res.w);
  return res;
}

inline WaldResult wald_test(const Restriction& r, const FitResult& fit) { return wald_test(r.r, fit.beta, fit.omega); }

enum class Band { none, weak, strong };

inline std::string to_string(Band b) {
  switch (b) {
    case Band::none: return "none";
    case Band::weak: return "weak";
    case Band::strong: return "strong";
  }
  return "?";
}

/// p > 0.1 none; 0.05 < p <= 0.1 weak; p <= 0.05 strong.
inline Band significance_band(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p-value outside [0, 1]");
  if (p > 0.1) return Band::none;
  if (p > 0.05) return Band::weak;
  return Band::strong;
}

/// Banded Wald results over outcomes x shocks x horizons 0..H.
struct SignificanceTable {
  std::string title;
  std::vector<std::string> outcomes;
  int shocks = 3;
  int max_horizon = 25;
  // index: (outcome * shocks + shock) * (H + 1) + h
  std::vector<WaldResult> results;
  std::vector<Band> bands;

  std::size_t slot(int outcome, int shock, int h) const {
    return static_cast<std::size_t>((outcome * shocks + shock) * (max_horizon + 1) + h);
  }
  Band band(int outcome, int shock, int h) const { return bands[slot(outcome, shock, h)]; }
  const WaldResult& result(int outcome, int shock, int h) const { return results[slot(outcome, shock, h)]; }
};

using WaldGrid = std::map<std::tuple<int, int, int>, WaldResult>;

inline SignificanceTable significance_table(const std::vector<std::string>& outcomes, int shocks, int max_horizon,
                                            const WaldGrid& cells, std::string title = {}) {
  SignificanceTable t{std::move(title), outcomes, shocks, max_horizon, {}, {}};
  for (int o = 0; o < static_cast<int>(outcomes.size()); ++o)
    for (int s = 0; s < shocks; ++s)
      for (int h = 0; h <= max_horizon; ++h) {
        auto it = cells.find({o, s, h});
        if (it == cells.end())
          throw DataError("significance table is missing cell (" + outcomes[static_cast<std::size_t>(o)] + ", " +
                          std::string(shock_name(s)) + ", h=" + std::to_string(h) + ")");
        t.results.push_back(it->second);
        t.bands.push_back(significance_band(it->second.p_value));
      }
  return t;
}

inline std::string emit_significance_csv(const SignificanceTable& t) {
  std::ostringstream out;
  out << "outcome,shock,h,W,p,band\n";
  for (int o = 0; o < static_cast<int>(t.outcomes.size()); ++o)
    for (int s = 0; s < t.shocks; ++s)
      for (int h = 0; h <= t.max_horizon; ++h) {
        const auto& r = t.result(o, s, h);
        out << t.outcomes[static_cast<std::size_t>(o)] << ',' << shock_name(s) << ',' << h << ','
            << csv::format_double(r.w) << ',' << csv::format_double(r.p_value) << ',' << to_string(t.band(o, s, h))
            << '\n';
      }
  return out.str();
}

}  // namespace nlirf
