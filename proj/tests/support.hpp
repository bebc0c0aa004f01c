#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "nlirf/panel.hpp"

namespace testsupport {

/// Loadings that satisfy the standard restriction pattern with wide margins.
inline Eigen::MatrixXd restricted_loadings() {
  Eigen::MatrixXd l(8, 3);
  l << 1.0, 0.8, 0.3,   //
      1.0, 0.7, 0.35,   //
      0.8, 0.6, 0.4,    //
      0.6, 0.1, 0.4,    //
      0.25, -0.3, -1.0, //
      0.2, -0.35, -1.2, //
      0.2, -0.25, -1.1, //
      -0.8, 0.9, 0.3;
  return l;
}

struct SimulatedSurprises {
  Eigen::MatrixXd data;     // events x 8
  Eigen::MatrixXd factors;  // events x 3
};

inline SimulatedSurprises simulate_surprises(const Eigen::MatrixXd& loadings, int n, double noise, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  SimulatedSurprises s{Eigen::MatrixXd(n, loadings.rows()), Eigen::MatrixXd(n, loadings.cols())};
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < loadings.cols(); ++k) s.factors(i, k) = z(rng);
  s.data = s.factors * loadings.transpose();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < loadings.rows(); ++j) s.data(i, j) += noise * z(rng);
  return s;
}

inline double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd x = a.array() - a.mean();
  Eigen::VectorXd y = b.array() - b.mean();
  return x.dot(y) / std::sqrt(x.squaredNorm() * y.squaredNorm());
}

/// Gaussian noise panel with `ny` outcomes per country and `nz` controls
/// covering the union of the windows.
inline nlirf::PanelDataset random_panel(const std::vector<nlirf::MonthRange>& windows, int ny, int nz, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  nlirf::PanelSchema schema;
  for (int v = 0; v < ny; ++v) schema.outcomes.push_back("y" + std::to_string(v + 1));
  for (int v = 0; v < nz; ++v) schema.controls.push_back("z" + std::to_string(v + 1));
  nlirf::PanelDataset p{schema, {}, {}};
  for (std::size_t c = 0; c < windows.size(); ++c) {
    nlirf::CountryPanel cp{"C" + std::to_string(10 + c), windows[c], Eigen::MatrixXd(windows[c].length(), ny)};
    for (int i = 0; i < cp.values.size(); ++i) cp.values.data()[i] = z(rng);
    p.countries.push_back(cp);
  }
  if (nz > 0) {
    p.controls.window = p.sample();
    p.controls.values.resize(p.controls.window.length(), nz);
    for (int i = 0; i < p.controls.values.size(); ++i) p.controls.values.data()[i] = z(rng);
  }
  return p;
}

/// Three shock series over `w`; each month carries a shock with
/// probability `density`.
inline nlirf::ShockSet random_shocks(nlirf::MonthRange w, unsigned seed, double density = 0.7) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::bernoulli_distribution on(density);
  nlirf::ShockSet s{w, {}};
  for (int k = 0; k < 3; ++k) {
    nlirf::ShockSeries ser{static_cast<nlirf::ShockKind>(k), w, std::vector<double>(static_cast<std::size_t>(w.length()), 0.0),
                           std::vector<nlirf::ShockFlag>(static_cast<std::size_t>(w.length()), nlirf::ShockFlag::filled_zero)};
    s.series.push_back(ser);
  }
  for (int i = 0; i < w.length(); ++i) {
    if (!on(rng)) continue;
    for (auto& ser : s.series) {
      ser.values[static_cast<std::size_t>(i)] = z(rng);
      ser.flags[static_cast<std::size_t>(i)] = nlirf::ShockFlag::conference;
    }
  }
  return s;
}

}  // namespace testsupport
