#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "nlirf/lp.hpp"
#include "support.hpp"

using namespace nlirf;
using testsupport::random_panel;
using testsupport::random_shocks;

namespace {

const MonthRange kShockWindow = MonthRange::parse("1999-01:2012-12");

LpSpec linear(int outcome, int h, LagOrder l, TrendSpec t = {}) {
  return {outcome, h, l, t, ShockTransform::identity(), {}, 0};
}

Eigen::MatrixXd random_matrix(int n, int k, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(n, k);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = z(rng);
  return m;
}

/// Dense sandwich with HC3 residuals built from explicit per-cluster sums.
Eigen::MatrixXd sandwich_oracle(const Eigen::MatrixXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& lev,
                                const std::vector<int>& cl) {
  const Eigen::MatrixXd bread = (x.transpose() * x).inverse();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  std::vector<int> ids = cl;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (int id : ids) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (cl[static_cast<std::size_t>(i)] == id) s += x.row(i).transpose() * (u(i) / (1.0 - lev(i)));
    meat += s * s.transpose();
  }
  return bread * meat * bread;
}

}  // namespace

TEST(BuildDesign, InterceptPlusContemporaneousShocks) {
  auto panel = random_panel({MonthRange::parse("2000-01:2005-12")}, 2, 1, 1);
  auto d = build_design(panel, random_shocks(kShockWindow, 2), linear(0, 0, {0, 0, 0}));
  EXPECT_EQ(d.x.cols(), 4);
  EXPECT_EQ(d.columns.front(), "psi_monetary");
  EXPECT_EQ(d.columns.back(), "alpha_C10");
}

TEST(BuildDesign, ShockBlockWidthWithTransform) {
  std::vector<MonthRange> w(5, MonthRange::parse("2000-01:2005-12"));
  auto panel = random_panel(w, 2, 1, 3);
  LpSpec spec{0, 0, {2, 2, 2}, {}, ShockTransform::abs_value(), {}, 0};
  auto d = build_design(panel, random_shocks(kShockWindow, 4), spec);
  int shock_cols = 0;
  for (const auto& c : d.columns) shock_cols += c.rfind("psi_", 0) == 0 || c.rfind("gamma_", 0) == 0;
  EXPECT_EQ(shock_cols, 18);
  EXPECT_EQ(d.columns[3], "gamma_monetary");
  EXPECT_EQ(d.x.cols(), 18 + 2 * 2 + 2 * 1 + 5);
}

TEST(BuildDesign, RowCountMatchesEnumeration) {
  std::vector<MonthRange> w = {MonthRange::parse("2000-01:2004-06"), MonthRange::parse("2001-03:2006-12"),
                               MonthRange::parse("2002-07:2003-12")};
  auto panel = random_panel(w, 3, 2, 5);
  auto shocks = random_shocks(kShockWindow, 6);
  for (int h : {0, 3, 11})
    for (LagOrder l : {LagOrder{2, 2, 2}, LagOrder{4, 1, 3}, LagOrder{0, 6, 1}}) {
      auto d = build_design(panel, shocks, linear(1, h, l, {true, true}), false);
      // Shocks and controls start before every country window, so only
      // the own-outcome lags and the control lags can bind.
      int expect = 0;
      for (const auto& mw : w) {
        const int ctl_gap = mw.first - panel.controls.window.first;
        const int maxlag = std::max(l.q, std::max(0, l.r - ctl_gap));
        expect += std::max(0, mw.length() - h - maxlag);
      }
      EXPECT_EQ(d.x.rows(), expect) << "h=" << h;
      // Brute force over every (country, month) and every regressor.
      int brute = 0;
      for (const auto& c : panel.countries)
        for (int i = 0; i < c.window.length(); ++i) {
          auto t = c.window.at(i);
          bool ok = c.covers(t + h) && c.covers(t - l.q) && shocks.covers(t - l.p);
          for (int j = 1; j <= l.r; ++j) ok = ok && panel.controls.covers(t - j);
          brute += ok;
        }
      EXPECT_EQ(d.x.rows(), brute);
    }
}

TEST(BuildDesign, RowContents) {
  auto panel = random_panel({MonthRange::parse("2000-01:2003-12")}, 2, 1, 7);
  auto shocks = random_shocks(kShockWindow, 8);
  LpSpec spec{1, 2, {1, 2, 1}, {true, true}, ShockTransform::threshold_shift(0.5), {}, 0};
  auto d = build_design(panel, shocks, spec);
  const auto& row = d.rows[5];
  const auto t = row.month;
  const auto& c = panel.countries[0];
  auto x = [&](const std::string& name) { return d.x(5, d.column(name)); };
  EXPECT_EQ(d.y(5), c.at(t + 2, 1));
  EXPECT_EQ(x("psi_information"), shocks.at(1, t));
  EXPECT_EQ(x("gamma_spread_L1"), spec.transform(shocks.at(2, t - 1)));
  EXPECT_EQ(x("y_y1_L2"), c.at(t - 2, 0));
  EXPECT_EQ(x("z_z1_L1"), panel.controls.at(t - 1, 0));
  EXPECT_EQ(x("trend"), static_cast<double>(t - panel.sample().first));
  EXPECT_EQ(x("trend2"), std::pow(static_cast<double>(t - panel.sample().first), 2));
  EXPECT_EQ(x("alpha_C10"), 1.0);
}

TEST(BuildDesign, PerShockThresholds) {
  auto panel = random_panel({MonthRange::parse("2000-01:2003-12")}, 1, 0, 7);
  auto shocks = random_shocks(kShockWindow, 8);
  LpSpec spec{0, 0, {0, 1, 0}, {}, ShockTransform::threshold_shift(0.0), {0.1, 0.5, 2.0}, 0};
  auto d = build_design(panel, shocks, spec);
  for (Eigen::Index i = 0; i < d.x.rows(); ++i)
    for (int s = 0; s < 3; ++s) {
      const double b = spec.thresholds[static_cast<std::size_t>(s)];
      EXPECT_EQ(d.x(i, d.column(gamma_name(s))), ShockTransform::threshold_shift(b)(d.x(i, s)));
    }
}

TEST(BuildDesign, Errors) {
  auto panel = random_panel({MonthRange::parse("2000-01:2001-12")}, 2, 1, 9);
  auto shocks = random_shocks(kShockWindow, 10);
  EXPECT_THROW(build_design(panel, shocks, linear(0, 30, {2, 2, 2})), DataError);
  EXPECT_THROW(build_design(panel, shocks, linear(5, 0, {2, 2, 2})), ConfigError);
  EXPECT_THROW(build_design(panel, shocks, linear(0, 0, {-1, 2, 2})), ConfigError);
  shocks.series[1].values = shocks.series[0].values;
  try {
    build_design(panel, shocks, linear(0, 0, {0, 1, 1}));
    FAIL();
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    EXPECT_TRUE(msg.find("psi_monetary") != std::string::npos || msg.find("psi_information") != std::string::npos) << msg;
  }
  // All-zero transform columns are rejected by the rank check.
  auto clean = random_shocks(kShockWindow, 10);
  LpSpec dead{0, 0, {0, 1, 0}, {}, ShockTransform::threshold_shift(100.0), {}, 0};
  EXPECT_THROW(build_design(panel, clean, dead), NumericalError);
}

TEST(BuildDesign, MonthClusters) {
  std::vector<MonthRange> w(2, MonthRange::parse("2000-01:2001-12"));
  auto d = build_design(random_panel(w, 1, 0, 1), random_shocks(kShockWindow, 2), linear(0, 0, {1, 1, 0}));
  auto by_month = d.clusters(ClusterBy::month);
  auto by_country = d.clusters(ClusterBy::country);
  EXPECT_EQ(std::set<int>(by_month.begin(), by_month.end()).size(), 23u);
  EXPECT_EQ(std::set<int>(by_country.begin(), by_country.end()).size(), 2u);
}

TEST(Ols, ExactFitAndInterceptOnly) {
  auto x = random_matrix(30, 3, 11);
  Eigen::Vector3d b(1.0, -2.0, 0.5);
  auto f = ols_fit(x, x * b);
  EXPECT_LT(f.residuals.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((f.beta - b).cwiseAbs().maxCoeff(), 1e-12);

  Eigen::VectorXd y = random_matrix(25, 1, 12).col(0);
  auto g = ols_fit(Eigen::MatrixXd::Ones(25, 1), y);
  EXPECT_NEAR(g.beta(0), y.mean(), 1e-14);
  EXPECT_NEAR(g.leverages(0), 1.0 / 25, 1e-14);
}

TEST(Ols, MatchesNormalEquations) {
  auto x = random_matrix(50, 4, 13);
  Eigen::VectorXd y = random_matrix(50, 1, 14).col(0);
  auto f = ols_fit(x, y);
  Eigen::VectorXd b = (x.transpose() * x).ldlt().solve(x.transpose() * y);
  EXPECT_LT((f.beta - b).cwiseAbs().maxCoeff(), 1e-8);
  Eigen::MatrixXd hat = x * (x.transpose() * x).inverse() * x.transpose();
  EXPECT_LT((f.leverages - hat.diagonal()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(f.leverages.sum(), 4.0, 1e-10);
  EXPECT_LT((x.transpose() * f.residuals).cwiseAbs().maxCoeff() / 50, 1e-8);
}

TEST(Ols, RankDeficientRejected) {
  auto x = random_matrix(20, 3, 15);
  x.col(2) = 2.0 * x.col(0) - x.col(1);
  EXPECT_THROW(ols_fit(x, x.col(0)), NumericalError);
  EXPECT_THROW(ols_fit(random_matrix(2, 3, 1), Eigen::VectorXd::Zero(2)), NumericalError);
}

TEST(Hc3, OwnClustersZeroLeverageIsHc0) {
  auto x = random_matrix(40, 3, 16);
  Eigen::VectorXd u = random_matrix(40, 1, 17).col(0);
  std::vector<int> cl(40);
  for (int i = 0; i < 40; ++i) cl[static_cast<std::size_t>(i)] = i;
  auto omega = hc3_cluster_cov(x, u, Eigen::VectorXd::Zero(40), cl);
  const Eigen::MatrixXd bread = (x.transpose() * x).inverse();
  Eigen::MatrixXd hc0 = bread * x.transpose() * u.cwiseAbs2().asDiagonal() * x * bread;
  EXPECT_LT((omega - hc0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Hc3, SingleClusterAndMixedClustersMatchDenseOracle) {
  auto x = random_matrix(60, 4, 18);
  Eigen::VectorXd y = random_matrix(60, 1, 19).col(0);
  auto f = ols_fit(x, y);
  std::vector<int> one(60, 7), mixed(60);
  for (int i = 0; i < 60; ++i) mixed[static_cast<std::size_t>(i)] = (i * 7) % 5;
  for (const auto& cl : {one, mixed}) {
    auto omega = hc3_cluster_cov(x, f.residuals, f.leverages, cl);
    auto oracle = sandwich_oracle(x, f.residuals, f.leverages, cl);
    EXPECT_LT((omega - oracle).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + oracle.cwiseAbs().maxCoeff()));
    EXPECT_EQ(omega, omega.transpose());
    EXPECT_TRUE((omega.diagonal().array() >= 0).all());
  }
}

TEST(Hc3, DuplicatedDataset) {
  auto x = random_matrix(10, 2, 20);
  Eigen::VectorXd y = random_matrix(10, 1, 21).col(0);
  std::vector<int> cl = {0, 0, 1, 1, 1, 2, 2, 3, 3, 3};
  auto f = ols_fit(x, y);
  Eigen::MatrixXd x2(20, 2);
  Eigen::VectorXd y2(20);
  x2 << x, x;
  y2 << y, y;
  std::vector<int> cl2 = cl;
  cl2.insert(cl2.end(), cl.begin(), cl.end());
  auto f2 = ols_fit(x2, y2);
  EXPECT_LT((f2.beta - f.beta).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((f2.leverages.head(10) - f.leverages / 2).cwiseAbs().maxCoeff(), 1e-12);
  // Bread halves, cluster scores double: the sandwich equals the original
  // one evaluated with the halved leverages.
  auto omega2 = hc3_cluster_cov(x2, f2.residuals, f2.leverages, cl2);
  auto oracle = sandwich_oracle(x, f.residuals, f.leverages / 2, cl);
  EXPECT_LT((omega2 - oracle).cwiseAbs().maxCoeff(), 1e-12);
  // With zero leverages the factor is exactly one.
  auto a = hc3_cluster_cov(x, f.residuals, Eigen::VectorXd::Zero(10), cl);
  auto b = hc3_cluster_cov(x2, f2.residuals, Eigen::VectorXd::Zero(20), cl2);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Hc3, UnitLeverageRejected) {
  auto x = random_matrix(5, 2, 22);
  Eigen::VectorXd lev = Eigen::VectorXd::Constant(5, 0.2);
  lev(3) = 1.0;
  EXPECT_THROW(hc3_cluster_cov(x, Eigen::VectorXd::Ones(5), lev, {0, 1, 2, 3, 4}), NumericalError);
  EXPECT_THROW(hc3_cluster_cov(x, Eigen::VectorXd::Ones(4), lev, {0, 1, 2, 3, 4}), ConfigError);
}

TEST(FitLp, SingleCountryMatchesFromScratchOracle) {
  const MonthRange w = MonthRange::parse("2000-01:2009-12");
  auto panel = random_panel({w}, 2, 1, 23);
  auto shocks = random_shocks(kShockWindow, 24);
  const int h = 3;
  LpSpec spec{0, h, {2, 1, 1}, {true, false}, ShockTransform::abs_value(), {}, 0};
  auto fit = fit_lp(panel, shocks, spec);

  const auto& c = panel.countries[0];
  std::vector<std::vector<double>> rows;
  std::vector<double> ys;
  for (int i = 1; i + h < w.length(); ++i) {
    auto t = w.at(i);
    std::vector<double> r;
    for (int lag = 0; lag <= 2; ++lag)
      for (int s = 0; s < 3; ++s) r.push_back(shocks.at(s, t - lag));
    for (int lag = 0; lag <= 2; ++lag)
      for (int s = 0; s < 3; ++s) r.push_back(std::abs(shocks.at(s, t - lag)));
    r.push_back(c.at(t - 1, 0));
    r.push_back(c.at(t - 1, 1));
    r.push_back(panel.controls.at(t - 1, 0));
    r.push_back(static_cast<double>(i));
    r.push_back(1.0);
    rows.push_back(r);
    ys.push_back(c.at(t + h, 0));
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  Eigen::VectorXd y(static_cast<Eigen::Index>(ys.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    y(static_cast<Eigen::Index>(i)) = ys[i];
  }
  Eigen::VectorXd b = (x.transpose() * x).ldlt().solve(x.transpose() * y);
  ASSERT_EQ(fit.beta.size(), b.size());
  // Reorder the oracle into the design's layout (psi/gamma lag blocks).
  std::vector<std::string> names;
  for (int s = 0; s < 3; ++s) names.push_back(psi_name(s));
  for (int lag = 1; lag <= 2; ++lag)
    for (int s = 0; s < 3; ++s) names.push_back(psi_name(s, lag));
  for (int s = 0; s < 3; ++s) names.push_back(gamma_name(s));
  for (int lag = 1; lag <= 2; ++lag)
    for (int s = 0; s < 3; ++s) names.push_back(gamma_name(s, lag));
  names.insert(names.end(), {"y_y1_L1", "y_y2_L1", "z_z1_L1", "trend", "alpha_C10"});
  for (std::size_t j = 0; j < names.size(); ++j)
    EXPECT_NEAR(fit.coef(names[j]), b(static_cast<Eigen::Index>(j)), 1e-10 * (1.0 + std::abs(b(static_cast<Eigen::Index>(j)))))
        << names[j];
  EXPECT_EQ(fit.n_obs, static_cast<int>(rows.size()));
}

TEST(FitLp, ResidualOrthogonalityAndOmegaShape) {
  std::vector<MonthRange> w = {MonthRange::parse("2000-01:2008-12"), MonthRange::parse("2002-01:2010-12"),
                               MonthRange::parse("2001-06:2007-06")};
  auto panel = random_panel(w, 3, 2, 25);
  auto shocks = random_shocks(kShockWindow, 26);
  for (auto cl : {ClusterBy::country, ClusterBy::month}) {
    LpSpec spec{2, 4, {2, 2, 2}, {true, true}, ShockTransform::abs_value(), {}, 0};
    auto d = build_design(panel, shocks, spec);
    auto fit = fit_design(d, cl);
    EXPECT_LT((d.x.transpose() * fit.residuals).cwiseAbs().maxCoeff() / fit.n_obs, 1e-8);
    EXPECT_EQ(fit.omega, fit.omega.transpose());
    EXPECT_TRUE((fit.omega.diagonal().array() >= 0).all());
    EXPECT_TRUE((fit.leverages.array() >= 0).all() && (fit.leverages.array() < 1).all());
    EXPECT_EQ(fit.n_params, d.x.cols());
    EXPECT_EQ(fit.columns[3], "gamma_monetary");
  }
}

TEST(Selection, PenaltyArithmetic) {
  EXPECT_EQ(penalty_count({2, 2, 2}, {}, 40, PenaltyMode::paper), 11);
  EXPECT_EQ(penalty_count({2, 2, 2}, {false, true}, 40, PenaltyMode::paper), 11);
  EXPECT_EQ(penalty_count({3, 4, 5}, {true, true}, 40, PenaltyMode::paper), 19);
  EXPECT_EQ(penalty_count({3, 4, 5}, {true, true}, 40, PenaltyMode::coefficients), 40);
  const int n = 800;
  const double ssr = 123.0;
  EXPECT_NEAR(information_criterion(ssr, n, 11, Criterion::bic) - n * std::log(ssr / n), std::log(800.0) * 11, 1e-9);
  EXPECT_NEAR(information_criterion(ssr, n, 11, Criterion::aic) - n * std::log(ssr / n), 22.0, 1e-9);
  EXPECT_EQ(detail::selection_grid({2, 3, 4, 5, 6}).size(), 500u);
}

TEST(Selection, MatchesBruteForceFits) {
  std::vector<MonthRange> w = {MonthRange::parse("2000-01:2007-12"), MonthRange::parse("2001-01:2008-12")};
  auto panel = random_panel(w, 2, 1, 27);
  auto shocks = random_shocks(kShockWindow, 28);
  const std::vector<int> grid = {2, 3, 4};
  for (auto crit : {Criterion::aic, Criterion::bic})
    for (auto pen : {PenaltyMode::paper, PenaltyMode::coefficients}) {
      auto got = select_specification(panel, shocks, 1, 2, {crit, pen, grid});
      double best = std::numeric_limits<double>::infinity();
      LagOrder best_l;
      TrendSpec best_t;
      for (int p : grid)
        for (int q : grid)
          for (int r : grid)
            for (int i1 = 0; i1 <= 1; ++i1)
              for (int i2 = 0; i2 <= 1; ++i2) {
                LpSpec spec{1, 2, {p, q, r}, {i1 == 1, i2 == 1}, ShockTransform::identity(), {}, 4};
                auto fit = fit_design(build_design(panel, shocks, spec));
                const double v = information_criterion(fit.ssr(), fit.n_obs,
                                                       penalty_count(spec.lags, spec.trend, fit.n_params, pen), crit);
                EXPECT_EQ(fit.n_obs, got.n_obs);
                if (v < best - 1e-9) {
                  best = v;
                  best_l = spec.lags;
                  best_t = spec.trend;
                }
              }
      EXPECT_NEAR(got.value, best, 1e-7 * std::abs(best));
      EXPECT_EQ(got.lags, best_l);
      EXPECT_EQ(got.trend.label(), best_t.label());
    }
}

TEST(Selection, BicNeverLargerThanAicAndOrderInvariant) {
  std::vector<MonthRange> w(3, MonthRange::parse("2000-01:2009-12"));
  auto panel = random_panel(w, 3, 2, 29);
  auto shocks = random_shocks(kShockWindow, 30);
  auto aic = aic_select(panel, shocks, 0, 1);
  auto bic = bic_select(panel, shocks, 0, 1);
  ASSERT_GT(std::log(static_cast<double>(aic.n_obs)), 2.0);
  EXPECT_LE(penalty_count(bic.lags, bic.trend, 0, PenaltyMode::paper),
            penalty_count(aic.lags, aic.trend, 0, PenaltyMode::paper));
  auto shuffled = select_specification(panel, shocks, 0, 1, {Criterion::aic, PenaltyMode::paper, {6, 2, 4, 3, 5}});
  EXPECT_EQ(shuffled.lags, aic.lags);
  EXPECT_EQ(shuffled.trend.label(), aic.trend.label());
  EXPECT_EQ(shuffled.value, aic.value);
}

TEST(Selection, TiesPickLexicographicallySmallest) {
  // I1 = 0 makes I2 irrelevant, so (.., 0, 0) and (.., 0, 1) always tie.
  std::vector<MonthRange> w(2, MonthRange::parse("2000-01:2006-12"));
  auto panel = random_panel(w, 1, 1, 31);
  auto shocks = random_shocks(kShockWindow, 32);
  for (int seed = 0; seed < 5; ++seed) {
    auto c = select_specification(random_panel(w, 1, 1, 40 + static_cast<unsigned>(seed)), shocks, 0, 0,
                                  {Criterion::bic, PenaltyMode::paper, {2, 3}});
    if (!c.trend.linear) EXPECT_FALSE(c.trend.quadratic);
  }
}

TEST(Selection, InfeasibleGrid) {
  auto panel = random_panel({MonthRange::parse("2000-01:2000-06")}, 1, 1, 33);
  EXPECT_THROW(aic_select(panel, random_shocks(kShockWindow, 34), 0, 0), DataError);
  EXPECT_THROW(select_specification(panel, random_shocks(kShockWindow, 34), 0, 0, {Criterion::aic, PenaltyMode::paper, {}}),
               ConfigError);
}

TEST(Selection, CsvLayout) {
  SelectionResult s{"reer", {}};
  s.per_horizon.push_back({{2, 2, 2}, {}, 0.0, 0});
  s.per_horizon.push_back({{3, 4, 5}, {true, false}, 0.0, 0});
  s.per_horizon.push_back({{6, 2, 3}, {true, true}, 0.0, 0});
  const auto text = emit_selection_csv(s);
  EXPECT_EQ(text, "h,0,1,2\nq,2,4,2\np,2,3,6\nr,2,5,3\nT,0,t,t2\n");
  auto back = read_selection_csv(csv::parse_string(text));
  ASSERT_EQ(back.per_horizon.size(), 3u);
  EXPECT_EQ(back.per_horizon[1].lags, (LagOrder{3, 4, 5}));
  EXPECT_EQ(back.at(25).trend.label(), "t2");
}
