#include <gtest/gtest.h>

#include <cmath>

#include "nlirf/dgp.hpp"

using namespace nlirf;

namespace {

bool has(const std::vector<std::string>& v, const std::string& prefix) {
  for (const auto& s : v)
    if (s.rfind(prefix, 0) == 0) return true;
  return false;
}

StructuralModel arx(double rho, double c) {
  auto m = StructuralModel::canonical(1);
  m.set_lag(1, m.y0(), m.y0(), rho);
  m.set_impact_y(0, 0, c);
  return m;
}

StructuralModel rich_linear() {
  auto m = StructuralModel::canonical(2, 1);
  m.set_impact_y(0, 0, 0.8);
  m.set_impact_y(1, 1, -0.4);
  m.a0(m.z0(), 2) = -0.3;
  m.set_lag(1, m.y0(), m.y0(), 0.5);
  m.set_lag(1, m.y0() + 1, m.y0(), 0.2);
  m.set_lag(2, m.y0() + 1, m.y0() + 1, 0.3);
  m.set_lag(1, m.y0(), m.z0(), 0.25);
  m.set_lag(1, m.z0(), m.z0(), 0.6);
  m.set_lag(1, m.y0(), 1, 0.4);
  m.set_transform_effect(1, m.y0(), 0, 0.7);
  m.set_transform_effect(2, m.y0() + 1, 0, -0.2);
  m.sigma(m.y0(), m.y0() + 1) = m.sigma(m.y0() + 1, m.y0()) = 0.3;
  m.sigma(m.y0(), m.z0()) = m.sigma(m.z0(), m.y0()) = 0.2;
  return m;
}

}  // namespace

TEST(Validate, CanonicalIsValid) {
  EXPECT_TRUE(validate_model(StructuralModel::canonical(1)).empty());
  EXPECT_TRUE(validate_model(StructuralModel::canonical(3, 2), 5).empty());
  EXPECT_TRUE(validate_model(rich_linear()).empty());
}

TEST(Validate, NamedViolations) {
  auto m = StructuralModel::canonical(1, 1);
  m.a0(0, m.y0()) = 0.2;
  EXPECT_TRUE(has(validate_model(m), "A0 upper-right must be zero"));

  auto unit = arx(1.01, 0.0);
  EXPECT_TRUE(has(validate_model(unit), "companion spectral radius must be < 1"));

  auto lagx = StructuralModel::canonical(1);
  lagx.set_lag(1, 0, lagx.y0(), 0.1);
  EXPECT_TRUE(has(validate_model(lagx), "A(L) first block row must be zero"));

  auto a32 = StructuralModel::canonical(1, 1);
  a32.set_lag(1, a32.z0(), a32.y0(), 0.1);
  EXPECT_TRUE(has(validate_model(a32), "A32(L) must be zero"));

  auto common = StructuralModel::canonical(1, 1);
  common.a0(common.z0(), common.y0()) = 0.5;
  EXPECT_TRUE(validate_model(common, 1).empty());
  EXPECT_TRUE(has(validate_model(common, 2), "A0_32 must be zero"));

  auto sx = StructuralModel::canonical(1);
  sx.sigma(0, 0) = 2.0;
  EXPECT_TRUE(has(validate_model(sx), "x-innovation covariance must be identity"));

  auto psd = StructuralModel::canonical(2);
  psd.sigma(3, 4) = psd.sigma(4, 3) = 1.5;
  EXPECT_TRUE(has(validate_model(psd), "Sigma must be positive semi-definite"));

  auto c = StructuralModel::canonical(1);
  c.set_transform_effect(0, 1, 0, 0.5);
  EXPECT_TRUE(has(validate_model(c), "C(L) first block row must be zero"));

  auto sing = StructuralModel::canonical(1);
  sing.a0(3, 3) = 0.0;
  auto v = validate_model(sing);
  EXPECT_TRUE(has(v, "A0 must be invertible"));
  EXPECT_TRUE(has(v, "A0 diagonal blocks must be identity"));

  EXPECT_THROW(simulate(unit, 10, 1, 1), ConfigError);
}

TEST(Simulate, StaticCovarianceMatchesAnalytic) {
  auto m = StructuralModel::canonical(2, 1);
  m.set_impact_y(0, 0, 0.9);
  m.set_impact_y(1, 2, -0.5);
  m.a0(m.z0(), m.y0()) = -0.4;
  m.a0(m.z0(), 1) = 0.6;
  m.sigma(m.y0(), m.y0()) = 2.0;
  m.sigma(m.y0(), m.z0()) = m.sigma(m.z0(), m.y0()) = 0.5;
  const int T = 40000;
  auto s = simulate(m, T, 1, 3);
  Eigen::MatrixXd w(T, m.dim());
  w << s.x, s.y[0], s.z;
  Eigen::MatrixXd c = w.rowwise() - w.colwise().mean();
  Eigen::MatrixXd sample = c.transpose() * c / (T - 1.0);
  Eigen::MatrixXd inv = m.a0.inverse();
  Eigen::MatrixXd analytic = inv * m.sigma * inv.transpose();
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) {
      const double sd = std::sqrt((analytic(i, i) * analytic(j, j) + analytic(i, j) * analytic(i, j)) / T);
      EXPECT_NEAR(sample(i, j), analytic(i, j), 5 * sd) << i << "," << j;
    }
}

TEST(Simulate, ArxMoments) {
  const double rho = 0.5, c = 1.2;
  const int T = 40000;
  auto s = simulate(arx(rho, c), T, 1, 4);
  Eigen::VectorXd y = s.y[0].col(0);
  y.array() -= y.mean();
  const double var = y.squaredNorm() / T;
  const double ac1 = y.head(T - 1).dot(y.tail(T - 1)) / y.squaredNorm();
  EXPECT_NEAR(var, (c * c + 1) / (1 - rho * rho), 0.05 * (c * c + 1) / (1 - rho * rho));
  EXPECT_NEAR(ac1, rho, 0.02);
}

TEST(Simulate, DeterministicAndShared) {
  auto m = rich_linear();
  m.a0(m.z0(), 2) = 0.0;
  auto a = simulate(m, 200, 3, 9);
  auto b = simulate(m, 200, 3, 9);
  auto c = simulate(m, 200, 3, 10);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.z, b.z);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(a.y[static_cast<std::size_t>(k)], b.y[static_cast<std::size_t>(k)]);
  EXPECT_NE(a.x, c.x);
  EXPECT_NE(a.y[0], a.y[1]);
  EXPECT_TRUE(a.x.allFinite() && a.z.allFinite());
  EXPECT_EQ(a.burn_in, 500);
  EXPECT_EQ(a.length(), 200);

  auto p = a.to_panel();
  EXPECT_EQ(p.countries.size(), 3u);
  EXPECT_EQ(p.countries[2].country, "C03");
  EXPECT_EQ(p.schema.outcomes, (std::vector<std::string>{"y1", "y2"}));
  EXPECT_EQ(p.controls.values, a.z);
  auto sh = a.to_shocks({2001, 6});
  EXPECT_EQ(sh.window.first, (CalendarMonth{2001, 6}));
  EXPECT_EQ(sh.series[1].values[17], a.x(17, 1));
}

TEST(Simulate, SharedBlockIsIndependentOfCountryCount) {
  auto m = rich_linear();
  m.a0(m.z0(), 2) = 0.0;
  auto one = simulate(m, 100, 1, 21);
  auto four = simulate(m, 100, 4, 21);
  EXPECT_EQ(one.x, four.x);
  EXPECT_TRUE(one.z.isApprox(four.z, 1e-12));
}

TEST(Oracle, LinearMatchesCompanionPowers) {
  auto m = rich_linear();
  auto o = true_irf_oracle(m, 0, 1.0, 12, 200, 5);
  auto a = analytic_linear_irf(m, 0, 1.0, 12);
  ASSERT_EQ(o.mean.rows(), 13);
  for (int h = 0; h <= 12; ++h)
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(o.mean(h, j), a(h, j), 1e-10 + 3 * o.std_error(h, j)) << h;
  EXPECT_NEAR(a(0, 0), 0.8, 1e-15);
  EXPECT_NEAR(a(1, 0), 0.5 * 0.8 + 0.7, 1e-14);
}

TEST(Oracle, LinearArxClosedForm) {
  auto a = analytic_linear_irf(arx(0.5, 2.0), 0, 1.5, 6);
  for (int h = 0; h <= 6; ++h) EXPECT_NEAR(a(h, 0), 1.5 * 2.0 * std::pow(0.5, h), 1e-14);
  auto off = analytic_linear_irf(arx(0.5, 2.0), 2, 1.0, 3);
  EXPECT_TRUE(off.isZero(0.0));
}

TEST(Oracle, AbsoluteValueImpact) {
  auto m = StructuralModel::canonical(1);
  m.transform = ShockTransform::abs_value();
  m.set_transform_effect(0, m.y0(), 0, 2.0);
  auto o = true_irf_oracle(m, 0, 1.0, 2, 20000, 7, 2);
  EXPECT_NEAR(o.mean(0, 0), 0.36875 * 2.0, 4 * o.std_error(0, 0) + 1e-4);
  EXPECT_EQ(o.mean(1, 0), 0.0);
  EXPECT_THROW(analytic_linear_irf(m, 0, 1.0, 2), ConfigError);
}

TEST(Oracle, ZeroDeltaLinearityAndOddness) {
  auto lin = rich_linear();
  auto zero = true_irf_oracle(lin, 1, 0.0, 5, 50, 1);
  EXPECT_TRUE(zero.mean.isZero(0.0));
  auto d1 = true_irf_oracle(lin, 1, 0.6, 5, 50, 2);
  auto d2 = true_irf_oracle(lin, 1, 1.2, 5, 50, 2);
  EXPECT_TRUE((d2.mean - 2 * d1.mean).isZero(1e-12));

  auto odd = StructuralModel::canonical(1);
  odd.transform = ShockTransform::threshold_shift(0.5);
  odd.set_transform_effect(0, odd.y0(), 0, 1.0);
  odd.set_transform_effect(1, odd.y0(), 0, 0.5);
  odd.set_lag(1, odd.y0(), odd.y0(), 0.3);
  auto pos = true_irf_oracle(odd, 0, 1.0, 4, 20000, 3, 5);
  auto neg = true_irf_oracle(odd, 0, -1.0, 4, 20000, 4, 5);
  for (int h = 0; h <= 4; ++h)
    EXPECT_NEAR(pos.mean(h, 0), -neg.mean(h, 0), 4 * std::hypot(pos.std_error(h, 0), neg.std_error(h, 0)) + 1e-12);
  EXPECT_GT(pos.mean(0, 0), 0.0);
}

TEST(Oracle, DeterministicAndCurve) {
  auto m = StructuralModel::canonical(1);
  m.transform = ShockTransform::abs_value();
  m.set_transform_effect(0, m.y0(), 2, 1.0);
  auto a = true_irf_oracle(m, 2, 0.5, 3, 500, 11);
  auto b = true_irf_oracle(m, 2, 0.5, 3, 500, 11);
  EXPECT_EQ(a.mean, b.mean);
  auto c = a.curve(0, 2, 0.5);
  EXPECT_EQ(c.values.size(), 4u);
  EXPECT_EQ(c.outcome, "y1");
  EXPECT_THROW(true_irf_oracle(m, 3, 1.0, 3, 10, 1), ConfigError);
  EXPECT_THROW(true_irf_oracle(m, 0, 1.0, 3, 1, 1), ConfigError);
}

TEST(ModelJson, RoundTrip) {
  auto m = rich_linear();
  m.transform = ShockTransform::threshold_shift(0.4);
  m.shock_distribution = ShockDistribution::student_t;
  m.t_df = 7.0;
  auto back = model_from_json(nlohmann::json::parse(model_to_json(m).dump()));
  EXPECT_EQ(back.n_y, 2);
  EXPECT_EQ(back.n_z, 1);
  EXPECT_EQ(back.a0, m.a0);
  EXPECT_EQ(back.sigma, m.sigma);
  ASSERT_EQ(back.a_lags.size(), m.a_lags.size());
  for (std::size_t i = 0; i < m.a_lags.size(); ++i) EXPECT_EQ(back.a_lags[i], m.a_lags[i]);
  ASSERT_EQ(back.c_lags.size(), m.c_lags.size());
  EXPECT_EQ(back.transform.b, 0.4);
  EXPECT_EQ(back.shock_distribution, ShockDistribution::student_t);
  EXPECT_EQ(back.t_df, 7.0);
}

TEST(ModelJson, DefaultsAndErrors) {
  auto m = model_from_json(nlohmann::json::parse(R"({"n_y": 2})"));
  EXPECT_TRUE(validate_model(m).empty());
  EXPECT_EQ(m.dim(), 5);
  EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({"n_z": 2})")), ConfigError);
  EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({"n_y": 1, "a0": [[1, 0], [0]]})")), ConfigError);
  EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({"n_y": 1, "shocks": {"kind": "cauchy"}})")), ConfigError);
}

TEST(Simulate, StudentTShocksHaveUnitVariance) {
  auto m = StructuralModel::canonical(1);
  m.shock_distribution = ShockDistribution::student_t;
  m.t_df = 6.0;
  auto s = simulate(m, 50000, 1, 12);
  for (int k = 0; k < 3; ++k) {
    const double v = s.x.col(k).squaredNorm() / s.length();
    EXPECT_NEAR(v, 1.0, 0.06) << k;
  }
}
