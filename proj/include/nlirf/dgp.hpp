#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "calendar.hpp"
#include "error.hpp"
#include "irf.hpp"
#include "panel.hpp"
#include "random.hpp"
#include "transform.hpp"

namespace nlirf {

enum class ShockDistribution { gaussian, student_t };

/// Block-recursive structural system over w = (x, y, z) with 3 shocks x,
/// n_y country variables y and n_z common variables z:
///   A0 w_t = a + sum_i A_i w_{t-i} + sum_j C_j f(x_{t-j}) + eta_t
/// `a_lags[i]` multiplies w_{t-1-i}; `c_lags[j]` multiplies f(x_{t-j}).
struct StructuralModel {
  static constexpr int n_x = 3;
  int n_y = 1;
  int n_z = 0;
  Eigen::MatrixXd a0;
  Eigen::VectorXd intercept;
  std::vector<Eigen::MatrixXd> a_lags;
  std::vector<Eigen::MatrixXd> c_lags;
  ShockTransform transform;
  Eigen::MatrixXd sigma;
  ShockDistribution shock_distribution = ShockDistribution::gaussian;
  double t_df = 5.0;

  int dim() const { return n_x + n_y + n_z; }
  int y0() const { return n_x; }
  int z0() const { return n_x + n_y; }

  /// A0 = I, no dynamics, Sigma = I.
  static StructuralModel canonical(int n_y, int n_z = 0) {
    StructuralModel m;
    m.n_y = n_y;
    m.n_z = n_z;
    const int n = m.dim();
    m.a0 = Eigen::MatrixXd::Identity(n, n);
    m.intercept = Eigen::VectorXd::Zero(n);
    m.sigma = Eigen::MatrixXd::Identity(n, n);
    return m;
  }

  /// Contemporaneous effect of shock `s` on y variable `v`, entered with the
  /// sign convention of the structural form (A0 holds its negative).
  void set_impact_y(int v, int s, double value) { a0(y0() + v, s) = -value; }
  /// Lag-`lag` (>= 1) coefficient of y variable `to` on w element `from`.
  void set_lag(int lag, int to, int from, double value) {
    while (static_cast<int>(a_lags.size()) < lag) a_lags.push_back(Eigen::MatrixXd::Zero(dim(), dim()));
    a_lags[static_cast<std::size_t>(lag - 1)](to, from) = value;
  }
  /// Coefficient on f(x_{t-lag}) for shock `s` in equation `to`.
  void set_transform_effect(int lag, int to, int s, double value) {
    while (static_cast<int>(c_lags.size()) <= lag) c_lags.push_back(Eigen::MatrixXd::Zero(dim(), n_x));
    c_lags[static_cast<std::size_t>(lag)](to, s) = value;
  }
};

/// Spectral radius of the companion matrix of A0^{-1} A(L).
inline double companion_spectral_radius(const StructuralModel& m) {
  const int n = m.dim();
  const int lags = static_cast<int>(m.a_lags.size());
  if (lags == 0) return 0.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m.a0);
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n * lags, n * lags);
  for (int i = 0; i < lags; ++i) comp.block(0, i * n, n, n) = lu.solve(m.a_lags[static_cast<std::size_t>(i)]);
  if (lags > 1) comp.block(n, 0, n * (lags - 1), n * (lags - 1)).setIdentity();
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Every structural restriction the model violates; empty when valid.
/// With `n_countries` > 1 the common block z may not respond to y within
/// the period.
inline std::vector<std::string> validate_model(const StructuralModel& m, int n_countries = 1) {
  std::vector<std::string> v;
  const int n = m.dim();
  const int nx = StructuralModel::n_x, ny = m.n_y, nz = m.n_z;
  if (ny < 1 || nz < 0) {
    v.push_back("dimensions must satisfy n_y >= 1 and n_z >= 0");
    return v;
  }
  auto square = [&](const Eigen::MatrixXd& a) { return a.rows() == n && a.cols() == n; };
  if (!square(m.a0)) v.push_back("A0 must be " + std::to_string(n) + "x" + std::to_string(n));
  if (!square(m.sigma)) v.push_back("Sigma must be " + std::to_string(n) + "x" + std::to_string(n));
  if (m.intercept.size() != n) v.push_back("intercept must have " + std::to_string(n) + " entries");
  for (std::size_t i = 0; i < m.a_lags.size(); ++i)
    if (!square(m.a_lags[i])) v.push_back("A(L) lag " + std::to_string(i + 1) + " has the wrong shape");
  for (std::size_t j = 0; j < m.c_lags.size(); ++j)
    if (m.c_lags[j].rows() != n || m.c_lags[j].cols() != nx)
      v.push_back("C(L) lag " + std::to_string(j) + " has the wrong shape");
  if (!v.empty()) return v;

  const std::array<std::pair<int, int>, 3> blocks = {{{0, nx}, {nx, ny}, {nx + ny, nz}}};
  auto block = [&](const Eigen::MatrixXd& a, int r, int c) {
    return a.block(blocks[r].first, blocks[c].first, blocks[r].second, blocks[c].second);
  };
  auto zero = [](const auto& b) { return b.size() == 0 || b.isZero(0.0); };
  auto ident = [](const auto& b) { return b.size() == 0 || b.isIdentity(0.0); };

  if (!ident(block(m.a0, 0, 0)) || !ident(block(m.a0, 1, 1)) || !ident(block(m.a0, 2, 2)))
    v.push_back("A0 diagonal blocks must be identity");
  if (!zero(block(m.a0, 0, 1)) || !zero(block(m.a0, 0, 2))) v.push_back("A0 upper-right must be zero");
  if (n_countries > 1 && !zero(block(m.a0, 2, 1)))
    v.push_back("A0_32 must be zero when countries share the common block");
  if (Eigen::FullPivLU<Eigen::MatrixXd>(m.a0).rank() < n) v.push_back("A0 must be invertible");

  for (std::size_t i = 0; i < m.a_lags.size(); ++i) {
    const auto& a = m.a_lags[i];
    if (!zero(block(a, 0, 0)) || !zero(block(a, 0, 1)) || !zero(block(a, 0, 2)))
      v.push_back("A(L) first block row must be zero (lag " + std::to_string(i + 1) + ")");
    if (!zero(block(a, 2, 1))) v.push_back("A32(L) must be zero (lag " + std::to_string(i + 1) + ")");
  }
  for (std::size_t j = 0; j < m.c_lags.size(); ++j)
    if (!zero(m.c_lags[j].topRows(nx))) v.push_back("C(L) first block row must be zero (lag " + std::to_string(j) + ")");

  if (!ident(block(m.sigma, 0, 0))) v.push_back("x-innovation covariance must be identity");
  if (!zero(block(m.sigma, 0, 1)) || !zero(block(m.sigma, 0, 2)) || !zero(block(m.sigma, 1, 0)) ||
      !zero(block(m.sigma, 2, 0)))
    v.push_back("x-innovations must be uncorrelated with the other innovations");
  if (!m.sigma.isApprox(m.sigma.transpose(), 1e-12)) v.push_back("Sigma must be symmetric");
  else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.sigma);
    if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
      v.push_back("Sigma must be positive semi-definite");
  }
  if (m.shock_distribution == ShockDistribution::student_t && !(m.t_df > 2.0))
    v.push_back("student-t shocks need more than 2 degrees of freedom");

  if (v.empty() || std::none_of(v.begin(), v.end(), [](const std::string& s) { return s == "A0 must be invertible"; })) {
    const double rho = companion_spectral_radius(m);
    if (!(rho < 1.0)) v.push_back("companion spectral radius must be < 1 (is " + std::to_string(rho) + ")");
  }
  return v;
}

inline void require_valid(const StructuralModel& m, int n_countries = 1) {
  auto v = validate_model(m, n_countries);
  if (v.empty()) return;
  std::string msg = "invalid structural model:";
  for (const auto& s : v) msg += "\n  " + s;
  throw ConfigError(msg);
}

namespace detail {

/// Lower-triangular L with L L' = a for positive semi-definite a; columns
/// with a vanishing pivot are left zero.
inline Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (d <= 1e-14 * scale) continue;
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
  }
  return l;
}

/// Draws and propagates the system one period at a time. Innovation draws
/// for the common block come first so that country blocks can be drawn
/// conditionally on them.
class Stepper {
 public:
  explicit Stepper(const StructuralModel& m) : m_(m), lu_(m.a0) {
    const int ny = m.n_y, nz = m.n_z;
    // Order (z, y) so that v is drawn first and eps | v follows.
    Eigen::MatrixXd s(nz + ny, nz + ny);
    s.topLeftCorner(nz, nz) = m.sigma.block(m.z0(), m.z0(), nz, nz);
    s.topRightCorner(nz, ny) = m.sigma.block(m.z0(), m.y0(), nz, ny);
    s.bottomLeftCorner(ny, nz) = m.sigma.block(m.y0(), m.z0(), ny, nz);
    s.bottomRightCorner(ny, ny) = m.sigma.block(m.y0(), m.y0(), ny, ny);
    chol_ = psd_cholesky(s);
    a0_zy_zero_ = m.n_z == 0 || m.a0.block(m.z0(), m.y0(), nz, ny).isZero(0.0);
  }

  Eigen::Vector3d draw_x(Rng& rng) const {
    std::normal_distribution<double> normal;
    Eigen::Vector3d x;
    for (int i = 0; i < 3; ++i) x(i) = normal(rng);
    if (m_.shock_distribution == ShockDistribution::student_t) {
      std::chi_squared_distribution<double> chi(m_.t_df);
      const double w = std::sqrt(chi(rng) / m_.t_df);
      x *= std::sqrt((m_.t_df - 2.0) / m_.t_df) / w;
    }
    return x;
  }
  Eigen::VectorXd draw_normals(Rng& rng, int k) const {
    std::normal_distribution<double> normal;
    Eigen::VectorXd e(k);
    for (int i = 0; i < k; ++i) e(i) = normal(rng);
    return e;
  }
  /// v = L_zz e_z.
  Eigen::VectorXd common_innovation(const Eigen::VectorXd& ez) const {
    return chol_.topLeftCorner(m_.n_z, m_.n_z) * ez;
  }
  /// eps = L_yz e_z + L_yy e_y.
  Eigen::VectorXd country_innovation(const Eigen::VectorXd& ez, const Eigen::VectorXd& ey) const {
    return chol_.bottomLeftCorner(m_.n_y, m_.n_z) * ez + chol_.bottomRightCorner(m_.n_y, m_.n_y) * ey;
  }

  /// Right-hand side a + A(L) w + C(L) f(x) for the period after `hist`
  /// (hist[0] is w_{t-1}) with x history `xh` (xh[0] is x_t).
  Eigen::VectorXd rhs(const std::vector<Eigen::VectorXd>& hist, const std::vector<Eigen::Vector3d>& xh) const {
    Eigen::VectorXd r = m_.intercept;
    for (std::size_t i = 0; i < m_.a_lags.size() && i < hist.size(); ++i) r.noalias() += m_.a_lags[i] * hist[i];
    for (std::size_t j = 0; j < m_.c_lags.size() && j < xh.size(); ++j) {
      Eigen::Vector3d fx;
      for (int s = 0; s < 3; ++s) fx(s) = m_.transform(xh[j](s));
      r.noalias() += m_.c_lags[j] * fx;
    }
    return r;
  }

  /// Solves A0 w = rhs + eta with eta = (x, eps, v); the x rows of rhs are
  /// zero so w_x = x.
  Eigen::VectorXd solve(Eigen::VectorXd rhs, const Eigen::Vector3d& x, const Eigen::VectorXd& eps,
                        const Eigen::VectorXd& v) const {
    rhs.head(3) += x;
    rhs.segment(m_.y0(), m_.n_y) += eps;
    rhs.segment(m_.z0(), m_.n_z) += v;
    return lu_.solve(rhs);
  }

  /// Common block z_t from its own equation; valid when A0_32 = 0.
  Eigen::VectorXd solve_common(const Eigen::VectorXd& rhs, const Eigen::Vector3d& x, const Eigen::VectorXd& v) const {
    const int nz = m_.n_z;
    return rhs.segment(m_.z0(), nz) + v - m_.a0.block(m_.z0(), 0, nz, 3) * x;
  }
  /// Country block y_t given z_t.
  Eigen::VectorXd solve_country(const Eigen::VectorXd& rhs, const Eigen::Vector3d& x, const Eigen::VectorXd& z,
                                const Eigen::VectorXd& eps) const {
    const int ny = m_.n_y;
    Eigen::VectorXd y = rhs.segment(m_.y0(), ny) + eps - m_.a0.block(m_.y0(), 0, ny, 3) * x;
    if (m_.n_z > 0) y -= m_.a0.block(m_.y0(), m_.z0(), ny, m_.n_z) * z;
    return y;
  }

  bool common_block_exogenous() const { return a0_zy_zero_; }
  std::size_t x_memory() const { return std::max<std::size_t>(m_.c_lags.size(), 1); }
  std::size_t w_memory() const { return std::max<std::size_t>(m_.a_lags.size(), 1); }

 private:
  const StructuralModel& m_;
  Eigen::FullPivLU<Eigen::MatrixXd> lu_;
  Eigen::MatrixXd chol_;
  bool a0_zy_zero_ = true;
};

template <class V>
inline void push_front(std::vector<V>& hist, V v, std::size_t cap) {
  hist.insert(hist.begin(), std::move(v));
  if (hist.size() > cap) hist.pop_back();
}

}  // namespace detail

struct SimulatedPanel {
  Eigen::MatrixXd x;               // T x 3
  std::vector<Eigen::MatrixXd> y;  // per country, T x n_y
  Eigen::MatrixXd z;               // T x n_z
  std::uint64_t seed = 0;
  int burn_in = 500;

  int length() const { return static_cast<int>(x.rows()); }

  static std::string country_id(std::size_t k) {
    std::string id = std::to_string(k + 1);
    return "C" + std::string(id.size() < 2 ? 2 - id.size() : 0, '0') + id;
  }

  /// Synthetic schema y1..y_{n_y}, z1..z_{n_z}.
  PanelSchema schema() const {
    PanelSchema s;
    for (Eigen::Index i = 0; i < (y.empty() ? 0 : y.front().cols()); ++i) s.outcomes.push_back("y" + std::to_string(i + 1));
    for (Eigen::Index i = 0; i < z.cols(); ++i) s.controls.push_back("z" + std::to_string(i + 1));
    return s;
  }

  MonthRange window(CalendarMonth start) const { return {start, start + (length() - 1)}; }

  PanelDataset to_panel(CalendarMonth start = {2000, 1}) const {
    PanelDataset p{schema(), {}, {}};
    for (std::size_t k = 0; k < y.size(); ++k) p.countries.push_back({country_id(k), window(start), y[k]});
    if (z.cols() > 0) p.controls = {window(start), z};
    return p;
  }

  ShockSet to_shocks(CalendarMonth start = {2000, 1}) const {
    ShockSet s{window(start), {}};
    for (int k = 0; k < 3; ++k) {
      ShockSeries series{static_cast<ShockKind>(k), window(start), {}, {}};
      for (Eigen::Index t = 0; t < x.rows(); ++t) {
        series.values.push_back(x(t, k));
        series.flags.push_back(x(t, k) != 0.0 ? ShockFlag::conference : ShockFlag::filled_zero);
      }
      s.series.push_back(std::move(series));
    }
    return s;
  }
};

/// Simulates T periods for `n_countries` countries after a burn-in. x_t and
/// z_t are common to all countries; each country draws its own eps given
/// the common v.
inline SimulatedPanel simulate(const StructuralModel& m, int periods, int n_countries, std::uint64_t seed,
                               int burn_in = 500) {
  require_valid(m, n_countries);
  if (periods < 1) throw ConfigError("simulation length must be positive");
  if (n_countries < 1) throw ConfigError("need at least one simulated country");
  if (burn_in < 0) throw ConfigError("burn-in must be non-negative");
  detail::Stepper step(m);
  const int n = m.dim();
  const auto nc = static_cast<std::size_t>(n_countries);

  SimulatedPanel out;
  out.seed = seed;
  out.burn_in = burn_in;
  out.x.resize(periods, 3);
  out.z.resize(periods, m.n_z);
  out.y.assign(nc, Eigen::MatrixXd(periods, m.n_y));

  auto common_rng = stream_rng(seed, 0);
  std::vector<Rng> country_rng;
  for (std::size_t k = 0; k < nc; ++k) country_rng.push_back(stream_rng(seed, k + 1));

  std::vector<std::vector<Eigen::VectorXd>> hist(nc);
  std::vector<Eigen::Vector3d> xh;
  const bool split = nc > 1;
  for (int t = -burn_in; t < periods; ++t) {
    const Eigen::Vector3d x = step.draw_x(common_rng);
    const Eigen::VectorXd ez = step.draw_normals(common_rng, m.n_z);
    const Eigen::VectorXd v = step.common_innovation(ez);
    detail::push_front(xh, x, step.x_memory());
    Eigen::VectorXd zt;
    for (std::size_t k = 0; k < nc; ++k) {
      const Eigen::VectorXd eps = step.country_innovation(ez, step.draw_normals(country_rng[k], m.n_y));
      const Eigen::VectorXd r = step.rhs(hist[k], xh);
      Eigen::VectorXd w(n);
      if (split) {
        if (k == 0) zt = step.solve_common(r, x, v);
        w << x, step.solve_country(r, x, zt, eps), zt;
      } else {
        w = step.solve(r, x, eps, v);
      }
      if (!w.allFinite()) throw NumericalError("simulation produced non-finite values at period " + std::to_string(t));
      if (t >= 0) {
        out.y[k].row(t) = w.segment(m.y0(), m.n_y).transpose();
        if (k == 0) out.z.row(t) = w.segment(m.z0(), m.n_z).transpose();
      }
      detail::push_front(hist[k], w, step.w_memory());
    }
    if (t >= 0) out.x.row(t) = x.transpose();
  }
  return out;
}

/// Monte-Carlo response of y to a shift of delta in shock `shock`, with its
/// standard error. Rows are horizons 0..H, columns y variables.
struct OracleIrf {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd std_error;
  int n_paths = 0;

  IrfCurve curve(int variable, int shock, double delta) const {
    IrfCurve c;
    c.shock = shock;
    c.outcome = "y" + std::to_string(variable + 1);
    c.delta = delta;
    for (Eigen::Index h = 0; h < mean.rows(); ++h) c.values.push_back(mean(h, variable));
    return c;
  }
};

/// Paired-path oracle: each path runs `history` periods from rest, then
/// continues H + 1 periods twice with identical innovations, once with
/// x_t + delta e_shock at the first of them. The response is the average
/// path difference.
inline OracleIrf true_irf_oracle(const StructuralModel& m, int shock, double delta, int horizon, int n_paths,
                                 std::uint64_t seed, int history = 100) {
  require_valid(m);
  if (shock < 0 || shock >= 3) throw ConfigError("shock index must be 0, 1 or 2");
  if (horizon < 0) throw ConfigError("horizon must be non-negative");
  if (n_paths < 2) throw ConfigError("oracle needs at least two paths");
  detail::Stepper step(m);
  const int ny = m.n_y;
  const auto rows = static_cast<std::size_t>(horizon + 1);
  std::vector<double> diff(static_cast<std::size_t>(n_paths) * rows * static_cast<std::size_t>(ny));

  parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t path) {
    auto rng = stream_rng(seed, path);
    std::vector<Eigen::VectorXd> hist;
    std::vector<Eigen::Vector3d> xh;
    auto advance = [&](std::vector<Eigen::VectorXd>& hw, std::vector<Eigen::Vector3d>& hx, const Eigen::Vector3d& x,
                       const Eigen::VectorXd& eps, const Eigen::VectorXd& v) {
      detail::push_front(hx, x, step.x_memory());
      Eigen::VectorXd w = step.solve(step.rhs(hw, hx), x, eps, v);
      detail::push_front(hw, w, step.w_memory());
      return w;
    };
    auto draw = [&](Eigen::Vector3d& x, Eigen::VectorXd& eps, Eigen::VectorXd& v) {
      x = step.draw_x(rng);
      const Eigen::VectorXd ez = step.draw_normals(rng, m.n_z);
      v = step.common_innovation(ez);
      eps = step.country_innovation(ez, step.draw_normals(rng, ny));
    };
    Eigen::Vector3d x;
    Eigen::VectorXd eps, v;
    for (int t = 0; t < history; ++t) {
      draw(x, eps, v);
      advance(hist, xh, x, eps, v);
    }
    auto hist_b = hist;
    auto xh_b = xh;
    for (std::size_t h = 0; h < rows; ++h) {
      draw(x, eps, v);
      Eigen::Vector3d xb = x;
      if (h == 0) xb(shock) += delta;
      const Eigen::VectorXd wa = advance(hist, xh, x, eps, v);
      const Eigen::VectorXd wb = advance(hist_b, xh_b, xb, eps, v);
      for (int j = 0; j < ny; ++j)
        diff[(path * rows + h) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(j)] =
            wb(m.y0() + j) - wa(m.y0() + j);
    }
  });

  OracleIrf out;
  out.n_paths = n_paths;
  out.mean = Eigen::MatrixXd::Zero(horizon + 1, ny);
  out.std_error = Eigen::MatrixXd::Zero(horizon + 1, ny);
  const double np = n_paths;
  for (std::size_t h = 0; h < rows; ++h)
    for (int j = 0; j < ny; ++j) {
      double s = 0.0;
      for (int p = 0; p < n_paths; ++p)
        s += diff[(static_cast<std::size_t>(p) * rows + h) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(j)];
      const double mean = s / np;
      double ss = 0.0;
      for (int p = 0; p < n_paths; ++p) {
        const double d =
            diff[(static_cast<std::size_t>(p) * rows + h) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(j)] -
            mean;
        ss += d * d;
      }
      out.mean(static_cast<Eigen::Index>(h), j) = mean;
      out.std_error(static_cast<Eigen::Index>(h), j) = std::sqrt(ss / (np - 1.0) / np);
    }
  return out;
}

/// Closed-form response of y to delta e_shock for models whose transform
/// enters linearly (identity f or no C(L) terms), from powers of the
/// companion matrix. Rows are horizons 0..H.
inline Eigen::MatrixXd analytic_linear_irf(const StructuralModel& m, int shock, double delta, int horizon) {
  require_valid(m);
  const bool linear_c = m.transform.kind == ShockTransform::Kind::identity ||
                        std::all_of(m.c_lags.begin(), m.c_lags.end(), [](const auto& c) { return c.isZero(0.0); });
  if (!linear_c) throw ConfigError("analytic response needs a linear shock transmission");
  if (shock < 0 || shock >= 3) throw ConfigError("shock index must be 0, 1 or 2");
  const int n = m.dim();
  const int lags = static_cast<int>(std::max<std::size_t>(m.a_lags.size(), 1));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m.a0);

  // State s_t = (w_t, ..., w_{t-L+1}); s_t = F s_{t-1} + G e_t with the
  // period-t input e_t = A0^{-1} (C_t delta e_shock + [x impulse at t = 0]).
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n * lags, n * lags);
  for (std::size_t i = 0; i < m.a_lags.size(); ++i)
    f.block(0, static_cast<Eigen::Index>(i) * n, n, n) = lu.solve(m.a_lags[i]);
  if (lags > 1) f.block(n, 0, n * (lags - 1), n * (lags - 1)).setIdentity();

  auto input = [&](int h) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    if (h == 0) e(shock) = delta;
    if (h < static_cast<int>(m.c_lags.size()) && m.transform.kind == ShockTransform::Kind::identity)
      e += m.c_lags[static_cast<std::size_t>(h)].col(shock) * delta;
    return Eigen::VectorXd(lu.solve(e));
  };

  Eigen::MatrixXd out(horizon + 1, m.n_y);
  Eigen::VectorXd state = Eigen::VectorXd::Zero(n * lags);
  for (int h = 0; h <= horizon; ++h) {
    Eigen::VectorXd next = f * state;
    next.head(n) += input(h);
    state = std::move(next);
    out.row(h) = state.segment(m.y0(), m.n_y).transpose();
  }
  return out;
}

// JSON model document.

namespace detail {

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw ConfigError(what + " has ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  auto j = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(row);
  }
  return j;
}

}  // namespace detail

inline nlohmann::json model_to_json(const StructuralModel& m) {
  nlohmann::json j;
  j["n_y"] = m.n_y;
  j["n_z"] = m.n_z;
  j["a0"] = detail::matrix_to_json(m.a0);
  j["intercept"] = std::vector<double>(m.intercept.data(), m.intercept.data() + m.intercept.size());
  j["a_lags"] = nlohmann::json::array();
  for (const auto& a : m.a_lags) j["a_lags"].push_back(detail::matrix_to_json(a));
  j["c_lags"] = nlohmann::json::array();
  for (const auto& c : m.c_lags) j["c_lags"].push_back(detail::matrix_to_json(c));
  j["sigma"] = detail::matrix_to_json(m.sigma);
  j["transform"] = {{"kind", m.transform.name()}, {"b", m.transform.b}};
  j["shocks"] = m.shock_distribution == ShockDistribution::gaussian
                    ? nlohmann::json{{"kind", "gaussian"}}
                    : nlohmann::json{{"kind", "student_t"}, {"df", m.t_df}};
  return j;
}

/// Reads a model document. Missing a0 / sigma / intercept default to the
/// canonical model of the given dimensions.
inline StructuralModel model_from_json(const nlohmann::json& j) {
  try {
    auto m = StructuralModel::canonical(j.at("n_y").get<int>(), j.value("n_z", 0));
    if (j.contains("a0")) m.a0 = detail::matrix_from_json(j["a0"], "a0");
    if (j.contains("sigma")) m.sigma = detail::matrix_from_json(j["sigma"], "sigma");
    if (j.contains("intercept")) {
      auto v = j["intercept"].get<std::vector<double>>();
      m.intercept = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    if (j.contains("a_lags"))
      for (const auto& a : j["a_lags"]) m.a_lags.push_back(detail::matrix_from_json(a, "a_lags"));
    if (j.contains("c_lags"))
      for (const auto& c : j["c_lags"]) m.c_lags.push_back(detail::matrix_from_json(c, "c_lags"));
    if (j.contains("transform"))
      m.transform = ShockTransform::parse(j["transform"].at("kind").get<std::string>(), j["transform"].value("b", 0.0));
    if (j.contains("shocks")) {
      const auto kind = j["shocks"].at("kind").get<std::string>();
      if (kind == "gaussian") m.shock_distribution = ShockDistribution::gaussian;
      else if (kind == "student_t") {
        m.shock_distribution = ShockDistribution::student_t;
        m.t_df = j["shocks"].value("df", 5.0);
      } else
        throw ConfigError("unknown shock distribution '" + kind + "'");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model document: ") + e.what());
  }
}

}  // namespace nlirf
