#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "panel.hpp"
#include "random.hpp"
#include "transform.hpp"

namespace nlirf {

/// Lag orders of one projection: p shock lags, q lags of the country's
/// outcome vector, r lags of the euro-area controls.
struct LagOrder {
  int p = 2;
  int q = 2;
  int r = 2;
  bool operator==(const LagOrder&) const = default;
  auto operator<=>(const LagOrder&) const = default;
};

/// Linear trend flag and quadratic trend flag; the quadratic term is only
/// present together with the linear one.
struct TrendSpec {
  bool linear = false;
  bool quadratic = false;

  bool has_linear() const { return linear; }
  bool has_quadratic() const { return linear && quadratic; }
  int count() const { return int(has_linear()) + int(has_quadratic()); }
  /// "0", "t" or "t2".
  std::string label() const { return has_quadratic() ? "t2" : has_linear() ? "t" : "0"; }
  bool operator==(const TrendSpec&) const = default;
};

enum class ClusterBy { country, month };

/// One local-projection design. An identity transform is the linear
/// specification; any other transform adds f(x_{t-i}) columns for i = 0..p.
struct LpSpec {
  int outcome = 0;
  int horizon = 0;
  LagOrder lags;
  TrendSpec trend;
  ShockTransform transform;
  /// Optional per-shock thresholds overriding `transform.b` for a
  /// threshold_shift transform.
  std::vector<double> thresholds;
  /// Rows additionally require every block to have lags up to this depth,
  /// so that specifications with different lag orders share one sample.
  int sample_floor_lag = 0;

  bool has_transform() const { return transform.kind != ShockTransform::Kind::identity; }
  ShockTransform transform_for(int shock) const {
    if (transform.kind != ShockTransform::Kind::threshold_shift || thresholds.empty()) return transform;
    return ShockTransform::threshold_shift(thresholds.at(static_cast<std::size_t>(shock)));
  }
};

struct DesignRow {
  int country = 0;
  CalendarMonth month;
};

struct Design {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> columns;
  std::vector<DesignRow> rows;

  std::vector<int> clusters(ClusterBy by) const {
    std::vector<int> ids(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      ids[i] = by == ClusterBy::country ? rows[i].country : rows[i].month.ordinal();
    return ids;
  }
  Eigen::Index column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<Eigen::Index>(i);
    throw ConfigError("design has no column '" + name + "'");
  }
};

inline std::string psi_name(int shock, int lag = 0) {
  return "psi_" + std::string(shock_name(shock)) + (lag ? "_L" + std::to_string(lag) : "");
}
inline std::string gamma_name(int shock, int lag = 0) {
  return "gamma_" + std::string(shock_name(shock)) + (lag ? "_L" + std::to_string(lag) : "");
}

namespace detail {

/// Names the columns that a pivoted QR finds linearly dependent on the
/// others. Empty when the matrix has full column rank.
inline std::vector<std::string> collinear_columns(const Eigen::MatrixXd& x, const std::vector<std::string>& names) {
  Eigen::VectorXd norms = x.colwise().norm();
  std::vector<std::string> bad;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    if (!(norms(j) > 0)) bad.push_back(names[static_cast<std::size_t>(j)]);
  if (!bad.empty()) return bad;
  Eigen::MatrixXd scaled = x * norms.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  qr.setThreshold(1e-10);
  if (qr.rank() == x.cols()) return {};
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index j = qr.rank(); j < x.cols(); ++j) bad.push_back(names[static_cast<std::size_t>(perm(j))]);
  return bad;
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s;
}

}  // namespace detail

/// Stacks the (country, month) rows for which the h-step lead and every
/// regressor exist. Columns, in order: contemporaneous shocks (psi block),
/// contemporaneous transformed shocks (gamma block, when a transform is set),
/// shock lags, transformed shock lags, outcome-vector lags, control lags,
/// trends, one intercept per country.
inline Design build_design(const PanelDataset& panel, const ShockSet& shocks, const LpSpec& spec,
                           bool check_rank = true) {
  const auto& [p, q, r] = spec.lags;
  if (p < 0 || q < 0 || r < 0 || spec.horizon < 0) throw ConfigError("lag orders and horizon must be non-negative");
  const int ny = static_cast<int>(panel.schema.outcomes.size());
  const int nz = static_cast<int>(panel.schema.controls.size());
  const int nx = shocks.size();
  if (spec.outcome < 0 || spec.outcome >= ny) throw ConfigError("outcome index out of range");
  if (r > 0 && nz > 0 && panel.controls.window.empty()) throw DataError("design needs euro-area controls");
  const bool tf = spec.has_transform();
  std::vector<ShockTransform> f;
  for (int s = 0; s < nx; ++s) f.push_back(spec.transform_for(s));
  const int floor = spec.sample_floor_lag;
  const CalendarMonth origin = panel.sample().first;

  Design d;
  for (int s = 0; s < nx; ++s) d.columns.push_back(psi_name(s));
  if (tf)
    for (int s = 0; s < nx; ++s) d.columns.push_back(gamma_name(s));
  for (int i = 1; i <= p; ++i)
    for (int s = 0; s < nx; ++s) d.columns.push_back(psi_name(s, i));
  if (tf)
    for (int i = 1; i <= p; ++i)
      for (int s = 0; s < nx; ++s) d.columns.push_back(gamma_name(s, i));
  for (int i = 1; i <= q; ++i)
    for (const auto& v : panel.schema.outcomes) d.columns.push_back("y_" + v + "_L" + std::to_string(i));
  for (int i = 1; i <= r; ++i)
    for (const auto& v : panel.schema.controls) d.columns.push_back("z_" + v + "_L" + std::to_string(i));
  if (spec.trend.has_linear()) d.columns.push_back("trend");
  if (spec.trend.has_quadratic()) d.columns.push_back("trend2");
  for (const auto& c : panel.countries) d.columns.push_back("alpha_" + c.country);

  const int need_x = std::max(p, floor);
  const int need_y = std::max(q, floor);
  const int need_z = nz > 0 ? std::max(r, floor) : 0;

  std::vector<double> row;
  std::vector<double> data;
  std::vector<double> lead;
  for (std::size_t ci = 0; ci < panel.countries.size(); ++ci) {
    const auto& c = panel.countries[ci];
    for (CalendarMonth t = c.window.first; t <= c.window.last; ++t) {
      if (!c.covers(t + spec.horizon) || !c.covers(t - need_y)) continue;
      if (!shocks.covers(t) || !shocks.covers(t - need_x)) continue;
      if (need_z > 0 && (!panel.controls.covers(t - 1) || !panel.controls.covers(t - need_z))) continue;

      row.clear();
      for (int s = 0; s < nx; ++s) row.push_back(shocks.at(s, t));
      if (tf)
        for (int s = 0; s < nx; ++s) row.push_back(f[static_cast<std::size_t>(s)](shocks.at(s, t)));
      for (int i = 1; i <= p; ++i)
        for (int s = 0; s < nx; ++s) row.push_back(shocks.at(s, t - i));
      if (tf)
        for (int i = 1; i <= p; ++i)
          for (int s = 0; s < nx; ++s) row.push_back(f[static_cast<std::size_t>(s)](shocks.at(s, t - i)));
      for (int i = 1; i <= q; ++i)
        for (int v = 0; v < ny; ++v) row.push_back(c.at(t - i, v));
      for (int i = 1; i <= r; ++i)
        for (int v = 0; v < nz; ++v) row.push_back(panel.controls.at(t - i, v));
      const double tt = static_cast<double>(t - origin);
      if (spec.trend.has_linear()) row.push_back(tt);
      if (spec.trend.has_quadratic()) row.push_back(tt * tt);
      for (std::size_t k = 0; k < panel.countries.size(); ++k) row.push_back(k == ci ? 1.0 : 0.0);

      data.insert(data.end(), row.begin(), row.end());
      lead.push_back(c.at(t + spec.horizon, spec.outcome));
      d.rows.push_back({static_cast<int>(ci), t});
    }
  }
  if (d.rows.empty()) throw DataError("empty design: no (country, month) row has all regressors at horizon " +
                                      std::to_string(spec.horizon));
  const auto n = static_cast<Eigen::Index>(d.rows.size());
  const auto k = static_cast<Eigen::Index>(d.columns.size());
  d.x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(data.data(), n, k);
  d.y = Eigen::Map<Eigen::VectorXd>(lead.data(), n);

  // A country whose window contributes no row leaves an all-zero dummy.
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& name = d.columns[static_cast<std::size_t>(j)];
    if (name.rfind("alpha_", 0) == 0 && d.x.col(j).cwiseAbs().sum() == 0.0) continue;
    keep.push_back(j);
  }
  if (static_cast<Eigen::Index>(keep.size()) != k) {
    Eigen::MatrixXd x2(n, static_cast<Eigen::Index>(keep.size()));
    std::vector<std::string> names;
    for (std::size_t j = 0; j < keep.size(); ++j) {
      x2.col(static_cast<Eigen::Index>(j)) = d.x.col(keep[j]);
      names.push_back(d.columns[static_cast<std::size_t>(keep[j])]);
    }
    d.x = std::move(x2);
    d.columns = std::move(names);
  }

  if (check_rank) {
    if (d.x.rows() < d.x.cols())
      throw NumericalError("design has fewer rows (" + std::to_string(d.x.rows()) + ") than columns (" +
                           std::to_string(d.x.cols()) + ")");
    auto bad = detail::collinear_columns(d.x, d.columns);
    if (!bad.empty()) throw NumericalError("rank-deficient design; collinear columns: " + detail::join(bad));
  }
  return d;
}

struct OlsFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd residuals;
  Eigen::VectorXd leverages;
};

/// Least squares by Householder QR. Leverages are the diagonal of the hat
/// matrix, i.e. the squared row norms of the thin Q factor.
inline OlsFit ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> names = {}) {
  if (x.rows() != y.size()) throw ConfigError("ols_fit: X and y have different row counts");
  if (x.rows() < x.cols()) throw NumericalError("ols_fit: fewer rows than columns");
  if (static_cast<Eigen::Index>(names.size()) != x.cols()) {
    names.clear();
    for (Eigen::Index j = 0; j < x.cols(); ++j) names.push_back("column " + std::to_string(j));
  }
  auto bad = detail::collinear_columns(x, names);
  if (!bad.empty()) throw NumericalError("ols_fit: rank-deficient design (" + detail::join(bad) + ")");

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  OlsFit f;
  f.beta = qr.solve(y);
  f.residuals = y - x * f.beta;
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
  f.leverages = q.rowwise().squaredNorm();
  return f;
}

/// Cluster-robust sandwich (X'X)^-1 [sum_c X_c' u_c u_c' X_c] (X'X)^-1 with
/// jackknife-style residuals u_i / (1 - h_ii).
inline Eigen::MatrixXd hc3_cluster_cov(const Eigen::MatrixXd& x, const Eigen::VectorXd& residuals,
                                       const Eigen::VectorXd& leverages, const std::vector<int>& cluster_ids) {
  const auto n = x.rows();
  const auto k = x.cols();
  if (residuals.size() != n || leverages.size() != n || static_cast<Eigen::Index>(cluster_ids.size()) != n)
    throw ConfigError("hc3_cluster_cov: inconsistent row counts");
  for (Eigen::Index i = 0; i < n; ++i)
    if (leverages(i) >= 1.0 - 1e-12)
      throw NumericalError("leverage of row " + std::to_string(i) + " is 1; HC3 adjustment undefined");

  std::map<int, Eigen::Index> slot;
  for (int id : cluster_ids) slot.emplace(id, 0);
  Eigen::Index g = 0;
  for (auto& [id, s] : slot) s = g++;
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(g, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = residuals(i) / (1.0 - leverages(i));
    scores.row(slot[cluster_ids[static_cast<std::size_t>(i)]]) += u * x.row(i);
  }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::MatrixXd rfac = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  // (X'X)^-1 = R^-1 R^-T
  const Eigen::MatrixXd rinv = rfac.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd bread = rinv * rinv.transpose();
  const Eigen::MatrixXd half = scores * bread;  // g x k
  Eigen::MatrixXd omega = half.transpose() * half;
  return 0.5 * (omega + omega.transpose());
}

/// One fitted projection with its named coefficient layout.
struct FitResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd residuals;
  Eigen::VectorXd leverages;
  Eigen::MatrixXd omega;
  std::vector<std::string> columns;
  int n_obs = 0;
  int n_params = 0;

  Eigen::Index index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<Eigen::Index>(i);
    throw ConfigError("coefficient layout has no '" + name + "'");
  }
  double coef(const std::string& name) const { return beta(index(name)); }
  double se(const std::string& name) const {
    auto i = index(name);
    return std::sqrt(omega(i, i));
  }
  double ssr() const { return residuals.squaredNorm(); }
};

inline FitResult fit_design(const Design& d, ClusterBy cluster = ClusterBy::country) {
  auto ols = ols_fit(d.x, d.y, d.columns);
  FitResult f;
  f.omega = hc3_cluster_cov(d.x, ols.residuals, ols.leverages, d.clusters(cluster));
  f.beta = std::move(ols.beta);
  f.residuals = std::move(ols.residuals);
  f.leverages = std::move(ols.leverages);
  f.columns = d.columns;
  f.n_obs = static_cast<int>(d.x.rows());
  f.n_params = static_cast<int>(d.x.cols());
  return f;
}

inline FitResult fit_lp(const PanelDataset& panel, const ShockSet& shocks, const LpSpec& spec,
                        ClusterBy cluster = ClusterBy::country) {
  return fit_design(build_design(panel, shocks, spec, false), cluster);
}

// ---------------------------------------------------------------------------
// Per-horizon model selection.

enum class Criterion { aic, bic };
enum class PenaltyMode { paper, coefficients };

struct SelectionChoice {
  LagOrder lags;
  TrendSpec trend;
  double value = 0.0;
  int n_obs = 0;
};

struct SelectionOptions {
  Criterion criterion = Criterion::aic;
  PenaltyMode penalty = PenaltyMode::paper;
  std::vector<int> grid = {2, 3, 4, 5, 6};
};

/// Penalty term count: block counts p+q+r+I1+I1*I2+5, or the number of
/// estimated coefficients.
inline double penalty_count(const LagOrder& l, const TrendSpec& t, int n_params, PenaltyMode mode) {
  if (mode == PenaltyMode::coefficients) return n_params;
  return l.p + l.q + l.r + t.count() + 5;
}

inline double information_criterion(double ssr, int n, double k, Criterion c) {
  const double fit = n * std::log(ssr / n);
  return fit + (c == Criterion::aic ? 2.0 : std::log(static_cast<double>(n))) * k;
}

namespace detail {

struct GridPoint {
  LagOrder lags;
  TrendSpec trend;
};

inline std::vector<GridPoint> selection_grid(const std::vector<int>& a) {
  std::vector<GridPoint> g;
  for (int p : a)
    for (int q : a)
      for (int r : a)
        for (int i1 = 0; i1 <= 1; ++i1)
          for (int i2 = 0; i2 <= 1; ++i2) g.push_back({{p, q, r}, {i1 == 1, i2 == 1}});
  return g;
}

}  // namespace detail

/// Evaluates the information criterion of the linear specification at every
/// point of grid^3 x {0,1}^2 on one common sample (every block trimmed to the
/// largest lag in the grid) and returns the minimizer. Ties go to the
/// lexicographically smallest (p, q, r, I1, I2).
inline SelectionChoice select_specification(const PanelDataset& panel, const ShockSet& shocks, int outcome,
                                            int horizon, const SelectionOptions& opt = {}) {
  if (opt.grid.empty()) throw ConfigError("selection grid is empty");
  auto grid = opt.grid;
  std::sort(grid.begin(), grid.end());
  const int lmax = grid.back();

  LpSpec full{outcome, horizon, {lmax, lmax, lmax}, {true, true}, ShockTransform::identity(), {}, lmax};
  Design d;
  try {
    d = build_design(panel, shocks, full, false);
  } catch (const DataError& e) {
    throw DataError(std::string("selection grid infeasible: ") + e.what());
  }
  const auto n = d.x.rows();
  // Sweep the country intercepts out of every column (Frisch-Waugh), then
  // work with the scaled Gram matrix.
  Eigen::MatrixXd x = d.x;
  Eigen::VectorXd y = d.y;
  std::vector<Eigen::Index> alpha_cols;
  std::map<int, std::vector<Eigen::Index>> members;
  for (Eigen::Index i = 0; i < n; ++i) members[d.rows[static_cast<std::size_t>(i)].country].push_back(i);
  for (auto& [c, idx] : members) {
    Eigen::RowVectorXd mx = Eigen::RowVectorXd::Zero(x.cols());
    double my = 0.0;
    for (auto i : idx) {
      mx += x.row(i);
      my += y(i);
    }
    mx /= static_cast<double>(idx.size());
    my /= static_cast<double>(idx.size());
    for (auto i : idx) {
      x.row(i) -= mx;
      y(i) -= my;
    }
  }
  std::map<std::string, Eigen::Index> pos;
  for (std::size_t j = 0; j < d.columns.size(); ++j) pos[d.columns[j]] = static_cast<Eigen::Index>(j);
  const int n_alpha = static_cast<int>(members.size());

  Eigen::VectorXd norms = x.colwise().norm();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (d.columns[static_cast<std::size_t>(j)].rfind("alpha_", 0) == 0) continue;
    if (!(norms(j) > 0)) throw NumericalError("selection grid infeasible: column " + d.columns[static_cast<std::size_t>(j)] + " is constant within countries");
    x.col(j) /= norms(j);
  }
  const Eigen::MatrixXd gram = x.transpose() * x;
  const Eigen::VectorXd xty = x.transpose() * y;
  const double yy = y.squaredNorm();

  const int nx = shocks.size();
  const int ny = static_cast<int>(panel.schema.outcomes.size());
  const int nz = static_cast<int>(panel.schema.controls.size());
  auto points = detail::selection_grid(grid);
  std::vector<double> values(points.size());
  std::vector<int> params(points.size());
  std::vector<std::string> failure(points.size());
  parallel_for(points.size(), [&](std::size_t gi) {
    const auto& [lags, trend] = points[gi];
    std::vector<Eigen::Index> cols;
    for (int s = 0; s < nx; ++s) cols.push_back(pos.at(psi_name(s)));
    for (int i = 1; i <= lags.p; ++i)
      for (int s = 0; s < nx; ++s) cols.push_back(pos.at(psi_name(s, i)));
    for (int i = 1; i <= lags.q; ++i)
      for (int v = 0; v < ny; ++v) cols.push_back(pos.at("y_" + panel.schema.outcomes[static_cast<std::size_t>(v)] + "_L" + std::to_string(i)));
    for (int i = 1; i <= lags.r; ++i)
      for (int v = 0; v < nz; ++v) cols.push_back(pos.at("z_" + panel.schema.controls[static_cast<std::size_t>(v)] + "_L" + std::to_string(i)));
    if (trend.has_linear()) cols.push_back(pos.at("trend"));
    if (trend.has_quadratic()) cols.push_back(pos.at("trend2"));
    const auto k = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd g(k, k);
    Eigen::VectorXd c(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      c(a) = xty(cols[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < k; ++b) g(a, b) = gram(cols[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) {
      failure[gi] = "rank-deficient design at grid point";
      return;
    }
    const double ssr = std::max(yy - c.dot(llt.solve(c)), std::numeric_limits<double>::min());
    const int n_params = static_cast<int>(k) + n_alpha;
    params[gi] = n_params;
    values[gi] = information_criterion(ssr, static_cast<int>(n), penalty_count(lags, trend, n_params, opt.penalty),
                                       opt.criterion);
  });

  std::size_t best = points.size();
  for (std::size_t gi = 0; gi < points.size(); ++gi) {
    if (!failure[gi].empty()) throw NumericalError("selection grid infeasible: " + failure[gi]);
    if (best == points.size() || values[gi] < values[best]) best = gi;
  }
  return {points[best].lags, points[best].trend, values[best], static_cast<int>(n)};
}

inline SelectionChoice aic_select(const PanelDataset& panel, const ShockSet& shocks, int outcome, int horizon,
                                  PenaltyMode penalty = PenaltyMode::paper) {
  return select_specification(panel, shocks, outcome, horizon, {Criterion::aic, penalty, {2, 3, 4, 5, 6}});
}

inline SelectionChoice bic_select(const PanelDataset& panel, const ShockSet& shocks, int outcome, int horizon,
                                  PenaltyMode penalty = PenaltyMode::paper) {
  return select_specification(panel, shocks, outcome, horizon, {Criterion::bic, penalty, {2, 3, 4, 5, 6}});
}

/// Per-horizon choices for one outcome. Horizons beyond the last selected
/// one reuse the last choice.
struct SelectionResult {
  std::string outcome;
  std::vector<SelectionChoice> per_horizon;

  const SelectionChoice& at(int h) const {
    if (per_horizon.empty()) throw ConfigError("selection result is empty");
    return per_horizon[static_cast<std::size_t>(std::min<int>(h, static_cast<int>(per_horizon.size()) - 1))];
  }
};

/// Rows q, p, r, T against columns h = 0..H.
inline std::string emit_selection_csv(const SelectionResult& s) {
  std::ostringstream out;
  out << "h";
  for (std::size_t h = 0; h < s.per_horizon.size(); ++h) out << ',' << h;
  out << "\nq";
  for (const auto& c : s.per_horizon) out << ',' << c.lags.q;
  out << "\np";
  for (const auto& c : s.per_horizon) out << ',' << c.lags.p;
  out << "\nr";
  for (const auto& c : s.per_horizon) out << ',' << c.lags.r;
  out << "\nT";
  for (const auto& c : s.per_horizon) out << ',' << c.trend.label();
  out << '\n';
  return out.str();
}

inline SelectionResult read_selection_csv(const csv::Table& t, std::string outcome = {}) {
  if (t.header.empty() || t.header[0] != "h" || t.rows.size() != 4) throw DataError("selection CSV must have rows q,p,r,T");
  SelectionResult s{std::move(outcome), {}};
  const std::size_t nh = t.header.size() - 1;
  const std::array<std::string, 4> labels{"q", "p", "r", "T"};
  for (std::size_t i = 0; i < 4; ++i)
    if (t.rows[i][0] != labels[i]) throw DataError("selection CSV row " + std::to_string(i) + " must be " + labels[i]);
  for (std::size_t h = 1; h <= nh; ++h) {
    SelectionChoice c;
    c.lags.q = std::stoi(t.rows[0][h]);
    c.lags.p = std::stoi(t.rows[1][h]);
    c.lags.r = std::stoi(t.rows[2][h]);
    const auto& tr = t.rows[3][h];
    if (tr == "0") c.trend = {false, false};
    else if (tr == "t") c.trend = {true, false};
    else if (tr == "t2") c.trend = {true, true};
    else throw DataError("selection CSV: unknown trend label '" + tr + "'");
    s.per_horizon.push_back(c);
  }
  return s;
}

}  // namespace nlirf
