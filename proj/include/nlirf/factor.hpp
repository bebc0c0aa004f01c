#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "calendar.hpp"
#include "csv.hpp"
#include "error.hpp"
#include "random.hpp"

namespace nlirf {

inline constexpr std::array<std::string_view, 8> kInstrumentNames = {
    "ois1y", "ois2y", "ois5y", "ois10y", "it2y_spread", "it5y_spread", "it10y_spread", "stoxx50"};

/// High-frequency surprises: one row per conference, one column per
/// instrument in the fixed order of kInstrumentNames.
struct SurprisePanel {
  std::vector<EventDate> dates;
  Eigen::MatrixXd values;
};

inline SurprisePanel read_surprises(const csv::Table& t) {
  std::vector<std::string> header{"date"};
  for (auto n : kInstrumentNames) header.emplace_back(n);
  csv::expect_header(t, header, "surprise CSV");
  SurprisePanel s{{}, Eigen::MatrixXd(static_cast<Eigen::Index>(t.rows.size()), 8)};
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    s.dates.push_back(EventDate::parse(t.rows[i][0]));
    for (std::size_t c = 0; c < 8; ++c) {
      if (t.rows[i][c + 1].empty())
        throw DataError("surprise CSV: missing " + std::string(kInstrumentNames[c]) + " on " + t.rows[i][0]);
      s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = csv::parse_double(t.rows[i][c + 1]);
    }
  }
  return s;
}

inline std::string emit_surprises(const SurprisePanel& s) {
  std::ostringstream out;
  out << "date";
  for (auto n : kInstrumentNames) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < s.dates.size(); ++i) {
    out << s.dates[i].str();
    for (Eigen::Index c = 0; c < s.values.cols(); ++c)
      out << ',' << csv::format_double(s.values(static_cast<Eigen::Index>(i), c));
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Gaussian factor analysis by EM.

struct FactorOptions {
  int factors = 3;
  int max_iter = 10000;
  double tol = 1e-10;  // relative log-likelihood change
  double variance_floor = 1e-6;
};

struct FactorModel {
  Eigen::MatrixXd loadings;            // instruments x factors
  Eigen::VectorXd specific_variances;  // diagonal of Var(e)
  Eigen::MatrixXd scores;              // events x factors (regression method)
  Eigen::VectorXd means;
  std::vector<double> loglik_trace;
  int iterations = 0;
  bool converged = false;
  bool heywood = false;
  std::vector<std::string> warnings;

  Eigen::MatrixXd implied_covariance() const {
    return loadings * loadings.transpose() + Eigen::MatrixXd(specific_variances.asDiagonal());
  }
};

namespace detail {

inline double gaussian_loglik(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& sample_cov, double n) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw NumericalError("factor model covariance is not positive definite");
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double trace = llt.solve(sample_cov).trace();
  const auto p = static_cast<double>(sigma.rows());
  return -0.5 * n * (p * std::log(2.0 * std::numbers::pi) + logdet + trace);
}

}  // namespace detail

/// Maximum-likelihood factor analysis with diagonal specific covariance,
/// fitted by expectation-maximization on the centered data. Specific
/// variances that fall below `variance_floor` are held at the floor and
/// reported as a Heywood case.
inline FactorModel estimate_factor_mle(const Eigen::MatrixXd& data, const FactorOptions& opt = {}) {
  const auto n = data.rows();
  const auto p = data.cols();
  const int k = opt.factors;
  if (n < 30) throw DataError("factor estimation needs at least 30 events, got " + std::to_string(n));
  if (k < 1 || k >= p) throw ConfigError("number of factors must be in [1, " + std::to_string(p - 1) + "]");
  if (!data.allFinite()) throw DataError("surprise panel contains non-finite values");

  FactorModel fm;
  fm.means = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - fm.means.transpose();
  const Eigen::MatrixXd s = centered.transpose() * centered / static_cast<double>(n);

  // Principal-component start.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  Eigen::MatrixXd lambda(p, k);
  for (int j = 0; j < k; ++j) {
    const double ev = std::max(eig.eigenvalues()(p - 1 - j), 0.0);
    lambda.col(j) = eig.eigenvectors().col(p - 1 - j) * std::sqrt(ev);
  }
  Eigen::VectorXd psi = (s.diagonal() - lambda.rowwise().squaredNorm()).cwiseMax(0.5 * s.diagonal());
  psi = psi.cwiseMax(opt.variance_floor);

  const Eigen::MatrixXd ik = Eigen::MatrixXd::Identity(k, k);
  double ll_prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iter; ++it) {
    Eigen::MatrixXd sigma = lambda * lambda.transpose() + Eigen::MatrixXd(psi.asDiagonal());
    const double ll = detail::gaussian_loglik(sigma, s, static_cast<double>(n));
    fm.loglik_trace.push_back(ll);
    fm.iterations = it;
    if (std::abs(ll - ll_prev) <= opt.tol * (1.0 + std::abs(ll))) {
      fm.converged = true;
      break;
    }
    ll_prev = ll;

    // E-step moments.
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    const Eigen::MatrixXd beta = llt.solve(lambda).transpose();  // k x p
    const Eigen::MatrixXd ezz = ik - beta * lambda + beta * s * beta.transpose();
    // M-step.
    lambda = (s * beta.transpose()) * ezz.inverse();
    psi = (s - lambda * beta * s).diagonal();
    for (Eigen::Index i = 0; i < p; ++i) {
      if (psi(i) < opt.variance_floor) {
        psi(i) = opt.variance_floor;
        fm.heywood = true;
      }
    }
  }
  if (!fm.converged)
    fm.warnings.push_back("EM did not converge after " + std::to_string(opt.max_iter) + " iterations");
  if (fm.heywood) fm.warnings.push_back("Heywood case: a specific variance was floored");

  fm.loadings = lambda;
  fm.specific_variances = psi;
  const Eigen::MatrixXd sigma = fm.implied_covariance();
  fm.scores = centered * Eigen::LLT<Eigen::MatrixXd>(sigma).solve(lambda);
  return fm;
}

// ---------------------------------------------------------------------------
// Sign-restricted rotations.

/// Haar-distributed draw from O(3): QR of a Gaussian matrix with the signs
/// fixed so that R has a positive diagonal.
inline Eigen::Matrix3d sample_orthonormal(Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::Matrix3d g;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) g(r, c) = normal(rng);
  Eigen::HouseholderQR<Eigen::Matrix3d> qr(g);
  Eigen::Matrix3d q = qr.householderQ();
  const Eigen::Matrix3d rr = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < 3; ++i)
    if (rr(i, i) < 0) q.col(i) = -q.col(i);
  return q;
}

struct RotationCandidate {
  Eigen::Matrix3d q;
  bool accepted = false;
};

enum class Sign { pos, neg, any, neg_dominant };

/// Grid of sign restrictions on rotated loadings (instruments x factors).
class SignRestrictionMatrix {
 public:
  SignRestrictionMatrix(int rows, int cols, std::vector<Sign> cells) : rows_(rows), cols_(cols), cells_(std::move(cells)) {
    if (static_cast<int>(cells_.size()) != rows * cols) throw ConfigError("sign restriction grid has wrong size");
    if (rows == 8 && cols == 3) {
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
          if (at(r, c) == Sign::neg_dominant && !(c == 2 && r >= 4 && r <= 6))
            throw ConfigError("dominance restriction allowed only on spread instruments of the third factor");
    }
  }

  /// The pattern used for (monetary, information, spread) factors.
  static SignRestrictionMatrix standard() {
    using enum Sign;
    return SignRestrictionMatrix(8, 3,
                                 {pos, pos, pos,                //
                                  pos, pos, pos,                //
                                  pos, pos, pos,                //
                                  pos, any, pos,                //
                                  pos, neg, neg_dominant,       //
                                  pos, neg, neg_dominant,       //
                                  pos, neg, neg_dominant,       //
                                  neg, pos, pos});
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Sign at(int r, int c) const { return cells_[static_cast<std::size_t>(r * cols_ + c)]; }

 private:
  int rows_;
  int cols_;
  std::vector<Sign> cells_;
};

/// True iff every cell of `rotated` satisfies its restriction. A dominant
/// negative cell must be negative and strictly larger in magnitude than
/// every other entry of its row.
inline bool check_sign_restrictions(const Eigen::MatrixXd& rotated, const SignRestrictionMatrix& restrictions) {
  if (rotated.rows() != restrictions.rows() || rotated.cols() != restrictions.cols())
    throw ConfigError("loading matrix shape does not match the sign restrictions");
  for (int r = 0; r < restrictions.rows(); ++r) {
    for (int c = 0; c < restrictions.cols(); ++c) {
      const double v = rotated(r, c);
      switch (restrictions.at(r, c)) {
        case Sign::pos:
          if (!(v > 0)) return false;
          break;
        case Sign::neg:
          if (!(v < 0)) return false;
          break;
        case Sign::any:
          break;
        case Sign::neg_dominant:
          if (!(v < 0)) return false;
          for (int o = 0; o < restrictions.cols(); ++o)
            if (o != c && !(std::abs(v) > std::abs(rotated(r, o)))) return false;
          break;
      }
    }
  }
  return true;
}

struct Identification {
  Eigen::MatrixXd rotated_loadings;  // loadings * Q*
  Eigen::Matrix3d rotation;          // Q*
  Eigen::MatrixXd median_loadings;   // entrywise median over accepted rotations
  Eigen::MatrixXd factors;           // events x 3, standardized Q*' f_t
  std::size_t selected_index = 0;    // position of Q* in the scan order
  std::size_t accepted = 0;
  std::size_t n_draws = 0;
  double acceptance_rate = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline double median_inplace(std::vector<double>& v) {
  const auto n = v.size();
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

/// Columns centered and scaled to unit sample variance (n - 1).
inline Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x.rowwise() - x.colwise().mean();
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double sd = std::sqrt(out.col(c).squaredNorm() / static_cast<double>(out.rows() - 1));
    if (!(sd > 0)) throw NumericalError("identified factor has zero variance");
    out.col(c) /= sd;
  }
  return out;
}

}  // namespace detail

/// Accepts the candidates whose rotated loadings satisfy the restrictions,
/// takes the entrywise median M of the accepted rotated loadings and picks
/// the accepted rotation nearest to M in Frobenius norm. Candidates are
/// scanned in order; ties go to the earlier candidate.
inline Identification identify_from_candidates(const FactorModel& model, const SignRestrictionMatrix& restrictions,
                                               std::span<const Eigen::Matrix3d> candidates) {
  if (model.loadings.cols() != 3) throw ConfigError("identification expects a 3-factor model");
  Identification id;
  id.n_draws = candidates.size();

  std::vector<char> ok(candidates.size(), 0);
  parallel_for(candidates.size(), [&](std::size_t i) {
    ok[i] = check_sign_restrictions(model.loadings * candidates[i], restrictions) ? 1 : 0;
  });
  std::vector<std::size_t> accepted;
  for (std::size_t i = 0; i < ok.size(); ++i)
    if (ok[i]) accepted.push_back(i);
  id.accepted = accepted.size();
  id.acceptance_rate = candidates.empty() ? 0.0 : static_cast<double>(accepted.size()) / static_cast<double>(candidates.size());
  if (accepted.empty())
    throw NumericalError("no rotation satisfied the sign restrictions (acceptance rate 0 over " +
                         std::to_string(candidates.size()) + " draws)");
  if (id.acceptance_rate < 1e-3)
    id.warnings.push_back("low acceptance rate " + std::to_string(id.acceptance_rate));

  const auto p = model.loadings.rows();
  id.median_loadings.resize(p, 3);
  std::vector<double> cell(accepted.size());
  for (Eigen::Index r = 0; r < p; ++r) {
    for (int c = 0; c < 3; ++c) {
      for (std::size_t a = 0; a < accepted.size(); ++a) cell[a] = (model.loadings.row(r) * candidates[accepted[a]].col(c))(0);
      id.median_loadings(r, c) = detail::median_inplace(cell);
    }
  }

  double best = std::numeric_limits<double>::infinity();
  for (auto i : accepted) {
    const double d = (model.loadings * candidates[i] - id.median_loadings).norm();
    if (d < best) {
      best = d;
      id.selected_index = i;
    }
  }
  id.rotation = candidates[id.selected_index];
  id.rotated_loadings = model.loadings * id.rotation;
  id.factors = detail::standardize_columns(model.scores * id.rotation);
  return id;
}

/// Draws `n_draws` Haar rotations (draw i from stream i of `seed`) and
/// identifies the factors from them.
inline Identification identify_factors(const FactorModel& model, const SignRestrictionMatrix& restrictions,
                                       std::size_t n_draws, std::uint64_t seed) {
  if (n_draws < 1000) throw ConfigError("identification needs at least 1000 rotation draws");
  std::vector<Eigen::Matrix3d> candidates(n_draws);
  parallel_for(n_draws, [&](std::size_t i) {
    auto rng = stream_rng(seed, i);
    candidates[i] = sample_orthonormal(rng);
  });
  auto id = identify_from_candidates(model, restrictions, candidates);
  id.seed = seed;
  return id;
}

}  // namespace nlirf
