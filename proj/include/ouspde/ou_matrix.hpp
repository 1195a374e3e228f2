#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "ouspde/basis.hpp"
#include "ouspde/common.hpp"
#include "ouspde/fit.hpp"

namespace ouspde {

/// Inverse relaxation rate G(lambda, t) = 2 lambda / (1 - e^{-2 lambda t}),
/// continued to 1/t at lambda = 0.
inline double rate_function(double lambda, double t) {
  require(lambda >= 0.0, "rate_function: negative rate");
  require(t > 0.0, "rate_function: time must be positive");
  return 1.0 / (t * phi1(2.0 * lambda * t));
}

/// Diagonal envelope L(j, t) = (1 + lambda_j t) / t controlling precision
/// diagonals from below (up to the spectral cap).
inline double precision_envelope(double lambda, double t) {
  require(t > 0.0, "precision_envelope: time must be positive");
  return (1.0 + lambda * t) / t;
}

/// Band operator norm ||m||_s = max(sup row abs sum, sup col abs sum);
/// dominates the spectral norm.
inline double schur_norm(const Eigen::MatrixXd& m) {
  double rows = 0.0, cols = 0.0;
  for (int i = 0; i < m.rows(); ++i) rows = std::max(rows, m.row(i).cwiseAbs().sum());
  for (int j = 0; j < m.cols(); ++j) cols = std::max(cols, m.col(j).cwiseAbs().sum());
  return std::max(rows, cols);
}

/// Time-integrated relaxation covariance of a frozen mode covariance `base`:
///   a(t)_ij = base_ij (1 - e^{-(lambda_i + lambda_j) t}) / (lambda_i + lambda_j),
/// its whitening by the rate diagonal, and both precisions.
struct TimeCov {
  double t = 0.0;
  Eigen::MatrixXd base;                // a
  Eigen::MatrixXd time_integrated;     // a(t)
  Eigen::MatrixXd whitened;            // G^{1/2} a(t) G^{1/2}
  Eigen::MatrixXd precision;           // a(t)^{-1}
  Eigen::MatrixXd whitened_precision;  // whitened^{-1}
  Eigen::VectorXd rate_diag;           // G_ii(t)
  double logdet_time_integrated = 0.0;
  double logdet_whitened = 0.0;
};

/// Fills the covariance half of a TimeCov (no inversions).
inline void time_integrated_entries(const Eigen::MatrixXd& base, const Eigen::VectorXd& lambdas,
                                    double t, Eigen::MatrixXd& out) {
  const int n = static_cast<int>(base.rows());
  out.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out(i, j) = base(i, j) * t * phi1((lambdas[i] + lambdas[j]) * t);
}

inline TimeCov time_integrated_cov(const Eigen::MatrixXd& base, const BasisSpec& spec, double t) {
  require(base.rows() == base.cols(), "time_integrated_cov: base must be square");
  require(base.rows() == spec.dim(), "time_integrated_cov: base does not match the spec");
  require(t > 0.0, "time_integrated_cov: time must be positive");
  TimeCov tc;
  tc.t = t;
  tc.base = base;
  time_integrated_entries(base, spec.lambdas, t, tc.time_integrated);
  const int n = spec.dim();
  tc.rate_diag.resize(n);
  for (int i = 0; i < n; ++i) tc.rate_diag[i] = rate_function(spec.lambdas[i], t);
  const Eigen::VectorXd sqrt_rate = tc.rate_diag.cwiseSqrt();
  tc.whitened = sqrt_rate.asDiagonal() * tc.time_integrated * sqrt_rate.asDiagonal();

  Eigen::LLT<Eigen::MatrixXd> llt(tc.time_integrated);
  if (llt.info() != Eigen::Success)
    throw definiteness_error("time-integrated covariance is not positive definite");
  tc.precision = llt.solve(Eigen::MatrixXd::Identity(n, n));
  tc.logdet_time_integrated = 0.0;
  for (int i = 0; i < n; ++i)
    tc.logdet_time_integrated += 2.0 * std::log(llt.matrixL()(i, i));

  // whitened^{-1} = g^{1/2} precision g^{1/2} with g = G^{-1}.
  const Eigen::VectorXd inv_sqrt_rate = sqrt_rate.cwiseInverse();
  tc.whitened_precision = inv_sqrt_rate.asDiagonal() * tc.precision * inv_sqrt_rate.asDiagonal();
  tc.logdet_whitened = tc.logdet_time_integrated;
  for (int i = 0; i < n; ++i) tc.logdet_whitened += std::log(tc.rate_diag[i]);
  return tc;
}

/// Schur complement eliminating the LAST coordinate of a precision matrix:
/// the precision of the remaining block after marginalizing that coordinate.
inline Eigen::MatrixXd schur_complement_reduce(const Eigen::MatrixXd& precision) {
  const int n = static_cast<int>(precision.rows());
  require(n >= 2 && precision.cols() == n, "schur_complement_reduce: need a square matrix, dim >= 2");
  const double pivot = precision(n - 1, n - 1);
  require(pivot > 0.0, "schur_complement_reduce: last diagonal entry must be positive");
  Eigen::MatrixXd b = precision.topLeftCorner(n - 1, n - 1);
  b.noalias() -= precision.topRightCorner(n - 1, 1) * precision.bottomLeftCorner(1, n - 1) / pivot;
  return b;
}

/// log of the Gaussian weight Q_m(w, C) = (2 pi)^{-m/2} det(C)^{1/2} e^{-<w, Cw>/2}
/// with C the PRECISION matrix.
inline double log_gaussian_density(const Eigen::VectorXd& w, const Eigen::MatrixXd& precision) {
  const int m = static_cast<int>(w.size());
  require(precision.rows() == m && precision.cols() == m,
          "log_gaussian_density: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success)
    throw definiteness_error("gaussian precision is not positive definite");
  double logdet = 0.0;
  for (int i = 0; i < m; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  const double quad = (llt.matrixL().transpose() * w).squaredNorm();
  return -0.5 * m * std::log(2.0 * kPi) + 0.5 * logdet - 0.5 * quad;
}

inline double gaussian_density(const Eigen::VectorXd& w, const Eigen::MatrixXd& precision) {
  return std::exp(log_gaussian_density(w, precision));
}

/// Mean and variance of the last coordinate given the first m, for a joint
/// Gaussian with precision C of dimension m+1 and observed head w (length m).
inline std::pair<double, double> conditional_gaussian_params(const Eigen::MatrixXd& precision,
                                                             const Eigen::VectorXd& w) {
  const int n = static_cast<int>(precision.rows());
  require(n >= 2 && precision.cols() == n, "conditional_gaussian_params: bad precision");
  require(static_cast<int>(w.size()) == n - 1, "conditional_gaussian_params: head length");
  const double pivot = precision(n - 1, n - 1);
  require(pivot > 0.0, "conditional_gaussian_params: pivot must be positive");
  double cross = 0.0;
  for (int i = 0; i < n - 1; ++i) cross += w[i] * precision(i, n - 1);
  return {-cross / pivot, 1.0 / pivot};
}

/// Comparison bounds between the whitened time-integrated covariances of two
/// frozen mode covariances sharing a spectral floor Lambda0.
struct RatioBounds {
  double schur_gap = 0.0;      // ||a~ - b~||_s
  double schur_budget = 0.0;   // ||a - b||_s
  double op_gap = 0.0;         // ||A~ - B~||_2
  double op_budget = 0.0;      // Lambda0^{-2} ||a - b||_s
  double det_dev = 0.0;        // |det(b~)/det(a~) - 1|
  double det_budget = 0.0;     // theta e^theta
  double density_dev = 0.0;    // |Q(w, A~)/Q(w, B~) - 1|
  double density_scale = 0.0;  // phi + theta
  double lambda0 = 0.0;
  bool pass = false;
};

inline RatioBounds ratio_bounds_check(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                      const BasisSpec& spec, double t, const Eigen::VectorXd& w) {
  const TimeCov ta = time_integrated_cov(a, spec, t);
  const TimeCov tb = time_integrated_cov(b, spec, t);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(a), eb(b);
  const double lambda0 = std::min(ea.eigenvalues().minCoeff(), eb.eigenvalues().minCoeff());
  require(lambda0 > 0.0, "ratio_bounds_check: spectral floor must be positive");

  RatioBounds rb;
  rb.lambda0 = lambda0;
  rb.schur_gap = schur_norm(ta.whitened - tb.whitened);
  rb.schur_budget = schur_norm(a - b);
  rb.op_gap = (ta.whitened_precision - tb.whitened_precision).operatorNorm();
  rb.op_budget = rb.schur_budget / (lambda0 * lambda0);
  const double theta = spec.dim() * rb.schur_budget / lambda0;
  rb.det_dev = std::fabs(std::expm1(tb.logdet_whitened - ta.logdet_whitened));
  rb.det_budget = theta * std::exp(theta);
  const double log_qa = log_gaussian_density(w, ta.whitened_precision);
  const double log_qb = log_gaussian_density(w, tb.whitened_precision);
  rb.density_dev = std::fabs(std::expm1(log_qa - log_qb));
  const double phi = w.squaredNorm() * rb.schur_budget / (lambda0 * lambda0);
  rb.density_scale = phi + theta;
  const double tol = 1e-9;
  rb.pass = rb.schur_gap <= rb.schur_budget + tol && rb.op_gap <= rb.op_budget + tol &&
            rb.det_dev <= rb.det_budget + tol;
  return rb;
}

/// Off-diagonal decay fit |m_ij| <= C / (1 + |i-j|^gamma): fits the
/// per-offset maxima, dropping offsets whose maximum sits at roundoff floor
/// relative to the main diagonal. `exponent` is the decay rate; `constant`
/// is the sup-form constant max_d max_ij |m_ij| (1 + d^gamma).
inline DecayFit jaffard_decay_fit(const Eigen::MatrixXd& m, double gamma) {
  const int n = static_cast<int>(m.rows());
  require(n >= 4 && m.cols() == n, "jaffard_decay_fit: need a square matrix, dim >= 4");
  double diag_max = 0.0;
  for (int i = 0; i < n; ++i) diag_max = std::max(diag_max, std::fabs(m(i, i)));
  std::vector<double> offset_max(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      offset_max[std::abs(i - j)] = std::max(offset_max[std::abs(i - j)], std::fabs(m(i, j)));
  std::vector<std::pair<double, double>> data;
  for (int d = 1; d < n; ++d) data.push_back({static_cast<double>(d), offset_max[d]});
  DecayFit fit = fit_decay(data, 1e-13 * diag_max, gamma - 0.25);
  double c = offset_max[0];  // d = 0 term: 1 + 0^gamma = 1
  for (int d = 1; d < n; ++d)
    if (offset_max[d] >= 1e-13 * diag_max)
      c = std::max(c, offset_max[d] * (1.0 + std::pow(static_cast<double>(d), gamma)));
  fit.constant = c;
  return fit;
}

/// Margins A(t)_jj - L(j,j,t) / (2 Lambda1); nonnegative when the precision
/// diagonal dominates its envelope lower bound.
inline Eigen::VectorXd precision_diag_lower_margin(const TimeCov& tc, const BasisSpec& spec,
                                                   double lambda1) {
  require(lambda1 > 0.0, "precision_diag_lower_margin: cap must be positive");
  const int n = spec.dim();
  Eigen::VectorXd margin(n);
  for (int j = 0; j < n; ++j)
    margin[j] = tc.precision(j, j) - precision_envelope(spec.lambdas[j], tc.t) / (2.0 * lambda1);
  return margin;
}

}  // namespace ouspde
