#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "ouspde/common.hpp"
#include "ouspde/fit.hpp"

namespace ouspde {

/// Neumann heat eigenvalue on [0,1]: lambda_n = n^2 pi^2 / 2.
inline double eigenvalue(int n) {
  require(n >= 0, "eigenvalue: mode must be nonnegative");
  return 0.5 * static_cast<double>(n) * static_cast<double>(n) * kPi * kPi;
}

/// Orthonormal cosine mode: e_0 = 1, e_n(x) = sqrt(2) cos(n pi x).
inline double basis_eval(int n, double x) {
  require(n >= 0, "basis_eval: mode must be nonnegative");
  require(x >= 0.0 && x <= 1.0, "basis_eval: x outside [0,1]");
  if (n == 0) return 1.0;
  return std::sqrt(2.0) * std::cos(n * kPi * x);
}

/// Discretization contract: truncation level K (modes 0..K) and an even
/// number M of uniform quadrature panels on [0,1].
struct BasisSpec {
  int truncation = 0;
  int grid_points = 4096;
  Eigen::VectorXd lambdas;  // heat eigenvalues for modes 0..K

  static BasisSpec make(int K, int M = 4096) {
    require(K >= 0, "BasisSpec: truncation must be nonnegative");
    require(M >= 256 && M % 2 == 0, "BasisSpec: grid must be even and at least 256 panels");
    require(4 * K <= M, "BasisSpec: grid too coarse for the requested truncation");
    BasisSpec spec;
    spec.truncation = K;
    spec.grid_points = M;
    spec.lambdas.resize(K + 1);
    for (int n = 0; n <= K; ++n) spec.lambdas[n] = eigenvalue(n);
    return spec;
  }
  int dim() const { return truncation + 1; }
};

/// Values of a function at the M+1 uniform nodes x_i = i/M.
struct GridFunction {
  Eigen::VectorXd values;

  int panels() const { return static_cast<int>(values.size()) - 1; }
  double x(int i) const { return static_cast<double>(i) / panels(); }

  static GridFunction sample(const std::function<double(double)>& f, int M) {
    require(M >= 2 && M % 2 == 0, "GridFunction: panel count must be even and positive");
    GridFunction g;
    g.values.resize(M + 1);
    for (int i = 0; i <= M; ++i) g.values[i] = f(static_cast<double>(i) / M);
    return g;
  }
};

/// Coefficient vector (x_0, ..., x_K) against the cosine modes.
struct SpectralState {
  Eigen::VectorXd coeffs;
  int truncation() const { return static_cast<int>(coeffs.size()) - 1; }
};

/// Composite Simpson weights on [0,1] with M panels (M+1 nodes). Because
/// Simpson = (4 T_h - T_{2h}) / 3 and the trapezoid rule annihilates integer
/// cosine frequencies 0 < m < 2M exactly, the discrete cosine modes stay
/// orthonormal to roundoff under these weights.
inline Eigen::VectorXd simpson_weights(int M) {
  require(M >= 2 && M % 2 == 0, "simpson_weights: panel count must be even and positive");
  Eigen::VectorXd w(M + 1);
  const double h = 1.0 / M;
  w[0] = w[M] = h / 3.0;
  for (int i = 1; i < M; ++i) w[i] = (i % 2 == 1) ? 4.0 * h / 3.0 : 2.0 * h / 3.0;
  return w;
}

/// Integral of grid values over [0,1] by compensated Simpson.
inline double simpson_integral(const Eigen::VectorXd& values) {
  const int M = static_cast<int>(values.size()) - 1;
  const Eigen::VectorXd w = simpson_weights(M);
  KahanSum acc;
  for (int i = 0; i <= M; ++i) acc.add(w[i] * values[i]);
  return acc.value();
}

/// <f, e_n> by compensated Simpson on f's own grid.
inline double project_mode(const GridFunction& f, int n) {
  const int M = f.panels();
  require(M >= 2, "project_mode: empty grid");
  const Eigen::VectorXd w = simpson_weights(M);
  const double scale = (n == 0) ? 1.0 : std::sqrt(2.0);
  KahanSum acc;
  for (int i = 0; i <= M; ++i)
    acc.add(w[i] * f.values[i] * scale * std::cos(n * kPi * f.x(i)));
  return acc.value();
}

/// Coefficients 0..K of f against the cosine modes.
inline SpectralState project(const GridFunction& f, const BasisSpec& spec) {
  require(f.panels() == spec.grid_points, "project: grid does not match the spec");
  SpectralState s;
  s.coeffs.resize(spec.dim());
  for (int n = 0; n <= spec.truncation; ++n) s.coeffs[n] = project_mode(f, n);
  return s;
}

/// Partial sum sum_n x_n e_n on the spec grid.
inline GridFunction reconstruct(const SpectralState& s, const BasisSpec& spec) {
  require(s.truncation() == spec.truncation, "reconstruct: state does not match the spec");
  const int M = spec.grid_points;
  GridFunction g;
  g.values = Eigen::VectorXd::Constant(M + 1, s.coeffs[0]);
  const double r2 = std::sqrt(2.0);
  for (int n = 1; n <= spec.truncation; ++n) {
    const double c = r2 * s.coeffs[n];
    if (c == 0.0) continue;
    for (int i = 0; i <= M; ++i) g.values[i] += c * std::cos(n * kPi * static_cast<double>(i) / M);
  }
  return g;
}

/// Evaluates the even 2-periodic extension of a [0,1] grid function at any
/// real x by linear interpolation. The fold r = |x mod 2|, r > 1 -> 2 - r is
/// symmetric in x -> -x at the bit level, so evenness is exact.
inline double even_periodic_extension_eval(const GridFunction& f, double x) {
  const int M = f.panels();
  require(M >= 2, "even_periodic_extension_eval: empty grid");
  double r = std::fabs(std::fmod(x, 2.0));
  if (r > 1.0) r = 2.0 - r;
  const double pos = r * M;
  int i0 = static_cast<int>(pos);
  if (i0 >= M) i0 = M - 1;
  const double frac = pos - i0;
  return f.values[i0] * (1.0 - frac) + f.values[i0 + 1] * frac;
}

/// Reflects an integer node index into [0, M] by even 2M-periodic folding;
/// exact integer arithmetic, used by grid convolutions.
inline int reflect_index(int idx, int M) {
  const int period = 2 * M;
  int p = idx % period;
  if (p < 0) p += period;
  if (p > M) p = period - p;
  return p;
}

/// Fits |<f, e_n>| ~ C n^{-zeta} over n in [2, n_max]; coefficients below
/// 1e-14 are treated as roundoff floor. Pass gate: exponent >= zeta - 0.25,
/// or fully degenerate (floor-level) data.
inline DecayFit fourier_decay_check(const GridFunction& f, double zeta, int n_max) {
  require(n_max >= 3, "fourier_decay_check: need modes up to at least 3");
  require(4 * n_max <= f.panels(), "fourier_decay_check: grid too coarse for n_max");
  std::vector<std::pair<double, double>> data;
  data.reserve(n_max - 1);
  for (int n = 2; n <= n_max; ++n)
    data.push_back({static_cast<double>(n), std::fabs(project_mode(f, n))});
  return fit_decay(data, 1e-14, zeta - 0.25);
}

}  // namespace ouspde
