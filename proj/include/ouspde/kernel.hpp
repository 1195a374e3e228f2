#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "ouspde/basis.hpp"
#include "ouspde/common.hpp"
#include "ouspde/operators.hpp"
#include "ouspde/ou_matrix.hpp"
#include "ouspde/rng.hpp"

namespace ouspde {

/// Gaussian kernel evaluation at one (t, x, y) triple: the normal weight of
/// the displacement y - e^{-lambda t} x under the time-integrated covariance
/// frozen at the TARGET state y.
struct KernelPoint {
  double log_density = 0.0;
  double density = 0.0;
  Eigen::VectorXd whitened;  // L^{-1} (y - x'), L the covariance factor
  Eigen::MatrixXd factor;    // lower Cholesky factor of a(y, t)
  double logdet = 0.0;       // log det a(y, t)
};

/// Mode-decay factors e^{-lambda_n t}.
inline Eigen::VectorXd decay_factors(const BasisSpec& spec, double t) {
  Eigen::VectorXd d(spec.dim());
  for (int n = 0; n < spec.dim(); ++n) d[n] = std::exp(-spec.lambdas[n] * t);
  return d;
}

/// Entrywise time-integration factors E(t)_ij = t phi1((lambda_i+lambda_j) t),
/// so that the frozen-coefficient covariance over [0, t] is a .* E(t).
inline Eigen::MatrixXd integration_factors(const BasisSpec& spec, double t) {
  require(t > 0.0, "integration_factors: time must be positive");
  const int n = spec.dim();
  Eigen::MatrixXd e(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) e(i, j) = t * phi1((spec.lambdas[i] + spec.lambdas[j]) * t);
  return e;
}

inline KernelPoint kernel_density(const FieldEvaluator& ev, double t, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& y) {
  const BasisSpec& spec = ev.field().spec;
  const int n = spec.dim();
  require(static_cast<int>(x.size()) == n && static_cast<int>(y.size()) == n,
          "kernel_density: state dimension mismatch");
  require(t > 0.0, "kernel_density: time must be positive");
  const Eigen::VectorXd w = y - decay_factors(spec, t).cwiseProduct(x);
  const Eigen::MatrixXd cov = ev.covariance(y).cwiseProduct(integration_factors(spec, t));
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw definiteness_error("kernel covariance is not positive definite");
  KernelPoint kp;
  kp.factor = llt.matrixL();
  kp.logdet = 0.0;
  for (int i = 0; i < n; ++i) kp.logdet += 2.0 * std::log(kp.factor(i, i));
  kp.whitened = kp.factor.triangularView<Eigen::Lower>().solve(w);
  kp.log_density =
      -0.5 * n * std::log(2.0 * kPi) - 0.5 * kp.logdet - 0.5 * kp.whitened.squaredNorm();
  kp.density = std::exp(kp.log_density);
  return kp;
}

/// Second-derivative prefactor of the kernel in the x "directions" (j, k):
/// S_jk(w, A) = (A w)_j (A w)_k - A_jk with A the covariance precision.
inline double second_derivative_factor(const Eigen::VectorXd& v, const Eigen::MatrixXd& precision,
                                       int j, int k) {
  require(j >= 0 && k >= 0 && j < precision.rows() && k < precision.rows(),
          "second_derivative_factor: index out of range");
  return v[j] * v[k] - precision(j, k);
}

/// Mode cutoff J(zeta, t) = ceil( sqrt( zeta log(1/t + 1) / t ) ).
inline int cutoff_index(double zeta, double t) {
  require(zeta > 0.0 && t > 0.0, "cutoff_index: arguments must be positive");
  return static_cast<int>(std::ceil(std::sqrt(zeta * std::log(1.0 / t + 1.0) / t)));
}

/// Zeroes all coefficients above `keep` (inclusive truncation level).
inline SpectralState truncate_state(const SpectralState& s, int keep) {
  require(keep >= 0, "truncate_state: negative level");
  SpectralState out = s;
  for (int n = keep + 1; n <= s.truncation(); ++n) out.coeffs[n] = 0.0;
  return out;
}

/// Monte Carlo estimate with batch-mean error bars.
struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  double ess_fraction = 1.0;  // effective sample size over n, from the weights
  long n = 0;
  bool low_ess = false;  // effective sample size below 1% of n
};

struct McOptions {
  long n_samples = 100000;
  std::uint64_t seed = 1;
  int n_batches = 20;
  int threads = 0;       // 0 = hardware
  bool need_precision = false;
};

/// Per-sample view handed to importance-sampling integrands. `precision` and
/// `v = precision * w` are only filled when McOptions::need_precision is set.
struct IsSample {
  double t = 0.0;
  const Eigen::VectorXd* w = nullptr;
  const Eigen::VectorXd* y = nullptr;
  const Eigen::MatrixXd* cov = nullptr;
  const Eigen::MatrixXd* precision = nullptr;
  const Eigen::VectorXd* v = nullptr;
};

/// Integrates h(y) against the Gaussian kernel N(t, x, .) by importance
/// sampling from the proposal frozen at the START state x. Sample s draws
/// from substream (seed, s), batches are contiguous sample ranges merged in
/// fixed order, so the result is bitwise reproducible for any thread count.
template <class Integrand>
McEstimate kernel_expectation(const FieldEvaluator& ev, double t, const Eigen::VectorXd& x,
                              Integrand&& h, const McOptions& opts) {
  const BasisSpec& spec = ev.field().spec;
  const int n = spec.dim();
  require(static_cast<int>(x.size()) == n, "kernel_expectation: state dimension mismatch");
  require(t > 0.0, "kernel_expectation: time must be positive");
  require(opts.n_samples > 0 && opts.n_batches > 0, "kernel_expectation: bad sample counts");
  const long B = std::min<long>(opts.n_batches, opts.n_samples);

  const Eigen::VectorXd decay = decay_factors(spec, t);
  const Eigen::MatrixXd efac = integration_factors(spec, t);
  const Eigen::VectorXd xprime = decay.cwiseProduct(x);
  const Eigen::MatrixXd cov_x = ev.covariance(x).cwiseProduct(efac);
  Eigen::LLT<Eigen::MatrixXd> llt_x(cov_x);
  if (llt_x.info() != Eigen::Success)
    throw definiteness_error("proposal covariance is not positive definite");
  const Eigen::MatrixXd lx = llt_x.matrixL();
  double logdet_x = 0.0;
  for (int i = 0; i < n; ++i) logdet_x += 2.0 * std::log(lx(i, i));

  struct BatchAccum {
    double sum = 0.0, wsum = 0.0, w2sum = 0.0;
    long count = 0;
  };
  std::vector<BatchAccum> batches(B);

  parallel_jobs(static_cast<int>(B), opts.threads, [&](int b) {
    FieldEvaluator local_ev = ev;  // scratch is per-copy
    Eigen::VectorXd z(n), y(n), w(n), v(n);
    Eigen::MatrixXd cov_y(n, n), precision(n, n);
    Eigen::LLT<Eigen::MatrixXd> llt_y;
    KahanSum sum, wsum, w2sum;
    const long lo = (static_cast<long>(b) * opts.n_samples) / B;
    const long hi = ((static_cast<long>(b) + 1) * opts.n_samples) / B;
    for (long s = lo; s < hi; ++s) {
      RngStream rng(opts.seed, static_cast<std::uint64_t>(s));
      for (int i = 0; i < n; ++i) z[i] = rng.normal();
      y.noalias() = xprime + lx * z;
      w = y - xprime;
      local_ev.covariance_into(y, cov_y);
      cov_y = cov_y.cwiseProduct(efac);
      llt_y.compute(cov_y);
      if (llt_y.info() != Eigen::Success)
        throw definiteness_error("kernel covariance is not positive definite at a sample");
      double logdet_y = 0.0;
      for (int i = 0; i < n; ++i) logdet_y += 2.0 * std::log(llt_y.matrixL()(i, i));
      const double quad_y = llt_y.matrixL().solve(w).squaredNorm();
      const double logw =
          -0.5 * (logdet_y - logdet_x) - 0.5 * (quad_y - z.squaredNorm());
      const double weight = std::exp(logw);

      IsSample smp;
      smp.t = t;
      smp.w = &w;
      smp.y = &y;
      smp.cov = &cov_y;
      if (opts.need_precision) {
        precision = llt_y.solve(Eigen::MatrixXd::Identity(n, n));
        v.noalias() = precision * w;
        smp.precision = &precision;
        smp.v = &v;
      }
      sum.add(weight * h(smp));
      wsum.add(weight);
      w2sum.add(weight * weight);
    }
    batches[b] = {sum.value(), wsum.value(), w2sum.value(), hi - lo};
  });

  KahanSum total, wtotal, w2total;
  for (const auto& acc : batches) {
    total.add(acc.sum);
    wtotal.add(acc.wsum);
    w2total.add(acc.w2sum);
  }
  McEstimate est;
  est.n = opts.n_samples;
  est.estimate = total.value() / static_cast<double>(opts.n_samples);
  if (B >= 2) {
    KahanSum mean_acc;
    for (const auto& acc : batches) mean_acc.add(acc.sum / acc.count);
    const double mbar = mean_acc.value() / static_cast<double>(B);
    KahanSum var_acc;
    for (const auto& acc : batches) {
      const double d = acc.sum / acc.count - mbar;
      var_acc.add(d * d);
    }
    est.std_error =
        std::sqrt(var_acc.value() / (static_cast<double>(B) * static_cast<double>(B - 1)));
  }
  if (w2total.value() > 0.0) {
    const double ess = wtotal.value() * wtotal.value() / w2total.value();
    est.ess_fraction = ess / static_cast<double>(opts.n_samples);
    est.low_ess = est.ess_fraction < 0.01;
  }
  return est;
}

/// Total kernel mass int N(t, x, y) dy.
inline McEstimate total_mass_mc(const FieldEvaluator& ev, double t, const Eigen::VectorXd& x,
                                const McOptions& opts) {
  return kernel_expectation(ev, t, x, [](const IsSample&) { return 1.0; }, opts);
}

/// Displacement moment int |(y - x')_j|^{2p} N(t, x, y) dy.
inline McEstimate moment_mc(const FieldEvaluator& ev, double t, const Eigen::VectorXd& x, int j,
                            int p, const McOptions& opts) {
  require(j >= 0 && j < ev.dim(), "moment_mc: mode out of range");
  require(p >= 0, "moment_mc: moment order must be nonnegative");
  return kernel_expectation(
      ev, t, x,
      [j, p](const IsSample& s) { return std::pow(std::fabs((*s.w)[j]), 2.0 * p); }, opts);
}

/// Finite-difference check value for the mixed second derivative of the
/// kernel in the start-state coordinates, with the covariance held fixed at
/// the target: one Richardson extrapolation level over step h.
inline double dij_kernel_fd(const FieldEvaluator& ev, double t, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y, int j, int k, double h) {
  const BasisSpec& spec = ev.field().spec;
  const int n = spec.dim();
  require(j >= 0 && k >= 0 && j < n && k < n, "dij_kernel_fd: mode out of range");
  require(h > 0.0, "dij_kernel_fd: step must be positive");
  const Eigen::VectorXd decay = decay_factors(spec, t);
  const Eigen::MatrixXd cov = ev.covariance(y).cwiseProduct(integration_factors(spec, t));
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw definiteness_error("kernel covariance is not positive definite");
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  const double lognorm = -0.5 * n * std::log(2.0 * kPi) - 0.5 * logdet;

  auto dens = [&](double dj, double dk) {
    Eigen::VectorXd xs = x;
    xs[j] += dj;
    if (j == k)
      xs[j] += dk;
    else
      xs[k] += dk;
    const Eigen::VectorXd w = y - decay.cwiseProduct(xs);
    const double quad = llt.matrixL().solve(w).squaredNorm();
    return std::exp(lognorm - 0.5 * quad);
  };
  auto second = [&](double step) {
    if (j == k)
      return (dens(step, 0) - 2.0 * dens(0, 0) + dens(-step, 0)) / (step * step);
    return (dens(step, step) - dens(step, -step) - dens(-step, step) + dens(-step, -step)) /
           (4.0 * step * step);
  };
  const double d1 = second(h);
  const double d2 = second(h / 2.0);
  return (4.0 * d2 - d1) / 3.0;
}

/// One point of a parameter sweep.
struct SweepPoint {
  double param = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
};

/// A sweep with its fitted log-log slope.
struct ScalingReport {
  std::vector<SweepPoint> points;
  double slope = 0.0;
  bool stderr_ok = true;  // every point resolved against its error bar
};

inline ScalingReport make_scaling_report(std::vector<SweepPoint> points,
                                         double stderr_fraction = 0.25) {
  ScalingReport rep;
  rep.points = std::move(points);
  std::vector<std::pair<double, double>> data;
  for (const auto& p : rep.points) {
    require(p.param > 0.0 && p.estimate > 0.0, "make_scaling_report: nonpositive sweep data");
    data.push_back({p.param, p.estimate});
    if (p.std_error > stderr_fraction * std::fabs(p.estimate)) rep.stderr_ok = false;
  }
  rep.slope = fit_power_law(data).exponent;
  return rep;
}

/// Kernel integral of the SQUARED decay-weighted second-derivative sum along
/// the mode diagonal at offset ell, modes 1..J with J = cutoff_index(zeta, t):
///   int ( sum_j e^{-(lambda_j + lambda_{j+ell}) t} S_{j,j+ell} )^2 N(t,x,dy).
struct DiagonalSumResult {
  McEstimate estimate;
  int cutoff = 0;  // J from the cutoff formula (the mode sum also stops at K)
};

inline DiagonalSumResult diagonal_sum_mc(const FieldEvaluator& ev, double t,
                                         const Eigen::VectorXd& x, int ell, double zeta,
                                         const McOptions& opts_in) {
  const BasisSpec& spec = ev.field().spec;
  require(ell >= 0 && ell <= spec.truncation, "diagonal_sum_mc: offset out of range");
  DiagonalSumResult result;
  result.cutoff = cutoff_index(zeta, t);
  const int j_max = std::min(result.cutoff, spec.truncation - ell);
  McOptions opts = opts_in;
  opts.need_precision = true;
  result.estimate = kernel_expectation(
      ev, t, x,
      [&spec, t, ell, j_max](const IsSample& s) {
        double acc = 0.0;
        for (int j = 1; j <= j_max; ++j) {
          const double efac = std::exp(-(spec.lambdas[j] + spec.lambdas[j + ell]) * t);
          acc += efac * second_derivative_factor(*s.v, *s.precision, j, j + ell);
        }
        return acc * acc;
      },
      opts);
  return result;
}

/// Integral of |sum_jk (a_jk(x) - a_jk(y)) D_jk N(t, x, y)| over y: the
/// kernel response to freezing the covariance at the start state instead of
/// the target.
inline McEstimate perturbation_integral_mc(const FieldEvaluator& ev, double t,
                                           const Eigen::VectorXd& x, const McOptions& opts_in) {
  const BasisSpec& spec = ev.field().spec;
  const int n = spec.dim();
  Eigen::MatrixXd e2(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) e2(i, j) = std::exp(-(spec.lambdas[i] + spec.lambdas[j]) * t);
  // IsSample carries a(y) .* E(t); dividing e2 by E recovers the e2-weighted
  // base covariance at y without a second field evaluation.
  const Eigen::MatrixXd ratio = e2.cwiseQuotient(integration_factors(spec, t));
  FieldEvaluator local(ev);
  const Eigen::MatrixXd ax_e2 = local.covariance(x).cwiseProduct(e2);
  McOptions opts = opts_in;
  opts.need_precision = true;
  return kernel_expectation(
      ev, t, x,
      [&ax_e2, &ratio](const IsSample& s) {
        // sum_jk da_jk e2_jk S_jk = v' m v - tr(m A),  m = (a(x)-a(y)) .* e2
        const Eigen::MatrixXd m = ax_e2 - s.cov->cwiseProduct(ratio);
        const Eigen::VectorXd& v = *s.v;
        const double quad = v.dot(m * v);
        const double trace = m.cwiseProduct(*s.precision).sum();
        return std::fabs(quad - trace);
      },
      opts);
}

}  // namespace ouspde
