#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ouspde/basis.hpp"
#include "ouspde/common.hpp"
#include "ouspde/kernel.hpp"
#include "ouspde/operators.hpp"
#include "ouspde/rng.hpp"

namespace ouspde {

/// Exponential Euler stepper: x -> e^{-lambda dt} x + N(0, a(x) .* E(dt)),
/// the coefficient frozen at the step's start state. Binds the field and the
/// step size so decay and integration factors are computed once.
class Stepper {
 public:
  Stepper(const FieldEvaluator& ev, double dt, bool half_qv = false)
      : ev_(ev), dt_(dt) {
    require(dt > 0.0, "Stepper: step size must be positive");
    const BasisSpec& spec = ev.field().spec;
    decay_ = decay_factors(spec, dt);
    efac_ = integration_factors(spec, dt);
    if (half_qv) efac_ *= 0.5;  // halved quadratic-variation convention
  }

  double dt() const { return dt_; }
  const Eigen::VectorXd& decay() const { return decay_; }

  /// Advances the state in place, consuming explicit standard normals z.
  void step_with(Eigen::VectorXd& x, const Eigen::VectorXd& z) {
    require(z.size() == x.size(), "Stepper: normal vector dimension mismatch");
    factor_at(x);
    x = decay_.cwiseProduct(x);
    x.noalias() += lower_ * z;
  }

  void step(Eigen::VectorXd& x, RngStream& rng) {
    z_.resize(x.size());
    for (int i = 0; i < z_.size(); ++i) z_[i] = rng.normal();
    step_with(x, z_);
  }

  /// Cholesky factor of the per-step noise covariance at state x.
  const Eigen::MatrixXd& noise_factor(const Eigen::VectorXd& x) {
    factor_at(x);
    return lower_;
  }

 private:
  void factor_at(const Eigen::VectorXd& x) {
    ev_.covariance_into(x, cov_);
    cov_ = cov_.cwiseProduct(efac_);
    if (cov_.cwiseAbs().maxCoeff() == 0.0) {
      // Zero-noise diagnostic mode (field scaled to zero): pure mode decay.
      lower_.setZero(x.size(), x.size());
      return;
    }
    llt_.compute(cov_);
    if (llt_.info() != Eigen::Success)
      throw definiteness_error("step noise covariance is not positive definite");
    lower_ = llt_.matrixL();
  }

  FieldEvaluator ev_;
  double dt_;
  Eigen::VectorXd decay_, z_;
  Eigen::MatrixXd efac_, cov_, lower_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// One exponential Euler step with explicit normals (convenience wrapper).
inline Eigen::VectorXd exp_euler_step(const FieldEvaluator& ev, const Eigen::VectorXd& x,
                                      double dt, const Eigen::VectorXd& z, bool half_qv = false) {
  Stepper stepper(ev, dt, half_qv);
  Eigen::VectorXd out = x;
  stepper.step_with(out, z);
  return out;
}

struct SimConfig {
  CovarianceField field;
  double dt = 1e-3;
  double t_final = 1.0;
  std::uint64_t seed = 1;
  bool half_qv = false;
  SpectralState x0;  // empty -> zero initial state
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
};

inline int step_count(double dt, double t_final) {
  require(dt > 0.0 && t_final > 0.0, "step_count: dt and horizon must be positive");
  const double ratio = t_final / dt;
  const int n = static_cast<int>(std::lround(ratio));
  require(n >= 1 && std::fabs(ratio - n) < 1e-9 * std::max(1.0, ratio),
          "step_count: horizon must be an integer number of steps");
  return n;
}

/// Simulates one path; step s of path `path_id` draws from substream
/// (seed, path_id, s), so paths are independent and reproducible in any
/// execution order.
inline Trajectory simulate_path(const SimConfig& cfg, std::uint64_t path_id = 0) {
  const int dim = cfg.field.spec.dim();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  if (cfg.x0.coeffs.size() > 0) {
    require(cfg.x0.truncation() == cfg.field.spec.truncation,
            "simulate_path: initial state does not match the spec");
    x = cfg.x0.coeffs;
  }
  // A zero horizon is a valid degenerate run: just the projected start state.
  const int n_steps = (cfg.t_final == 0.0) ? 0 : step_count(cfg.dt, cfg.t_final);
  if (n_steps == 0) {
    Trajectory traj;
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    return traj;
  }
  FieldEvaluator ev(cfg.field);
  Stepper stepper(ev, cfg.dt, cfg.half_qv);
  Trajectory traj;
  traj.times.reserve(n_steps + 1);
  traj.states.reserve(n_steps + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  Eigen::VectorXd z(dim);
  for (int s = 0; s < n_steps; ++s) {
    RngStream rng(cfg.seed, path_id, static_cast<std::uint64_t>(s));
    for (int i = 0; i < dim; ++i) z[i] = rng.normal();
    stepper.step_with(x, z);
    traj.times.push_back((s + 1) * cfg.dt);
    traj.states.push_back(x);
  }
  return traj;
}

/// Heat flow of a grid profile: coefficients decay by e^{-lambda_n t}, modes
/// beyond the e^{-lambda_n t} < 1e-16 tail cut are dropped.
inline GridFunction heat_semigroup(const GridFunction& u0, double t, const BasisSpec& spec) {
  require(u0.panels() == spec.grid_points, "heat_semigroup: grid mismatch");
  require(t >= 0.0, "heat_semigroup: time must be nonnegative");
  const int M = spec.grid_points;
  const int hard_cap = M / 4;
  GridFunction out;
  out.values = Eigen::VectorXd::Zero(M + 1);
  for (int n = 0; n <= hard_cap; ++n) {
    const double damp = std::exp(-eigenvalue(n) * t);
    if (damp < 1e-16) break;
    const double c = damp * project_mode(u0, n);
    const double scale = (n == 0) ? 1.0 : std::sqrt(2.0);
    for (int i = 0; i <= M; ++i)
      out.values[i] += c * scale * std::cos(n * kPi * static_cast<double>(i) / M);
  }
  return out;
}

/// Splits a trajectory into the deterministic relaxation of the initial
/// state and the stochastic fluctuation around it.
struct PathDecomposition {
  std::vector<Eigen::VectorXd> drift;        // e^{-lambda t} x_0
  std::vector<Eigen::VectorXd> fluctuation;  // x_t - drift_t
};

inline PathDecomposition decompose_path(const Trajectory& traj, const BasisSpec& spec) {
  require(!traj.states.empty(), "decompose_path: empty trajectory");
  require(static_cast<int>(traj.states.front().size()) == spec.dim(),
          "decompose_path: trajectory does not match the spec");
  PathDecomposition dec;
  dec.drift.reserve(traj.states.size());
  dec.fluctuation.reserve(traj.states.size());
  const Eigen::VectorXd& x0 = traj.states.front();
  for (size_t k = 0; k < traj.states.size(); ++k) {
    Eigen::VectorXd d(spec.dim());
    for (int n = 0; n < spec.dim(); ++n) d[n] = std::exp(-spec.lambdas[n] * traj.times[k]) * x0[n];
    dec.fluctuation.push_back(traj.states[k] - d);
    dec.drift.push_back(std::move(d));
  }
  return dec;
}

/// Weak-form residual of a simulated path against a fixed mode functional:
/// r(t) = <x_t, phi> - <x_0, phi> + int_0^t <lambda x_s, phi> ds (trapezoid),
/// its quadratic variation from squared residual increments, and the
/// predicted quadratic variation int_0^T phi' a(x_s) phi ds.
struct ResidualReport {
  std::vector<double> residual;
  double qv_measured = 0.0;
  double qv_predicted = 0.0;
  double mismatch_ratio = 0.0;
};

inline ResidualReport weak_form_residual(const Trajectory& traj, const SpectralState& phi,
                                         const CovarianceField& field, bool half_qv = false) {
  require(traj.states.size() >= 2, "weak_form_residual: need at least one step");
  const BasisSpec& spec = field.spec;
  const int dim = spec.dim();
  require(phi.coeffs.size() == dim, "weak_form_residual: functional does not match the spec");
  require(static_cast<int>(traj.states.front().size()) == dim,
          "weak_form_residual: trajectory does not match the spec");
  const double dt = traj.times[1] - traj.times[0];
  FieldEvaluator ev(field);
  Eigen::MatrixXd a(dim, dim);

  ResidualReport rep;
  rep.residual.reserve(traj.states.size());
  const double p0 = phi.coeffs.dot(traj.states.front());
  KahanSum drift_int, qv_meas, qv_pred;
  rep.residual.push_back(0.0);
  const double qv_scale = half_qv ? 0.5 : 1.0;
  auto drift_rate = [&](const Eigen::VectorXd& x) {
    return phi.coeffs.dot(spec.lambdas.cwiseProduct(x));
  };
  auto qv_rate = [&](const Eigen::VectorXd& x) {
    ev.covariance_into(x, a);
    return qv_scale * phi.coeffs.dot(a * phi.coeffs);
  };
  double qv_prev = qv_rate(traj.states.front());
  for (size_t s = 0; s + 1 < traj.states.size(); ++s) {
    const Eigen::VectorXd& xs = traj.states[s];
    const Eigen::VectorXd& xn = traj.states[s + 1];
    drift_int.add(0.5 * dt * (drift_rate(xs) + drift_rate(xn)));
    const double r_next = phi.coeffs.dot(xn) - p0 + drift_int.value();
    const double dr = r_next - rep.residual.back();
    qv_meas.add(dr * dr);
    const double qv_next = qv_rate(xn);
    qv_pred.add(0.5 * dt * (qv_prev + qv_next));
    qv_prev = qv_next;
    rep.residual.push_back(r_next);
  }
  rep.qv_measured = qv_meas.value();
  rep.qv_predicted = qv_pred.value();
  rep.mismatch_ratio = rep.qv_measured / rep.qv_predicted;
  return rep;
}

/// Terminal values <x_T, phi> over an ensemble of independent paths.
inline std::vector<double> terminal_functional_ensemble(const SimConfig& cfg,
                                                        const SpectralState& phi, int n_paths,
                                                        int threads = 0) {
  require(n_paths >= 1, "terminal_functional_ensemble: need at least one path");
  const BasisSpec& spec = cfg.field.spec;
  const int dim = spec.dim();
  require(phi.coeffs.size() > 0, "terminal_functional_ensemble: empty functional");
  // The functional may live on a coarser mode range than the state.
  const int shared = std::min<int>(dim, static_cast<int>(phi.coeffs.size()));
  const int n_steps = step_count(cfg.dt, cfg.t_final);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(dim);
  if (cfg.x0.coeffs.size() > 0) {
    require(cfg.x0.truncation() == spec.truncation,
            "terminal_functional_ensemble: initial state does not match the spec");
    x0 = cfg.x0.coeffs;
  }
  const FieldEvaluator ev(cfg.field);
  std::vector<double> out(n_paths);
  const int n_chunks = std::max(1, std::min(n_paths, 64));
  parallel_jobs(n_chunks, threads, [&](int chunk) {
    Stepper stepper(ev, cfg.dt, cfg.half_qv);  // per-chunk scratch
    Eigen::VectorXd x(dim), z(dim);
    const long lo = (static_cast<long>(chunk) * n_paths) / n_chunks;
    const long hi = ((static_cast<long>(chunk) + 1) * n_paths) / n_chunks;
    for (long p = lo; p < hi; ++p) {
      x = x0;
      for (int s = 0; s < n_steps; ++s) {
        RngStream rng(cfg.seed, static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(s));
        for (int i = 0; i < dim; ++i) z[i] = rng.normal();
        stepper.step_with(x, z);
      }
      double acc = 0.0;
      for (int i = 0; i < shared; ++i) acc += phi.coeffs[i] * x[i];
      out[p] = acc;
    }
  });
  return out;
}

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a - F_b|.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), "ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double xa = a[i], xb = b[j];
    if (xa <= xb) ++i;
    if (xb <= xa) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// One-dimensional 1-Wasserstein distance int |F_a - F_b| dx.
inline double wasserstein1(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), "wasserstein1: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> merged;
  merged.reserve(a.size() + b.size());
  merged.insert(merged.end(), a.begin(), a.end());
  merged.insert(merged.end(), b.begin(), b.end());
  std::sort(merged.begin(), merged.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  KahanSum w;
  for (size_t k = 0; k + 1 < merged.size(); ++k) {
    const double x = merged[k];
    const double fa =
        static_cast<double>(std::upper_bound(a.begin(), a.end(), x) - a.begin()) / na;
    const double fb =
        static_cast<double>(std::upper_bound(b.begin(), b.end(), x) - b.begin()) / nb;
    w.add(std::fabs(fa - fb) * (merged[k + 1] - x));
  }
  return w.value();
}

/// Distance between the terminal laws of two configurations under a shared
/// mode functional.
struct LawDistance {
  double ks = 0.0;
  double wasserstein = 0.0;
  int n_paths = 0;
};

inline LawDistance law_distance(const SimConfig& cfg_a, const SimConfig& cfg_b,
                                const SpectralState& phi, int n_paths, int threads = 0) {
  require(n_paths >= 100, "law_distance: need at least 100 paths per side");
  const auto va = terminal_functional_ensemble(cfg_a, phi, n_paths, threads);
  const auto vb = terminal_functional_ensemble(cfg_b, phi, n_paths, threads);
  LawDistance ld;
  ld.ks = ks_statistic(va, vb);
  ld.wasserstein = wasserstein1(va, vb);
  ld.n_paths = n_paths;
  return ld;
}

}  // namespace ouspde
