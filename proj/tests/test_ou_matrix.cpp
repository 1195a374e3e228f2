#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "ouspde/ou_matrix.hpp"
#include "ouspde/rng.hpp"

using namespace ouspde;

namespace {

Eigen::MatrixXd random_spd(int n, std::uint64_t tag, double floor_add) {
  RngStream rng(4242, tag);
  Eigen::MatrixXd v(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v(i, j) = rng.normal();
  Eigen::MatrixXd m = v * v.transpose() / n;
  m += floor_add * Eigen::MatrixXd::Identity(n, n);
  return m;
}

/// Composite Simpson over [0, t] with uniform panels.
double simpson_on(double t, int panels, const std::function<double(double)>& f) {
  const double h = t / panels;
  KahanSum acc;
  acc.add(f(0.0));
  acc.add(f(t));
  for (int i = 1; i < panels; ++i) acc.add(((i % 2 == 1) ? 4.0 : 2.0) * f(i * h));
  return acc.value() * h / 3.0;
}

}  // namespace

TEST_CASE("relaxation rate matches its closed form") {
  REQUIRE(std::fabs(rate_function(1.0, 1.0) - 2.3130352854993315) < 1e-12);
  REQUIRE(std::fabs(rate_function(1.0, 1.0) - 2.0 / (1.0 - std::exp(-2.0))) < 1e-14);
  REQUIRE(std::fabs(rate_function(0.0, 0.25) - 4.0) < 1e-12);
  // Independent oracle: the rate is the reciprocal integral of e^{-2 lambda s}.
  for (double lambda : {0.3, 2.0, 9.0}) {
    const double t = 0.4;
    const double integral = simpson_on(t, 2000, [lambda](double s) {
      return std::exp(-2.0 * lambda * s);
    });
    REQUIRE(std::fabs(rate_function(lambda, t) - 1.0 / integral) < 1e-10);
  }
  // Envelope sandwich (1 + lambda t) / (2t) <= G <= 2 (1 + lambda t) / t.
  for (double lambda : {0.0, 1.0, 5.0, 40.0})
    for (double t : {0.01, 0.1, 1.0}) {
      const double g = rate_function(lambda, t);
      const double env = precision_envelope(lambda, t);
      REQUIRE(g >= 0.5 * env - 1e-12);
      REQUIRE(g <= 2.0 * env + 1e-12);
    }
  REQUIRE(rate_function(1.0, 1.0) >= 1.0);
  REQUIRE(rate_function(1.0, 1.0) <= 4.0);
  REQUIRE_THROWS_AS(rate_function(-1.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(rate_function(1.0, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(precision_envelope(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("integrated relaxation factor is smooth through its series branch") {
  REQUIRE(phi1(0.0) == 1.0);
  // Both branch formulas agree near the crossover argument.
  for (double z : {0.999999e-5, 1.000001e-5})
    REQUIRE(std::fabs(phi1(z) - (-std::expm1(-z) / z)) < 1e-13);
  REQUIRE(std::fabs(phi1(1.0) - (1.0 - std::exp(-1.0))) < 1e-15);
  REQUIRE(phi1(50.0) > 0.0);
}

TEST_CASE("time integrated covariance matches independent quadrature") {
  Eigen::MatrixXd base(2, 2);
  base << 2.0, 1.0, 1.0, 2.0;
  const BasisSpec spec = BasisSpec::make(1, 256);
  const double t = 0.1;
  const TimeCov tc = time_integrated_cov(base, spec, t);

  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double rate = spec.lambdas[i] + spec.lambdas[j];
      const double oracle =
          base(i, j) * simpson_on(t, 2000, [rate](double s) { return std::exp(-rate * s); });
      REQUIRE(std::fabs(tc.time_integrated(i, j) - oracle) < 1e-12);
    }
  REQUIRE(std::fabs(tc.time_integrated(0, 0) - 2.0 * t) < 1e-14);

  // Whitening, inversion, and log determinants are mutually consistent.
  const Eigen::MatrixXd id2 = Eigen::MatrixXd::Identity(2, 2);
  REQUIRE((tc.precision * tc.time_integrated - id2).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::VectorXd sr = tc.rate_diag.cwiseSqrt();
  const Eigen::MatrixXd sandwich = sr.asDiagonal() * tc.time_integrated * sr.asDiagonal();
  REQUIRE((tc.whitened - sandwich).cwiseAbs().maxCoeff() < 1e-13);
  REQUIRE((tc.whitened_precision * tc.whitened - id2).cwiseAbs().maxCoeff() < 1e-11);
  REQUIRE(std::fabs(tc.logdet_time_integrated - std::log(tc.time_integrated.determinant())) <
          1e-12);
  REQUIRE(std::fabs(tc.logdet_whitened - std::log(tc.whitened.determinant())) < 1e-12);
  REQUIRE(std::fabs(tc.rate_diag[1] - rate_function(spec.lambdas[1], t)) < 1e-14);

  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  REQUIRE_THROWS_AS(time_integrated_cov(indefinite, spec, t), definiteness_error);
  REQUIRE_THROWS_AS(time_integrated_cov(base, spec, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(time_integrated_cov(Eigen::MatrixXd::Identity(3, 3), spec, t),
                    std::invalid_argument);
}

TEST_CASE("schur norm dominates the spectral norm") {
  REQUIRE(schur_norm(Eigen::MatrixXd::Identity(4, 4)) == 1.0);
  Eigen::MatrixXd m(2, 2);
  m << 1.0, -2.0, 0.5, 0.0;
  REQUIRE(std::fabs(schur_norm(m) - 3.0) < 1e-15);
  for (int r = 0; r < 5; ++r) {
    Eigen::MatrixXd s = random_spd(8, 60 + r, 0.0);
    s -= 0.5 * Eigen::MatrixXd::Identity(8, 8);  // allow negative eigenvalues
    const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    const double spectral = eig.eigenvalues().cwiseAbs().maxCoeff();
    REQUIRE(spectral <= schur_norm(sym) + 1e-12);
  }
}

TEST_CASE("schur reduction inverts to the leading block") {
  SECTION("two by two closed form") {
    Eigen::MatrixXd a(2, 2);
    a << 2.0, 1.0, 1.0, 2.0;
    const Eigen::MatrixXd precision = a.inverse();
    const Eigen::MatrixXd b = schur_complement_reduce(precision);
    REQUIRE(b.rows() == 1);
    REQUIRE(std::fabs(b(0, 0) - 0.5) < 1e-14);
    REQUIRE(std::fabs(1.0 / b(0, 0) - a(0, 0)) < 1e-13);
  }
  SECTION("random six dimensional instance") {
    const Eigen::MatrixXd a = random_spd(6, 5, 0.5);
    const Eigen::MatrixXd b = schur_complement_reduce(a.inverse());
    const Eigen::MatrixXd back = b.inverse();
    REQUIRE((back - a.topLeftCorner(5, 5)).cwiseAbs().maxCoeff() <
            1e-10 * a.cwiseAbs().maxCoeff());
  }
  SECTION("invalid inputs") {
    REQUIRE_THROWS_AS(schur_complement_reduce(Eigen::MatrixXd::Identity(1, 1)),
                      std::invalid_argument);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
    bad(2, 2) = -1.0;
    REQUIRE_THROWS_AS(schur_complement_reduce(bad), std::invalid_argument);
  }
}

TEST_CASE("gaussian weights follow the precision convention") {
  Eigen::VectorXd w0(1);
  w0 << 0.0;
  Eigen::MatrixXd p1(1, 1);
  p1 << 1.0;
  REQUIRE(std::fabs(gaussian_density(w0, p1) - 0.3989422804014327) < 1e-15);
  p1 << 4.0;
  REQUIRE(std::fabs(gaussian_density(w0, p1) - 0.7978845608028654) < 1e-15);
  Eigen::VectorXd w2 = Eigen::VectorXd::Zero(2);
  REQUIRE(std::fabs(gaussian_density(w2, Eigen::MatrixXd::Identity(2, 2)) -
                    0.15915494309189535) < 1e-15);

  // Ratio identity: the precision enters only through the quadratic form.
  const Eigen::MatrixXd c = random_spd(4, 11, 0.3);
  RngStream rng(5, 1);
  Eigen::VectorXd w(4);
  for (int i = 0; i < 4; ++i) w[i] = rng.normal();
  const double log_ratio =
      log_gaussian_density(w, c) - log_gaussian_density(Eigen::VectorXd::Zero(4), c);
  REQUIRE(std::fabs(log_ratio + 0.5 * w.dot(c * w)) < 1e-12);

  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  REQUIRE_THROWS_AS(log_gaussian_density(w2, indefinite), definiteness_error);
  REQUIRE_THROWS_AS(log_gaussian_density(w0, Eigen::MatrixXd::Identity(2, 2)),
                    std::invalid_argument);
}

TEST_CASE("conditional parameters and marginalization agree with quadrature") {
  SECTION("identity precision decouples") {
    Eigen::VectorXd w(1);
    w << 0.7;
    const auto [mu, var] = conditional_gaussian_params(Eigen::MatrixXd::Identity(2, 2), w);
    REQUIRE(mu == 0.0);
    REQUIRE(var == 1.0);
  }
  SECTION("two by two closed form") {
    Eigen::MatrixXd a(2, 2);
    a << 2.0, 1.0, 1.0, 2.0;
    Eigen::VectorXd w(1);
    w << 1.0;
    const auto [mu, var] = conditional_gaussian_params(a, w);
    REQUIRE(std::fabs(mu - (-0.5)) < 1e-15);
    REQUIRE(std::fabs(var - 0.5) < 1e-15);
  }
  SECTION("integrating out the last coordinate reproduces the reduced weight") {
    const Eigen::MatrixXd c = random_spd(3, 17, 0.4);
    Eigen::VectorXd head(2);
    head << 0.3, -0.2;
    const auto [mu, var] = conditional_gaussian_params(c, head);
    const double sigma = std::sqrt(var);
    const double integral = simpson_on(1.0, 4000, [&](double u) {
      // Map [0,1] onto mu +- 10 sigma.
      const double s = mu - 10.0 * sigma + 20.0 * sigma * u;
      Eigen::VectorXd full(3);
      full << head[0], head[1], s;
      return 20.0 * sigma * gaussian_density(full, c);
    });
    const Eigen::MatrixXd b = schur_complement_reduce(c);
    REQUIRE(std::fabs(integral - gaussian_density(head, b)) < 1e-8);
  }
  SECTION("invalid inputs") {
    Eigen::VectorXd w(2);
    w << 1.0, 2.0;
    REQUIRE_THROWS_AS(conditional_gaussian_params(Eigen::MatrixXd::Identity(2, 2), w),
                      std::invalid_argument);
  }
}

TEST_CASE("whitened comparison bounds hold with closed form scalars") {
  SECTION("identical matrices give zero gaps") {
    const Eigen::MatrixXd a = random_spd(4, 23, 0.5);
    const BasisSpec spec = BasisSpec::make(3, 256);
    Eigen::VectorXd w(4);
    w << 0.2, -0.1, 0.4, 0.0;
    const RatioBounds rb = ratio_bounds_check(a, a, spec, 0.2, w);
    REQUIRE(rb.schur_gap == 0.0);
    REQUIRE(rb.op_gap <= 1e-11);
    REQUIRE(rb.det_dev <= 1e-12);
    REQUIRE(rb.density_dev <= 1e-11);
    REQUIRE(rb.pass);
  }
  SECTION("scalar instance with zero relaxation is fully explicit") {
    // dim 1, lambda = 0: whitening is the identity, so the determinant
    // deviation is exactly |1.2 - 1| against budget theta e^theta.
    Eigen::MatrixXd a(1, 1), b(1, 1);
    a << 1.0;
    b << 1.2;
    const BasisSpec spec = BasisSpec::make(0, 256);
    Eigen::VectorXd w(1);
    w << 0.3;
    const RatioBounds rb = ratio_bounds_check(a, b, spec, 0.7, w);
    REQUIRE(std::fabs(rb.lambda0 - 1.0) < 1e-14);
    REQUIRE(std::fabs(rb.schur_budget - 0.2) < 1e-14);
    REQUIRE(std::fabs(rb.det_dev - 0.2) < 1e-12);
    REQUIRE(std::fabs(rb.det_budget - 0.244280551632034) < 1e-12);
    REQUIRE(rb.det_dev <= rb.det_budget);
    REQUIRE(rb.pass);
  }
  SECTION("small diagonal shift keeps every margin positive") {
    const int n = 4;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) a(i, i) = 2.0;
    for (int i = 0; i + 1 < n; ++i) a(i, i + 1) = a(i + 1, i) = 1.0;
    const Eigen::MatrixXd b = a + 0.01 * Eigen::MatrixXd::Identity(n, n);
    const BasisSpec spec = BasisSpec::make(3, 256);
    Eigen::VectorXd w(4);
    w << 0.1, 0.2, -0.3, 0.05;
    const RatioBounds rb = ratio_bounds_check(a, b, spec, 0.15, w);
    REQUIRE(rb.schur_gap <= rb.schur_budget + 1e-9);
    REQUIRE(rb.op_gap <= rb.op_budget + 1e-9);
    REQUIRE(rb.det_dev <= rb.det_budget + 1e-9);
    REQUIRE(rb.pass);
  }
}

TEST_CASE("off diagonal decay fits inherit the band exponent") {
  SECTION("exact quartic band profile") {
    const int n = 16;
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const int d = std::abs(i - j);
        m(i, j) = (d == 0) ? 2.0 : std::pow(static_cast<double>(d), -4.0);
      }
    const DecayFit fit = jaffard_decay_fit(m, 4.0);
    REQUIRE(fit.pass);
    REQUIRE(std::fabs(fit.exponent - 4.0) < 1e-10);
    REQUIRE(std::fabs(fit.constant - 2.0) < 1e-10);
  }
  SECTION("diagonal matrices are degenerate") {
    const DecayFit fit = jaffard_decay_fit(Eigen::MatrixXd::Identity(8, 8), 4.0);
    REQUIRE(fit.degenerate);
    REQUIRE(fit.pass);
  }
  SECTION("whitened precision of a banded base keeps polynomial decay") {
    const int n = 17;
    Eigen::MatrixXd base = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const int d = std::abs(i - j);
        base(i, j) = (d == 0) ? 4.0 : (d == 1 ? 1.0 : 0.0);
      }
    const BasisSpec spec = BasisSpec::make(16, 256);
    const TimeCov tc = time_integrated_cov(base, spec, 0.05);
    const DecayFit fit = jaffard_decay_fit(tc.whitened_precision, 4.0);
    REQUIRE(fit.pass);
  }
  REQUIRE_THROWS_AS(jaffard_decay_fit(Eigen::MatrixXd::Identity(3, 3), 4.0),
                    std::invalid_argument);
}

TEST_CASE("precision diagonals dominate their envelope floor") {
  const int n = 9;
  const Eigen::MatrixXd base = Eigen::MatrixXd::Identity(n, n);
  const BasisSpec spec = BasisSpec::make(8, 256);
  for (double t : {0.05, 0.3, 1.0}) {
    const TimeCov tc = time_integrated_cov(base, spec, t);
    // For the identity base the cap 1 applies: precision_jj = G(lambda_j, t)
    // and the envelope bound is the lower half of the rate sandwich.
    const Eigen::VectorXd margin = precision_diag_lower_margin(tc, spec, 1.0);
    REQUIRE(margin.minCoeff() >= -1e-10);
  }
  const TimeCov tc = time_integrated_cov(base, spec, 0.1);
  REQUIRE_THROWS_AS(precision_diag_lower_margin(tc, spec, 0.0), std::invalid_argument);
}
