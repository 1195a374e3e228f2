#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "ouspde/io.hpp"
#include "ouspde/operators.hpp"
#include "ouspde/rng.hpp"

using namespace ouspde;

namespace {

Eigen::VectorXd random_state(int dim, std::uint64_t tag) {
  RngStream rng(911, tag);
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = rng.normal() / (1.0 + i);
  return x;
}

/// Deterministic coefficient A(x) = f + amp cos(m pi x): a cos link at scale
/// zero is identically one, so the profile does not depend on the state.
CovarianceField frozen_profile_field(double f, double amp, int m, int K, int M) {
  CovarianceField field;
  field.spec = BasisSpec::make(K, M);
  field.op.kind = OperatorKind::inner_product;
  field.op.f_const = f;
  field.op.terms = {{amp, m, LinkKind::cos_link, 0.0, 0}};
  field.op.phis = {"e_1"};
  return field;
}

}  // namespace

TEST_CASE("constant operators produce scaled identity covariances") {
  const CovarianceField field = builtin_field("constant(1.7)", 5, 512);
  const FieldEvaluator ev(field);
  const Eigen::VectorXd x = random_state(6, 1);
  const Eigen::MatrixXd a = ev.covariance(x);
  const Eigen::MatrixXd target = 1.7 * 1.7 * Eigen::MatrixXd::Identity(6, 6);
  REQUIRE((a - target).cwiseAbs().maxCoeff() < 1e-12);

  const GridFunction g = ev.coefficient(x);
  REQUIRE((g.values.array() - 1.7).abs().maxCoeff() < 1e-15);
  const GridFunction u = GridFunction::sample([](double t) { return std::sin(7.0 * t); }, 512);
  REQUIRE((ev.apply_grid(u).values.array() - 1.7).abs().maxCoeff() < 1e-15);

  REQUIRE(std::fabs(field.op.kappa2 - 1.0 / 1.7) < 1e-15);
  REQUIRE(std::fabs(field.lambda0() - field.op.kappa2 * field.op.kappa2) < 1e-15);
  REQUIRE(std::fabs(field.lambda1() * field.lambda0() - 1.0) < 1e-12);

  // Unit constant: any input maps to the unit profile.
  const FieldEvaluator unit(builtin_field("constant", 3, 256));
  REQUIRE((unit.apply_grid(GridFunction::sample([](double t) { return t; }, 256)).values.array() -
           1.0)
              .abs()
              .maxCoeff() == 0.0);

  // Zero value is the noise-free diagnostic: the covariance vanishes.
  const FieldEvaluator dead(builtin_field("constant(0)", 2, 256));
  REQUIRE(dead.covariance(Eigen::VectorXd::Zero(3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("covariance entries match dense quadrature on a frozen profile") {
  const int K = 6, M = 2048;
  const CovarianceField field = frozen_profile_field(1.0, 0.5, 2, K, M);
  const FieldEvaluator ev(field);
  const Eigen::VectorXd x = random_state(K + 1, 7);

  // Moments of A^2 = 1.125 + cos(2 pi x) + 0.125 cos(4 pi x).
  const Eigen::VectorXd d = ev.moments(x);
  REQUIRE(d.size() == 2 * K + 1);
  REQUIRE(std::fabs(d[0] - 1.125) < 1e-12);
  REQUIRE(std::fabs(d[2] - 0.5) < 1e-12);
  REQUIRE(std::fabs(d[4] - 0.0625) < 1e-12);
  for (int m : {1, 3, 5, 6, 7, 8}) REQUIRE(std::fabs(d[m]) < 1e-12);

  const Eigen::MatrixXd a = ev.covariance(x);
  REQUIRE(std::fabs(a(0, 0) - 1.125) < 1e-12);
  REQUIRE(std::fabs(a(1, 1) - 1.625) < 1e-12);
  REQUIRE(std::fabs(a(2, 2) - 1.1875) < 1e-12);
  REQUIRE(std::fabs(a(1, 3) - 0.5625) < 1e-12);
  REQUIRE(std::fabs(a(0, 2) - 1.0 / std::sqrt(2.0)) < 1e-12);
  REQUIRE(std::fabs(a(0, 4) - 0.125 / std::sqrt(2.0)) < 1e-12);
  REQUIRE(std::fabs(a(1, 2)) < 1e-12);

  // Independent oracle: dense quadrature of A^2 e_j e_k on the same grid.
  const GridFunction prof = ev.coefficient(x);
  for (int j = 0; j <= K; ++j)
    for (int k = j; k <= K; ++k) {
      Eigen::VectorXd integrand(M + 1);
      for (int i = 0; i <= M; ++i) {
        const double xi = static_cast<double>(i) / M;
        integrand[i] =
            prof.values[i] * prof.values[i] * basis_eval(j, xi) * basis_eval(k, xi);
      }
      REQUIRE(std::fabs(a(j, k) - simpson_integral(integrand)) < 1e-10);
      REQUIRE(a(j, k) == a(k, j));
    }
}

TEST_CASE("covariance assembly from injected moments") {
  const FieldEvaluator ev(builtin_field("constant", 3, 256));
  Eigen::VectorXd d = Eigen::VectorXd::Zero(7);
  d[0] = 1.0;
  d[2] = 0.25;
  Eigen::MatrixXd a;
  ev.assemble_covariance(d, a);
  REQUIRE(std::fabs(a(1, 3) - 0.25) < 1e-15);
  REQUIRE(std::fabs(a(3, 1) - 0.25) < 1e-15);
  REQUIRE(std::fabs(a(0, 0) - 1.0) < 1e-15);
  REQUIRE(std::fabs(a(1, 1) - 1.25) < 1e-15);
  REQUIRE(std::fabs(a(2, 2) - 1.0) < 1e-15);
  REQUIRE(std::fabs(a(0, 2) - 0.5 / std::sqrt(2.0)) < 1e-15);
  REQUIRE((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd wrong = Eigen::VectorXd::Zero(6);
  Eigen::MatrixXd out;
  REQUIRE_THROWS_AS(ev.assemble_covariance(wrong, out), std::invalid_argument);
}

TEST_CASE("two part split separates band and antidiagonal structure") {
  SECTION("frozen low mode profile") {
    const int K = 6;
    const CovarianceField field = frozen_profile_field(1.0, 0.5, 2, K, 2048);
    const FieldEvaluator ev(field);
    const Eigen::VectorXd x = random_state(K + 1, 3);
    const ToeplitzSplit split = toeplitz_split(ev, x);
    REQUIRE(split.band.size() == K + 1);
    REQUIRE(std::fabs(split.band[0] - 1.125) < 1e-12);
    // Away from index zero the band part is constant along diagonals and the
    // remainder along antidiagonals.
    for (int j = 1; j <= K; ++j)
      for (int k = 1; k <= K; ++k) {
        if (j + 1 <= K && k + 1 <= K)
          REQUIRE(std::fabs(split.toeplitz_part(j, k) - split.toeplitz_part(j + 1, k + 1)) <
                  1e-14);
        if (j - 1 >= 1 && k + 1 <= K)
          REQUIRE(std::fabs(split.residual_part(j, k) - split.residual_part(j - 1, k + 1)) <
                  1e-14);
      }
    const Eigen::MatrixXd a = ev.covariance(x);
    REQUIRE((split.toeplitz_part + split.residual_part - a).cwiseAbs().maxCoeff() <
            1e-10 * (1.0 + a.cwiseAbs().maxCoeff()));
  }
  SECTION("single squared mode fills one band and one antidiagonal") {
    // A = cos(3 pi x): A^2 = 1/2 + 1/2 cos(6 pi x), moments at 0 and 6 only.
    const int K = 8;
    const CovarianceField field = frozen_profile_field(0.0, 1.0, 3, K, 1024);
    const ToeplitzSplit split = toeplitz_split(field, random_state(K + 1, 9));
    const double c0 = 1.0 / std::sqrt(2.0);
    for (int j = 0; j <= K; ++j)
      for (int k = 0; k <= K; ++k) {
        const double cj = (j == 0) ? c0 : 1.0;
        const double ck = (k == 0) ? c0 : 1.0;
        const int band = std::abs(j - k);
        const double t_expect =
            (band == 0) ? cj * ck * 0.5 : (band == 6 ? cj * ck * 0.25 : 0.0);
        const double r_expect =
            (j + k == 0) ? cj * ck * 0.5 : (j + k == 6 ? cj * ck * 0.25 : 0.0);
        REQUIRE(std::fabs(split.toeplitz_part(j, k) - t_expect) < 1e-12);
        REQUIRE(std::fabs(split.residual_part(j, k) - r_expect) < 1e-12);
      }
  }
}

TEST_CASE("named test functions evaluate and validate") {
  const GridFunction e2 = sample_test_function("e_2", 512);
  for (int i = 0; i <= 512; i += 37)
    REQUIRE(std::fabs(e2.values[i] - basis_eval(2, e2.x(i))) < 1e-15);

  const GridFunction poly = sample_test_function("poly(2,0,1)", 256);
  for (int i = 0; i <= 256; i += 16) {
    const double x = poly.x(i);
    REQUIRE(std::fabs(poly.values[i] - (2.0 + x * x)) < 1e-14);
  }

  const GridFunction bump = sample_test_function("bump(0.3,0.1)", 1024);
  REQUIRE(bump.values.minCoeff() > 0.0);
  int argmax = 0;
  bump.values.maxCoeff(&argmax);
  REQUIRE(std::fabs(bump.x(argmax) - 0.3) < 2e-3);

  REQUIRE_THROWS_AS(sample_test_function("mystery", 256), std::invalid_argument);
  REQUIRE_THROWS_AS(sample_test_function("bump(0.3,0.9)", 256), std::invalid_argument);
  REQUIRE_THROWS_AS(sample_test_function("bump(0.3", 256), std::invalid_argument);
}

TEST_CASE("mollifier convolution passes constants through") {
  SECTION("pure mollification of a constant forcing") {
    CovarianceField field;
    field.spec = BasisSpec::make(4, 512);
    field.op.kind = OperatorKind::convolution;
    field.op.f_const = 3.7;
    field.op.psi = "bump(0,0.12)";
    const FieldEvaluator ev(field);
    const GridFunction u = GridFunction::sample([](double x) { return std::cos(3.0 * x); }, 512);
    const GridFunction out = ev.apply_grid(u);
    REQUIRE((out.values.array() - 3.7).abs().maxCoeff() < 1e-10);
  }
  SECTION("constant inputs map to flat coefficients") {
    const FieldEvaluator ev(builtin_field("mollified", 4, 512));
    const GridFunction u = GridFunction::sample([](double) { return 0.8; }, 512);
    const GridFunction out = ev.apply_grid(u);
    REQUIRE(out.values.maxCoeff() - out.values.minCoeff() < 1e-12);
    REQUIRE(out.values.minCoeff() > 1.0);  // psi * (2 + 0.5 tanh(...)) stays near 2
    REQUIRE(out.values.maxCoeff() < 3.0);
  }
}

TEST_CASE("operator construction rejects inconsistent shapes") {
  CovarianceField field;
  field.spec = BasisSpec::make(2, 256);

  field.op.kind = OperatorKind::constant;
  field.op.terms = {{0.5, 1, LinkKind::tanh_link, 1.0, 0}};
  REQUIRE_THROWS_AS(FieldEvaluator(field), std::invalid_argument);

  field.op.kind = OperatorKind::inner_product;
  field.op.phis = {};  // term 0 references a missing test function
  REQUIRE_THROWS_AS(FieldEvaluator(field), std::invalid_argument);

  field.op.phis = {"e_1"};
  field.op.terms = {{0.5, 5, LinkKind::tanh_link, 1.0, 0}};  // beyond the moment band
  REQUIRE_THROWS_AS(FieldEvaluator(field), std::invalid_argument);

  field.op.kind = OperatorKind::convolution;
  field.op.terms = {{0.5, 0, LinkKind::tanh_link, 1.0, 0}};
  field.op.psi = "";
  REQUIRE_THROWS_AS(FieldEvaluator(field), std::invalid_argument);

  REQUIRE_THROWS_AS(builtin_field("no_such_field", 4, 256), std::invalid_argument);
  REQUIRE_THROWS_AS(link_from_name("cubic"), std::invalid_argument);
}

TEST_CASE("builtin coefficients respect their declared envelopes") {
  for (const std::string name : {"smooth_profile", "two_mode", "mollified"}) {
    const CovarianceField field = builtin_field(name, 4, 512);
    const FieldEvaluator ev(field);
    for (int r = 0; r < 5; ++r) {
      const GridFunction prof = ev.coefficient(random_state(5, 100 + r));
      REQUIRE(prof.values.minCoeff() >= field.op.kappa2 - 1e-12);
      REQUIRE(prof.values.maxCoeff() <= 1.0 / field.op.kappa2 + 1e-12);
    }
  }
}

TEST_CASE("coefficient distances and mode metrics") {
  const GridFunction two = GridFunction::sample([](double) { return 2.0; }, 256);
  const GridFunction five = GridFunction::sample([](double) { return 5.0; }, 256);
  REQUIRE(std::fabs(coefficient_l2_distance(two, five) - 3.0) < 1e-12);
  REQUIRE(coefficient_l2_distance(two, two) == 0.0);
  const GridFunction coarse = GridFunction::sample([](double) { return 2.0; }, 128);
  REQUIRE_THROWS_AS(coefficient_l2_distance(two, coarse), std::invalid_argument);

  Eigen::VectorXd x(4), y(4);
  x << 9.0, 2.0, 0.0, 0.5;
  y << 0.0, 0.0, 0.0, 0.0;
  // The zero mode never enters the metric.
  REQUIRE(std::fabs(mode_metric(x, y, 1.0, 2.0) - (2.0 + 0.5 / 9.0)) < 1e-14);
  REQUIRE(mode_metric(x, x, 0.9, 4.0) == 0.0);
  Eigen::VectorXd z(3);
  REQUIRE_THROWS_AS(mode_metric(x, z, 1.0, 2.0), std::invalid_argument);

  Eigen::MatrixXd m(2, 2), n(2, 2);
  m << 1.0, -2.0, 0.5, 0.0;
  n.setZero();
  REQUIRE(std::fabs(schur_distance(m, n) - 3.0) < 1e-15);
}

TEST_CASE("constant operators are insensitive to the state") {
  const CovarianceField field = builtin_field("constant(1.3)", 4, 256);
  const FieldEvaluator ev(field);
  const Eigen::VectorXd x = random_state(5, 21), y = random_state(5, 22);
  REQUIRE(schur_distance(ev.covariance(x), ev.covariance(y)) == 0.0);

  std::vector<SpectralState> states;
  for (int r = 0; r < 2; ++r) {
    SpectralState s;
    s.coeffs = random_state(5, 30 + r);
    states.push_back(s);
  }
  const SmoothnessReport rep = validate_fholder(field, states, {0.2, -0.05}, 3);
  REQUIRE(rep.kappa1 == 0.0);
  REQUIRE(rep.mode_decay.degenerate);
  REQUIRE(rep.pass);
}

TEST_CASE("state perturbation response decays across modes") {
  const CovarianceField field = builtin_field("mollified", 16, 512);
  std::vector<SpectralState> states;
  for (int r = 0; r < 2; ++r) {
    SpectralState s;
    s.coeffs = random_state(17, 40 + r);
    states.push_back(s);
  }
  const SmoothnessReport rep = validate_fholder(field, states, {0.5, -0.25}, 12);
  REQUIRE(rep.pass);
  REQUIRE(rep.kappa1 > 0.0);
  REQUIRE(std::isfinite(rep.kappa1));
  REQUIRE((rep.mode_decay.degenerate || rep.mode_decay.exponent >= field.op.beta - 0.25));

  REQUIRE_THROWS_AS(validate_fholder(field, states, {}, 12), std::invalid_argument);
  REQUIRE_THROWS_AS(validate_fholder(field, states, {0.0}, 12), std::invalid_argument);
  REQUIRE_THROWS_AS(validate_fholder(field, states, {0.1}, 20), std::invalid_argument);
}

TEST_CASE("squared coefficient mode decay meets the declared band exponent") {
  SECTION("mollified profiles decay superpolynomially") {
    const CovarianceField field = builtin_field("mollified", 16, 512);
    SpectralState s;
    s.coeffs = random_state(17, 55);
    const DecayFit fit = validate_fdecay(field, s, 16);
    REQUIRE(fit.pass);
    REQUIRE((fit.degenerate || fit.exponent >= field.op.gamma - 0.25));
    REQUIRE(fit.constant > 0.0);
  }
  SECTION("flat coefficients are degenerate") {
    const CovarianceField field = builtin_field("constant", 8, 256);
    SpectralState s;
    s.coeffs = random_state(9, 56);
    const DecayFit fit = validate_fdecay(field, s, 8);
    REQUIRE(fit.degenerate);
    REQUIRE(fit.pass);
  }
}

TEST_CASE("covariance modulus probe accepts the smooth builtin") {
  const CovarianceField field = builtin_field("smooth_profile", 8, 512);
  const HolderProbe probe = holder_modulus_probe(field, 16, 3);
  REQUIRE(probe.c1 > 0.0);
  REQUIRE(probe.heldout_ratio <= 1.25);
  REQUIRE(probe.separation_exponent >= 0.5 * field.op.alpha - 0.1);
  REQUIRE(probe.pass);
  REQUIRE_THROWS_AS(holder_modulus_probe(field, 4, 3), std::invalid_argument);
}

TEST_CASE("operator json round trip preserves every declared field") {
  for (const std::string name : {"smooth_profile", "mollified", "constant(0.5)"}) {
    const CovarianceField field = builtin_field(name, 6, 512);
    const CoefficientOperator back = operator_from_json(operator_to_json(field.op));
    REQUIRE(back.kind == field.op.kind);
    REQUIRE(back.value == field.op.value);
    REQUIRE(back.f_const == field.op.f_const);
    REQUIRE(back.terms.size() == field.op.terms.size());
    for (size_t i = 0; i < back.terms.size(); ++i) {
      REQUIRE(back.terms[i].amp == field.op.terms[i].amp);
      REQUIRE(back.terms[i].profile_mode == field.op.terms[i].profile_mode);
      REQUIRE(back.terms[i].link == field.op.terms[i].link);
      REQUIRE(back.terms[i].scale == field.op.terms[i].scale);
      REQUIRE(back.terms[i].arg == field.op.terms[i].arg);
    }
    REQUIRE(back.phis == field.op.phis);
    REQUIRE(back.psi == field.op.psi);
    REQUIRE(back.kappa2 == field.op.kappa2);
    REQUIRE(back.alpha == field.op.alpha);
    REQUIRE(back.beta == field.op.beta);
    REQUIRE(back.gamma == field.op.gamma);

    const json jf = field_to_json(field);
    const CovarianceField rt = field_from_json(jf);
    REQUIRE(rt.spec.truncation == field.spec.truncation);
    REQUIRE(rt.spec.grid_points == field.spec.grid_points);
    REQUIRE(rt.op.kind == field.op.kind);
  }
  REQUIRE(field_from_json(json{{"builtin", "two_mode"}, {"K", 3}, {"M", 512}})
              .spec.truncation == 3);
  REQUIRE_THROWS_AS(field_from_json(json{{"K", 3}}), std::invalid_argument);
}
