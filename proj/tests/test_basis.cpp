#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "ouspde/basis.hpp"
#include "ouspde/fit.hpp"
#include "ouspde/rng.hpp"

using namespace ouspde;

TEST_CASE("eigenvalues follow the half-squared cosine dispersion") {
  REQUIRE(eigenvalue(0) == 0.0);
  REQUIRE(std::fabs(eigenvalue(1) - 4.934802200544679) < 1e-14);
  REQUIRE(std::fabs(eigenvalue(3) - 44.41321980490211) < 1e-12);
  for (int n : {2, 7, 31})
    REQUIRE(std::fabs(eigenvalue(n) - 0.5 * n * n * kPi * kPi) < 1e-12 * eigenvalue(n));
  REQUIRE_THROWS_AS(eigenvalue(-1), std::invalid_argument);
}

TEST_CASE("cosine modes evaluate to the normalized closed form") {
  REQUIRE(basis_eval(0, 0.37) == 1.0);
  REQUIRE(std::fabs(basis_eval(1, 0.0) - 1.4142135623730951) < 1e-15);
  REQUIRE(std::fabs(basis_eval(2, 0.5) - (-std::sqrt(2.0))) < 1e-14);
  REQUIRE(std::fabs(basis_eval(5, 0.2) - std::sqrt(2.0) * std::cos(kPi)) < 1e-13);
  REQUIRE_THROWS_AS(basis_eval(-1, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(basis_eval(2, -0.1), std::invalid_argument);
  REQUIRE_THROWS_AS(basis_eval(2, 1.1), std::invalid_argument);
}

TEST_CASE("basis spec construction validates its grid") {
  const BasisSpec spec = BasisSpec::make(4, 256);
  REQUIRE(spec.dim() == 5);
  REQUIRE(spec.grid_points == 256);
  REQUIRE(spec.lambdas.size() == 5);
  REQUIRE(spec.lambdas[2] == eigenvalue(2));
  REQUIRE_THROWS_AS(BasisSpec::make(-1, 256), std::invalid_argument);
  REQUIRE_THROWS_AS(BasisSpec::make(4, 255), std::invalid_argument);  // odd panel count
  REQUIRE_THROWS_AS(BasisSpec::make(4, 128), std::invalid_argument);  // too few panels
  REQUIRE_THROWS_AS(BasisSpec::make(100, 256), std::invalid_argument);  // grid too coarse
}

TEST_CASE("grid functions sample on uniform nodes") {
  const GridFunction g = GridFunction::sample([](double x) { return 3.0 * x; }, 8);
  REQUIRE(g.panels() == 8);
  REQUIRE(g.x(0) == 0.0);
  REQUIRE(g.x(8) == 1.0);
  REQUIRE(std::fabs(g.values[4] - 1.5) < 1e-15);
  REQUIRE_THROWS_AS(GridFunction::sample([](double) { return 0.0; }, 7), std::invalid_argument);
}

TEST_CASE("simpson integral is exact on cubics") {
  const GridFunction g =
      GridFunction::sample([](double x) { return x * x * x - 0.5 * x + 2.0; }, 64);
  REQUIRE(std::fabs(simpson_integral(g.values) - 2.0) < 1e-14);
  REQUIRE_THROWS_AS(simpson_weights(5), std::invalid_argument);
}

TEST_CASE("discrete cosine modes stay orthonormal under the quadrature") {
  const int M = 4096;
  std::vector<GridFunction> modes;
  for (int n = 0; n <= 32; ++n)
    modes.push_back(GridFunction::sample([n](double x) { return basis_eval(n, x); }, M));
  double worst = 0.0;
  for (int m = 0; m <= 32; ++m)
    for (int n = m; n <= 32; ++n) {
      const double ip = project_mode(modes[m], n);
      worst = std::max(worst, std::fabs(ip - (m == n ? 1.0 : 0.0)));
    }
  REQUIRE(worst <= 1e-8);
}

TEST_CASE("grid second differences reproduce the eigenvalue relation") {
  // e_n'' = -2 lambda_n e_n; the centered stencil converges at second order.
  auto worst_residual = [](int n, int M) {
    const GridFunction g = GridFunction::sample([n](double x) { return basis_eval(n, x); }, M);
    const double h = 1.0 / M;
    double worst = 0.0;
    for (int i = 1; i < M; ++i) {
      const double dd = (g.values[i + 1] - 2.0 * g.values[i] + g.values[i - 1]) / (h * h);
      worst = std::max(worst, std::fabs(dd + 2.0 * eigenvalue(n) * g.values[i]));
    }
    return worst / (2.0 * eigenvalue(n) * std::sqrt(2.0));
  };
  for (int n : {1, 5, 12}) {
    const double coarse = worst_residual(n, 2048);
    const double fine = worst_residual(n, 4096);
    REQUIRE(fine <= 1e-4);
    REQUIRE(fine / coarse < 0.3);  // second-order shrinkage
    REQUIRE(fine / coarse > 0.2);
  }
}

TEST_CASE("projection recovers quadratic fourier coefficients") {
  const GridFunction g = GridFunction::sample([](double x) { return x * x; }, 4096);
  REQUIRE(std::fabs(project_mode(g, 0) - 1.0 / 3.0) < 1e-12);
  for (int n = 1; n <= 8; ++n) {
    const double exact = ((n % 2 == 0) ? 1.0 : -1.0) * 2.0 * std::sqrt(2.0) / (n * n * kPi * kPi);
    REQUIRE(std::fabs(project_mode(g, n) - exact) < 1e-10);
  }
  REQUIRE(std::fabs(project_mode(g, 1) - (-0.28657958412537815)) < 1e-10);
}

TEST_CASE("projection and reconstruction invert each other on band-limited data") {
  const BasisSpec spec = BasisSpec::make(4, 512);
  SpectralState s;
  s.coeffs.resize(5);
  s.coeffs << 0.3, -1.2, 0.7, 0.05, -0.4;
  const GridFunction g = reconstruct(s, spec);
  const SpectralState back = project(g, spec);
  REQUIRE((back.coeffs - s.coeffs).cwiseAbs().maxCoeff() < 1e-12);

  SpectralState one;
  one.coeffs = Eigen::VectorXd::Zero(5);
  one.coeffs[0] = 1.0;
  const GridFunction flat = reconstruct(one, spec);
  REQUIRE((flat.values.array() - 1.0).abs().maxCoeff() == 0.0);

  SpectralState e1;
  e1.coeffs = Eigen::VectorXd::Zero(5);
  e1.coeffs[1] = 1.0;
  const GridFunction mode = reconstruct(e1, spec);
  for (int i = 0; i <= 512; i += 64)
    REQUIRE(std::fabs(mode.values[i] - basis_eval(1, mode.x(i))) < 1e-15);

  SpectralState wrong;
  wrong.coeffs = Eigen::VectorXd::Zero(3);
  REQUIRE_THROWS_AS(reconstruct(wrong, spec), std::invalid_argument);
  const GridFunction coarse = GridFunction::sample([](double) { return 1.0; }, 256);
  REQUIRE_THROWS_AS(project(coarse, spec), std::invalid_argument);
}

TEST_CASE("even periodic extension folds the axis correctly") {
  const GridFunction f =
      GridFunction::sample([](double x) { return x * x * x + 0.25 * x; }, 512);
  // Evenness is exact at the bit level: the fold maps -x and x identically.
  REQUIRE(even_periodic_extension_eval(f, -0.37) == even_periodic_extension_eval(f, 0.37));
  // 2-periodicity and reflection at 1, up to fold roundoff on a Lipschitz f.
  REQUIRE(std::fabs(even_periodic_extension_eval(f, 2.3) -
                    even_periodic_extension_eval(f, 0.3)) < 1e-12);
  REQUIRE(std::fabs(even_periodic_extension_eval(f, -0.3) -
                    even_periodic_extension_eval(f, 0.3)) < 1e-12);
  REQUIRE(std::fabs(even_periodic_extension_eval(f, 1.4) -
                    even_periodic_extension_eval(f, 0.6)) < 1e-12);
  // Interpolation error stays quadratic in the mesh width.
  REQUIRE(std::fabs(even_periodic_extension_eval(f, 0.6) - (0.216 + 0.15)) < 1e-5);
}

TEST_CASE("integer index reflection folds with the doubled period") {
  REQUIRE(reflect_index(3, 8) == 3);
  REQUIRE(reflect_index(-1, 8) == 1);
  REQUIRE(reflect_index(9, 8) == 7);
  REQUIRE(reflect_index(16, 8) == 0);
  REQUIRE(reflect_index(8, 8) == 8);
  REQUIRE(reflect_index(23, 8) == 7);
  REQUIRE(reflect_index(-9, 8) == 7);
}

TEST_CASE("fourier decay fit matches analytic spectra") {
  SECTION("quadratic profile decays at second order") {
    const GridFunction g = GridFunction::sample([](double x) { return x * x; }, 4096);
    const DecayFit fit = fourier_decay_check(g, 2.0, 32);
    REQUIRE(fit.pass);
    REQUIRE_FALSE(fit.degenerate);
    REQUIRE(fit.exponent >= 1.75);
    REQUIRE(fit.exponent <= 2.25);
  }
  SECTION("single mode data is degenerate and passes") {
    const GridFunction g = GridFunction::sample([](double x) { return basis_eval(1, x); }, 1024);
    const DecayFit fit = fourier_decay_check(g, 3.0, 16);
    REQUIRE(fit.degenerate);
    REQUIRE(fit.pass);
  }
  SECTION("smooth periodic profile decays faster than any tested power") {
    const GridFunction g =
        GridFunction::sample([](double x) { return std::exp(std::cos(kPi * x)); }, 4096);
    const DecayFit fit = fourier_decay_check(g, 6.0, 64);
    REQUIRE(fit.pass);
    REQUIRE((fit.degenerate || fit.exponent >= 6.0));
  }
  SECTION("constructed third-power coefficients are recovered") {
    const BasisSpec spec = BasisSpec::make(8, 1024);
    SpectralState s;
    s.coeffs = Eigen::VectorXd::Zero(9);
    s.coeffs[0] = 1.0;
    for (int k = 1; k <= 8; ++k) s.coeffs[k] = std::pow(static_cast<double>(k), -3.0);
    const GridFunction g = reconstruct(s, spec);
    const DecayFit fit = fourier_decay_check(g, 3.0, 8);
    REQUIRE(fit.pass);
    REQUIRE(std::fabs(fit.exponent - 3.0) <= 0.25);
  }
  SECTION("grid too coarse for the mode range is rejected") {
    const GridFunction g = GridFunction::sample([](double x) { return x; }, 64);
    REQUIRE_THROWS_AS(fourier_decay_check(g, 2.0, 32), std::invalid_argument);
  }
}

TEST_CASE("power law regression recovers exact and noisy slopes") {
  SECTION("exact quadratic data") {
    std::vector<std::pair<double, double>> data;
    for (double p : {0.5, 1.0, 2.0, 4.0, 8.0}) data.push_back({p, 3.0 * p * p});
    const DecayFit fit = fit_power_law(data);
    REQUIRE(std::fabs(fit.exponent - 2.0) < 1e-12);
    REQUIRE(std::fabs(fit.constant - 3.0) < 1e-12);
    REQUIRE(fit.max_residual_ratio < 1.0 + 1e-12);
    REQUIRE(fit.points_used == 5);
  }
  SECTION("constant data fits a zero slope") {
    std::vector<std::pair<double, double>> data = {{1.0, 5.0}, {2.0, 5.0}, {7.0, 5.0}};
    const DecayFit fit = fit_power_law(data);
    REQUIRE(std::fabs(fit.exponent) < 1e-14);
    REQUIRE(std::fabs(fit.constant - 5.0) < 1e-12);
  }
  SECTION("five percent multiplicative noise moves the slope less than 0.1") {
    RngStream rng(42);
    std::vector<std::pair<double, double>> data;
    for (int i = 0; i < 12; ++i) {
      const double p = std::pow(10.0, static_cast<double>(i) / 11.0);  // 1 .. 10
      const double noise = 0.95 + 0.1 * rng.uniform();
      data.push_back({p, std::pow(p, -1.5) * noise});
    }
    const DecayFit fit = fit_power_law(data);
    REQUIRE(std::fabs(fit.exponent - (-1.5)) <= 0.1);
  }
  SECTION("invalid inputs are rejected") {
    REQUIRE_THROWS_AS(fit_power_law({{1.0, 1.0}, {2.0, 2.0}}), std::invalid_argument);
    REQUIRE_THROWS_AS(fit_power_law({{1.0, 1.0}, {2.0, -1.0}, {3.0, 1.0}}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(fit_power_law({{1.0, 1.0}, {-2.0, 1.0}, {3.0, 1.0}}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(fit_power_law({{2.0, 1.0}, {2.0, 2.0}, {2.0, 3.0}}),
                      std::invalid_argument);
  }
  SECTION("decay fits report the rate positively and gate on it") {
    std::vector<std::pair<double, double>> data;
    for (double p : {1.0, 2.0, 4.0, 8.0}) data.push_back({p, 2.0 * std::pow(p, -3.0)});
    const DecayFit fit = fit_decay(data, 1e-14, 2.5);
    REQUIRE(fit.pass);
    REQUIRE(std::fabs(fit.exponent - 3.0) < 1e-12);
    const DecayFit strict = fit_decay(data, 1e-14, 3.5);
    REQUIRE_FALSE(strict.pass);
    // All points at the floor: degenerate pass.
    const DecayFit deg = fit_decay(data, 10.0, 3.0);
    REQUIRE(deg.degenerate);
    REQUIRE(deg.pass);
  }
}
