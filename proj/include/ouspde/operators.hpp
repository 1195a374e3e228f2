#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ouspde/basis.hpp"
#include "ouspde/common.hpp"
#include "ouspde/fit.hpp"
#include "ouspde/rng.hpp"

namespace ouspde {

enum class OperatorKind { constant, inner_product, convolution };
enum class LinkKind { tanh_link, sin_link, cos_link };

inline double link_eval(LinkKind k, double z) {
  switch (k) {
    case LinkKind::tanh_link: return std::tanh(z);
    case LinkKind::sin_link: return std::sin(z);
    case LinkKind::cos_link: return std::cos(z);
  }
  return 0.0;
}

inline LinkKind link_from_name(const std::string& name) {
  if (name == "tanh") return LinkKind::tanh_link;
  if (name == "sin") return LinkKind::sin_link;
  if (name == "cos") return LinkKind::cos_link;
  throw std::invalid_argument("unknown link: " + name);
}

inline std::string link_name(LinkKind k) {
  switch (k) {
    case LinkKind::tanh_link: return "tanh";
    case LinkKind::sin_link: return "sin";
    case LinkKind::cos_link: return "cos";
  }
  return "?";
}

/// One additive term amp * cos(profile_mode*pi*x) * link(scale * y[arg]) of the
/// coefficient map, where y[arg] is the arg-th functional of the state.
struct LinkTerm {
  double amp = 0.0;
  int profile_mode = 0;
  LinkKind link = LinkKind::tanh_link;
  double scale = 1.0;
  int arg = 0;
};

/// Pointwise diffusion coefficient A(u). Three shapes:
///  - constant:       A(u)(x) = value
///  - inner_product:  A(u)(x) = f_const + sum_t amp_t cos(m_t pi x) link_t(scale_t <u, phi_t>)
///  - convolution:    A(u) = psi * F,  F(z) = f_const + sum_t amp_t link_t(scale_t (phi_t * u_ext)(z))
/// u_ext is the even 2-periodic extension; the mollifier psi is normalized to
/// unit integral over one period so constant inputs map to constant outputs.
struct CoefficientOperator {
  OperatorKind kind = OperatorKind::constant;
  double value = 1.0;  // constant kind only
  double f_const = 1.0;
  std::vector<LinkTerm> terms;
  std::vector<std::string> phis;  // named test functions feeding the links
  std::string psi;                // mollifier name, convolution kind only
  double kappa2 = 0.5;            // ellipticity envelope: kappa2 <= A <= 1/kappa2
  double alpha = 1.0;             // declared perturbation exponent, in (1/2, 1]
  double beta = 4.0;              // declared mode-decay exponent of perturbations
  double gamma = 4.0;             // declared covariance band-decay exponent
};

/// Named test functions:
///   "e_n"            orthonormal cosine mode n
///   "bump(c,w)"      even 2-periodized Gaussian profile centered at c, width w
///   "poly(a0,a1,..)" polynomial sum a_i x^i on [0,1]
inline GridFunction sample_test_function(const std::string& name, int M) {
  auto args_of = [&](size_t open) {
    require(name.back() == ')', "test function: missing ')': " + name);
    std::vector<double> args;
    size_t pos = open + 1;
    while (pos < name.size() - 1) {
      size_t next = name.find(',', pos);
      if (next == std::string::npos || next > name.size() - 1) next = name.size() - 1;
      args.push_back(std::stod(name.substr(pos, next - pos)));
      pos = next + 1;
    }
    return args;
  };

  if (name.rfind("e_", 0) == 0) {
    const int n = std::stoi(name.substr(2));
    return GridFunction::sample([n](double x) { return basis_eval(n, x); }, M);
  }
  if (name.rfind("bump(", 0) == 0) {
    const auto args = args_of(4);
    require(args.size() == 2, "bump takes (center, width)");
    const double c = args[0], w = args[1];
    require(w > 0.0 && w <= 0.5, "bump width must lie in (0, 0.5]");
    return GridFunction::sample(
        [c, w](double x) {
          double s = 0.0;
          // Both image points of the even fold, summed over enough periods
          // that the dropped tail is below 1e-300.
          for (int m = -4; m <= 4; ++m) {
            const double d1 = (x - c - 2.0 * m) / w;
            const double d2 = (x + c - 2.0 * m) / w;
            s += std::exp(-0.5 * d1 * d1) + std::exp(-0.5 * d2 * d2);
          }
          return s;
        },
        M);
  }
  if (name.rfind("poly(", 0) == 0) {
    const auto coeffs = args_of(4);
    require(!coeffs.empty(), "poly needs at least one coefficient");
    return GridFunction::sample(
        [&coeffs](double x) {
          double v = 0.0;
          for (size_t i = coeffs.size(); i-- > 0;) v = v * x + coeffs[i];
          return v;
        },
        M);
  }
  throw std::invalid_argument("unknown test function: " + name);
}

/// A coefficient operator bound to a discretization.
struct CovarianceField {
  CoefficientOperator op;
  BasisSpec spec;

  double lambda0() const { return op.kappa2 * op.kappa2; }         // spectral floor
  double lambda1() const { return 1.0 / (op.kappa2 * op.kappa2); } // spectral cap
};

/// Evaluates state-dependent quantities of a covariance field: the coefficient
/// A(u_x) on the grid, its cosine moments d_m = <A(u_x)^2, cos(m pi .)>, and the
/// mode covariance a_jk(x). Copies share the immutable tables but own their
/// scratch, so use one evaluator (or copy) per thread.
class FieldEvaluator {
 public:
  explicit FieldEvaluator(const CovarianceField& field)
      : field_(std::make_shared<CovarianceField>(field)) {
    build_tables();
  }

  const CovarianceField& field() const { return *field_; }
  int dim() const { return field_->spec.dim(); }
  bool fast_path() const { return tables_->fast; }

  /// Cosine moments d_m, m = 0..2K, of A(u_x)^2.
  void moments_into(const Eigen::VectorXd& x, Eigen::VectorXd& d) const {
    require(static_cast<int>(x.size()) == dim(), "moments: state has wrong dimension");
    const Tables& tb = *tables_;
    const int n_m = 2 * field_->spec.truncation + 1;
    d.resize(n_m);
    if (tb.fast) {
      const auto& op = field_->op;
      const int n_t = static_cast<int>(op.terms.size());
      double g[kMaxTerms];
      for (int t = 0; t < n_t; ++t) {
        const auto& term = op.terms[t];
        const double ip = tb.phihat.row(term.arg).dot(x);
        g[t] = term.amp * link_eval(term.link, term.scale * ip);
      }
      for (int m = 0; m < n_m; ++m) {
        double v = op.f_const * op.f_const * tb.moment_const[m];
        for (int t = 0; t < n_t; ++t) v += 2.0 * op.f_const * g[t] * tb.moment_lin(t, m);
        for (int t = 0; t < n_t; ++t)
          for (int s = t; s < n_t; ++s)
            v += (s == t ? 1.0 : 2.0) * g[t] * g[s] * tb.moment_quad[quad_index(t, s, n_t)][m];
        d[m] = v;
      }
      return;
    }
    coefficient_into(x, work_a_);
    // d_m = sum_i w_i A_i^2 cos(m pi x_i), compensated per moment.
    const int M = field_->spec.grid_points;
    for (int m = 0; m < n_m; ++m) {
      KahanSum acc;
      for (int i = 0; i <= M; ++i)
        acc.add(tb.weights[i] * work_a_[i] * work_a_[i] * tb.cos_table(m, i));
      d[m] = acc.value();
    }
  }

  Eigen::VectorXd moments(const Eigen::VectorXd& x) const {
    Eigen::VectorXd d;
    moments_into(x, d);
    return d;
  }

  /// Mode covariance a_jk(x) = <A(u_x)^2 e_j, e_k> assembled from the moments:
  /// a_jk = c_j c_k (d_{|j-k|} + d_{j+k}) with c_0 = 1/sqrt(2), c_n = 1 otherwise.
  void covariance_into(const Eigen::VectorXd& x, Eigen::MatrixXd& a) const {
    moments_into(x, work_d_);
    assemble_covariance(work_d_, a);
  }

  Eigen::MatrixXd covariance(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd a;
    covariance_into(x, a);
    return a;
  }

  void assemble_covariance(const Eigen::VectorXd& d, Eigen::MatrixXd& a) const {
    const int n = dim();
    require(static_cast<int>(d.size()) == 2 * n - 1, "assemble_covariance: wrong moment count");
    a.resize(n, n);
    const double c0 = 1.0 / std::sqrt(2.0);
    for (int j = 0; j < n; ++j) {
      const double cj = (j == 0) ? c0 : 1.0;
      for (int k = j; k < n; ++k) {
        const double ck = (k == 0) ? c0 : 1.0;
        const double v = cj * ck * (d[k - j] + d[j + k]);
        a(j, k) = v;
        a(k, j) = v;
      }
    }
  }

  /// A(u_x) sampled on the grid.
  void coefficient_into(const Eigen::VectorXd& x, Eigen::VectorXd& a_grid) const {
    require(static_cast<int>(x.size()) == dim(), "coefficient: state has wrong dimension");
    const Tables& tb = *tables_;
    const auto& op = field_->op;
    const int M = field_->spec.grid_points;
    if (tb.fast) {
      a_grid.setConstant(M + 1, op.f_const);
      for (size_t t = 0; t < op.terms.size(); ++t) {
        const auto& term = op.terms[t];
        const double ip = tb.phihat.row(term.arg).dot(x);
        const double g = term.amp * link_eval(term.link, term.scale * ip);
        a_grid += g * tb.cos_table.row(term.profile_mode).transpose();
      }
      return;
    }
    // Convolution path works from the reconstructed profile.
    work_u_ = tb.cos_table.topRows(dim()).transpose() * scale_state(x);
    convolve_coefficient(work_u_, a_grid);
  }

  GridFunction coefficient(const Eigen::VectorXd& x) const {
    GridFunction g;
    coefficient_into(x, g.values);
    return g;
  }

  /// A(u) from raw grid samples of u (no spectral truncation of the input).
  GridFunction apply_grid(const GridFunction& u) const {
    require(u.panels() == field_->spec.grid_points, "apply_grid: grid mismatch");
    const Tables& tb = *tables_;
    const auto& op = field_->op;
    const int M = field_->spec.grid_points;
    GridFunction out;
    if (op.kind == OperatorKind::convolution) {
      convolve_coefficient(u.values, out.values);
      return out;
    }
    out.values.setConstant(M + 1, op.f_const);
    for (size_t t = 0; t < op.terms.size(); ++t) {
      const auto& term = op.terms[t];
      // <u, phi> by the shared quadrature rule.
      KahanSum acc;
      for (int i = 0; i <= M; ++i)
        acc.add(tb.weights[i] * u.values[i] * tb.phi_grid[term.arg][i]);
      const double g = term.amp * link_eval(term.link, term.scale * acc.value());
      out.values += g * tb.cos_table.row(term.profile_mode).transpose();
    }
    return out;
  }

 private:
  static constexpr int kMaxTerms = 16;

  struct Tables {
    bool fast = false;
    Eigen::VectorXd weights;          // Simpson weights, M+1
    Eigen::MatrixXd cos_table;        // (2K+1) x (M+1): cos(m pi x_i)
    std::vector<Eigen::VectorXd> phi_grid;  // sampled test functions
    // Fast path:
    Eigen::MatrixXd phihat;           // n_phi x (K+1): <e_n, phi_j>
    Eigen::VectorXd moment_const;     // <1, cos(m pi .)>
    Eigen::MatrixXd moment_lin;       // n_terms x (2K+1): <cos(k_t pi .), cos(m pi .)>
    std::vector<Eigen::VectorXd> moment_quad;  // upper-tri pairs of profiles
    // Convolution path:
    Eigen::VectorXd psi_ext;          // weighted mollifier samples over one period
    std::vector<Eigen::VectorXd> phi_ext;  // weighted test-function samples over one period
  };

  static int quad_index(int t, int s, int n) { return t * n - t * (t - 1) / 2 + (s - t); }

  Eigen::VectorXd scale_state(const Eigen::VectorXd& x) const {
    Eigen::VectorXd s = x;
    const double r2 = std::sqrt(2.0);
    for (int n = 1; n < s.size(); ++n) s[n] *= r2;
    return s;
  }

  void convolve_coefficient(const Eigen::VectorXd& u_grid, Eigen::VectorXd& a_grid) const {
    const Tables& tb = *tables_;
    const auto& op = field_->op;
    const int M = field_->spec.grid_points;
    const int n_phi = static_cast<int>(op.phis.size());
    // V_j = phi_j * u_ext on the grid, integrating over one full period.
    work_v_.resize(n_phi, M + 1);
    for (int j = 0; j < n_phi; ++j) {
      const Eigen::VectorXd& pe = tb.phi_ext[j];
      for (int i = 0; i <= M; ++i) {
        KahanSum acc;
        for (int k = 0; k <= 2 * M; ++k)
          acc.add(pe[k] * u_grid[reflect_index(i - k + M, M)]);
        work_v_(j, i) = acc.value();
      }
    }
    work_f_.setConstant(M + 1, op.f_const);
    for (const auto& term : op.terms)
      for (int i = 0; i <= M; ++i)
        work_f_[i] += term.amp * link_eval(term.link, term.scale * work_v_(term.arg, i));
    a_grid.resize(M + 1);
    for (int i = 0; i <= M; ++i) {
      KahanSum acc;
      for (int k = 0; k <= 2 * M; ++k)
        acc.add(tb.psi_ext[k] * work_f_[reflect_index(i - k + M, M)]);
      a_grid[i] = acc.value();
    }
  }

  void build_tables() {
    const auto& op = field_->op;
    const BasisSpec& spec = field_->spec;
    const int K = spec.truncation;
    const int M = spec.grid_points;
    require(op.terms.size() <= kMaxTerms, "operator has too many terms");
    for (const auto& term : op.terms) {
      require(term.arg >= 0 && static_cast<size_t>(term.arg) < op.phis.size(),
              "term references a missing test function");
      require(term.profile_mode >= 0 && term.profile_mode <= 2 * K,
              "profile mode exceeds the moment band");
      if (op.kind == OperatorKind::convolution)
        require(term.profile_mode == 0, "convolution operators take no explicit profile");
    }
    if (op.kind == OperatorKind::constant)
      require(op.terms.empty(), "constant operators take no terms");
    if (op.kind == OperatorKind::convolution)
      require(!op.psi.empty(), "convolution operators need a mollifier");

    auto tb = std::make_shared<Tables>();
    tb->weights = simpson_weights(M);
    tb->cos_table.resize(2 * K + 1, M + 1);
    for (int m = 0; m <= 2 * K; ++m)
      for (int i = 0; i <= M; ++i)
        tb->cos_table(m, i) = std::cos(m * kPi * static_cast<double>(i) / M);

    for (const auto& name : op.phis)
      tb->phi_grid.push_back(sample_test_function(name, M).values);

    tb->fast = (op.kind != OperatorKind::convolution);
    if (tb->fast) {
      const int n_phi = static_cast<int>(op.phis.size());
      tb->phihat.resize(std::max(n_phi, 1), K + 1);
      for (int j = 0; j < n_phi; ++j) {
        GridFunction pg{tb->phi_grid[j]};
        for (int n = 0; n <= K; ++n) tb->phihat(j, n) = project_mode(pg, n);
      }
      const int n_t = static_cast<int>(op.terms.size());
      const int n_m = 2 * K + 1;
      tb->moment_const.resize(n_m);
      for (int m = 0; m < n_m; ++m) {
        KahanSum acc;
        for (int i = 0; i <= M; ++i) acc.add(tb->weights[i] * tb->cos_table(m, i));
        tb->moment_const[m] = acc.value();
      }
      tb->moment_lin.resize(std::max(n_t, 1), n_m);
      for (int t = 0; t < n_t; ++t) {
        const int kt = op.terms[t].profile_mode;
        for (int m = 0; m < n_m; ++m) {
          KahanSum acc;
          for (int i = 0; i <= M; ++i)
            acc.add(tb->weights[i] * tb->cos_table(kt, i) * tb->cos_table(m, i));
          tb->moment_lin(t, m) = acc.value();
        }
      }
      tb->moment_quad.resize(quad_index(n_t - 1, n_t - 1, n_t) + 1);
      for (int t = 0; t < n_t; ++t) {
        for (int s = t; s < n_t; ++s) {
          const int kt = op.terms[t].profile_mode, ks = op.terms[s].profile_mode;
          Eigen::VectorXd q(n_m);
          for (int m = 0; m < n_m; ++m) {
            KahanSum acc;
            for (int i = 0; i <= M; ++i)
              acc.add(tb->weights[i] * tb->cos_table(kt, i) * tb->cos_table(ks, i) *
                      tb->cos_table(m, i));
            q[m] = acc.value();
          }
          tb->moment_quad[quad_index(t, s, n_t)] = std::move(q);
        }
      }
      if (n_t == 0) tb->moment_quad.clear();
    } else {
      // One-period sample arrays with quadrature weights folded in.
      const GridFunction psi_raw = sample_test_function(op.psi, M);
      Eigen::VectorXd w2(2 * M + 1);
      const double h = 1.0 / M;
      w2[0] = w2[2 * M] = h / 3.0;
      for (int k = 1; k < 2 * M; ++k) w2[k] = (k % 2 == 1) ? 4.0 * h / 3.0 : 2.0 * h / 3.0;
      // Normalize psi to unit period integral so constants pass through.
      KahanSum mass;
      for (int k = 0; k <= 2 * M; ++k) mass.add(w2[k] * psi_raw.values[reflect_index(k - M, M)]);
      require(mass.value() > 0.0, "mollifier must have positive mass");
      const double inv_mass = 1.0 / mass.value();
      tb->psi_ext.resize(2 * M + 1);
      for (int k = 0; k <= 2 * M; ++k)
        tb->psi_ext[k] = inv_mass * w2[k] * psi_raw.values[reflect_index(k - M, M)];
      for (const auto& pg : tb->phi_grid) {
        Eigen::VectorXd pe(2 * M + 1);
        for (int k = 0; k <= 2 * M; ++k) pe[k] = w2[k] * pg[reflect_index(k - M, M)];
        tb->phi_ext.push_back(std::move(pe));
      }
    }
    tables_ = std::move(tb);
  }

  std::shared_ptr<const CovarianceField> field_;
  std::shared_ptr<const Tables> tables_;
  mutable Eigen::VectorXd work_d_, work_u_, work_a_, work_f_;
  mutable Eigen::MatrixXd work_v_;
};

/// One-shot covariance a_jk(x); hot loops should hold a FieldEvaluator instead.
inline Eigen::MatrixXd covariance_matrix(const CovarianceField& field, const Eigen::VectorXd& x) {
  return FieldEvaluator(field).covariance(x);
}

/// One-shot coefficient application to grid samples.
inline GridFunction apply_operator(const CovarianceField& field, const GridFunction& u) {
  return FieldEvaluator(field).apply_grid(u);
}

/// Two-part cosine split of the covariance: a banded Toeplitz part generated
/// by d_{|j-k|} plus the anti-diagonal remainder generated by d_{j+k}, both
/// carrying the index-0 factor 1/sqrt(2) once per index occurrence.
struct ToeplitzSplit {
  Eigen::VectorXd band;              // moments d_0..d_K generating the Toeplitz part
  Eigen::MatrixXd toeplitz_part;     // c_j c_k d_{|j-k|}
  Eigen::MatrixXd residual_part;     // c_j c_k d_{j+k}
};

inline ToeplitzSplit toeplitz_split(const FieldEvaluator& ev, const Eigen::VectorXd& x) {
  const int n = ev.dim();
  const Eigen::VectorXd d = ev.moments(x);
  ToeplitzSplit split;
  split.band = d.head(n);
  split.toeplitz_part.resize(n, n);
  split.residual_part.resize(n, n);
  const double c0 = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < n; ++j) {
    const double cj = (j == 0) ? c0 : 1.0;
    for (int k = 0; k < n; ++k) {
      const double ck = (k == 0) ? c0 : 1.0;
      split.toeplitz_part(j, k) = cj * ck * d[std::abs(j - k)];
      split.residual_part(j, k) = cj * ck * d[j + k];
    }
  }
  const Eigen::MatrixXd a = ev.covariance(x);
  const double scale = 1.0 + a.cwiseAbs().maxCoeff();
  const double dev =
      (split.toeplitz_part + split.residual_part - a).cwiseAbs().maxCoeff();
  if (dev > 1e-8 * scale)
    throw split_error("two-part split failed to reconstruct the covariance");
  return split;
}

inline ToeplitzSplit toeplitz_split(const CovarianceField& field, const Eigen::VectorXd& x) {
  return toeplitz_split(FieldEvaluator(field), x);
}

/// L2([0,1]) distance between coefficient outputs.
inline double coefficient_l2_distance(const GridFunction& a, const GridFunction& b) {
  require(a.panels() == b.panels(), "coefficient_l2_distance: grid mismatch");
  Eigen::VectorXd diff = (a.values - b.values).array().square();
  return std::sqrt(std::max(0.0, simpson_integral(diff)));
}

/// Response of A to single-mode perturbations of the state, fitted against
/// the declared modulus kappa1 |h|^alpha (k+1)^{-beta}.
struct SmoothnessReport {
  double kappa1 = 0.0;
  DecayFit mode_decay;
  bool pass = false;
};

inline SmoothnessReport validate_fholder(const CovarianceField& field,
                                         const std::vector<SpectralState>& states,
                                         const std::vector<double>& offsets, int k_max) {
  require(!states.empty() && !offsets.empty(), "validate_fholder: empty probe set");
  require(k_max >= 3 && k_max <= field.spec.truncation,
          "validate_fholder: mode range outside the spec");
  const FieldEvaluator ev(field);
  const int M = field.spec.grid_points;
  const auto& op = field.op;

  SmoothnessReport report;
  std::vector<std::pair<double, double>> per_mode;
  for (int k = 0; k <= k_max; ++k) {
    GridFunction mode = GridFunction::sample([k](double x) { return basis_eval(k, x); }, M);
    double worst = 0.0;
    for (const auto& s : states) {
      GridFunction u = reconstruct(s, field.spec);
      const GridFunction base = ev.apply_grid(u);
      for (double h : offsets) {
        require(h != 0.0, "validate_fholder: offsets must be nonzero");
        GridFunction shifted{u.values + h * mode.values};
        const double dist = coefficient_l2_distance(ev.apply_grid(shifted), base);
        worst = std::max(worst, dist / std::pow(std::fabs(h), op.alpha));
        const double modulus =
            std::pow(std::fabs(h), op.alpha) * std::pow(k + 1.0, -op.beta);
        report.kappa1 = std::max(report.kappa1, dist / modulus);
      }
    }
    per_mode.push_back({k + 1.0, worst});
  }
  report.mode_decay = fit_decay(per_mode, 1e-14, op.beta - 0.25);
  report.pass = report.mode_decay.pass && std::isfinite(report.kappa1);
  return report;
}

/// Decay of the cosine coefficients of A(u)^2 against the declared band
/// exponent gamma; `constant` carries the sup-form kappa3.
inline DecayFit validate_fdecay(const CovarianceField& field, const SpectralState& state,
                                int n_max) {
  require(n_max >= 3, "validate_fdecay: need modes up to at least 3");
  const FieldEvaluator ev(field);
  GridFunction a = ev.apply_grid(reconstruct(state, field.spec));
  GridFunction squared{a.values.array().square().matrix()};
  DecayFit fit = fourier_decay_check(squared, field.op.gamma, n_max);
  double kappa3 = 0.0;
  for (int k = 0; k <= n_max; ++k) {
    const double c = std::fabs(project_mode(squared, k));
    kappa3 = std::max(kappa3, c * (1.0 + std::pow(k + 1.0, field.op.gamma)));
  }
  fit.constant = kappa3;
  return fit;
}

/// Weighted mode metric d(x, y) = sum_{n>=1} |x_n - y_n|^alpha n^{-beta}.
inline double mode_metric(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double alpha,
                          double beta) {
  require(x.size() == y.size(), "mode_metric: dimension mismatch");
  KahanSum acc;
  for (int n = 1; n < x.size(); ++n)
    acc.add(std::pow(std::fabs(x[n] - y[n]), alpha) * std::pow(static_cast<double>(n), -beta));
  return acc.value();
}

/// Schur (max absolute row sum) distance between two symmetric matrices.
inline double schur_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd diff = a - b;
  double worst = 0.0;
  for (int i = 0; i < diff.rows(); ++i) worst = std::max(worst, diff.row(i).cwiseAbs().sum());
  return worst;
}

/// Covariance modulus fitted on random state pairs, with a held-out check
/// and a separation-exponent regression. Pair p perturbs a random state
/// along a random direction with modes >= 1 only (the metric ignores the
/// zero mode) at a log-spaced separation in [1e-4, 1].
struct HolderProbe {
  double c1 = 0.0;                   // sup ratio of Schur distance to the mode metric
  double heldout_ratio = 0.0;        // worst held-out ratio over c1
  double separation_exponent = 0.0;  // slope of Schur distance vs euclidean separation
  bool pass = false;
};

inline HolderProbe holder_modulus_probe(const CovarianceField& field, int n_pairs,
                                        std::uint64_t seed) {
  require(n_pairs >= 8, "holder_modulus_probe: need at least 8 pairs");
  const FieldEvaluator ev(field);
  const int n = field.spec.dim();
  HolderProbe probe;
  double heldout_worst = 0.0;
  std::vector<std::pair<double, double>> separation_data;
  for (int p = 0; p < n_pairs; ++p) {
    RngStream rng(seed, static_cast<std::uint64_t>(p));
    Eigen::VectorXd x(n), g(n);
    x[0] = rng.normal();
    g[0] = 0.0;
    for (int i = 1; i < n; ++i) {
      x[i] = rng.normal() / (1.0 + i);
      g[i] = rng.normal();
    }
    g /= g.norm();
    const double delta =
        std::pow(10.0, -4.0 + 4.0 * static_cast<double>(p) / std::max(1, n_pairs - 1));
    const Eigen::VectorXd y = x + delta * g;
    const double dist = mode_metric(x, y, field.op.alpha, field.op.beta);
    if (dist < 1e-14) continue;
    const double schur = schur_distance(ev.covariance(x), ev.covariance(y));
    const double ratio = schur / dist;
    if (p % 4 != 3)  // every 4th pair held out
      probe.c1 = std::max(probe.c1, ratio);
    else
      heldout_worst = std::max(heldout_worst, ratio);
    if (schur > 1e-15) separation_data.push_back({delta, schur});
  }
  require(probe.c1 > 0.0, "holder_modulus_probe: degenerate probe set");
  probe.heldout_ratio = heldout_worst / probe.c1;
  double slope = 1.0;
  if (separation_data.size() >= 3) slope = fit_power_law(separation_data).exponent;
  probe.separation_exponent = slope;
  probe.pass = probe.heldout_ratio <= 1.25 &&
               probe.separation_exponent >= 0.5 * field.op.alpha - 0.1;
  return probe;
}

/// Frozen example fields used by the verification suites.
inline CovarianceField builtin_field(const std::string& name, int K, int M = 4096) {
  CovarianceField field;
  field.spec = BasisSpec::make(K, M);
  CoefficientOperator& op = field.op;
  if (name.rfind("constant", 0) == 0) {
    op.kind = OperatorKind::constant;
    op.value = 1.0;
    if (name.size() > 8) {
      require(name[8] == '(' && name.back() == ')', "constant field syntax: constant(v)");
      op.value = std::stod(name.substr(9, name.size() - 10));
    }
    op.f_const = op.value;
    op.kappa2 = op.value <= 0.0 ? 0.0 : std::min(op.value, 1.0 / op.value);
    return field;
  }
  if (name == "smooth_profile") {
    // Mild single-link field: A(u)(x) = 1 + 0.35 cos(pi x) tanh(<u, e_1>).
    op.kind = OperatorKind::inner_product;
    op.f_const = 1.0;
    op.terms = {{0.35, 1, LinkKind::tanh_link, 1.0, 0}};
    op.phis = {"e_1"};
    op.kappa2 = 0.65;
    op.alpha = 0.9;
    op.beta = 4.0;
    op.gamma = 4.0;
    return field;
  }
  if (name == "spectral_probe") {
    // Sharp high-mode link used to separate discretization laws.
    op.kind = OperatorKind::inner_product;
    op.f_const = 1.0;
    op.terms = {{0.9, 1, LinkKind::tanh_link, 40.0, 0}};
    op.phis = {"e_12"};
    op.kappa2 = 0.1;
    op.alpha = 0.9;
    op.beta = 4.0;
    op.gamma = 4.0;
    return field;
  }
  if (name == "two_mode") {
    // Responsive low-mode link used by step-size refinement checks.
    op.kind = OperatorKind::inner_product;
    op.f_const = 1.0;
    op.terms = {{0.9, 1, LinkKind::tanh_link, 2.0, 0}};
    op.phis = {"e_2"};
    op.kappa2 = 0.1;
    op.alpha = 0.9;
    op.beta = 4.0;
    op.gamma = 4.0;
    return field;
  }
  if (name == "mollified") {
    // Convolution operator: A(u) = psi * (2 + 0.5 tanh(phi * u_ext)).
    op.kind = OperatorKind::convolution;
    op.f_const = 2.0;
    op.terms = {{0.5, 0, LinkKind::tanh_link, 1.0, 0}};
    op.phis = {"bump(0,0.15)"};
    op.psi = "bump(0,0.12)";
    op.kappa2 = 0.4;
    op.alpha = 0.9;
    op.beta = 4.0;
    op.gamma = 4.0;
    return field;
  }
  throw std::invalid_argument("unknown builtin field: " + name);
}

}  // namespace ouspde
