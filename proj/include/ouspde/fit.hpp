#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "ouspde/common.hpp"

namespace ouspde {

/// Result of a log-log power-law fit. For decay diagnostics `exponent` is the
/// decay rate (positive when values decrease in the parameter); producers
/// that fit growth report the algebraic slope instead and say so.
struct DecayFit {
  double exponent = 0.0;
  double constant = 0.0;            // sup-form constant for the declared model
  double max_residual_ratio = 1.0;  // worst multiplicative deviation from the fit line
  bool pass = false;
  bool degenerate = false;  // every value sat at the noise floor; counts as pass
  int points_used = 0;
};

/// Least-squares fit value ~ constant * param^exponent in log-log coordinates.
/// Parameters must be positive; values must be positive (callers drop
/// floor-level points before fitting decay data).
inline DecayFit fit_power_law(const std::vector<std::pair<double, double>>& data) {
  require(data.size() >= 3, "fit_power_law: need at least three points");
  for (const auto& [p, v] : data) {
    require(p > 0.0, "fit_power_law: parameters must be positive");
    require(v > 0.0, "fit_power_law: values must be positive");
  }
  const int n = static_cast<int>(data.size());
  KahanSum sx, sy, sxx, sxy;
  for (const auto& [p, v] : data) {
    const double x = std::log(p);
    const double y = std::log(v);
    sx.add(x);
    sy.add(y);
    sxx.add(x * x);
    sxy.add(x * y);
  }
  const double mx = sx.value() / n;
  const double my = sy.value() / n;
  const double denom = sxx.value() - n * mx * mx;
  require(denom > 0.0, "fit_power_law: parameters are all equal");
  const double slope = (sxy.value() - n * mx * my) / denom;
  const double intercept = my - slope * mx;

  DecayFit fit;
  fit.exponent = slope;
  fit.constant = std::exp(intercept);
  fit.points_used = n;
  double worst = 1.0;
  for (const auto& [p, v] : data) {
    const double model = intercept + slope * std::log(p);
    const double dev = std::exp(std::fabs(std::log(v) - model));
    if (dev > worst) worst = dev;
  }
  fit.max_residual_ratio = worst;
  fit.pass = true;
  return fit;
}

/// Fits decay data value ~ C * param^{-exponent} after dropping points below
/// `floor`. Fewer than three usable points means the data sat at the floor:
/// the fit is degenerate and passes by convention. Gate: exponent >= min_exponent.
inline DecayFit fit_decay(const std::vector<std::pair<double, double>>& data, double floor,
                          double min_exponent) {
  std::vector<std::pair<double, double>> used;
  used.reserve(data.size());
  for (const auto& [p, v] : data)
    if (v >= floor) used.push_back({p, v});
  if (used.size() < 3) {
    DecayFit fit;
    fit.degenerate = true;
    fit.pass = true;
    return fit;
  }
  DecayFit fit = fit_power_law(used);
  fit.exponent = -fit.exponent;  // report decay positively
  fit.pass = fit.exponent >= min_exponent;
  return fit;
}

}  // namespace ouspde
