#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ouspde {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr double kPi = 3.14159265358979323846;

/// A matrix required to be positive definite failed its Cholesky factorization.
class definiteness_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A declared operator hypothesis failed a runtime validation gate.
class hypothesis_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The two-part cosine split failed to reconstruct its source matrix.
class split_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Compensated (Kahan) accumulator; keeps long quadrature and Monte Carlo
/// sums at O(eps) error independent of length.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

/// (1 - e^{-z}) / z for z >= 0, with the removable singularity at 0 handled.
inline double phi1(double z) {
  if (z < 1e-5) return 1.0 - z / 2.0 + z * z / 6.0;
  return -std::expm1(-z) / z;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace ouspde
