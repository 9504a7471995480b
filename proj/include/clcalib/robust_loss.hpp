#pragma once

#include <cmath>

namespace clcalib {

struct RobustEval {
  double rho;     // robustified cost
  double weight;  // d(rho)/ds, the IRLS weight
};

/// Cauchy kernel on a squared whitened residual s with scale c:
/// rho = c^2 * ln(1 + s/c^2), weight = 1 / (1 + s/c^2) in (0, 1].
inline RobustEval cauchy(double s, double c) {
  const double c2 = c * c;
  const double u = 1.0 + s / c2;
  return {c2 * std::log(u), 1.0 / u};
}

struct Robustifier {
  enum class Kind { none, cauchy };

  Kind kind = Kind::none;
  double scale = 1.0;

  static Robustifier none() { return {Kind::none, 1.0}; }
  static Robustifier make_cauchy(double c) { return {Kind::cauchy, c}; }

  RobustEval operator()(double s) const {
    if (kind == Kind::none) return {s, 1.0};
    return cauchy(s, scale);
  }
};

}  // namespace clcalib
