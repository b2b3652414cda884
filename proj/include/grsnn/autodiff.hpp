#pragma once

#include <cmath>

#include "grsnn/errors.hpp"

namespace grsnn {

// Smoothness scale of the sigmoid surrogate replacing the Heaviside
// derivative during backpropagation.
struct SurrogateSpec {
  double a1 = 0.25;

  static SurrogateSpec make(double a1) {
    if (!(a1 > 0.0)) throw ConfigError("SurrogateSpec: a1 must be > 0");
    return SurrogateSpec{a1};
  }
};

// (1/a1) e^{(v_th-u)/a1} / (1 + e^{(v_th-u)/a1})^2, written overflow-safe:
// for large |v_th-u| the tail underflows to zero instead of producing inf.
inline double surrogate_grad(double u, double v_th, const SurrogateSpec& spec) {
  const double z = (v_th - u) / spec.a1;
  const double e = std::exp(-std::abs(z));
  const double denom = 1.0 + e;
  return (e / (denom * denom)) / spec.a1;
}

// Exact derivative of the soft spike sigma((u - v_th)/a1); algebraically the
// same expression as the surrogate, kept separate for intent.
inline double soft_spike(double u, double v_th, double a1) {
  const double z = (u - v_th) / a1;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Forward: round-half-to-even, clamped to [0, bound]. Backward contract is
// straight-through: the gradient passes unchanged to the latent value.
inline double quantize_delay(double latent, double bound) {
  if (!(bound >= 0.0)) throw ConfigError("quantize_delay: bound must be >= 0");
  double q = std::nearbyint(latent);  // default FP environment: half-to-even
  if (q < 0.0) q = 0.0;
  if (q > bound) q = bound;
  return q;
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace grsnn
