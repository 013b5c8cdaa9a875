#pragma once

#include <cmath>

#include "teleopt/autodiff.hpp"

// Double overloads matching the ad::Value vocabulary, so numeric kernels can
// be written once and instantiated for plain doubles (rollout/evaluation) or
// tape values (training). Generic code pulls these in with
// `using namespace teleopt::scalar;` and relies on ADL for ad::Value.
namespace teleopt::scalar {

using std::cos;
using std::exp;
using std::sin;
using std::tanh;

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double ln(double x) { return std::log(x); }
inline double sqr(double x) { return x * x; }

inline double powi(double x, int k) {
  if (k < 0) return 1.0 / powi(x, -k);
  double r = 1.0;
  double base = x;
  for (int e = k; e > 0; e >>= 1) {
    if (e & 1) r *= base;
    base *= base;
  }
  return r;
}

inline double value_of(double x) { return x; }

// Overflow-safe softplus; branching on the runtime value is fine on a tape.
template <class S>
S softplus(S x) {
  if (value_of(x) > 0.0) {
    return x + ln(exp(-x) + 1.0);
  }
  return ln(exp(x) + 1.0);
}

inline double softplus_inverse(double y) { return std::log(std::expm1(y)); }

}  // namespace teleopt::scalar
