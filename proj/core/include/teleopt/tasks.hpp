#pragma once

#include <Eigen/Core>
#include <Eigen/LU>
#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>

#include "teleopt/errors.hpp"
#include "teleopt/rng.hpp"
#include "teleopt/scalar.hpp"

namespace teleopt::tasks {

template <class S>
using V2 = std::array<S, 2>;

// Rejection thresholds for variable-mode sampling. Near-singular maps make
// the conjugated group action numerically explosive; these cut a measure-zero
// neighborhood out of the sampled distribution.
inline constexpr double kDetMin = 1e-3;
inline constexpr double kCoefMin = 1e-3;

// h(x) = A x + b with A nonsingular. f_h is a convex paraboloid with
// elliptical level sets; A = [[1,2],[2,1]], b = (-7,-5) is the Booth function.
struct AffineMap2 {
  Eigen::Matrix2d A;
  Eigen::Vector2d b;
};

// h(x, y) = (c1 * y + d(x), a * x + b) with d(x) = d1 x^2 + d2 x + d3.
// Bijective with a closed-form inverse whenever a and c1 are nonzero;
// a=1, b=-1, c1=-10, d=10x^2 recovers the classic Rosenbrock function.
struct RosenbrockMap {
  double a = 1.0;
  double b = -1.0;
  double c1 = -10.0;
  double d1 = 10.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

// One benchmark objective f(x) = ||h(x)||^2 together with its start point.
// Immutable after construction; freely shared across threads.
struct Task {
  std::variant<AffineMap2, RosenbrockMap> family;
  Eigen::Vector2d x0 = Eigen::Vector2d::Zero();
  std::uint64_t seed = 0;

  bool is_ellipse() const { return std::holds_alternative<AffineMap2>(family); }
  const AffineMap2& ellipse() const { return std::get<AffineMap2>(family); }
  const RosenbrockMap& rosenbrock() const { return std::get<RosenbrockMap>(family); }
};

// Throws ConfigError if the map parameters violate the bijectivity bounds.
void validate(const Task& task);

AffineMap2 booth_params();
AffineMap2 fixed_ellipse_params();          // A = diag(0.5, 3), b = 0
RosenbrockMap canonical_rosenbrock_params();
RosenbrockMap fixed_rosenbrock_params();    // a=1, b=-1, c=-2, d=0.4x^2

enum class Family { kEllipse, kRosenbrock };
enum class Mode { kFixed, kVariable };

struct TaskDistribution {
  Family family = Family::kEllipse;
  Mode mode = Mode::kFixed;
  // Deviation knobs for the rejection thresholds.
  double det_min = kDetMin;
  double coef_min = kCoefMin;
};

// Variable mode: map parameters IID standard normal, rejecting near-singular
// draws (budget 1000 blocks, then SamplingError). Fixed mode: canonical
// parameters. x0 coordinates are IID standard normal in all modes.
Task sample_task(const TaskDistribution& dist, Rng& rng);

const char* family_name(Family f);
const char* mode_name(Mode m);

// ---- objective family, generic over plain doubles and tape values ----

template <class S>
V2<S> h_forward(const Task& task, const V2<S>& x) {
  using namespace teleopt::scalar;
  if (task.is_ellipse()) {
    const AffineMap2& m = task.ellipse();
    return {m.A(0, 0) * x[0] + m.A(0, 1) * x[1] + m.b(0),
            m.A(1, 0) * x[0] + m.A(1, 1) * x[1] + m.b(1)};
  }
  const RosenbrockMap& m = task.rosenbrock();
  S d = (m.d1 * x[0] + m.d2) * x[0] + m.d3;
  return {m.c1 * x[1] + d, m.a * x[0] + m.b};
}

template <class S>
V2<S> h_inverse(const Task& task, const V2<S>& y) {
  using namespace teleopt::scalar;
  if (task.is_ellipse()) {
    const AffineMap2& m = task.ellipse();
    const double det = m.A.determinant();
    if (det == 0.0) throw SingularMapError("h_inverse: ellipse map has det A = 0");
    const double i00 = m.A(1, 1) / det, i01 = -m.A(0, 1) / det;
    const double i10 = -m.A(1, 0) / det, i11 = m.A(0, 0) / det;
    S u = y[0] - m.b(0);
    S v = y[1] - m.b(1);
    return {i00 * u + i01 * v, i10 * u + i11 * v};
  }
  const RosenbrockMap& m = task.rosenbrock();
  if (m.a == 0.0 || m.c1 == 0.0) {
    throw SingularMapError("h_inverse: Rosenbrock map with zero denominator");
  }
  S u = (y[1] - m.b) / m.a;
  S d = (m.d1 * u + m.d2) * u + m.d3;
  return {u, (y[0] - d) / m.c1};
}

template <class S>
S eval_f(const Task& task, const V2<S>& x) {
  using namespace teleopt::scalar;
  V2<S> h = h_forward(task, x);
  return sqr(h[0]) + sqr(h[1]);
}

template <class S>
V2<S> grad_f(const Task& task, const V2<S>& x) {
  using namespace teleopt::scalar;
  V2<S> h = h_forward(task, x);
  if (task.is_ellipse()) {
    const AffineMap2& m = task.ellipse();
    return {2.0 * (m.A(0, 0) * h[0] + m.A(1, 0) * h[1]),
            2.0 * (m.A(0, 1) * h[0] + m.A(1, 1) * h[1])};
  }
  const RosenbrockMap& m = task.rosenbrock();
  S dprime = 2.0 * m.d1 * x[0] + m.d2;
  return {2.0 * (h[0] * dprime + h[1] * m.a), 2.0 * (h[0] * m.c1)};
}

// ---- Eigen conveniences for the double path ----

inline V2<double> from_eigen(const Eigen::Vector2d& v) { return {v(0), v(1)}; }
inline Eigen::Vector2d to_eigen(const V2<double>& v) { return {v[0], v[1]}; }

inline Eigen::Vector2d h_forward(const Task& t, const Eigen::Vector2d& x) {
  return to_eigen(h_forward(t, from_eigen(x)));
}
inline Eigen::Vector2d h_inverse(const Task& t, const Eigen::Vector2d& y) {
  return to_eigen(h_inverse(t, from_eigen(y)));
}
inline double eval_f(const Task& t, const Eigen::Vector2d& x) {
  return eval_f(t, from_eigen(x));
}
inline Eigen::Vector2d grad_f(const Task& t, const Eigen::Vector2d& x) {
  return to_eigen(grad_f(t, from_eigen(x)));
}

// Analytic 2x2 Hessian. Ellipse: 2 A^T A (constant). Rosenbrock: Gauss-Newton
// term plus the curvature of h1.
Eigen::Matrix2d hess_f(const Task& task, const Eigen::Vector2d& x);

// Gradient-Lipschitz constant: exact 2*lambda_max(A^T A) for ellipse tasks,
// Hessian spectral norm at x0 for Rosenbrock tasks (local heuristic).
double lipschitz_estimate(const Task& task, const Eigen::Vector2d& x0);

// Versioned JSON record {version, family, params, x0, seed}.
std::string to_json(const Task& task);
Task task_from_json(const std::string& text);

}  // namespace teleopt::tasks
