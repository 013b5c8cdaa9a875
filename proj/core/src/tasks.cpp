#include "teleopt/tasks.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include <nlohmann/json.hpp>

namespace teleopt::tasks {

using nlohmann::json;

void validate(const Task& task) {
  if (!task.x0.allFinite()) throw ConfigError("task: non-finite x0");
  if (task.is_ellipse()) {
    const AffineMap2& m = task.ellipse();
    if (!m.A.allFinite() || !m.b.allFinite()) throw ConfigError("task: non-finite ellipse params");
    if (std::abs(m.A.determinant()) < kDetMin) {
      throw ConfigError("task: |det A| below " + std::to_string(kDetMin));
    }
    return;
  }
  const RosenbrockMap& m = task.rosenbrock();
  for (double v : {m.a, m.b, m.c1, m.d1, m.d2, m.d3}) {
    if (!std::isfinite(v)) throw ConfigError("task: non-finite Rosenbrock params");
  }
  if (std::abs(m.a) < kCoefMin || std::abs(m.c1) < kCoefMin) {
    throw ConfigError("task: |a| or |c1| below " + std::to_string(kCoefMin));
  }
}

AffineMap2 booth_params() {
  AffineMap2 m;
  m.A << 1.0, 2.0, 2.0, 1.0;
  m.b << -7.0, -5.0;
  return m;
}

AffineMap2 fixed_ellipse_params() {
  AffineMap2 m;
  m.A << 0.5, 0.0, 0.0, 3.0;
  m.b << 0.0, 0.0;
  return m;
}

RosenbrockMap canonical_rosenbrock_params() { return {1.0, -1.0, -10.0, 10.0, 0.0, 0.0}; }

RosenbrockMap fixed_rosenbrock_params() { return {1.0, -1.0, -2.0, 0.4, 0.0, 0.0}; }

const char* family_name(Family f) {
  return f == Family::kEllipse ? "ellipse" : "rosenbrock";
}

const char* mode_name(Mode m) { return m == Mode::kFixed ? "fixed" : "variable"; }

namespace {

constexpr int kRejectionBudget = 1000;

AffineMap2 sample_ellipse_params(Rng& rng, double det_min) {
  for (int draw = 0; draw < kRejectionBudget; ++draw) {
    AffineMap2 m;
    m.A << rng.normal(), rng.normal(), rng.normal(), rng.normal();
    m.b << rng.normal(), rng.normal();
    if (std::abs(m.A.determinant()) >= det_min) return m;
  }
  throw SamplingError("sample_task: rejection budget exhausted for ellipse family");
}

RosenbrockMap sample_rosenbrock_params(Rng& rng, double coef_min) {
  for (int draw = 0; draw < kRejectionBudget; ++draw) {
    RosenbrockMap m{rng.normal(), rng.normal(), rng.normal(),
                    rng.normal(), rng.normal(), rng.normal()};
    if (std::abs(m.a) >= coef_min && std::abs(m.c1) >= coef_min) return m;
  }
  throw SamplingError("sample_task: rejection budget exhausted for Rosenbrock family");
}

}  // namespace

Task sample_task(const TaskDistribution& dist, Rng& rng) {
  Task task;
  task.seed = rng.seed();
  if (dist.family == Family::kEllipse) {
    task.family = dist.mode == Mode::kFixed ? fixed_ellipse_params()
                                            : sample_ellipse_params(rng, dist.det_min);
  } else {
    task.family = dist.mode == Mode::kFixed ? fixed_rosenbrock_params()
                                            : sample_rosenbrock_params(rng, dist.coef_min);
  }
  task.x0 << rng.normal(), rng.normal();
  return task;
}

Eigen::Matrix2d hess_f(const Task& task, const Eigen::Vector2d& x) {
  if (task.is_ellipse()) {
    const AffineMap2& m = task.ellipse();
    return 2.0 * m.A.transpose() * m.A;
  }
  const RosenbrockMap& m = task.rosenbrock();
  const double dprime = 2.0 * m.d1 * x(0) + m.d2;
  const double h1 = m.c1 * x(1) + (m.d1 * x(0) + m.d2) * x(0) + m.d3;
  Eigen::Matrix2d J;
  J << dprime, m.c1, m.a, 0.0;
  Eigen::Matrix2d H = 2.0 * J.transpose() * J;
  H(0, 0) += 2.0 * h1 * 2.0 * m.d1;
  return H;
}

double lipschitz_estimate(const Task& task, const Eigen::Vector2d& x0) {
  if (task.is_ellipse()) {
    const Eigen::Matrix2d& A = task.ellipse().A;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(A.transpose() * A);
    return 2.0 * es.eigenvalues().maxCoeff();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(hess_f(task, x0));
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {
constexpr int kTaskSchemaVersion = 1;
}

std::string to_json(const Task& task) {
  json j;
  j["version"] = kTaskSchemaVersion;
  j["seed"] = task.seed;
  j["x0"] = {task.x0(0), task.x0(1)};
  if (task.is_ellipse()) {
    const AffineMap2& m = task.ellipse();
    j["family"] = "ellipse";
    j["params"] = {{"A", {m.A(0, 0), m.A(0, 1), m.A(1, 0), m.A(1, 1)}},
                   {"b", {m.b(0), m.b(1)}}};
  } else {
    const RosenbrockMap& m = task.rosenbrock();
    j["family"] = "rosenbrock";
    j["params"] = {{"a", m.a}, {"b", m.b},   {"c1", m.c1},
                   {"d1", m.d1}, {"d2", m.d2}, {"d3", m.d3}};
  }
  return j.dump();
}

Task task_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("task: malformed JSON: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != kTaskSchemaVersion) {
      throw ConfigError("task: unsupported schema version");
    }
    Task task;
    task.seed = j.at("seed").get<std::uint64_t>();
    const auto& x0 = j.at("x0");
    task.x0 << x0.at(0).get<double>(), x0.at(1).get<double>();
    const std::string fam = j.at("family").get<std::string>();
    const auto& p = j.at("params");
    if (fam == "ellipse") {
      AffineMap2 m;
      const auto& a = p.at("A");
      m.A << a.at(0).get<double>(), a.at(1).get<double>(),
             a.at(2).get<double>(), a.at(3).get<double>();
      m.b << p.at("b").at(0).get<double>(), p.at("b").at(1).get<double>();
      task.family = m;
    } else if (fam == "rosenbrock") {
      task.family = RosenbrockMap{p.at("a").get<double>(),  p.at("b").get<double>(),
                                  p.at("c1").get<double>(), p.at("d1").get<double>(),
                                  p.at("d2").get<double>(), p.at("d3").get<double>()};
    } else {
      throw ConfigError("task: unknown family '" + fam + "'");
    }
    validate(task);
    return task;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("task: bad record: ") + e.what());
  }
}

}  // namespace teleopt::tasks
