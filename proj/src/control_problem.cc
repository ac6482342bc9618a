#include "rkhspi/control_problem.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rkhspi/errors.h"

namespace rkhspi {

namespace {

constexpr double kEquilibriumTol = 1e-12;
constexpr int kCostSpotChecks = 100;
constexpr std::uint64_t kSpotCheckSeed = 0x5eed;
constexpr std::size_t kMaxReportedViolators = 20;
constexpr double kRolloutStopNorm = 1e-9;
constexpr double kEscapeFactor = 10.0;

}  // namespace

ControlProblem::ControlProblem(Definition def) : def_(std::move(def)) {
  const int n = def_.state_dim;
  const int m = def_.control_dim;
  if (n < 1 || m < 1) throw std::invalid_argument("dimensions must be >= 1");
  if (!def_.drift || !def_.control_matrix || !def_.state_cost) {
    throw std::invalid_argument("f, g and h must be set");
  }
  if (def_.domain.dim() != n || def_.domain.upper.size() != n) {
    throw DimensionMismatch("domain dimension differs from state dimension");
  }
  if ((def_.domain.lower.array() > 0.0).any() ||
      (def_.domain.upper.array() < 0.0).any()) {
    throw std::invalid_argument("domain must contain the origin");
  }
  if (def_.control_weight.rows() != m || def_.control_weight.cols() != m) {
    throw DimensionMismatch("R must be M x M");
  }
  const Eigen::MatrixXd& r = def_.control_weight;
  if ((r - r.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + r.norm())) {
    throw std::invalid_argument("R must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw std::invalid_argument("R must be positive definite");
  }
  r_llt_.compute(r);

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd f0 = f(zero);
  if (f0.size() != n) throw DimensionMismatch("f(x) must have size N");
  if (f0.cwiseAbs().maxCoeff() > kEquilibriumTol) {
    throw std::invalid_argument("f(0) must vanish");
  }
  const Eigen::MatrixXd g0 = g(zero);
  if (g0.rows() != n || g0.cols() != m) {
    throw DimensionMismatch("g(x) must be N x M");
  }
  if (std::abs(h(zero)) > kEquilibriumTol) {
    throw std::invalid_argument("h(0) must vanish");
  }
  for (const auto& x :
       SampleBox(def_.domain, kCostSpotChecks, kSpotCheckSeed, true)) {
    if (!(h(x) > 0.0)) {
      throw std::invalid_argument(
          "h must be positive away from the origin (spot check failed)");
    }
  }
}

Eigen::VectorXd ControlProblem::f(const Eigen::VectorXd& x) const {
  if (x.size() != def_.state_dim) throw DimensionMismatch("state size");
  return def_.drift(x);
}

Eigen::MatrixXd ControlProblem::g(const Eigen::VectorXd& x) const {
  if (x.size() != def_.state_dim) throw DimensionMismatch("state size");
  return def_.control_matrix(x);
}

double ControlProblem::h(const Eigen::VectorXd& x) const {
  if (x.size() != def_.state_dim) throw DimensionMismatch("state size");
  return def_.state_cost(x);
}

double ControlProblem::ControlCost(const Eigen::VectorXd& u) const {
  if (u.size() != def_.control_dim) throw DimensionMismatch("control size");
  return u.dot(def_.control_weight * u);
}

Eigen::VectorXd ControlProblem::SolveR(const Eigen::VectorXd& v) const {
  if (v.size() != def_.control_dim) throw DimensionMismatch("control size");
  return r_llt_.solve(v);
}

double ControlProblem::ExactValue(const Eigen::VectorXd& x) const {
  if (!def_.exact_value) {
    throw std::logic_error("problem '" + def_.name +
                           "' has no exact value function");
  }
  return (*def_.exact_value)(x);
}

Eigen::VectorXd OptimalFeedback(const ControlProblem& p,
                                const Eigen::VectorXd& grad_v,
                                const Eigen::VectorXd& x) {
  if (grad_v.size() != p.state_dim()) throw DimensionMismatch("gradient size");
  return -0.5 * p.SolveR(p.g(x).transpose() * grad_v);
}

double GhjbResidual(const ControlProblem& p, const Eigen::VectorXd& grad_v,
                    const Eigen::VectorXd& u, const Eigen::VectorXd& x) {
  if (grad_v.size() != p.state_dim()) throw DimensionMismatch("gradient size");
  const Eigen::VectorXd velocity = p.f(x) + p.g(x) * u;
  return velocity.dot(grad_v) + p.h(x) + p.ControlCost(u);
}

double HjbResidual(const ControlProblem& p, const Eigen::VectorXd& grad_v,
                   const Eigen::VectorXd& x) {
  if (grad_v.size() != p.state_dim()) throw DimensionMismatch("gradient size");
  const Eigen::VectorXd gtv = p.g(x).transpose() * grad_v;
  return p.f(x).dot(grad_v) - 0.25 * gtv.dot(p.SolveR(gtv)) + p.h(x);
}

VerificationReport VerifyInequalities(const Surrogate& s,
                                      const std::vector<Eigen::VectorXd>& points,
                                      const VerificationMode& mode,
                                      double tol) {
  VerificationReport report;
  report.mode = mode;
  // (violation, index) of every offending point.
  std::vector<std::pair<double, std::size_t>> offenders;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double v = s.Eval(points[i]);
    double lower_gap = 0.0;
    double upper_gap = 0.0;
    if (std::holds_alternative<PsdCheck>(mode)) {
      lower_gap = -v;
    } else {
      const auto& qb = std::get<QuadraticBounds>(mode);
      const double r2 = points[i].squaredNorm();
      lower_gap = qb.alpha * r2 - v;
      upper_gap = v - qb.beta * r2;
    }
    lower_gap = std::max(lower_gap, 0.0);
    upper_gap = std::max(upper_gap, 0.0);
    report.worst_lower_violation =
        std::max(report.worst_lower_violation, lower_gap);
    report.worst_upper_violation =
        std::max(report.worst_upper_violation, upper_gap);
    const double gap = std::max(lower_gap, upper_gap);
    if (gap > tol) offenders.emplace_back(gap, i);
  }
  std::stable_sort(offenders.begin(), offenders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; i < offenders.size() && i < kMaxReportedViolators;
       ++i) {
    report.violating_points.push_back(points[offenders[i].second]);
  }
  report.feasible = report.worst_lower_violation <= tol &&
                    report.worst_upper_violation <= tol;
  return report;
}

RolloutResult RolloutCost(const ControlProblem& p, const Feedback& u,
                          const Eigen::VectorXd& x0, double horizon,
                          double dt) {
  if (x0.size() != p.state_dim()) throw DimensionMismatch("initial state size");
  if (!(dt > 0.0) || !(horizon >= 0.0)) {
    throw std::invalid_argument("rollout needs dt > 0 and horizon >= 0");
  }
  const double steps_real = horizon / dt;
  const auto steps = static_cast<long long>(std::llround(steps_real));
  if (std::abs(steps_real - static_cast<double>(steps)) > 1e-6 ||
      steps > 10'000'000LL) {
    throw std::invalid_argument(
        "horizon / dt must be an integer no larger than 1e7");
  }

  const Eigen::VectorXd center = p.domain().Center();
  const Eigen::VectorXd half = p.domain().HalfWidth();
  const auto escaped = [&](const Eigen::VectorXd& x) {
    return !x.allFinite() ||
           ((x - center).cwiseAbs().array() > kEscapeFactor * half.array())
               .any();
  };
  // Returns (x', running cost).
  const auto rhs = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd control = u(x);
    return std::pair<Eigen::VectorXd, double>(
        p.f(x) + p.g(x) * control, p.h(x) + p.ControlCost(control));
  };

  Eigen::VectorXd x = x0;
  double cost = 0.0;
  double t = 0.0;
  for (long long step = 0; step < steps; ++step) {
    if (x.norm() < kRolloutStopNorm) break;
    const auto [k1, c1] = rhs(x);
    const auto [k2, c2] = rhs(x + 0.5 * dt * k1);
    const auto [k3, c3] = rhs(x + 0.5 * dt * k2);
    const auto [k4, c4] = rhs(x + dt * k3);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    cost += dt / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
    t = static_cast<double>(step + 1) * dt;
    if (escaped(x)) {
      std::ostringstream msg;
      msg << "closed-loop state escaped the enlarged domain at t = " << t;
      throw RolloutEscapeError(msg.str(), t);
    }
  }
  return RolloutResult{cost, x.norm(), t};
}

Feedback SurrogateFeedback(const ControlProblem& p, const Surrogate& s) {
  return [&p, s](const Eigen::VectorXd& x) {
    return OptimalFeedback(p, s.Grad(x), x);
  };
}

RolloutResult RolloutCost(const ControlProblem& p, const Surrogate& s,
                          const Eigen::VectorXd& x0, double horizon,
                          double dt) {
  return RolloutCost(p, SurrogateFeedback(p, s), x0, horizon, dt);
}

}  // namespace rkhspi
