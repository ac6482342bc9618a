#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rkhspi/kernel.h"
#include "rkhspi/recovery.h"
#include "rkhspi/sampling.h"

namespace rkhspi {

using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using MatrixField = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
using ScalarField = std::function<double(const Eigen::VectorXd&)>;
/// State feedback x -> u.
using Feedback = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/**
 * Infinite-horizon, control-affine optimal control problem
 *
 *   min_u  int_0^inf h(x) + <u, R u> dt   s.t.  x' = f(x) + g(x) u,
 *
 * posed on an axis-aligned box that contains the origin (possibly on its
 * boundary). Construction checks f(0) = 0, h(0) = 0, h > 0 on 100 sampled
 * nonzero states, and R symmetric positive definite.
 */
class ControlProblem {
 public:
  struct Definition {
    std::string name;
    int state_dim = 0;
    int control_dim = 0;
    VectorField drift;
    MatrixField control_matrix;
    ScalarField state_cost;
    Eigen::MatrixXd control_weight;
    Box domain;
    std::optional<ScalarField> exact_value;
  };

  explicit ControlProblem(Definition def);

  const std::string& name() const { return def_.name; }
  int state_dim() const { return def_.state_dim; }
  int control_dim() const { return def_.control_dim; }
  const Box& domain() const { return def_.domain; }
  const Eigen::MatrixXd& control_weight() const { return def_.control_weight; }

  Eigen::VectorXd f(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd g(const Eigen::VectorXd& x) const;
  double h(const Eigen::VectorXd& x) const;
  /// <u, R u>.
  double ControlCost(const Eigen::VectorXd& u) const;
  /// R^{-1} v via the stored Cholesky factor of R.
  Eigen::VectorXd SolveR(const Eigen::VectorXd& v) const;

  bool has_exact_value() const { return def_.exact_value.has_value(); }
  double ExactValue(const Eigen::VectorXd& x) const;

 private:
  Definition def_;
  Eigen::LLT<Eigen::MatrixXd> r_llt_;
};

/// u = -1/2 R^{-1} g(x)^T grad_v.
Eigen::VectorXd OptimalFeedback(const ControlProblem& p,
                                const Eigen::VectorXd& grad_v,
                                const Eigen::VectorXd& x);

/// <f(x) + g(x) u, grad_v> + h(x) + <u, R u>.
double GhjbResidual(const ControlProblem& p, const Eigen::VectorXd& grad_v,
                    const Eigen::VectorXd& u, const Eigen::VectorXd& x);

/// <f(x), grad_v> - 1/4 |g(x)^T grad_v|^2_{R^{-1}} + h(x).
double HjbResidual(const ControlProblem& p, const Eigen::VectorXd& grad_v,
                   const Eigen::VectorXd& x);

struct PsdCheck {};
struct QuadraticBounds {
  double alpha;
  double beta;
};
using VerificationMode = std::variant<PsdCheck, QuadraticBounds>;

struct VerificationReport {
  VerificationMode mode;
  /// max over points of (lower bound - s(x)), clipped at 0.
  double worst_lower_violation = 0.0;
  /// max over points of (s(x) - upper bound), clipped at 0.
  double worst_upper_violation = 0.0;
  /// Up to 20 points with the largest violation, worst first.
  std::vector<Eigen::VectorXd> violating_points;
  bool feasible = true;
};

/// Checks s >= 0 (Psd) or alpha|x|^2 <= s(x) <= beta|x|^2 at every point,
/// each side relaxed by `tol`. Never throws on infeasibility.
VerificationReport VerifyInequalities(const Surrogate& s,
                                      const std::vector<Eigen::VectorXd>& points,
                                      const VerificationMode& mode, double tol);

struct RolloutResult {
  double cost;
  double final_state_norm;
  double final_time;
};

/**
 * Integrates the closed loop x' = f(x) + g(x) u(x) with classical RK4 and
 * accumulates int h + <u, R u> on the same stages (the cost is carried as an
 * extra state, i.e. Simpson weights on the RK stages).
 *
 * Stops at T or as soon as |x| < 1e-9. Throws RolloutEscapeError when a
 * state coordinate leaves the domain box enlarged tenfold about its center.
 */
RolloutResult RolloutCost(const ControlProblem& p, const Feedback& u,
                          const Eigen::VectorXd& x0, double horizon,
                          double dt);

/// Rollout under the surrogate's feedback u = -1/2 R^{-1} g^T grad s.
RolloutResult RolloutCost(const ControlProblem& p, const Surrogate& s,
                          const Eigen::VectorXd& x0, double horizon,
                          double dt);

/// x -> OptimalFeedback(p, grad s(x), x).
Feedback SurrogateFeedback(const ControlProblem& p, const Surrogate& s);

}  // namespace rkhspi
