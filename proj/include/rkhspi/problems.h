#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rkhspi/care.h"
#include "rkhspi/control_problem.h"
#include "rkhspi/sampling.h"

namespace rkhspi {

/// Kansa collocation of the 1-D heat equation on (0, 1) with homogeneous
/// Dirichlet data: K x' = K_lap x + [b_1 .. b_4] u.
struct HeatDiscretization {
  int n_nodes = 0;
  /// xi_j = j / (n_nodes + 1), j = 1..n_nodes.
  Eigen::VectorXd nodes;
  /// K(i, j) = k(xi_i, xi_j).
  Eigen::MatrixXd K;
  /// K_lap(l, j) = d^2/dxi'^2 k(xi_j, xi') at xi' = xi_l, i.e. the second
  /// derivative of the j-th trial function at the l-th collocation node.
  Eigen::MatrixXd K_lap;
  /// Indicator samples of the four actuator supports, one column each.
  Eigen::MatrixXd indicators;
  /// K^{-1} K_lap and K^{-1} [b_1 .. b_4], both via the Cholesky factor.
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::LLT<Eigen::MatrixXd> K_llt;
  /// 2-norm condition number of K.
  double k_condition = 0.0;
};

/// exp(-3000 (xi - xi')^2) xi (1 - xi) xi' (1 - xi').
double HeatKernel(double xi, double xi2);
/// Second derivative of HeatKernel in its second argument.
double HeatKernelD2(double xi, double xi2);

/// Throws FactorizationError when K is not numerically positive definite.
HeatDiscretization KansaDiscretize(int n_nodes);

/// A control problem together with the data the experiments need around it.
struct Benchmark {
  ControlProblem problem;
  /// Initial policy for RKHS-PI.
  Feedback initial_policy;
  /// A, B, Q, R at the origin (exact, not finite-differenced).
  std::optional<LinearizedSystem> linearization;
  /// Stabilizing CARE solution of the linearization, when computed.
  std::optional<Eigen::MatrixXd> care_solution;
  std::shared_ptr<const HeatDiscretization> heat;
};

/// Academic 2-D example with known value function 1/2 x1^2 + x2^2 and
/// initial policy u0 = -3/2 sin(x1) (x1 + x2).
Benchmark ToyProblem();
/// u = -3/2 sin(x1 + x2). Not admissible for the toy problem on [-1, 1]^2:
/// the closed loop has a second equilibrium near (-0.348, -0.348), where the
/// running cost is positive, so its GHJB equation has no solution there.
Feedback ToySineSumPolicy();
/// Controlled Van der Pol oscillator, R = 1/10, LQR initial policy.
Benchmark VdpProblem();
/// Linear heat equation, M = 4 actuators, R = I/100, box [0, 10]^N,
/// exact value <x, P x>, u0 = 0.
Benchmark HeatLinear(int n_nodes);
/// Zeldovich-type nonlinear heat equation on the same discretization.
Benchmark HeatNonlinear(int n_nodes);

/// "toy", "vdp", "heat-linear", "heat-nonlinear"; n_nodes is used by the
/// heat problems only.
Benchmark MakeBenchmark(const std::string& name, int n_nodes = 50);
const std::vector<std::string>& BenchmarkNames();

}  // namespace rkhspi
