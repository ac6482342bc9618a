#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rkhspi/control_problem.h"

namespace rkhspi {

/// Linear-quadratic data of a problem at the origin:
/// A = Df(0), B = g(0), Q = 1/2 Hess h(0), R.
struct LinearizedSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;

  /// Validates shapes and symmetrizes Q.
  LinearizedSystem(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd q,
                   Eigen::MatrixXd r);
};

/// Central differences: step 1e-6 for Df(0), 1e-4 for the Hessian of h.
LinearizedSystem Linearize(const ControlProblem& p);

/// Solves F^T X + X F = -W through the Kronecker-vectorized system
/// (I kron F^T + F^T kron I) vec(X) = -vec(W). O(N^6); intended for N <= 128.
Eigen::MatrixXd SolveLyapunov(const Eigen::MatrixXd& F,
                              const Eigen::MatrixXd& W);

/// ||A^T P + P A - P B R^{-1} B^T P + Q||_F.
double RiccatiResidual(const LinearizedSystem& sys, const Eigen::MatrixXd& P);

struct CareSolution {
  Eigen::MatrixXd P;
  int iterations = 0;
  /// Riccati residual after each Newton-Kleinman step.
  std::vector<double> residual_history;
};

/**
 * Newton-Kleinman iteration for the continuous-time algebraic Riccati
 * equation A^T P + P A - P B R^{-1} B^T P + Q = 0.
 *
 * Initial gain: zero when A is Hurwitz; otherwise the Bass gain
 * K0 = R^{-1} B^T X^{-1}, where X solves
 * (A + s I) X + X (A + s I)^T = 2 B R^{-1} B^T with
 * s = 1 + max(0, max Re lambda(A)), which places the spectrum of A - B K0
 * left of -s. Converged when the residual drops below tol (1 + ||Q||_F).
 */
CareSolution SolveCare(const LinearizedSystem& sys, double tol = 1e-12,
                       int max_iter = 100);

struct LqrBounds {
  double alpha;
  double beta;
};

/// (1/2 lambda_min(P), 2 lambda_max(P)).
LqrBounds ComputeLqrBounds(const Eigen::MatrixXd& P);

/// x -> -R^{-1} B^T P x.
Feedback LqrFeedback(const LinearizedSystem& sys, const Eigen::MatrixXd& P);

/// Largest real part of the eigenvalues of M.
double SpectralAbscissa(const Eigen::MatrixXd& M);

}  // namespace rkhspi
