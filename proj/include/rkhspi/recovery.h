#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rkhspi/functional.h"
#include "rkhspi/kernel.h"

namespace rkhspi {

/**
 * Regularization ladder for Gram factorizations.
 *
 * Levels are relative: the absolute jitter added to the diagonal is
 * level * trace(K) / n. The first level that yields a successful
 * positive-definite factorization is used.
 */
struct JitterPolicy {
  std::string name;
  std::vector<double> relative_levels;

  /// {0, 1e-13, 1e-11, 1e-9}.
  static JitterPolicy Escalating();
  /// {0}: fail rather than regularize.
  static JitterPolicy None();
  /// "escalate" or "none".
  static JitterPolicy FromName(const std::string& name);
};

/// Finite kernel expansion s = sum_j alpha_j w_j over Riesz representers.
class Surrogate {
 public:
  Surrogate(Kernel kernel, FunctionalSet functionals,
            Eigen::VectorXd coefficients);
  /// s == 0 (no representers).
  static Surrogate Zero(const Kernel& kernel);

  double Eval(PointRef x) const;
  Eigen::VectorXd Grad(PointRef x) const;
  /// lam(s) computed by direct evaluation of s or its gradient.
  double Apply(const Functional& lam) const;

  const Kernel& kernel() const { return kernel_; }
  const FunctionalSet& functionals() const { return functionals_; }
  const Eigen::VectorXd& coefficients() const { return coefficients_; }

 private:
  Kernel kernel_;
  FunctionalSet functionals_;
  Eigen::VectorXd coefficients_;
};

/// sqrt(alpha^T K alpha).
double RkhsNorm(const Surrogate& s);

struct RecoveryReport {
  Surrogate surrogate;
  /// max_i |lambda_i(s) - r_i|, recomputed by direct evaluation.
  double max_constraint_violation;
  double rkhs_norm;
  /// Absolute diagonal shift used by the successful factorization.
  double regularization_used;
};

/// Minimal-norm interpolant with a fixed absolute diagonal jitter.
/// Throws FactorizationError when the shifted Gram is not numerically SPD.
RecoveryReport SolveLinearRecovery(const FunctionalSet& fs,
                                   const Eigen::VectorXd& targets,
                                   const Kernel& k, double jitter);

/// Minimal-norm interpolant following a jitter ladder.
RecoveryReport SolveLinearRecovery(const FunctionalSet& fs,
                                   const Eigen::VectorXd& targets,
                                   const Kernel& k,
                                   const JitterPolicy& policy);

/// Same as above with a Gram matrix the caller already assembled for `fs`.
RecoveryReport SolveLinearRecoveryWithGram(const FunctionalSet& fs,
                                           const Eigen::MatrixXd& gram,
                                           const Eigen::VectorXd& targets,
                                           const Kernel& k,
                                           const JitterPolicy& policy);

/// z^T K^{-1} z for the Gram of `fs`: the reduced objective of nonlinear
/// optimal recovery evaluated at functional values z.
double FiniteDimObjective(const Eigen::VectorXd& z, const FunctionalSet& fs,
                          const Kernel& k);

}  // namespace rkhspi
