#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rkhspi {

using Point = Eigen::VectorXd;
using PointRef = Eigen::Ref<const Eigen::VectorXd>;

/// Radial profile of a translation-invariant kernel.
enum class RadialProfile {
  kGaussian,      ///< exp(-(gamma r)^2)
  kLinearMatern,  ///< exp(-gamma r) (1 + gamma r)
};

/**
 * Positive-definite kernel with closed-form derivative evaluators.
 *
 * Two families are radial (Gaussian and linear Matérn). The structure-aware
 * product kernel <x,y>^2 * base(x,y) wraps one of them; every member of its
 * RKHS vanishes together with its gradient at the origin.
 *
 * The shape parameter gamma is stored unsquared. Derivatives are indexed as
 * follows: Grad1 is the gradient in the first argument; Hessian12(x, y) has
 * entry (s, t) = d^2 k / dx_s dy_t.
 *
 * Kernels are immutable values; all evaluators are pure.
 */
class Kernel {
 public:
  static Kernel Gaussian(double gamma);
  static Kernel LinearMatern(double gamma);
  /// <x,y>^2 * base(x,y). `base` must be a radial kernel.
  static Kernel QuadraticProduct(const Kernel& base);

  /// Accepts "gaussian", "linear-matern", "gaussian-quad",
  /// "linear-matern-quad".
  static Kernel FromName(std::string_view name, double gamma);
  static const std::vector<std::string>& ValidNames();

  double Eval(PointRef x, PointRef y) const;
  Eigen::VectorXd Grad1(PointRef x, PointRef y) const;
  Eigen::MatrixXd Hessian12(PointRef x, PointRef y) const;

  /// <a, Grad1(x, y)> without forming the gradient.
  double DirectionalGrad1(PointRef x, PointRef y, PointRef a) const;
  /// a^T Hessian12(x, y) b without forming the matrix.
  double DirectionalMixed(PointRef x, PointRef y, PointRef a,
                          PointRef b) const;
  /// Hessian12(x, y)^T a.
  Eigen::VectorXd Hessian12TransposeTimes(PointRef x, PointRef y,
                                          PointRef a) const;

  // Allocation-free accumulators used by surrogate evaluation:
  // out += weight * Hessian12(x, y)^T a   and   out += weight * Grad1(x, y).
  void AddHessian12TransposeTimes(PointRef x, PointRef y, PointRef a,
                                  double weight,
                                  Eigen::Ref<Eigen::VectorXd> out) const;
  void AddGrad1(PointRef x, PointRef y, double weight,
                Eigen::Ref<Eigen::VectorXd> out) const;

  RadialProfile profile() const { return profile_; }
  bool is_quadratic_product() const { return quadratic_; }
  double gamma() const { return gamma_; }
  std::string name() const;

 private:
  Kernel(RadialProfile profile, double gamma, bool quadratic);

  // Radial part expressed in t = |x - y|^2:
  //   value = phi(t), d1 = dphi/dt, d2x4 = 4 d^2phi/dt^2.
  // For the linear Matérn profile d2x4 is singular like 1/r; it only ever
  // multiplies (x-y)(x-y)^T and is set to zero for r below 1e-12.
  struct RadialTerms {
    double value;
    double d1;
    double d2x4;
  };
  RadialTerms Radial(PointRef x, PointRef y) const;
  void CheckArgs(PointRef x, PointRef y) const;

  RadialProfile profile_;
  double gamma_;
  bool quadratic_;
};

}  // namespace rkhspi
