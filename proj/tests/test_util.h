#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rkhspi/control_problem.h"
#include "rkhspi/functional.h"
#include "rkhspi/kernel.h"

namespace rkhspi::testing {

inline constexpr double kFdStep = 1e-5;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double Uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }
  int Int(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(gen_);
  }
  Eigen::VectorXd Vector(int n, double lo = -1.0, double hi = 1.0) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = Uniform(lo, hi);
    return v;
  }

 private:
  std::mt19937_64 gen_;
};

/// Central-difference gradient of a scalar function.
inline Eigen::VectorXd FdGradient(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& x, double step = kFdStep) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += step;
    xm(i) -= step;
    g(i) = (fn(xp) - fn(xm)) / (2.0 * step);
  }
  return g;
}

/// Column t: central difference of Grad1(x, .) along y_t.
inline Eigen::MatrixXd FdHessian12(const Kernel& k, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y,
                                   double step = kFdStep) {
  Eigen::MatrixXd e(x.size(), y.size());
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    Eigen::VectorXd yp = y, ym = y;
    yp(t) += step;
    ym(t) -= step;
    e.col(t) = (k.Grad1(x, yp) - k.Grad1(x, ym)) / (2.0 * step);
  }
  return e;
}

inline double RelError(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want,
                       double floor = 1e-8) {
  return (got - want).norm() / std::max(want.norm(), floor);
}

inline std::vector<Kernel> AllKernelFamilies(double gamma) {
  return {Kernel::Gaussian(gamma), Kernel::LinearMatern(gamma),
          Kernel::QuadraticProduct(Kernel::Gaussian(gamma)),
          Kernel::QuadraticProduct(Kernel::LinearMatern(gamma))};
}

/// Mixed set of point evaluations and directional derivatives at distinct
/// random locations.
inline FunctionalSet RandomFunctionalSet(Rng& rng, int dim, int count) {
  FunctionalSet fs;
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd x = rng.Vector(dim);
    if (rng.Int(0, 1) == 0) {
      fs.Append(PointEval{x});
    } else {
      Eigen::VectorXd a = rng.Vector(dim);
      if (a.norm() < 0.1) a(0) += 1.0;
      fs.Append(DirGrad{x, a});
    }
  }
  return fs;
}

/// f = x, g = I, h = |x|^2, R = I on [-1, 1]^2. The CARE solution is
/// (1 + sqrt 2) I and the value function <x, P x>.
inline ControlProblem UnstableLqrExample() {
  ControlProblem::Definition def;
  def.name = "lqr-example";
  def.state_dim = 2;
  def.control_dim = 2;
  def.drift = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x; };
  def.control_matrix = [](const Eigen::VectorXd&) -> Eigen::MatrixXd {
    return Eigen::MatrixXd::Identity(2, 2);
  };
  def.state_cost = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  def.control_weight = Eigen::MatrixXd::Identity(2, 2);
  def.domain = Box::Cube(2, -1.0, 1.0);
  def.exact_value = [](const Eigen::VectorXd& x) {
    return (1.0 + std::sqrt(2.0)) * x.squaredNorm();
  };
  return ControlProblem(std::move(def));
}

}  // namespace rkhspi::testing
