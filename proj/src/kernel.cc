#include "rkhspi/kernel.h"

#include <cmath>
#include <stdexcept>

#include "rkhspi/errors.h"

namespace rkhspi {

namespace {

constexpr double kCoincidenceRadius = 1e-12;

}  // namespace

Kernel::Kernel(RadialProfile profile, double gamma, bool quadratic)
    : profile_(profile), gamma_(gamma), quadratic_(quadratic) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("kernel shape parameter gamma must be > 0");
  }
}

Kernel Kernel::Gaussian(double gamma) {
  return Kernel(RadialProfile::kGaussian, gamma, false);
}

Kernel Kernel::LinearMatern(double gamma) {
  return Kernel(RadialProfile::kLinearMatern, gamma, false);
}

Kernel Kernel::QuadraticProduct(const Kernel& base) {
  if (base.quadratic_) {
    throw std::invalid_argument(
        "QuadraticProduct expects a radial base kernel");
  }
  return Kernel(base.profile_, base.gamma_, true);
}

const std::vector<std::string>& Kernel::ValidNames() {
  static const std::vector<std::string> names = {
      "gaussian", "linear-matern", "gaussian-quad", "linear-matern-quad"};
  return names;
}

Kernel Kernel::FromName(std::string_view name, double gamma) {
  if (name == "gaussian") return Gaussian(gamma);
  if (name == "linear-matern") return LinearMatern(gamma);
  if (name == "gaussian-quad") return QuadraticProduct(Gaussian(gamma));
  if (name == "linear-matern-quad") {
    return QuadraticProduct(LinearMatern(gamma));
  }
  std::string msg = "unknown kernel '" + std::string(name) + "'; valid: ";
  for (const auto& n : ValidNames()) msg += n + " ";
  throw std::invalid_argument(msg);
}

std::string Kernel::name() const {
  std::string base =
      profile_ == RadialProfile::kGaussian ? "gaussian" : "linear-matern";
  return quadratic_ ? base + "-quad" : base;
}

void Kernel::CheckArgs(PointRef x, PointRef y) const {
  if (x.size() != y.size() || x.size() == 0) {
    throw DimensionMismatch("kernel arguments must share a dimension >= 1");
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw std::invalid_argument("kernel arguments must be finite");
  }
}

Kernel::RadialTerms Kernel::Radial(PointRef x, PointRef y) const {
  const double t = (x - y).squaredNorm();
  const double g2 = gamma_ * gamma_;
  if (profile_ == RadialProfile::kGaussian) {
    const double v = std::exp(-g2 * t);
    return {v, -g2 * v, 4.0 * g2 * g2 * v};
  }
  const double r = std::sqrt(t);
  const double e = std::exp(-gamma_ * r);
  const double d2x4 =
      r < kCoincidenceRadius ? 0.0 : g2 * gamma_ * e / r;
  return {e * (1.0 + gamma_ * r), -0.5 * g2 * e, d2x4};
}

double Kernel::Eval(PointRef x, PointRef y) const {
  CheckArgs(x, y);
  const double phi = Radial(x, y).value;
  if (!quadratic_) return phi;
  const double c = x.dot(y);
  return c * c * phi;
}

Eigen::VectorXd Kernel::Grad1(PointRef x, PointRef y) const {
  CheckArgs(x, y);
  const RadialTerms rt = Radial(x, y);
  Eigen::VectorXd grad_phi = 2.0 * rt.d1 * (x - y);
  if (!quadratic_) return grad_phi;
  const double c = x.dot(y);
  return 2.0 * c * rt.value * y + c * c * grad_phi;
}

double Kernel::DirectionalGrad1(PointRef x, PointRef y, PointRef a) const {
  CheckArgs(x, y);
  if (a.size() != x.size()) throw DimensionMismatch("direction size");
  const RadialTerms rt = Radial(x, y);
  const double ad = a.dot(x) - a.dot(y);
  if (!quadratic_) return 2.0 * rt.d1 * ad;
  const double c = x.dot(y);
  return 2.0 * c * rt.value * a.dot(y) + c * c * 2.0 * rt.d1 * ad;
}

Eigen::MatrixXd Kernel::Hessian12(PointRef x, PointRef y) const {
  CheckArgs(x, y);
  const Eigen::Index n = x.size();
  const RadialTerms rt = Radial(x, y);
  const Eigen::VectorXd d = x - y;
  Eigen::MatrixXd radial = -2.0 * rt.d1 * Eigen::MatrixXd::Identity(n, n) -
                           rt.d2x4 * d * d.transpose();
  if (!quadratic_) return radial;
  const double c = x.dot(y);
  const double phi = rt.value;
  const double dphi = rt.d1;
  Eigen::MatrixXd e = phi * (2.0 * y * x.transpose() +
                             2.0 * c * Eigen::MatrixXd::Identity(n, n));
  e.noalias() -= 4.0 * c * dphi * y * d.transpose();
  e.noalias() += 4.0 * c * dphi * d * x.transpose();
  e += c * c * radial;
  return e;
}

double Kernel::DirectionalMixed(PointRef x, PointRef y, PointRef a,
                                PointRef b) const {
  CheckArgs(x, y);
  if (a.size() != x.size() || b.size() != x.size()) {
    throw DimensionMismatch("direction size");
  }
  const RadialTerms rt = Radial(x, y);
  const double ab = a.dot(b);
  const double ad = a.dot(x) - a.dot(y);
  const double bd = b.dot(x) - b.dot(y);
  const double radial = -2.0 * rt.d1 * ab - rt.d2x4 * ad * bd;
  if (!quadratic_) return radial;
  const double c = x.dot(y);
  const double ay = a.dot(y);
  const double bx = b.dot(x);
  return rt.value * (2.0 * ay * bx + 2.0 * c * ab) -
         4.0 * c * rt.d1 * ay * bd + 4.0 * c * rt.d1 * ad * bx +
         c * c * radial;
}

Eigen::VectorXd Kernel::Hessian12TransposeTimes(PointRef x, PointRef y,
                                                PointRef a) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  AddHessian12TransposeTimes(x, y, a, 1.0, out);
  return out;
}

void Kernel::AddHessian12TransposeTimes(PointRef x, PointRef y, PointRef a,
                                        double weight,
                                        Eigen::Ref<Eigen::VectorXd> out) const {
  CheckArgs(x, y);
  if (a.size() != x.size() || out.size() != x.size()) {
    throw DimensionMismatch("direction size");
  }
  const RadialTerms rt = Radial(x, y);
  const double ad = a.dot(x) - a.dot(y);
  if (!quadratic_) {
    out.noalias() += (-2.0 * rt.d1 * weight) * a;
    out.noalias() -= (rt.d2x4 * ad * weight) * (x - y);
    return;
  }
  const double c = x.dot(y);
  const double q = c * c;
  const double ay = a.dot(y);
  out.noalias() += (weight * (2.0 * rt.value * ay + 4.0 * c * rt.d1 * ad)) * x;
  out.noalias() += (weight * (2.0 * c * rt.value - 2.0 * q * rt.d1)) * a;
  out.noalias() -=
      (weight * (4.0 * c * rt.d1 * ay + q * rt.d2x4 * ad)) * (x - y);
}

void Kernel::AddGrad1(PointRef x, PointRef y, double weight,
                      Eigen::Ref<Eigen::VectorXd> out) const {
  CheckArgs(x, y);
  if (out.size() != x.size()) throw DimensionMismatch("output size");
  const RadialTerms rt = Radial(x, y);
  if (!quadratic_) {
    out.noalias() += (2.0 * rt.d1 * weight) * (x - y);
    return;
  }
  const double c = x.dot(y);
  out.noalias() += (2.0 * c * rt.value * weight) * y;
  out.noalias() += (2.0 * c * c * rt.d1 * weight) * (x - y);
}

}  // namespace rkhspi
