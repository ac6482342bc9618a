#include "rkhspi/recovery.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "rkhspi/errors.h"

namespace rkhspi {

namespace {

std::optional<Eigen::LLT<Eigen::MatrixXd>> TryFactor(
    const Eigen::MatrixXd& gram, double jitter) {
  Eigen::MatrixXd shifted = gram;
  shifted.diagonal().array() += jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const auto diag = llt.matrixLLT().diagonal();
  if (!diag.allFinite() || (diag.array() <= 0.0).any()) return std::nullopt;
  return llt;
}

double MaxViolation(const Surrogate& s, const Eigen::VectorXd& targets) {
  double worst = 0.0;
  const auto& fs = s.functionals();
  for (std::size_t i = 0; i < fs.size(); ++i) {
    worst = std::max(
        worst, std::abs(s.Apply(fs[i]) - targets(static_cast<Eigen::Index>(i))));
  }
  return worst;
}

void CheckTargets(const FunctionalSet& fs, const Eigen::VectorXd& targets) {
  if (static_cast<std::size_t>(targets.size()) != fs.size()) {
    throw DimensionMismatch("number of targets differs from functionals");
  }
  if (!targets.allFinite()) {
    throw std::invalid_argument("recovery targets must be finite");
  }
}

RecoveryReport Finish(const FunctionalSet& fs, const Eigen::MatrixXd& gram,
                      const Eigen::LLT<Eigen::MatrixXd>& llt,
                      const Eigen::VectorXd& targets, const Kernel& k,
                      double jitter) {
  Eigen::VectorXd alpha = llt.solve(targets);
  const double norm2 = alpha.dot(gram * alpha);
  Surrogate s(k, fs, std::move(alpha));
  const double violation = MaxViolation(s, targets);
  return RecoveryReport{std::move(s), violation, std::sqrt(std::max(norm2, 0.0)),
                        jitter};
}

}  // namespace

JitterPolicy JitterPolicy::Escalating() {
  return {"escalate", {0.0, 1e-13, 1e-11, 1e-9}};
}

JitterPolicy JitterPolicy::None() { return {"none", {0.0}}; }

JitterPolicy JitterPolicy::FromName(const std::string& name) {
  if (name == "escalate") return Escalating();
  if (name == "none") return None();
  throw std::invalid_argument("unknown jitter policy '" + name +
                              "'; valid: escalate none");
}

Surrogate::Surrogate(Kernel kernel, FunctionalSet functionals,
                     Eigen::VectorXd coefficients)
    : kernel_(std::move(kernel)),
      functionals_(std::move(functionals)),
      coefficients_(std::move(coefficients)) {
  if (static_cast<std::size_t>(coefficients_.size()) != functionals_.size()) {
    throw DimensionMismatch("coefficient count differs from functionals");
  }
}

Surrogate Surrogate::Zero(const Kernel& kernel) {
  return Surrogate(kernel, FunctionalSet(), Eigen::VectorXd());
}

double Surrogate::Eval(PointRef x) const {
  if (!functionals_.empty() && x.size() != functionals_.dimension()) {
    throw DimensionMismatch("surrogate evaluated at point of wrong dimension");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < functionals_.size(); ++j) {
    sum += coefficients_(static_cast<Eigen::Index>(j)) *
           RepresenterValue(functionals_[j], kernel_, x);
  }
  return sum;
}

Eigen::VectorXd Surrogate::Grad(PointRef x) const {
  if (!functionals_.empty() && x.size() != functionals_.dimension()) {
    throw DimensionMismatch("surrogate evaluated at point of wrong dimension");
  }
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
  for (std::size_t j = 0; j < functionals_.size(); ++j) {
    AddRepresenterGradient(functionals_[j], kernel_, x,
                           coefficients_(static_cast<Eigen::Index>(j)), g);
  }
  return g;
}

double Surrogate::Apply(const Functional& lam) const {
  if (const auto* p = std::get_if<PointEval>(&lam)) return Eval(p->x);
  const auto& d = std::get<DirGrad>(lam);
  return d.a.dot(Grad(d.x));
}

double RkhsNorm(const Surrogate& s) {
  if (s.functionals().empty()) return 0.0;
  const Eigen::MatrixXd gram = Gram(s.functionals(), s.kernel());
  const double norm2 = s.coefficients().dot(gram * s.coefficients());
  return std::sqrt(std::max(norm2, 0.0));
}

RecoveryReport SolveLinearRecovery(const FunctionalSet& fs,
                                   const Eigen::VectorXd& targets,
                                   const Kernel& k, double jitter) {
  CheckTargets(fs, targets);
  if (!(jitter >= 0.0)) throw std::invalid_argument("jitter must be >= 0");
  const Eigen::MatrixXd gram = Gram(fs, k);
  auto llt = TryFactor(gram, jitter);
  if (!llt) {
    throw FactorizationError(
        "Gram matrix is not numerically positive definite; the functionals "
        "are (nearly) linearly dependent");
  }
  return Finish(fs, gram, *llt, targets, k, jitter);
}

RecoveryReport SolveLinearRecovery(const FunctionalSet& fs,
                                   const Eigen::VectorXd& targets,
                                   const Kernel& k,
                                   const JitterPolicy& policy) {
  CheckTargets(fs, targets);
  return SolveLinearRecoveryWithGram(fs, Gram(fs, k), targets, k, policy);
}

RecoveryReport SolveLinearRecoveryWithGram(const FunctionalSet& fs,
                                           const Eigen::MatrixXd& gram,
                                           const Eigen::VectorXd& targets,
                                           const Kernel& k,
                                           const JitterPolicy& policy) {
  CheckTargets(fs, targets);
  if (gram.rows() != targets.size() || gram.cols() != targets.size()) {
    throw DimensionMismatch("Gram size differs from functionals");
  }
  if (fs.empty()) {
    return RecoveryReport{Surrogate::Zero(k), 0.0, 0.0, 0.0};
  }
  const double scale = gram.trace() / static_cast<double>(gram.rows());
  for (double level : policy.relative_levels) {
    const double jitter = level * scale;
    if (auto llt = TryFactor(gram, jitter)) {
      return Finish(fs, gram, *llt, targets, k, jitter);
    }
  }
  std::ostringstream msg;
  msg << "Gram factorization failed for " << fs.size()
      << " functionals at every jitter level of policy '" << policy.name
      << "'; the functionals are numerically linearly dependent";
  throw FactorizationError(msg.str());
}

double FiniteDimObjective(const Eigen::VectorXd& z, const FunctionalSet& fs,
                          const Kernel& k) {
  CheckTargets(fs, z);
  if (fs.empty()) return 0.0;
  const Eigen::MatrixXd gram = Gram(fs, k);
  auto llt = TryFactor(gram, 0.0);
  if (!llt) throw FactorizationError("singular Gram matrix");
  return z.dot(llt->solve(z));
}

}  // namespace rkhspi
