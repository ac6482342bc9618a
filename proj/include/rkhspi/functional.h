#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rkhspi/kernel.h"

namespace rkhspi {

/// delta_x : xi -> xi(x).
struct PointEval {
  Point x;
};

/// lambda_{x,a} : xi -> <a, grad xi(x)>. The direction must be nonzero.
struct DirGrad {
  Point x;
  Eigen::VectorXd a;
};

using Functional = std::variant<PointEval, DirGrad>;

const Point& Location(const Functional& f);
bool IdenticalFunctionals(const Functional& lhs, const Functional& rhs);

/// Ordered, duplicate-free list of functionals sharing one dimension. The
/// order fixes Gram row/column indexing.
class FunctionalSet {
 public:
  FunctionalSet() = default;
  explicit FunctionalSet(std::vector<Functional> entries);

  /// Throws std::invalid_argument on a duplicate or zero direction.
  void Append(Functional f);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  /// 0 for an empty set.
  Eigen::Index dimension() const { return dim_; }
  const Functional& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<Functional>& entries() const { return entries_; }

 private:
  void Validate(const Functional& f) const;

  std::vector<Functional> entries_;
  Eigen::Index dim_ = 0;
};

/// <w_lhs, w_rhs>_{H_k}, the inner product of the two Riesz representers.
double RepresenterInnerProduct(const Functional& lhs, const Functional& rhs,
                               const Kernel& k);

/// w_lam(y).
double RepresenterValue(const Functional& lam, const Kernel& k, PointRef y);

/// grad_y w_lam(y).
Eigen::VectorXd RepresenterGradient(const Functional& lam, const Kernel& k,
                                    PointRef y);
/// out += weight * grad_y w_lam(y).
void AddRepresenterGradient(const Functional& lam, const Kernel& k,
                            PointRef y, double weight,
                            Eigen::Ref<Eigen::VectorXd> out);

/// Generalized Gram matrix. Only the upper triangle is evaluated and then
/// mirrored, so the result equals its transpose bit for bit.
Eigen::MatrixXd Gram(const FunctionalSet& fs, const Kernel& k);

/// Rectangular matrix of representer inner products, rows from `rows`.
Eigen::MatrixXd CrossGram(const std::vector<Functional>& rows,
                          const FunctionalSet& cols, const Kernel& k);

}  // namespace rkhspi
