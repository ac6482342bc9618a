#include "rkhspi/functional.h"

#include <stdexcept>

#include "rkhspi/errors.h"

namespace rkhspi {

const Point& Location(const Functional& f) {
  return std::visit([](const auto& v) -> const Point& { return v.x; }, f);
}

bool IdenticalFunctionals(const Functional& lhs, const Functional& rhs) {
  if (lhs.index() != rhs.index()) return false;
  if (const auto* l = std::get_if<PointEval>(&lhs)) {
    const auto& r = std::get<PointEval>(rhs);
    return l->x.size() == r.x.size() && l->x == r.x;
  }
  const auto& l = std::get<DirGrad>(lhs);
  const auto& r = std::get<DirGrad>(rhs);
  return l.x.size() == r.x.size() && l.x == r.x && l.a == r.a;
}

FunctionalSet::FunctionalSet(std::vector<Functional> entries) {
  entries_.reserve(entries.size());
  for (auto& f : entries) Append(std::move(f));
}

void FunctionalSet::Validate(const Functional& f) const {
  const Point& x = Location(f);
  if (x.size() == 0) throw DimensionMismatch("functional at empty point");
  if (dim_ != 0 && x.size() != dim_) {
    throw DimensionMismatch("functional dimension differs from set");
  }
  if (const auto* dg = std::get_if<DirGrad>(&f)) {
    if (dg->a.size() != x.size()) {
      throw DimensionMismatch("direction and location sizes differ");
    }
    if (!(dg->a.norm() > 0.0)) {
      throw std::invalid_argument("directional functional with zero direction");
    }
  }
  for (const auto& e : entries_) {
    if (IdenticalFunctionals(e, f)) {
      throw std::invalid_argument(
          "duplicate functional: the Gram matrix would be singular");
    }
  }
}

void FunctionalSet::Append(Functional f) {
  Validate(f);
  dim_ = Location(f).size();
  entries_.push_back(std::move(f));
}

double RepresenterInnerProduct(const Functional& lhs, const Functional& rhs,
                               const Kernel& k) {
  const auto* lp = std::get_if<PointEval>(&lhs);
  const auto* rp = std::get_if<PointEval>(&rhs);
  if (lp && rp) return k.Eval(lp->x, rp->x);
  if (rp) {
    const auto& l = std::get<DirGrad>(lhs);
    return k.DirectionalGrad1(l.x, rp->x, l.a);
  }
  const auto& r = std::get<DirGrad>(rhs);
  if (lp) return k.DirectionalGrad1(r.x, lp->x, r.a);
  const auto& l = std::get<DirGrad>(lhs);
  return k.DirectionalMixed(l.x, r.x, l.a, r.a);
}

double RepresenterValue(const Functional& lam, const Kernel& k, PointRef y) {
  if (const auto* p = std::get_if<PointEval>(&lam)) return k.Eval(p->x, y);
  const auto& d = std::get<DirGrad>(lam);
  return k.DirectionalGrad1(d.x, y, d.a);
}

void AddRepresenterGradient(const Functional& lam, const Kernel& k,
                            PointRef y, double weight,
                            Eigen::Ref<Eigen::VectorXd> out) {
  if (const auto* p = std::get_if<PointEval>(&lam)) {
    // grad_2 k(x, y) = grad_1 k(y, x) by symmetry.
    k.AddGrad1(y, p->x, weight, out);
    return;
  }
  const auto& d = std::get<DirGrad>(lam);
  k.AddHessian12TransposeTimes(d.x, y, d.a, weight, out);
}

Eigen::VectorXd RepresenterGradient(const Functional& lam, const Kernel& k,
                                    PointRef y) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(y.size());
  AddRepresenterGradient(lam, k, y, 1.0, out);
  return out;
}

Eigen::MatrixXd Gram(const FunctionalSet& fs, const Kernel& k) {
  const auto n = static_cast<Eigen::Index>(fs.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      g(i, j) = RepresenterInnerProduct(fs[i], fs[j], k);
      g(j, i) = g(i, j);
    }
  }
  return g;
}

Eigen::MatrixXd CrossGram(const std::vector<Functional>& rows,
                          const FunctionalSet& cols, const Kernel& k) {
  Eigen::MatrixXd g(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          RepresenterInnerProduct(rows[i], cols[j], k);
    }
  }
  return g;
}

}  // namespace rkhspi
