#include "rkhspi/care.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rkhspi/errors.h"

namespace rkhspi {

namespace {

constexpr double kJacobianStep = 1e-6;
constexpr double kHessianStep = 1e-4;

Eigen::MatrixXd Symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

}  // namespace

LinearizedSystem::LinearizedSystem(Eigen::MatrixXd a, Eigen::MatrixXd b,
                                   Eigen::MatrixXd q, Eigen::MatrixXd r)
    : A(std::move(a)), B(std::move(b)), Q(std::move(q)), R(std::move(r)) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != B.cols() || R.cols() != B.cols()) {
    throw DimensionMismatch("inconsistent linearized system shapes");
  }
  Q = Symmetrize(Q);
  R = Symmetrize(R);
}

LinearizedSystem Linearize(const ControlProblem& p) {
  const int n = p.state_dim();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd a(n, n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(j) = kJacobianStep;
    a.col(j) = (p.f(e) - p.f(-e)) / (2.0 * kJacobianStep);
  }
  Eigen::MatrixXd hess(n, n);
  const double h0 = p.h(zero);
  const double s = kHessianStep;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd ei = Eigen::VectorXd::Zero(n);
    ei(i) = s;
    hess(i, i) = (p.h(ei) - 2.0 * h0 + p.h(-ei)) / (s * s);
    for (int j = i + 1; j < n; ++j) {
      Eigen::VectorXd ej = Eigen::VectorXd::Zero(n);
      ej(j) = s;
      hess(i, j) = (p.h(ei + ej) - p.h(ei - ej) - p.h(-ei + ej) +
                    p.h(-ei - ej)) /
                   (4.0 * s * s);
      hess(j, i) = hess(i, j);
    }
  }
  if (!a.allFinite() || !hess.allFinite()) {
    throw std::runtime_error("non-finite derivatives while linearizing '" +
                             p.name() + "'");
  }
  return LinearizedSystem(std::move(a), p.g(zero), 0.5 * hess,
                          p.control_weight());
}

Eigen::MatrixXd SolveLyapunov(const Eigen::MatrixXd& F,
                              const Eigen::MatrixXd& W) {
  const Eigen::Index n = F.rows();
  if (F.cols() != n || W.rows() != n || W.cols() != n) {
    throw DimensionMismatch("Lyapunov operands must be N x N");
  }
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd ft = F.transpose();
  // Column-major vec: vec(F^T X) = (I kron F^T) vec X,
  // vec(X F) = (F^T kron I) vec X.
  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    op.block(j * n, j * n, n, n) += ft;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (ft(j, i) != 0.0) op.block(j * n, i * n, n, n) += ft(j, i) * id;
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(op);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    std::ostringstream msg;
    msg << "Lyapunov operator is singular (rcond " << rcond
        << "): F has eigenvalue pairs summing to zero";
    throw CareError(msg.str());
  }
  const Eigen::VectorXd rhs =
      -Eigen::Map<const Eigen::VectorXd>(W.data(), n * n);
  const Eigen::VectorXd sol = lu.solve(rhs);
  return Symmetrize(Eigen::Map<const Eigen::MatrixXd>(sol.data(), n, n));
}

double RiccatiResidual(const LinearizedSystem& sys, const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd btp = sys.B.transpose() * P;
  const Eigen::MatrixXd res = sys.A.transpose() * P + P * sys.A -
                              btp.transpose() * sys.R.llt().solve(btp) + sys.Q;
  return res.norm();
}

double SpectralAbscissa(const Eigen::MatrixXd& M) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  return es.eigenvalues().real().maxCoeff();
}

CareSolution SolveCare(const LinearizedSystem& sys, double tol, int max_iter) {
  const Eigen::Index n = sys.A.rows();
  const Eigen::LLT<Eigen::MatrixXd> r_llt(sys.R);
  if (r_llt.info() != Eigen::Success) {
    throw CareError("R is not positive definite");
  }

  Eigen::MatrixXd gain = Eigen::MatrixXd::Zero(sys.B.cols(), n);
  const double abscissa = SpectralAbscissa(sys.A);
  if (abscissa >= 0.0) {
    const double shift = 1.0 + std::max(0.0, abscissa);
    const Eigen::MatrixXd shifted =
        -(sys.A + shift * Eigen::MatrixXd::Identity(n, n)).transpose();
    const Eigen::MatrixXd w =
        2.0 * sys.B * r_llt.solve(sys.B.transpose());
    const Eigen::MatrixXd x = SolveLyapunov(shifted, w);
    Eigen::LLT<Eigen::MatrixXd> x_llt(x);
    if (x_llt.info() != Eigen::Success) {
      throw CareError(
          "no stabilizing initial gain: (A, B) is not controllable enough "
          "for the Bass construction");
    }
    gain = r_llt.solve(sys.B.transpose() * x_llt.solve(
                                               Eigen::MatrixXd::Identity(n, n)));
    if (SpectralAbscissa(sys.A - sys.B * gain) >= 0.0) {
      throw CareError("initial gain does not stabilize A - B K0");
    }
  }

  const double target = tol * (1.0 + sys.Q.norm());
  CareSolution out;
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::MatrixXd closed = sys.A - sys.B * gain;
    const Eigen::MatrixXd w = sys.Q + gain.transpose() * sys.R * gain;
    out.P = SolveLyapunov(closed, w);
    out.iterations = it;
    const double res = RiccatiResidual(sys, out.P);
    out.residual_history.push_back(res);
    if (res < target) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.P);
      if (!(eig.eigenvalues().minCoeff() > 0.0)) {
        throw CareError("Riccati solution is not positive definite");
      }
      return out;
    }
    gain = r_llt.solve(sys.B.transpose() * out.P);
  }
  std::ostringstream msg;
  msg << "Newton-Kleinman stagnated: residual "
      << out.residual_history.back() << " above " << target << " after "
      << max_iter << " iterations";
  throw CareError(msg.str());
}

LqrBounds ComputeLqrBounds(const Eigen::MatrixXd& P) {
  if (P.rows() != P.cols()) throw DimensionMismatch("P must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Symmetrize(P));
  const double lmin = eig.eigenvalues().minCoeff();
  if (!(lmin > 0.0)) throw std::invalid_argument("P is not positive definite");
  return {0.5 * lmin, 2.0 * eig.eigenvalues().maxCoeff()};
}

Feedback LqrFeedback(const LinearizedSystem& sys, const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd gain = sys.R.llt().solve(sys.B.transpose() * P);
  return [gain](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return -gain * x;
  };
}

}  // namespace rkhspi
