#include "rkhspi/policy_iteration.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "parallel.h"
#include "rkhspi/errors.h"

namespace rkhspi {

namespace {

using internal::ParallelFor;

// 64M doubles (512 MiB) for the cached candidate/center inner products.
constexpr double kMaxCrossGramEntries = 64.0 * 1024 * 1024;

void CheckPoolDistinct(const std::vector<Eigen::VectorXd>& pool) {
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  const auto less = [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(pool[a].begin(), pool[a].end(),
                                        pool[b].begin(), pool[b].end());
  };
  std::sort(order.begin(), order.end(), less);
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (pool[order[i - 1]] == pool[order[i]]) {
      throw std::invalid_argument("candidate pool contains duplicate points");
    }
  }
}

std::vector<Eigen::VectorXd> EvalPolicy(
    const Feedback& u, const std::vector<Eigen::VectorXd>& points) {
  std::vector<Eigen::VectorXd> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = u(points[i]);
  return out;
}

}  // namespace

FunctionalSet BuildPeFunctionals(const ControlProblem& p, const Kernel& k,
                                 const std::vector<Eigen::VectorXd>& centers,
                                 const std::vector<Eigen::VectorXd>& u_vals) {
  if (centers.size() != u_vals.size()) {
    throw DimensionMismatch("one control value per center is required");
  }
  std::vector<Functional> entries;
  entries.reserve(centers.size() + 1);
  if (!k.is_quadratic_product()) {
    entries.emplace_back(PointEval{Eigen::VectorXd::Zero(p.state_dim())});
  }
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (centers[i].norm() == 0.0) {
      throw std::invalid_argument("centers must exclude the origin");
    }
    Eigen::VectorXd dir = p.f(centers[i]) + p.g(centers[i]) * u_vals[i];
    if (!(dir.norm() >= kZeroDirectionTol)) {
      std::ostringstream msg;
      msg << "ill-posed policy evaluation: f(x) + g(x)u(x) vanishes at center "
          << i;
      throw WellPosednessError(msg.str(), i);
    }
    entries.emplace_back(DirGrad{centers[i], std::move(dir)});
  }
  return FunctionalSet(std::move(entries));
}

Eigen::VectorXd PeTargets(const ControlProblem& p, const Kernel& k,
                          const std::vector<Eigen::VectorXd>& centers,
                          const std::vector<Eigen::VectorXd>& u_vals) {
  const Eigen::Index offset = k.is_quadratic_product() ? 0 : 1;
  Eigen::VectorXd r(static_cast<Eigen::Index>(centers.size()) + offset);
  if (offset == 1) r(0) = 0.0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    r(static_cast<Eigen::Index>(i) + offset) =
        -p.h(centers[i]) - p.ControlCost(u_vals[i]);
  }
  return r;
}

RecoveryReport PolicyEvaluation(const ControlProblem& p, const Kernel& k,
                                const std::vector<Eigen::VectorXd>& centers,
                                const std::vector<Eigen::VectorXd>& u_vals,
                                const JitterPolicy& jitter) {
  const FunctionalSet fs = BuildPeFunctionals(p, k, centers, u_vals);
  return SolveLinearRecovery(fs, PeTargets(p, k, centers, u_vals), k, jitter);
}

Feedback PolicyImprovement(const ControlProblem& p, const Surrogate& s) {
  return SurrogateFeedback(p, s);
}

double RelativeGhjbResidual(const ControlProblem& p, const Surrogate& s,
                            const Feedback& u0, const Eigen::VectorXd& x) {
  const Eigen::VectorXd u = u0(x);
  const double denom = p.h(x) + p.ControlCost(u);
  if (!(denom > 0.0)) {
    throw std::invalid_argument(
        "relative GHJB residual needs h(x) + <u, R u> > 0");
  }
  return std::abs(GhjbResidual(p, s.Grad(x), u, x) / denom);
}

double ResGhjb(const ControlProblem& p, const Surrogate& s, const Feedback& u0,
               const std::vector<Eigen::VectorXd>& training_points) {
  std::vector<double> nu(training_points.size());
  ParallelFor(training_points.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      nu[i] = RelativeGhjbResidual(p, s, u0, training_points[i]);
    }
  });
  double worst = 0.0;
  for (double v : nu) worst = std::max(worst, v);
  return worst;
}

double ErrorPi(const Surrogate& s,
               const std::function<double(const Eigen::VectorXd&)>& reference,
               const std::vector<Eigen::VectorXd>& test_points) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& x : test_points) {
    const double ref = reference(x);
    const double diff = ref - s.Eval(x);
    num += diff * diff;
    den += ref * ref;
  }
  if (!(den > 0.0)) {
    throw std::invalid_argument("reference has zero energy on the test set");
  }
  return std::sqrt(num / den);
}

int FgRank(const ControlProblem& p, const Eigen::VectorXd& x) {
  Eigen::MatrixXd fg(p.state_dim(), 1 + p.control_dim());
  fg.col(0) = p.f(x);
  fg.rightCols(p.control_dim()) = p.g(x);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(fg);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  return static_cast<int>((sv.array() > 1e-10 * sv(0)).count());
}

GreedyResult GreedySelect(const ControlProblem& p, const Kernel& k,
                          const Feedback& u0, const GreedyConfig& gc,
                          const JitterPolicy& jitter) {
  const auto& pool = gc.candidate_pool;
  if (pool.empty()) throw std::invalid_argument("candidate pool is empty");
  if (gc.max_centers < 1 || gc.batch < 1) {
    throw std::invalid_argument("max_centers and batch must be >= 1");
  }
  for (const auto& x : pool) {
    if (x.size() != p.state_dim()) {
      throw DimensionMismatch("candidate of wrong dimension");
    }
    if (x.norm() == 0.0) {
      throw std::invalid_argument("candidate pool must exclude the origin");
    }
  }
  CheckPoolDistinct(pool);

  const std::size_t n_pool = pool.size();
  const auto capacity = static_cast<Eigen::Index>(
      std::min<std::size_t>(static_cast<std::size_t>(gc.max_centers), n_pool) +
      1);

  // Per-candidate data under the fixed policy u0.
  std::vector<Eigen::VectorXd> u_pool(n_pool);
  std::vector<Functional> cand(n_pool);
  std::vector<double> denom(n_pool);
  std::vector<char> zero_dir(n_pool);  // not vector<bool>: written concurrently
  ParallelFor(n_pool, [&](std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c) {
      u_pool[c] = u0(pool[c]);
      Eigen::VectorXd dir = p.f(pool[c]) + p.g(pool[c]) * u_pool[c];
      denom[c] = p.h(pool[c]) + p.ControlCost(u_pool[c]);
      zero_dir[c] = !(dir.norm() >= kZeroDirectionTol);
      cand[c] = DirGrad{pool[c], std::move(dir)};
    }
  });
  for (std::size_t c = 0; c < n_pool; ++c) {
    if (!(denom[c] > 0.0)) {
      throw std::invalid_argument(
          "h + <u0, R u0> must be positive on the candidate pool");
    }
  }

  FunctionalSet fs;
  std::vector<double> targets;
  // cross(c, j) = <w_c, w_j>, so lambda_c(s) = cross.row(c) * alpha. Large
  // pools fall back to evaluating lambda_c(s) through the surrogate.
  const bool use_cross =
      static_cast<double>(n_pool) * static_cast<double>(capacity) <=
      kMaxCrossGramEntries;
  Eigen::MatrixXd cross(use_cross ? static_cast<Eigen::Index>(n_pool) : 0,
                        use_cross ? capacity : 0);
  Eigen::MatrixXd gram(capacity, capacity);

  const auto add_functional = [&](Functional f, double target) {
    fs.Append(f);
    targets.push_back(target);
    const auto j = static_cast<Eigen::Index>(fs.size() - 1);
    for (Eigen::Index i = 0; i <= j; ++i) {
      gram(i, j) = RepresenterInnerProduct(fs[static_cast<std::size_t>(i)],
                                           fs[static_cast<std::size_t>(j)], k);
      gram(j, i) = gram(i, j);
    }
    if (!use_cross) return;
    ParallelFor(n_pool, [&](std::size_t b, std::size_t e) {
      for (std::size_t c = b; c < e; ++c) {
        cross(static_cast<Eigen::Index>(c), j) =
            zero_dir[c] ? 0.0 : RepresenterInnerProduct(cand[c], f, k);
      }
    });
  };

  if (!k.is_quadratic_product()) {
    add_functional(PointEval{Eigen::VectorXd::Zero(p.state_dim())}, 0.0);
  }

  GreedyResult result;
  std::vector<bool> available(n_pool, true);
  std::vector<double> nu(n_pool, 1.0);  // s == 0 gives nu == 1 everywhere.

  while (result.centers.size() < static_cast<std::size_t>(gc.max_centers)) {
    int picked = 0;
    while (picked < gc.batch &&
           result.centers.size() < static_cast<std::size_t>(gc.max_centers)) {
      std::size_t best = n_pool;
      for (std::size_t c = 0; c < n_pool; ++c) {
        if (available[c] && (best == n_pool || nu[c] > nu[best])) best = c;
      }
      if (best == n_pool) break;
      available[best] = false;
      if (zero_dir[best]) {
        result.skipped_indices.push_back(best);
        continue;
      }
      add_functional(cand[best], -denom[best]);
      result.centers.push_back(pool[best]);
      result.selected_indices.push_back(best);
      ++picked;
    }
    if (picked == 0) break;

    const auto n = static_cast<Eigen::Index>(fs.size());
    const Eigen::VectorXd r =
        Eigen::Map<const Eigen::VectorXd>(targets.data(), n);
    const RecoveryReport rep = SolveLinearRecoveryWithGram(
        fs, gram.topLeftCorner(n, n), r, k, jitter);
    const Eigen::VectorXd& alpha = rep.surrogate.coefficients();

    ParallelFor(n_pool, [&](std::size_t b, std::size_t e) {
      for (std::size_t c = b; c < e; ++c) {
        if (zero_dir[c]) {
          nu[c] = 1.0;
          continue;
        }
        const double applied =
            use_cross
                ? cross.row(static_cast<Eigen::Index>(c)).head(n).dot(alpha)
                : rep.surrogate.Apply(cand[c]);
        nu[c] = std::abs((applied + denom[c]) / denom[c]);
      }
    });
    double res = 0.0;
    for (std::size_t c = 0; c < n_pool; ++c) {
      if (!zero_dir[c]) res = std::max(res, nu[c]);
    }
    result.trace.push_back({static_cast<int>(result.centers.size()), res});
    if (res <= gc.target_residual) break;
  }
  return result;
}

PIResult RunRkhsPiOnCenters(const ControlProblem& p, const Kernel& k,
                            const Feedback& u0,
                            const std::vector<Eigen::VectorXd>& centers,
                            const PIConfig& pc) {
  if (!(pc.epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (pc.max_pi_iters < 1) throw std::invalid_argument("max_pi_iters >= 1");

  PIHistory history;
  history.centers = centers;
  for (const auto& x : centers) {
    history.rank_diagnostics.push_back({x, FgRank(p, x)});
  }
  const auto& training =
      pc.training_points.empty() ? centers : pc.training_points;
  const auto& verification =
      pc.verification_points.empty() ? centers : pc.verification_points;
  const bool has_error_metric = pc.reference && !pc.test_points.empty();

  Surrogate current = Surrogate::Zero(k);
  std::vector<Eigen::VectorXd> u_vals = EvalPolicy(u0, centers);
  Eigen::VectorXd previous = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(centers.size()));
  bool converged = false;

  for (int eta = 0; eta < pc.max_pi_iters; ++eta) {
    std::optional<RecoveryReport> rep;
    try {
      rep = PolicyEvaluation(p, k, centers, u_vals, pc.jitter);
    } catch (const WellPosednessError& e) {
      history.abort_reason = e.what();
    } catch (const FactorizationError& e) {
      history.abort_reason = e.what();
    }
    if (!rep) break;
    current = rep->surrogate;

    Eigen::VectorXd values(previous.size());
    for (std::size_t i = 0; i < centers.size(); ++i) {
      values(static_cast<Eigen::Index>(i)) = current.Eval(centers[i]);
    }
    const double change =
        values.size() == 0 ? 0.0 : (values - previous).cwiseAbs().maxCoeff();

    PIIterationRecord rec{
        eta,
        change,
        ResGhjb(p, current, u0, training),
        has_error_metric
            ? std::optional<double>(ErrorPi(current, pc.reference,
                                            pc.test_points))
            : std::nullopt,
        VerifyInequalities(current, verification, pc.verification_mode,
                           pc.verification_tol),
        static_cast<int>(centers.size()),
        rep->rkhs_norm,
        rep->regularization_used,
        rep->max_constraint_violation};
    history.iterations.push_back(std::move(rec));

    if (change <= pc.epsilon) {
      converged = true;
      break;
    }
    u_vals = EvalPolicy(PolicyImprovement(p, current), centers);
    previous = std::move(values);
  }
  history.hit_max_iters = !converged && !history.abort_reason;
  return PIResult{std::move(current), std::move(history)};
}

PIResult RunRkhsPi(const ControlProblem& p, const Kernel& k,
                   const Feedback& u0, const GreedyConfig& gc,
                   const PIConfig& pc) {
  GreedyResult greedy = GreedySelect(p, k, u0, gc, pc.jitter);
  PIConfig config = pc;
  if (config.training_points.empty()) {
    config.training_points = gc.candidate_pool;
  }
  PIResult result = RunRkhsPiOnCenters(p, k, u0, greedy.centers, config);
  result.history.greedy_trace = std::move(greedy.trace);
  result.history.skipped_candidates = std::move(greedy.skipped_indices);
  return result;
}

}  // namespace rkhspi
