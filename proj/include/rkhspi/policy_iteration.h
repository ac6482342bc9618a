#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rkhspi/control_problem.h"
#include "rkhspi/functional.h"
#include "rkhspi/kernel.h"
#include "rkhspi/recovery.h"

namespace rkhspi {

/// Below this norm a transport direction f(x) + g(x)u counts as zero.
inline constexpr double kZeroDirectionTol = 1e-14;

struct GreedyConfig {
  /// Candidate centers; must exclude the origin and be pairwise distinct.
  std::vector<Eigen::VectorXd> candidate_pool;
  int max_centers = 100;
  double target_residual = 0.0;
  /// Centers added between two re-solves.
  int batch = 1;
};

struct GreedyTraceEntry {
  int n_centers;
  double res_ghjb;
};

struct GreedyResult {
  std::vector<Eigen::VectorXd> centers;
  /// Pool index of every selected center, in selection order.
  std::vector<std::size_t> selected_indices;
  /// Pool indices rejected because f + g u0 vanishes there.
  std::vector<std::size_t> skipped_indices;
  std::vector<GreedyTraceEntry> trace;
};

struct PIConfig {
  double epsilon = 1e-8;
  int max_pi_iters = 10;
  VerificationMode verification_mode = PsdCheck{};
  /// Empty: verify at the centers.
  std::vector<Eigen::VectorXd> verification_points;
  double verification_tol = 1e-10;
  JitterPolicy jitter = JitterPolicy::Escalating();
  /// Points for Res-GHJB; empty: the greedy candidate pool.
  std::vector<Eigen::VectorXd> training_points;
  /// Points and reference for Error-PI; skipped when either is absent.
  std::vector<Eigen::VectorXd> test_points;
  std::function<double(const Eigen::VectorXd&)> reference;
};

struct PIIterationRecord {
  int iter;
  /// max over centers of |s_eta - s_{eta-1}|; s_{-1} = 0.
  double max_value_change;
  double res_ghjb;
  std::optional<double> error_pi;
  VerificationReport verification;
  int n_centers;
  double rkhs_norm;
  double jitter_used;
  double max_ghjb_residual;
};

/// Rank of [f(x_i) | g(x_i)] at a center; diagnostic only.
struct RankDiagnostic {
  Eigen::VectorXd center;
  int rank;
};

struct PIHistory {
  std::vector<PIIterationRecord> iterations;
  std::vector<GreedyTraceEntry> greedy_trace;
  std::vector<Eigen::VectorXd> centers;
  std::vector<std::size_t> skipped_candidates;
  std::vector<RankDiagnostic> rank_diagnostics;
  /// Set when max_pi_iters was reached without e_eta <= epsilon.
  bool hit_max_iters = false;
  /// Set when the run stopped on a solver error.
  std::optional<std::string> abort_reason;
};

struct PIResult {
  Surrogate surrogate;
  PIHistory history;
};

/// [delta_0] ++ [DirGrad{x_i, f(x_i) + g(x_i) u_i}]. The point evaluation at
/// the origin is omitted for quadratic-product kernels, whose RKHS members
/// already vanish there. Throws WellPosednessError on a zero direction.
FunctionalSet BuildPeFunctionals(const ControlProblem& p, const Kernel& k,
                                 const std::vector<Eigen::VectorXd>& centers,
                                 const std::vector<Eigen::VectorXd>& u_vals);

/// Targets r_0 = 0 (when delta_0 is present), r_i = -h(x_i) - <u_i, R u_i>.
Eigen::VectorXd PeTargets(const ControlProblem& p, const Kernel& k,
                          const std::vector<Eigen::VectorXd>& centers,
                          const std::vector<Eigen::VectorXd>& u_vals);

/// Policy evaluation: minimal-norm solution of the collocated GHJB equation.
RecoveryReport PolicyEvaluation(const ControlProblem& p, const Kernel& k,
                                const std::vector<Eigen::VectorXd>& centers,
                                const std::vector<Eigen::VectorXd>& u_vals,
                                const JitterPolicy& jitter);

/// Policy improvement: x -> -1/2 R^{-1} g(x)^T grad s(x).
Feedback PolicyImprovement(const ControlProblem& p, const Surrogate& s);

/// |GHJB(s, u0, x) / (h(x) + <u0(x), R u0(x)>)|.
double RelativeGhjbResidual(const ControlProblem& p, const Surrogate& s,
                            const Feedback& u0, const Eigen::VectorXd& x);

/// Max of the relative GHJB residual under the initial policy u0.
double ResGhjb(const ControlProblem& p, const Surrogate& s, const Feedback& u0,
               const std::vector<Eigen::VectorXd>& training_points);

/// sqrt(sum |ref - s|^2 / sum |ref|^2) over the test points.
double ErrorPi(const Surrogate& s,
               const std::function<double(const Eigen::VectorXd&)>& reference,
               const std::vector<Eigen::VectorXd>& test_points);

/// Residual-driven greedy center selection under a fixed policy u0.
GreedyResult GreedySelect(const ControlProblem& p, const Kernel& k,
                          const Feedback& u0, const GreedyConfig& gc,
                          const JitterPolicy& jitter);

/// Greedy selection followed by RKHS policy iteration on the frozen centers.
PIResult RunRkhsPi(const ControlProblem& p, const Kernel& k,
                   const Feedback& u0, const GreedyConfig& gc,
                   const PIConfig& pc);

/// Policy iteration on a given center set (no greedy phase).
PIResult RunRkhsPiOnCenters(const ControlProblem& p, const Kernel& k,
                            const Feedback& u0,
                            const std::vector<Eigen::VectorXd>& centers,
                            const PIConfig& pc);

/// Numerical rank of [f(x) | g(x)] (singular values above 1e-10 sigma_max).
int FgRank(const ControlProblem& p, const Eigen::VectorXd& x);

}  // namespace rkhspi
