#include "rkhspi/policy_iteration.h"

#include <cmath>

#include <gtest/gtest.h>

#include "rkhspi/errors.h"
#include "rkhspi/problems.h"
#include "test_util.h"

namespace rkhspi {
namespace {

using testing::Rng;

const double kP = 1.0 + std::sqrt(2.0);

std::vector<Eigen::VectorXd> RandomCenters(Rng& rng, int n) {
  std::vector<Eigen::VectorXd> c;
  for (int i = 0; i < n; ++i) c.push_back(rng.Vector(2));
  return c;
}

std::vector<Eigen::VectorXd> Apply(const Feedback& u,
                                   const std::vector<Eigen::VectorXd>& pts) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& x : pts) out.push_back(u(x));
  return out;
}

Feedback LqrOptimal() {
  return [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return -kP * x; };
}

TEST(PolicyIterationTest, FunctionalLayout) {
  const ControlProblem p = testing::UnstableLqrExample();
  const std::vector<Eigen::VectorXd> centers = {Eigen::Vector2d(0.1, 0.2),
                                                Eigen::Vector2d(-0.5, 0.3)};
  const auto u = Apply(LqrOptimal(), centers);
  const FunctionalSet fs = BuildPeFunctionals(p, Kernel::Gaussian(1.0),
                                              centers, u);
  ASSERT_EQ(fs.size(), 3u);
  EXPECT_TRUE(std::holds_alternative<PointEval>(fs[0]));
  EXPECT_EQ(std::get<PointEval>(fs[0]).x.norm(), 0.0);
  const auto& d = std::get<DirGrad>(fs[1]);
  EXPECT_LT((d.a - (1.0 - kP) * centers[0]).norm(), 1e-15);
  const Kernel quad = Kernel::QuadraticProduct(Kernel::Gaussian(1.0));
  EXPECT_EQ(BuildPeFunctionals(p, quad, centers, u).size(), 2u);
  const Eigen::VectorXd r = PeTargets(p, Kernel::Gaussian(1.0), centers, u);
  EXPECT_EQ(r(0), 0.0);
  EXPECT_NEAR(r(1), -(1.0 + kP * kP) * centers[0].squaredNorm(), 1e-15);
}

TEST(PolicyIterationTest, WellPosednessGuard) {
  const ControlProblem p = testing::UnstableLqrExample();
  const std::vector<Eigen::VectorXd> centers = {Eigen::Vector2d(0.1, 0.2),
                                                Eigen::Vector2d(-0.5, 0.3)};
  // u = -x cancels f = x, so the transport direction vanishes everywhere.
  std::vector<Eigen::VectorXd> u = {Eigen::VectorXd(-0.9 * centers[0]),
                                    Eigen::VectorXd(-centers[1])};
  try {
    BuildPeFunctionals(p, Kernel::Gaussian(1.0), centers, u);
    FAIL();
  } catch (const WellPosednessError& e) {
    EXPECT_EQ(e.center_index(), 1u);
  }
  EXPECT_THROW(BuildPeFunctionals(p, Kernel::Gaussian(1.0),
                                  {Eigen::Vector2d::Zero()},
                                  {Eigen::Vector2d(1, 1)}),
               std::invalid_argument);
}

TEST(PolicyIterationTest, LqrPolicyEvaluationRecoversQuadratic) {
  Rng rng(51);
  const ControlProblem p = testing::UnstableLqrExample();
  const auto centers = RandomCenters(rng, 3);
  const Kernel quad = Kernel::QuadraticProduct(Kernel::Gaussian(1e-5));
  const auto rep = PolicyEvaluation(p, quad, centers,
                                    Apply(LqrOptimal(), centers),
                                    JitterPolicy::None());
  for (const auto& c : centers) {
    EXPECT_NEAR(GhjbResidual(p, rep.surrogate.Grad(c), -kP * c, c), 0.0, 1e-8);
  }
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd x = rng.Vector(2);
    EXPECT_NEAR(rep.surrogate.Eval(x), kP * x.squaredNorm(), 1e-6);
  }
}

TEST(PolicyIterationTest, PolicyEvaluationPostConditions) {
  Rng rng(52);
  const Benchmark toy = ToyProblem();
  const auto centers = RandomCenters(rng, 40);
  const auto u = Apply(toy.initial_policy, centers);
  for (const auto& k : testing::AllKernelFamilies(1.3)) {
    const auto rep =
        PolicyEvaluation(toy.problem, k, centers, u, JitterPolicy::None());
    EXPECT_LE(std::abs(rep.surrogate.Eval(Eigen::Vector2d::Zero())), 1e-10);
    double max_h = 0.0;
    for (const auto& c : centers) max_h = std::max(max_h, toy.problem.h(c));
    for (std::size_t i = 0; i < centers.size(); ++i) {
      EXPECT_LE(std::abs(GhjbResidual(toy.problem,
                                      rep.surrogate.Grad(centers[i]), u[i],
                                      centers[i])),
                1e-6 * (1.0 + max_h))
          << k.name();
    }
  }
}

TEST(PolicyIterationTest, MetricExamples) {
  Rng rng(53);
  const Benchmark toy = ToyProblem();
  const Kernel k = Kernel::Gaussian(1.0);
  const Surrogate zero = Surrogate::Zero(k);
  const auto pts = RandomCenters(rng, 25);
  EXPECT_NEAR(ResGhjb(toy.problem, zero, toy.initial_policy, pts), 1.0, 1e-15);
  EXPECT_NEAR(RelativeGhjbResidual(toy.problem, zero, toy.initial_policy,
                                   pts[3]),
              1.0, 1e-15);

  const auto centers = RandomCenters(rng, 10);
  const Surrogate s = PolicyEvaluation(toy.problem, k, centers,
                                       Apply(toy.initial_policy, centers),
                                       JitterPolicy::None())
                          .surrogate;
  EXPECT_DOUBLE_EQ(ResGhjb(toy.problem, s, toy.initial_policy, {pts[0]}),
                   RelativeGhjbResidual(toy.problem, s, toy.initial_policy,
                                        pts[0]));
  const auto ref = [&](const Eigen::VectorXd& x) { return s.Eval(x); };
  EXPECT_EQ(ErrorPi(s, ref, pts), 0.0);
  EXPECT_NEAR(ErrorPi(zero, ref, pts), 1.0, 1e-15);
  const auto scaled = [&](const Eigen::VectorXd& x) { return s.Eval(x) / 1.1; };
  EXPECT_NEAR(ErrorPi(s, scaled, pts), 0.1, 1e-12);
  EXPECT_THROW(ErrorPi(s, [](const Eigen::VectorXd&) { return 0.0; }, pts),
               std::invalid_argument);
}

TEST(PolicyIterationTest, GreedyFirstPickIsLowestIndexTie) {
  const Benchmark toy = ToyProblem();
  GreedyConfig gc;
  gc.candidate_pool = Grid2d(-1.0, 1.0, 7);
  gc.max_centers = 1;
  const GreedyResult g = GreedySelect(toy.problem, Kernel::Gaussian(1.3),
                                      toy.initial_policy, gc,
                                      JitterPolicy::Escalating());
  ASSERT_EQ(g.selected_indices.size(), 1u);
  EXPECT_EQ(g.selected_indices[0], 0u);
}

TEST(PolicyIterationTest, GreedyPicksTheArgmax) {
  const Benchmark toy = ToyProblem();
  const Kernel k = Kernel::Gaussian(std::sqrt(1.7));
  GreedyConfig gc;
  gc.candidate_pool = Grid2d(-1.0, 1.0, 20);
  const JitterPolicy jitter = JitterPolicy::Escalating();
  for (int n : {3, 9, 20}) {
    gc.max_centers = n;
    const GreedyResult first =
        GreedySelect(toy.problem, k, toy.initial_policy, gc, jitter);
    gc.max_centers = n + 1;
    const GreedyResult next =
        GreedySelect(toy.problem, k, toy.initial_policy, gc, jitter);
    // Exhaustive argmax of nu for the surrogate on the first n centers.
    const Surrogate s =
        PolicyEvaluation(toy.problem, k, first.centers,
                         Apply(toy.initial_policy, first.centers), jitter)
            .surrogate;
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < gc.candidate_pool.size(); ++i) {
      if (std::find(first.selected_indices.begin(),
                    first.selected_indices.end(),
                    i) != first.selected_indices.end()) {
        continue;
      }
      const double nu = RelativeGhjbResidual(toy.problem, s, toy.initial_policy,
                                             gc.candidate_pool[i]);
      if (nu > best) {
        best = nu;
        arg = i;
      }
    }
    EXPECT_EQ(next.selected_indices.back(), arg) << "after " << n;
    EXPECT_NEAR(first.trace.back().res_ghjb, best, 1e-9 * best);
  }
}

TEST(PolicyIterationTest, GreedyRunsToMaxCentersWithHugeTarget) {
  const Benchmark toy = ToyProblem();
  GreedyConfig gc;
  gc.candidate_pool = Grid2d(-1.0, 1.0, 10);
  gc.max_centers = 7;
  gc.target_residual = 0.0;
  const GreedyResult g = GreedySelect(toy.problem, Kernel::Gaussian(1.3),
                                      toy.initial_policy, gc,
                                      JitterPolicy::Escalating());
  EXPECT_EQ(g.centers.size(), 7u);
  gc.target_residual = 1e300;
  const GreedyResult stop = GreedySelect(toy.problem, Kernel::Gaussian(1.3),
                                         toy.initial_policy, gc,
                                         JitterPolicy::Escalating());
  EXPECT_EQ(stop.centers.size(), 1u);
}

TEST(PolicyIterationTest, GreedyResidualDecreasesWithCenters) {
  const Benchmark toy = ToyProblem();
  GreedyConfig gc;
  gc.candidate_pool = Grid2d(-1.0, 1.0, 40);
  gc.max_centers = 50;
  const GreedyResult g = GreedySelect(toy.problem,
                                      Kernel::Gaussian(std::sqrt(1.7)),
                                      toy.initial_policy, gc,
                                      JitterPolicy::Escalating());
  ASSERT_EQ(g.trace.size(), 50u);
  EXPECT_LT(g.trace[49].res_ghjb, g.trace[9].res_ghjb);
}

TEST(PolicyIterationTest, GreedyBatchesAndSkipsZeroDirections) {
  const ControlProblem p = testing::UnstableLqrExample();
  // u0 cancels the drift exactly on the x1 axis.
  const Feedback u0 = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    if (x(1) == 0.0) return -x;
    return Eigen::VectorXd(-2.0 * x);
  };
  GreedyConfig gc;
  gc.candidate_pool = {Eigen::Vector2d(0.5, 0.0), Eigen::Vector2d(0.2, 0.4),
                       Eigen::Vector2d(-0.3, 0.0), Eigen::Vector2d(-0.6, 0.7),
                       Eigen::Vector2d(0.9, -0.2)};
  gc.max_centers = 3;
  gc.batch = 2;
  const GreedyResult g = GreedySelect(p, Kernel::Gaussian(1.0), u0, gc,
                                      JitterPolicy::Escalating());
  EXPECT_EQ(g.skipped_indices, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(g.centers.size(), 3u);
  for (std::size_t idx : g.selected_indices) {
    EXPECT_NE(gc.candidate_pool[idx](1), 0.0);
  }
}

TEST(PolicyIterationTest, GreedyRejectsBadPools) {
  const Benchmark toy = ToyProblem();
  GreedyConfig gc;
  const Kernel k = Kernel::Gaussian(1.0);
  const auto run = [&] {
    return GreedySelect(toy.problem, k, toy.initial_policy, gc,
                        JitterPolicy::Escalating());
  };
  EXPECT_THROW(run(), std::invalid_argument);
  gc.candidate_pool = {Eigen::Vector2d(0.1, 0.1), Eigen::Vector2d::Zero()};
  EXPECT_THROW(run(), std::invalid_argument);
  gc.candidate_pool = {Eigen::Vector2d(0.1, 0.1), Eigen::Vector2d(0.1, 0.1)};
  EXPECT_THROW(run(), std::invalid_argument);
}

TEST(PolicyIterationTest, OptimalPolicyIsFixedPoint) {
  Rng rng(54);
  const ControlProblem p = testing::UnstableLqrExample();
  const auto centers = RandomCenters(rng, 12);
  const Kernel quad = Kernel::QuadraticProduct(Kernel::LinearMatern(1e-4));
  PIConfig pc;
  pc.max_pi_iters = 2;
  pc.epsilon = 1e-300;
  const PIResult r = RunRkhsPiOnCenters(p, quad, LqrOptimal(), centers, pc);
  ASSERT_EQ(r.history.iterations.size(), 2u);
  EXPECT_LT(r.history.iterations[1].max_value_change, 1e-8);
}

TEST(PolicyIterationTest, HugeEpsilonStopsAfterOneIteration) {
  Rng rng(55);
  const Benchmark toy = ToyProblem();
  PIConfig pc;
  pc.epsilon = 1e300;
  const PIResult r = RunRkhsPiOnCenters(toy.problem, Kernel::Gaussian(1.3),
                                        toy.initial_policy,
                                        RandomCenters(rng, 10), pc);
  EXPECT_EQ(r.history.iterations.size(), 1u);
  EXPECT_FALSE(r.history.hit_max_iters);
}

TEST(PolicyIterationTest, MaxItersIsFlagged) {
  Rng rng(56);
  const Benchmark toy = ToyProblem();
  PIConfig pc;
  pc.epsilon = 1e-300;
  pc.max_pi_iters = 3;
  const PIResult r = RunRkhsPiOnCenters(toy.problem, Kernel::Gaussian(1.3),
                                        toy.initial_policy,
                                        RandomCenters(rng, 10), pc);
  EXPECT_EQ(r.history.iterations.size(), 3u);
  EXPECT_TRUE(r.history.hit_max_iters);
  EXPECT_EQ(r.history.rank_diagnostics.size(), 10u);
}

TEST(PolicyIterationTest, ToyPolicyIterationConverges) {
  const Benchmark toy = ToyProblem();
  GreedyConfig gc;
  gc.candidate_pool = Grid2d(-1.0, 1.0, 40);
  gc.max_centers = 120;
  PIConfig pc;
  pc.test_points = SampleBox(toy.problem.domain(), 100, 2, true);
  pc.reference = [&](const Eigen::VectorXd& x) {
    return toy.problem.ExactValue(x);
  };
  pc.verification_mode = QuadraticBounds{0.25, 2.0};
  const PIResult r = RunRkhsPi(toy.problem, Kernel::Gaussian(std::sqrt(1.7)),
                               toy.initial_policy, gc, pc);
  ASSERT_FALSE(r.history.abort_reason);
  EXPECT_EQ(r.history.greedy_trace.size(), 120u);
  const auto& last = r.history.iterations.back();
  ASSERT_TRUE(last.error_pi);
  EXPECT_LT(*last.error_pi, 1e-3);
  EXPECT_TRUE(last.verification.feasible);
}

TEST(PolicyIterationTest, SineSumPolicyHasSpuriousEquilibrium) {
  const Benchmark toy = ToyProblem();
  const Feedback u = ToySineSumPolicy();
  const auto closed = [&](double a) {
    const Eigen::Vector2d x(a, a);
    return (toy.problem.f(x) + toy.problem.g(x) * u(x))(1);
  };
  double lo = -0.5, hi = -0.2;
  ASSERT_LT(closed(lo) * closed(hi), 0.0);
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (closed(lo) * closed(mid) <= 0.0 ? hi : lo) = mid;
  }
  const Eigen::Vector2d xe(lo, lo);
  EXPECT_NEAR(lo, -0.3478, 1e-3);
  EXPECT_GT(toy.problem.h(xe) + toy.problem.ControlCost(u(xe)), 1.0);
}

TEST(PolicyIterationTest, FgRankDiagnostic) {
  const Benchmark toy = ToyProblem();
  EXPECT_EQ(FgRank(toy.problem, Eigen::Vector2d(0.5, 0.3)), 2);
  // g(x) = 0 on the x1 = 0 axis.
  EXPECT_EQ(FgRank(toy.problem, Eigen::Vector2d(0.0, 0.3)), 1);
}

}  // namespace
}  // namespace rkhspi
