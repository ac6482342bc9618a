#include "rkhspi/problems.h"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rkhspi/errors.h"

namespace rkhspi {

namespace {

constexpr double kHeatShape = 3000.0;
constexpr double kHeatBoxUpper = 10.0;
constexpr double kHeatControlWeight = 0.01;
constexpr int kHeatActuators = 4;
constexpr double kActuatorSupports[kHeatActuators][2] = {
    {0.1, 0.2}, {0.3, 0.4}, {0.6, 0.7}, {0.8, 0.9}};

double Bubble(double xi) { return xi * (1.0 - xi); }

Eigen::MatrixXd Mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

double SquaredNorm(const Eigen::VectorXd& x) { return x.squaredNorm(); }

Benchmark HeatBenchmark(const std::string& name, int n_nodes, bool nonlinear) {
  auto disc = std::make_shared<const HeatDiscretization>(
      KansaDiscretize(n_nodes));
  const Eigen::MatrixXd r =
      kHeatControlWeight * Eigen::MatrixXd::Identity(kHeatActuators,
                                                     kHeatActuators);
  LinearizedSystem lin(disc->A, disc->B,
                       Eigen::MatrixXd::Identity(n_nodes, n_nodes), r);
  const Eigen::MatrixXd p = SolveCare(lin).P;

  ControlProblem::Definition def;
  def.name = name;
  def.state_dim = n_nodes;
  def.control_dim = kHeatActuators;
  if (nonlinear) {
    def.drift = [disc](const Eigen::VectorXd& x) -> Eigen::VectorXd {
      const Eigen::ArrayXd field = (disc->K * x).array();
      const Eigen::VectorXd source =
          (field.square() - field.cube()).matrix();
      return disc->A * x + disc->K_llt.solve(source);
    };
  } else {
    def.drift = [disc](const Eigen::VectorXd& x) -> Eigen::VectorXd {
      return disc->A * x;
    };
  }
  def.control_matrix = [disc](const Eigen::VectorXd&) -> Eigen::MatrixXd {
    return disc->B;
  };
  def.state_cost = SquaredNorm;
  def.control_weight = r;
  def.domain = Box::Cube(n_nodes, 0.0, kHeatBoxUpper);
  if (!nonlinear) {
    def.exact_value = [p](const Eigen::VectorXd& x) { return x.dot(p * x); };
  }

  Benchmark out{ControlProblem(std::move(def)),
                [](const Eigen::VectorXd&) -> Eigen::VectorXd {
                  return Eigen::VectorXd::Zero(kHeatActuators);
                },
                lin, p, disc};
  return out;
}

}  // namespace

double HeatKernel(double xi, double xi2) {
  const double d = xi - xi2;
  return std::exp(-kHeatShape * d * d) * Bubble(xi) * Bubble(xi2);
}

double HeatKernelD2(double xi, double xi2) {
  const double c = kHeatShape;
  const double d = xi - xi2;
  const double e = std::exp(-c * d * d);
  const double e1 = 2.0 * c * d * e;
  const double e2 = (4.0 * c * c * d * d - 2.0 * c) * e;
  const double p = Bubble(xi2);
  const double p1 = 1.0 - 2.0 * xi2;
  const double p2 = -2.0;
  return Bubble(xi) * (e2 * p + 2.0 * e1 * p1 + e * p2);
}

HeatDiscretization KansaDiscretize(int n_nodes) {
  if (n_nodes < 2) {
    throw std::invalid_argument("Kansa discretization needs n_nodes >= 2");
  }
  HeatDiscretization d;
  d.n_nodes = n_nodes;
  d.nodes.resize(n_nodes);
  for (int j = 0; j < n_nodes; ++j) {
    d.nodes(j) = static_cast<double>(j + 1) / (n_nodes + 1);
  }
  d.K.resize(n_nodes, n_nodes);
  d.K_lap.resize(n_nodes, n_nodes);
  for (int l = 0; l < n_nodes; ++l) {
    for (int j = 0; j < n_nodes; ++j) {
      d.K(l, j) = HeatKernel(d.nodes(l), d.nodes(j));
      d.K_lap(l, j) = HeatKernelD2(d.nodes(j), d.nodes(l));
    }
  }
  d.indicators = Eigen::MatrixXd::Zero(n_nodes, kHeatActuators);
  for (int i = 0; i < kHeatActuators; ++i) {
    for (int j = 0; j < n_nodes; ++j) {
      const double xi = d.nodes(j);
      if (xi >= kActuatorSupports[i][0] && xi <= kActuatorSupports[i][1]) {
        d.indicators(j, i) = 1.0;
      }
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(d.K,
                                                     Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  d.k_condition = lmin > 0.0 ? lmax / lmin
                             : std::numeric_limits<double>::infinity();
  d.K_llt.compute(d.K);
  if (d.K_llt.info() != Eigen::Success || !(lmin > 0.0) ||
      d.k_condition > 1e14) {
    std::ostringstream msg;
    msg << "heat collocation matrix is numerically singular for n_nodes = "
        << n_nodes << " (condition number " << d.k_condition << ")";
    throw FactorizationError(msg.str());
  }
  d.A = d.K_llt.solve(d.K_lap);
  d.B = d.K_llt.solve(d.indicators);
  return d;
}

Benchmark ToyProblem() {
  ControlProblem::Definition def;
  def.name = "toy";
  def.state_dim = 2;
  def.control_dim = 1;
  def.drift = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const double s = std::sin(x(0));
    return Eigen::Vector2d(-x(0) + x(1),
                           -0.5 * (x(0) + x(1)) + 0.5 * x(1) * s * s);
  };
  def.control_matrix = [](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    return Eigen::Vector2d(0.0, std::sin(x(0)));
  };
  def.state_cost = SquaredNorm;
  def.control_weight = Eigen::MatrixXd::Identity(1, 1);
  def.domain = Box::Cube(2, -1.0, 1.0);
  def.exact_value = [](const Eigen::VectorXd& x) {
    return 0.5 * x(0) * x(0) + x(1) * x(1);
  };

  LinearizedSystem lin(Mat2(-1.0, 1.0, -0.5, -0.5), Eigen::MatrixXd::Zero(2, 1),
                       Eigen::MatrixXd::Identity(2, 2),
                       Eigen::MatrixXd::Identity(1, 1));
  Eigen::MatrixXd p = SolveCare(lin).P;
  return Benchmark{ControlProblem(std::move(def)),
                   [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
                     return Eigen::VectorXd::Constant(
                         1, -1.5 * std::sin(x(0)) * (x(0) + x(1)));
                   },
                   std::move(lin), std::move(p), nullptr};
}

Feedback ToySineSumPolicy() {
  return [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return Eigen::VectorXd::Constant(1, -1.5 * std::sin(x(0) + x(1)));
  };
}

Benchmark VdpProblem() {
  ControlProblem::Definition def;
  def.name = "vdp";
  def.state_dim = 2;
  def.control_dim = 1;
  def.drift = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return Eigen::Vector2d(x(1), -x(0) + x(1) * (1.0 - x(0) * x(0)));
  };
  def.control_matrix = [](const Eigen::VectorXd&) -> Eigen::MatrixXd {
    return Eigen::Vector2d(0.0, 1.0);
  };
  def.state_cost = SquaredNorm;
  def.control_weight = Eigen::MatrixXd::Constant(1, 1, 0.1);
  def.domain = Box::Cube(2, -1.0, 1.0);

  LinearizedSystem lin(Mat2(0.0, 1.0, -1.0, 1.0), Eigen::Vector2d(0.0, 1.0),
                       Eigen::MatrixXd::Identity(2, 2),
                       Eigen::MatrixXd::Constant(1, 1, 0.1));
  Eigen::MatrixXd p = SolveCare(lin).P;
  Feedback u0 = LqrFeedback(lin, p);
  return Benchmark{ControlProblem(std::move(def)), std::move(u0),
                   std::move(lin), std::move(p), nullptr};
}

Benchmark HeatLinear(int n_nodes) {
  return HeatBenchmark("heat-linear", n_nodes, false);
}

Benchmark HeatNonlinear(int n_nodes) {
  return HeatBenchmark("heat-nonlinear", n_nodes, true);
}

const std::vector<std::string>& BenchmarkNames() {
  static const std::vector<std::string> names = {"toy", "vdp", "heat-linear",
                                                 "heat-nonlinear"};
  return names;
}

Benchmark MakeBenchmark(const std::string& name, int n_nodes) {
  if (name == "toy") return ToyProblem();
  if (name == "vdp") return VdpProblem();
  if (name == "heat-linear") return HeatLinear(n_nodes);
  if (name == "heat-nonlinear") return HeatNonlinear(n_nodes);
  std::ostringstream msg;
  msg << "unknown problem '" << name << "'; valid names:";
  for (const auto& n : BenchmarkNames()) msg << ' ' << n;
  throw ConfigError(msg.str());
}

}  // namespace rkhspi
