#include "rkhspi/sampling.h"

#include <random>
#include <stdexcept>

namespace rkhspi {

Box Box::Cube(Eigen::Index dim, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("box requires lo < hi");
  return Box{Eigen::VectorXd::Constant(dim, lo),
             Eigen::VectorXd::Constant(dim, hi)};
}

bool Box::Contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim()) return false;
  return (x.array() >= lower.array()).all() &&
         (x.array() <= upper.array()).all();
}

std::vector<Eigen::VectorXd> SampleBox(const Box& box, std::size_t count,
                                       std::uint64_t seed,
                                       bool exclude_origin) {
  std::mt19937_64 gen(seed);
  const Eigen::VectorXd width = box.upper - box.lower;
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  while (out.size() < count) {
    Eigen::VectorXd x(box.dim());
    for (Eigen::Index i = 0; i < box.dim(); ++i) {
      const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
      x(i) = box.lower(i) + width(i) * u;
    }
    if (exclude_origin && x.norm() < 1e-9) continue;
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<Eigen::VectorXd> Grid2d(double a, double b, int m) {
  if (m < 2) throw std::invalid_argument("grid needs at least 2 nodes");
  if (!(a < b)) throw std::invalid_argument("grid requires a < b");
  std::vector<double> nodes(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    nodes[static_cast<std::size_t>(i)] =
        a + (b - a) * static_cast<double>(i) / static_cast<double>(m - 1);
  }
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(m) * static_cast<std::size_t>(m));
  for (double x1 : nodes) {
    for (double x2 : nodes) {
      if (x1 == 0.0 && x2 == 0.0) continue;
      out.push_back(Eigen::Vector2d(x1, x2));
    }
  }
  return out;
}

}  // namespace rkhspi
