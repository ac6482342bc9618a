#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace rkhspi {

/// Axis-aligned box [lower, upper].
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static Box Cube(Eigen::Index dim, double lo, double hi);
  Eigen::Index dim() const { return lower.size(); }
  bool Contains(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd Center() const { return 0.5 * (lower + upper); }
  Eigen::VectorXd HalfWidth() const { return 0.5 * (upper - lower); }
};

/**
 * Deterministic uniform samples in a box.
 *
 * Uses std::mt19937_64 (bit-exact across standard libraries) seeded with
 * `seed`; each coordinate is lower + (upper - lower) * u with
 * u = (draw >> 11) * 2^-53. Points with norm < 1e-9 are rejected and redrawn
 * when `exclude_origin` is set.
 */
std::vector<Eigen::VectorXd> SampleBox(const Box& box, std::size_t count,
                                       std::uint64_t seed,
                                       bool exclude_origin);

/// Tensor grid G x G of m equispaced nodes on [a, b], origin removed.
/// Ordered with the first coordinate varying slowest.
std::vector<Eigen::VectorXd> Grid2d(double a, double b, int m);

}  // namespace rkhspi
