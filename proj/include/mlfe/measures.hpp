#pragma once

#include <span>
#include <vector>

#include "mlfe/grid.hpp"
#include "mlfe/potentials.hpp"

namespace mlfe {

/// Density of (x0, x1, ..., x_kappa) on the (1+kappa)-fold tensor grid.
/// Axis 0 is the root, axes 1..kappa the leaves.
class JointDensity {
 public:
  JointDensity() = default;
  JointDensity(Axis axis, int kappa, std::vector<double> values);
  static JointDensity zeros(Axis axis, int kappa);

  const TensorGrid& grid() const { return grid_; }
  const Axis& axis() const { return grid_.axis(); }
  int kappa() const { return kappa_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double mass() const { return integrate(grid_, values_); }

 private:
  TensorGrid grid_;
  int kappa_ = 2;
  std::vector<double> values_;
};

/// Density of (x0, x1); values[i*N + j] is the value at (x_i, x_j).
class EdgeDensity {
 public:
  EdgeDensity() = default;
  EdgeDensity(Axis axis, std::vector<double> values);

  const TensorGrid& grid() const { return grid_; }
  const Axis& axis() const { return grid_.axis(); }
  std::span<const double> values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double at(int i, int j) const { return values_[static_cast<std::size_t>(i) * grid_.points() + j]; }

  double mass() const { return integrate(grid_, values_); }

 private:
  TensorGrid grid_;
  std::vector<double> values_;
};

struct RootDensity {
  Axis axis;
  std::vector<double> values;

  double mass() const;
};

/// Conditional root drift gamma(x, y) = E[b(X) | X0 = x, X1 = y] on the node
/// square; values[i*N + j] = gamma(x_i, x_j). The first argument is the root.
struct GammaField {
  Axis axis;
  std::vector<double> values;
  std::size_t fallback_cells = 0;

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * axis.points + j]; }
};

inline constexpr double kGammaFloor = 1e-14;
inline constexpr double kLogFloor = 1e-300;

/// Averages over all leaf permutations and renormalizes to unit mass.
JointDensity symmetrize(const JointDensity& density);
/// In-place variant used by the flow stepper.
void symmetrize_in_place(JointDensity& density);

EdgeDensity edge_marginal(const JointDensity& density);
RootDensity root_marginal(const JointDensity& density);
RootDensity root_marginal(const EdgeDensity& edge);

/// gamma(x,y) = U'(x) + W'(x-y) + (kappa-1) E[W'(x - X2) | x, y], collapsing
/// the leaf sum by exchangeability. Cells whose edge density is below `floor`
/// fall back to U'(x).
GammaField gamma_field(const PotentialPair& pair, const JointDensity& density,
                       double floor = kGammaFloor);

/// int v log v with 0 log 0 = 0.
double entropy(const TensorGrid& grid, std::span<const double> values);
inline double entropy(const JointDensity& d) { return entropy(d.grid(), d.values()); }
inline double entropy(const EdgeDensity& d) { return entropy(d.grid(), d.values()); }
double entropy(const RootDensity& d);

/// int |x|^2 over all coordinates.
double second_moment(const TensorGrid& grid, std::span<const double> values);
inline double second_moment(const JointDensity& d) { return second_moment(d.grid(), d.values()); }

/// max |v(x) - v(sigma x)| over leaf permutations sigma.
double leaf_exchange_defect(const JointDensity& density);
/// max |e(x,y) - e(y,x)|.
double edge_symmetry_defect(const EdgeDensity& edge);

struct AdmissibilityReport {
  double mass_defect = 0.0;
  double entropy = 0.0;
  double second_moment = 0.0;
  double leaf_exchange_defect = 0.0;
  double edge_symmetry_defect = 0.0;
  double min_value = 0.0;

  bool admissible(double mass_tol = 1e-10, double symmetry_tol = 1e-12) const;
};

AdmissibilityReport admissibility_check(const JointDensity& density);

/// prod_k N(mean, variance)(x_k), normalized by the grid quadrature.
JointDensity gaussian_product(const Axis& axis, int kappa, double mean, double variance);
/// (1/2) N(m, s2)^{x(1+kappa)} + (1/2) N(-m, s2)^{x(1+kappa)}, symmetrized.
JointDensity gaussian_mixture(const Axis& axis, int kappa, double m, double variance);

/// Centered Gaussian with Var = variance on every coordinate, correlation
/// root_leaf between the root and each leaf and leaf_leaf between leaves.
/// Leaves that stay correlated given the root make it far from a 1-MRF.
/// Throws ConfigError unless the covariance is positive definite.
JointDensity correlated_gaussian(const Axis& axis, int kappa, double variance, double root_leaf,
                                 double leaf_leaf);

/// (1/2) int |a - b| on the shared grid.
double total_variation(const TensorGrid& grid, std::span<const double> a,
                       std::span<const double> b);

}  // namespace mlfe
