#pragma once

#include <string>
#include <vector>

#include "mlfe/measures.hpp"
#include "mlfe/potentials.hpp"

namespace mlfe {

/// Edge factor K(x_i, x_j) = exp(-Q(x_i, x_j) / 2) on the axis nodes, with
/// the trapezoid weights used by every contraction.
struct TransferOperator {
  Axis axis;
  std::vector<double> kernel;  // row-major points x points, symmetric
  std::vector<double> weights;

  static TransferOperator build(const PotentialPair& pair, const Axis& axis);
  /// Same operator with every kernel entry multiplied by c.
  TransferOperator scaled(double c) const;

  int points() const { return axis.points; }
  double at(int i, int j) const { return kernel[static_cast<std::size_t>(i) * axis.points + j]; }
};

/// log Z^n for the chain on sites -n..n with 2n edge factors, contracted one
/// edge at a time with renormalization into a log accumulator.
double log_partition(const TransferOperator& op, int n);
double log_partition(const PotentialPair& pair, const Axis& axis, int n);

/// -log of the largest eigenvalue of diag(sqrt w) K diag(sqrt w), the limit
/// of -log Z^n / (2n+1). Power iteration to relative tolerance 1e-12.
double h_star_spectral(const TransferOperator& op);
double h_star_spectral(const PotentialPair& pair, const Axis& axis);

/// Relative entropy of the lift of nu against the Gibbs chain on 2n+1 sites:
///   log Z^n + (2n-1) int nu log nu - (2n-2) int nubar log nubar + 2n int g dnu.
/// kappa = 2 only; the lift and the chain share the density's axis.
double lift_entropy(const PotentialPair& pair, const JointDensity& density, int n);

/// The same relative entropy summed directly over the (2n+1)-fold grid.
/// Intended for coarse axes; throws ConfigError beyond 24 points or n > 3.
double lift_entropy_brute_force(const PotentialPair& pair, const JointDensity& density, int n);

/// Builds the lift on the (2n+1)-fold coarse grid term by term and returns
/// max over f in {1, x_v, x_v^2, x_{v-1} x_{v+1}} of |int f dpsi - int f dnu|.
/// The density is read as a chain triple: (left, center, right) maps to
/// (leaf 1, root, leaf 2). Requires n in {2, 3} and |v| <= n - 1.
double lift_marginal_check(const JointDensity& density, int n, int v = 0);

struct FisherVertexReport {
  double theta1_sq = 0.0;
  double theta2_sq = 0.0;
  double cross = 0.0;  // E[Theta1 * Theta2]
  double contribution() const { return theta1_sq + theta2_sq; }
};

/// Interior-vertex Fisher contribution of the n = 2 lift at vertex 0,
/// split as Theta1 = b + d_root log nu and Theta2 = the two conditional
/// log-gradients through the outer triples. Coarse axes only (<= 32 points).
FisherVertexReport fisher_interior_vertex(const PotentialPair& pair, const JointDensity& density);

struct ChainReport {
  int n = 0;
  double log_z = 0.0;
  double per_site_log_z = 0.0;
  double h_star_spectral = 0.0;
  double lift_entropy = 0.0;
  double lift_entropy_per_site = 0.0;
};

std::vector<ChainReport> chain_report(const PotentialPair& pair, const JointDensity& density,
                                      const std::vector<int>& n_list);

inline constexpr const char* kChainCsvHeader =
    "n,log_z,per_site_log_z,lift_entropy,lift_entropy_per_site";
std::string to_csv(const std::vector<ChainReport>& rows);

/// (2n+1)/2 log(2 pi) - 1/2 log det A_n for the quadratic family, where A_n
/// is the tridiagonal Hessian of the chain energy; determinant by the
/// three-term recurrence.
double gaussian_log_partition(double alpha, double beta, int n);

}  // namespace mlfe
