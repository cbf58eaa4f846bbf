#pragma once

#include <vector>

#include "mlfe/measures.hpp"
#include "mlfe/potentials.hpp"

namespace mlfe {

struct CayleyOptions {
  double tol = 1e-10;  // L1 change between iterates
  int max_iter = 500;
  double damping = 0.5;
  bool assemble_joint = true;

  void validate() const;  // throws ConfigError
};

/// Root marginal nu0 of a stationary law together with its edge marginal and
/// the assembled joint nu(x) = nu0(x0) prod_i nubar(x_i | x0).
struct CayleySolution {
  RootDensity nu0;
  double z_nu0 = 0.0;
  EdgeDensity edge;
  JointDensity joint;  // empty when assemble_joint is false
  double residual_l1 = 0.0;
  int iterations = 0;
};

/// Damped Picard iteration for
///   nu0^{1/kappa}(x) = Z^{-1} e^{-U(x)/kappa} int e^{-W(x-y) - U(y)/kappa} nu0(y)^{(kappa-1)/kappa} dy.
/// The right-hand side is evaluated in log space. Throws MaxIterExceeded or
/// NonPositiveIterate.
CayleySolution solve_fixed_point(const PotentialPair& pair, const RootDensity& init,
                                 const CayleyOptions& opts = {});

/// Uniform density on the axis.
RootDensity uniform_root(const Axis& axis);
/// N(mean, variance) restricted to the axis and normalized by the quadrature.
RootDensity gaussian_root(const Axis& axis, double mean, double variance);

/// nubar(x,y) = Z^{-1} exp(-(U(x)+U(y))/kappa - W(x-y)) [nu0(x) nu0(y)]^{(kappa-1)/kappa},
/// normalized by the quadrature. Also returns Z through `z_out` when given.
EdgeDensity assemble_edge(const PotentialPair& pair, const RootDensity& nu0, double* z_out = nullptr);
/// nu0(x0) prod_i nubar(x0, x_i) / nu0(x0), normalized by the quadrature.
JointDensity assemble_joint(const RootDensity& nu0, const EdgeDensity& edge, int kappa);

struct StationarityReport {
  double gradient_identity = 0.0;  // L-inf over nu0 > 1e-8
  double i_kappa = 0.0;            // modified Fisher information of the joint
  double conditional_drift = 0.0;  // L-inf of gamma + d_x log nubar over nubar > 1e-8
  std::size_t bulk_nodes = 0;
};

/// (a) d log nu0(x) + U'(x) + kappa E[W'(Y0 - Y1) | Y0 = x],
/// (b) I_kappa of the joint, (c) gamma(x, y) + d_x log nubar(x, y).
/// Needs a solution with an assembled joint.
StationarityReport stationarity_residuals(const PotentialPair& pair, const CayleySolution& sol);

/// F = -(U + log nu0) / kappa on the nodes.
std::vector<double> to_lacker_zhang(const PotentialPair& pair, const CayleySolution& sol);

/// nu0 = e^{-U - kappa F} / Z_F with edge and joint reassembled.
CayleySolution from_lacker_zhang(const PotentialPair& pair, const Axis& axis,
                                 const std::vector<double>& f, bool assemble = true);

/// Spread max_x C(x) - min_x C(x) of
///   C(x) = F(x) + log int exp(-U(y) - W(x-y) - (kappa-1) F(y)) dy,
/// which is constant for a solution.
double lacker_zhang_residual(const PotentialPair& pair, const Axis& axis,
                             const std::vector<double>& f);

/// Variance of the Gaussian fixed point of the quadratic family, from the
/// induced scalar map on the variance.
double gaussian_fixed_point_variance(double alpha, double beta, int kappa);

}  // namespace mlfe
