#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlfe/measures.hpp"
#include "mlfe/potentials.hpp"

namespace mlfe {

/// One row of the flow ledger.
struct FunctionalReport {
  double t = 0.0;
  double h_kappa = 0.0;
  double i_kappa = 0.0;
  std::optional<double> h_hat2;  // kappa = 2 only
  double lower_bound = 0.0;      // -log R_q, NaN when the pair has no coercivity profile
  double mass = 1.0;
  double second_moment = 0.0;
};

/// Sparse free energy:
///   int [log v(x) - (kappa/2) log vbar(x0,x1) + g(x)] v(dx)
/// Integrands are restricted to cells with v > kLogFloor.
double h_kappa(const PotentialPair& pair, const JointDensity& density);

/// Modified Fisher information:
///   int [ |b + d0 log v|^2 + kappa |d1 log(v / vbar(x0,x1))|^2 ] v(dx)
/// with log-gradients from second-order central differences.
double i_kappa(const PotentialPair& pair, const JointDensity& density);

/// int (U(x0) + W(x0-x1) + log e(x0,x1) - log e0(x0)) e(dx0,dx1), kappa = 2.
/// Rejects edges whose swap asymmetry exceeds symmetry_tol * max(e).
double h_hat2(const PotentialPair& pair, const EdgeDensity& edge, double symmetry_tol = 1e-9);

/// (e + e^T)/2; the flow evaluates h_hat2 on this projection.
EdgeDensity swap_symmetrized(const EdgeDensity& edge);

/// Evaluates every functional of the ledger at time t.
FunctionalReport evaluate_functionals(const PotentialPair& pair, const JointDensity& density,
                                      double t);

/// max over pairs s < t of |H(t) - H(s) + int_s^t I| / max(1, int_s^t I), with
/// the time integral by the trapezoid rule over the recorded points.
double dissipation_residual(std::span<const FunctionalReport> series);

/// Rows whose time lies in [t0, t1].
std::vector<FunctionalReport> time_window(std::span<const FunctionalReport> series, double t0,
                                          double t1);

inline constexpr const char* kFlowCsvHeader = "t,h_kappa,i_kappa,h_hat2,mass,second_moment";
std::string to_csv(std::span<const FunctionalReport> series);

/// printf("%.17g") with the C locale.
std::string format_double(double x);

}  // namespace mlfe
