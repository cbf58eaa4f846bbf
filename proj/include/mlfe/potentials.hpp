#pragma once

#include <span>
#include <string>

#include <json.hpp>

namespace mlfe {

enum class PotentialFamily { quadratic, quartic };

/// Confinement U and pair interaction W in one state dimension.
///
/// quadratic: U(x) = ((alpha+beta)/2) x^2,  W(x) = -(beta/4) x^2
/// quartic:   U(x) = a4 x^4 - a2 x^2,        W(x) = -(beta/4) x^2
///
/// W is even with W(0) = 0 in both families.
class PotentialPair {
 public:
  static PotentialPair quadratic(double alpha, double beta, int kappa = 2);
  static PotentialPair quartic(double a4, double a2, double beta, int kappa = 2);

  /// Parses {"family":"quadratic","alpha":..,"beta":..} or
  /// {"family":"quartic","a4":..,"a2":..,"beta":..}; throws ConfigError.
  static PotentialPair from_json(const nlohmann::json& j, int kappa);
  nlohmann::json to_json() const;

  PotentialFamily family() const { return family_; }
  int kappa() const { return kappa_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double a4() const { return a4_; }
  double a2() const { return a2_; }

  double U(double x) const;
  double dU(double x) const;
  double W(double x) const;
  double dW(double x) const;

  /// Root drift: U'(x0) + sum_v W'(x0 - x_v). Expects 1+kappa coordinates.
  double b(std::span<const double> x) const;
  /// U(x0) + (1/2) sum_v W(x0 - x_v).
  double g(std::span<const double> x) const;
  /// Chain edge energy U(x) + U(y) + 2W(x-y); only defined for kappa = 2.
  double Q(double x, double y) const;

 private:
  PotentialFamily family_ = PotentialFamily::quadratic;
  int kappa_ = 2;
  double alpha_ = 0.0, beta_ = 0.0, a4_ = 0.0, a2_ = 0.0;
  double u2_ = 0.0;  // coefficient of x^2 in U
};

/// Lower profile q with U(x)+U(y)+kappa W(x-y) >= q(x)+q(y), and R_q = int e^{-q}.
struct CoercivityProfile {
  double q_coefficient = 0.0;  // q(x) = q_coefficient * x^2
  double r_q = 0.0;

  double q(double x) const { return q_coefficient * x * x; }
  double lower_bound() const;  // -log R_q
};

/// Quadratic family only; throws NotCoercive unless alpha > |beta| (kappa = 2).
CoercivityProfile coercivity_profile(const PotentialPair& pair);

struct LsiConstants {
  double c_lip0 = 0.0;
  double c_lip1 = 0.0;
  double delta0 = 0.0;
  double delta1 = 0.0;
  bool delta0_below_one = false;
  bool delta1_below_one = false;
};

/// Lipschitz and contraction constants of the quadratic family:
/// c_lip0 = 2/alpha, c_lip1 = 1/alpha, |W''| = |beta|/2.
LsiConstants lsi_constants_quadratic(double alpha, double beta);

}  // namespace mlfe
