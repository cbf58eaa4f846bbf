#include "mlfe/potentials.hpp"

#include <cmath>
#include <set>

#include "mlfe/errors.hpp"
#include "mlfe/grid.hpp"

namespace mlfe {

PotentialPair PotentialPair::quadratic(double alpha, double beta, int kappa) {
  PotentialPair p;
  p.family_ = PotentialFamily::quadratic;
  p.kappa_ = kappa;
  p.alpha_ = alpha;
  p.beta_ = beta;
  p.u2_ = 0.5 * (alpha + beta);
  return p;
}

PotentialPair PotentialPair::quartic(double a4, double a2, double beta, int kappa) {
  PotentialPair p;
  p.family_ = PotentialFamily::quartic;
  p.kappa_ = kappa;
  p.a4_ = a4;
  p.a2_ = a2;
  p.beta_ = beta;
  p.u2_ = -a2;
  return p;
}

namespace {

double require_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ConfigError(std::string("potentials: missing numeric field '") + key + "'");
  }
  const double v = j.at(key).get<double>();
  if (!std::isfinite(v)) throw ConfigError(std::string("potentials: non-finite '") + key + "'");
  return v;
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("potentials: unknown key '" + key + "'");
  }
}

}  // namespace

PotentialPair PotentialPair::from_json(const nlohmann::json& j, int kappa) {
  if (!j.is_object()) throw ConfigError("potentials must be an object");
  if (kappa != 2 && kappa != 3) throw ConfigError("kappa must be 2 or 3");
  if (!j.contains("family") || !j.at("family").is_string()) {
    throw ConfigError("potentials: missing 'family'");
  }
  const auto family = j.at("family").get<std::string>();
  if (family == "quadratic") {
    reject_unknown(j, {"family", "alpha", "beta"});
    const double alpha = require_number(j, "alpha");
    const double beta = require_number(j, "beta");
    if (!(alpha > std::abs(beta))) throw ConfigError("quadratic potentials need alpha > |beta|");
    return quadratic(alpha, beta, kappa);
  }
  if (family == "quartic") {
    reject_unknown(j, {"family", "a4", "a2", "beta"});
    const double a4 = require_number(j, "a4");
    const double a2 = require_number(j, "a2");
    const double beta = require_number(j, "beta");
    if (!(a4 > 0.0)) throw ConfigError("quartic potentials need a4 > 0");
    return quartic(a4, a2, beta, kappa);
  }
  throw ConfigError("potentials: unknown family '" + family + "'");
}

nlohmann::json PotentialPair::to_json() const {
  if (family_ == PotentialFamily::quadratic) {
    return {{"family", "quadratic"}, {"alpha", alpha_}, {"beta", beta_}};
  }
  return {{"family", "quartic"}, {"a4", a4_}, {"a2", a2_}, {"beta", beta_}};
}

double PotentialPair::U(double x) const {
  const double x2 = x * x;
  return family_ == PotentialFamily::quartic ? a4_ * x2 * x2 + u2_ * x2 : u2_ * x2;
}

double PotentialPair::dU(double x) const {
  return family_ == PotentialFamily::quartic ? 4.0 * a4_ * x * x * x + 2.0 * u2_ * x
                                             : 2.0 * u2_ * x;
}

double PotentialPair::W(double x) const { return -0.25 * beta_ * x * x; }

double PotentialPair::dW(double x) const { return -0.5 * beta_ * x; }

double PotentialPair::b(std::span<const double> x) const {
  double s = dU(x[0]);
  for (int v = 1; v <= kappa_; ++v) s += dW(x[0] - x[v]);
  return s;
}

double PotentialPair::g(std::span<const double> x) const {
  double s = 0.0;
  for (int v = 1; v <= kappa_; ++v) s += W(x[0] - x[v]);
  return U(x[0]) + 0.5 * s;
}

double PotentialPair::Q(double x, double y) const {
  if (kappa_ != 2) throw ConfigError("the chain energy Q is only defined for kappa = 2");
  return U(x) + U(y) + 2.0 * W(x - y);
}

double CoercivityProfile::lower_bound() const { return -std::log(r_q); }

CoercivityProfile coercivity_profile(const PotentialPair& pair) {
  if (pair.family() != PotentialFamily::quadratic) {
    throw NotCoercive("coercivity profile is only available for the quadratic family");
  }
  const double alpha = pair.alpha();
  const double beta = pair.beta();
  // kappa W(x-y) = -(kappa beta/4)(x-y)^2 >= -(kappa max(beta,0)/2)(x^2+y^2).
  const double c = 0.5 * (alpha + beta - pair.kappa() * std::max(beta, 0.0));
  if (!(c > 0.0) || !(alpha > std::abs(beta))) {
    throw NotCoercive("quadratic pair is not coercive (need alpha > |beta|)");
  }
  CoercivityProfile prof;
  prof.q_coefficient = c;
  // Trapezoid on a window where e^{-q} has decayed below e^{-60}.
  const double half = std::sqrt(60.0 / c);
  const Axis axis = Axis::symmetric(half, 4001);
  const auto w = trapezoid_weights(axis);
  CompensatedSum acc;
  for (int i = 0; i < axis.points; ++i) acc.add(w[i] * std::exp(-prof.q(axis.node(i))));
  prof.r_q = acc.value();
  return prof;
}

LsiConstants lsi_constants_quadratic(double alpha, double beta) {
  if (!(alpha > 0.0)) throw ConfigError("lsi constants need alpha > 0");
  LsiConstants c;
  c.c_lip0 = 2.0 / alpha;
  c.c_lip1 = 1.0 / alpha;
  const double w2 = 0.5 * std::abs(beta);
  c.delta0 = c.c_lip0 * w2;
  c.delta1 = 2.0 * c.c_lip1 * w2;
  c.delta0_below_one = c.delta0 < 1.0;
  c.delta1_below_one = c.delta1 < 1.0;
  return c;
}

}  // namespace mlfe
