#include <doctest.h>

#include <cmath>

#include "mlfe/cayley.hpp"
#include "mlfe/errors.hpp"
#include "mlfe/functionals.hpp"

using namespace mlfe;

namespace {

const PotentialPair kFig = PotentialPair::quadratic(2.0, 1.5);
const PotentialPair kFree = PotentialPair::quadratic(1.0, 0.0);

double root_variance(const RootDensity& r) {
  const auto w = trapezoid_weights(r.axis);
  double s = 0.0;
  for (int i = 0; i < r.axis.points; ++i) s += w[i] * r.values[i] * r.axis.node(i) * r.axis.node(i);
  return s;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

RootDensity gibbs_root(const PotentialPair& pair, const Axis& a) {
  RootDensity r{a, std::vector<double>(a.points)};
  for (int i = 0; i < a.points; ++i) r.values[i] = std::exp(-pair.U(a.node(i)));
  const double m = r.mass();
  for (double& v : r.values) v /= m;
  return r;
}

}  // namespace

TEST_CASE("options") {
  CayleyOptions o;
  CHECK_NOTHROW(o.validate());
  o.damping = 0.0;
  CHECK_THROWS_AS(o.validate(), ConfigError);
  o = CayleyOptions{};
  o.max_iter = 0;
  CHECK_THROWS_AS(o.validate(), ConfigError);
}

TEST_CASE("no interaction gives the Gibbs root") {
  const Axis a = Axis::symmetric(6.0, 129);
  CayleyOptions o;
  o.damping = 1.0;
  const auto sol = solve_fixed_point(kFree, uniform_root(a), o);
  CHECK(sol.iterations <= 3);
  CHECK(max_abs_diff(sol.nu0.values, gibbs_root(kFree, a).values) < 1e-12);

  // With the default damping the error halves per sweep.
  const auto damped = solve_fixed_point(kFree, uniform_root(a));
  CHECK(max_abs_diff(damped.nu0.values, sol.nu0.values) < 1e-9);

  const auto rep = stationarity_residuals(kFree, sol);
  CHECK(rep.gradient_identity < 1e-4);
}

TEST_CASE("quadratic family matches the Gaussian oracle") {
  CHECK(gaussian_fixed_point_variance(2.0, 1.5, 2) == doctest::Approx(0.7559289460184534).epsilon(1e-12));
  CHECK(gaussian_fixed_point_variance(1.0, 0.0, 2) == doctest::Approx(1.0).epsilon(1e-12));
  const Axis a = Axis::symmetric(8.0, 129);
  for (double alpha : {1.5, 2.0, 3.0}) {
    for (double beta : {-1.0, 0.5, 1.5}) {
      if (!(alpha > std::abs(beta))) continue;
      const auto pair = PotentialPair::quadratic(alpha, beta);
      CayleyOptions o;
      o.assemble_joint = false;
      o.max_iter = 2000;
      const auto sol = solve_fixed_point(pair, uniform_root(a), o);
      const double oracle = gaussian_fixed_point_variance(alpha, beta, 2);
      CAPTURE(alpha);
      CAPTURE(beta);
      CHECK(std::abs(root_variance(sol.nu0) / oracle - 1.0) < 1e-3);
    }
  }
}

TEST_CASE("stationarity residuals") {
  const Axis a = Axis::symmetric(6.0, 257);
  CayleyOptions o;
  const auto sol = solve_fixed_point(kFig, uniform_root(a), o);
  CHECK(sol.iterations < 200);
  CHECK(sol.residual_l1 < o.tol);
  CHECK(sol.nu0.mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(edge_symmetry_defect(sol.edge) < 1e-12);
  CHECK(admissibility_check(sol.joint).admissible());
  const auto rep = stationarity_residuals(kFig, sol);
  CHECK(rep.gradient_identity < 1e-3);
  CHECK(rep.i_kappa < 1e-3);
  CHECK(rep.conditional_drift < 1e-3);
  CHECK(rep.bulk_nodes > 0);

  // Negative control.
  CayleySolution bad = sol;
  for (int i = 0; i < a.points; ++i) bad.nu0.values[i] *= 1.0 + 0.01 * std::sin(a.node(i));
  const double m = bad.nu0.mass();
  for (double& v : bad.nu0.values) v /= m;
  bad.edge = assemble_edge(kFig, bad.nu0);
  bad.joint = assemble_joint(root_marginal(bad.edge), bad.edge, 2);
  const auto worse = stationarity_residuals(kFig, bad);
  CHECK(worse.gradient_identity > 10 * rep.gradient_identity);
  CHECK(worse.i_kappa > 10 * rep.i_kappa);
  CHECK(worse.conditional_drift > 10 * rep.conditional_drift);
}

TEST_CASE("gamma of the fixed point is the conditional log-gradient") {
  const Axis a = Axis::symmetric(6.0, 64);
  const auto sol = solve_fixed_point(kFig, uniform_root(a));
  const auto g = gamma_field(kFig, sol.joint);
  const auto lg = log_gradient(sol.edge.grid(), sol.edge.values());
  const auto r = root_marginal(sol.edge);
  double worst = 0.0;
  for (int i = 0; i < a.points; ++i) {
    for (int j = 0; j < a.points; ++j) {
      if (sol.edge.at(i, j) < 1e-8 || r.values[j] < 1e-8) continue;
      // d_x log nubar(x | y) = d_x log nubar(x, y)
      worst = std::max(worst, std::abs(g.at(i, j) + lg[0][i * a.points + j]));
    }
  }
  CHECK(worst < 1e-2);
}

TEST_CASE("residuals shrink under refinement") {
  // Quadratic family: log nu is exactly quadratic on the nodes, so the
  // central differences are exact and only the gradient identity sees h.
  double prev = 0.0;
  for (int points : {63, 127}) {
    const auto sol = solve_fixed_point(kFig, uniform_root(Axis::symmetric(6.0, points)));
    CHECK(i_kappa(kFig, sol.joint) < 1e-12);
    const double g = stationarity_residuals(kFig, sol).gradient_identity;
    if (prev > 0.0) CHECK(prev / g > 3.0);
    prev = g;
  }
  // Quartic family: I_kappa is a squared h^2 defect.
  const auto pair = PotentialPair::quartic(0.25, 1.0, 1.0);
  CayleyOptions o;
  o.max_iter = 2000;
  auto ik = [&](int points) {
    return i_kappa(pair, solve_fixed_point(pair, uniform_root(Axis::symmetric(5.0, points)), o).joint);
  };
  CHECK(ik(32) / ik(63) > 3.0);
}

TEST_CASE("Lacker-Zhang representation") {
  const Axis a = Axis::symmetric(6.0, 129);
  const auto sol = solve_fixed_point(kFig, uniform_root(a));
  const auto f = to_lacker_zhang(kFig, sol);
  const auto back = from_lacker_zhang(kFig, a, f);
  CHECK(max_abs_diff(back.nu0.values, sol.nu0.values) < 1e-12);
  CHECK(lacker_zhang_residual(kFig, a, f) < 1e-6);

  CayleyOptions o;
  o.damping = 1.0;
  const auto free = solve_fixed_point(kFree, uniform_root(a), o);
  const auto f0 = to_lacker_zhang(kFree, free);
  double z_u = 0.0;
  const auto w = trapezoid_weights(a);
  for (int i = 0; i < a.points; ++i) z_u += w[i] * std::exp(-kFree.U(a.node(i)));
  for (double v : f0) CHECK(v == doctest::Approx(std::log(z_u) / 2.0).epsilon(1e-10));

  const auto flat = from_lacker_zhang(kFig, a, std::vector<double>(a.points, 0.0), false);
  CHECK(max_abs_diff(flat.nu0.values, gibbs_root(kFig, a).values) < 1e-14);
  CHECK_THROWS_AS(from_lacker_zhang(kFig, a, std::vector<double>(3, 0.0)), ConfigError);
}

TEST_CASE("quartic double well") {
  const Axis a = Axis::symmetric(5.0, 129);
  CayleyOptions o;
  o.max_iter = 2000;
  const auto pair = PotentialPair::quartic(0.25, 1.0, 1.0);
  const auto sol = solve_fixed_point(pair, uniform_root(a), o);
  CHECK(sol.residual_l1 < o.tol);
  for (int i = 0; i < a.points; ++i) CHECK(std::abs(sol.nu0.values[i] - sol.nu0.values[a.points - 1 - i]) < 1e-8);
  CHECK(std::isfinite(stationarity_residuals(pair, sol).gradient_identity));
}

TEST_CASE("solver errors") {
  const Axis a = Axis::symmetric(6.0, 33);
  CayleyOptions o;
  o.max_iter = 2;
  CHECK_THROWS_AS(solve_fixed_point(kFig, uniform_root(a), o), MaxIterExceeded);
  auto zero = uniform_root(a);
  zero.values[3] = 0.0;
  CHECK_THROWS_AS(solve_fixed_point(kFig, zero), ConfigError);
}
