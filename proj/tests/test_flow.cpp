#include <doctest.h>

#include <cmath>

#include "mlfe/errors.hpp"
#include "mlfe/flow.hpp"

using namespace mlfe;

namespace {

const PotentialPair kFree = PotentialPair::quadratic(1.0, 0.0);  // U = x^2 / 2
const PotentialPair kFig = PotentialPair::quadratic(2.0, 1.5);

double variance(const RootDensity& r) {
  const auto w = trapezoid_weights(r.axis);
  double m = 0.0, s = 0.0;
  for (int i = 0; i < r.axis.points; ++i) m += w[i] * r.values[i] * r.axis.node(i);
  for (int i = 0; i < r.axis.points; ++i) s += w[i] * r.values[i] * std::pow(r.axis.node(i) - m, 2);
  return s;
}

// Variance of the second edge coordinate.
double leaf_variance(const EdgeDensity& e) {
  const Axis& a = e.axis();
  RootDensity r{a, std::vector<double>(a.points, 0.0)};
  const auto w = trapezoid_weights(a);
  for (int i = 0; i < a.points; ++i)
    for (int j = 0; j < a.points; ++j) r.values[j] += w[i] * e.at(i, j);
  return variance(r);
}

}  // namespace

TEST_CASE("config validation") {
  FlowConfig c;
  CHECK_NOTHROW(c.validate());
  c.dt = 0.2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = FlowConfig{};
  c.output_every = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = FlowConfig{};
  c.t_end = 0.5;
  c.dt = 1e-3;
  CHECK(c.steps() == 500);
}

TEST_CASE("Bernoulli weight") {
  CHECK(bernoulli_weight(0.0) == 1.0);
  CHECK(bernoulli_weight(1e-10) == doctest::Approx(1.0 - 5e-11));
  CHECK(bernoulli_weight(1.0) == doctest::Approx(1.0 / (std::exp(1.0) - 1.0)));
  CHECK(bernoulli_weight(-1.0) - bernoulli_weight(1.0) == doctest::Approx(1.0));
  CHECK(bernoulli_weight(800.0) >= 0.0);
  CHECK(std::isfinite(bernoulli_weight(-800.0)));
}

TEST_CASE("uncoupled flow follows Ornstein-Uhlenbeck variances") {
  // Exponential fitting adds O(h^2) numerical diffusion; the raw 1e-3 needs
  // h < 0.09. Two grids and a Richardson step check the limit and the order.
  const double expect = 1.0 + std::exp(-1.0);
  auto run_at = [&](int points) {
    const Axis a = Axis::symmetric(7.0, points);
    FlowConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 0.5;
    cfg.output_every = 100;
    cfg.record_functionals = false;
    const auto s = run(kFree, gaussian_product(a, 2, 0.0, 2.0), cfg);
    CHECK(s.conservation.max_sweep_mass_change < 1e-12);
    CHECK(s.conservation.min_value >= 0.0);
    CHECK(s.conservation.steps == 500);
    const double root = variance(root_marginal(s.density));
    CHECK(leaf_variance(edge_marginal(s.density)) == doctest::Approx(root).epsilon(1e-12));
    return std::pair{root, a.spacing()};
  };
  const auto [v1, h1] = run_at(64);
  const auto [v2, h2] = run_at(96);
  const double order = std::log((v1 - expect) / (v2 - expect)) / std::log(h1 / h2);
  CHECK(order > 1.7);
  CHECK(order < 2.3);
  const double r = (h1 * h1) / (h2 * h2);
  const double extrapolated = (r * v2 - v1) / (r - 1.0);
  CHECK(std::abs(extrapolated - expect) < 1e-3);
}

TEST_CASE("pure heat flow conserves mass") {
  const auto zero = PotentialPair::quadratic(0.0, 0.0);
  FlowConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 0.2;
  cfg.record_functionals = false;
  const auto s = run(zero, gaussian_mixture(Axis::symmetric(4.0, 24), 2, 1.0, 0.3), cfg);
  CHECK(s.conservation.max_sweep_mass_change < 1e-12);
  CHECK(s.conservation.max_mass_defect < 1e-12);
  CHECK(s.conservation.min_value >= 0.0);
}

TEST_CASE("run ledger") {
  const auto init = gaussian_mixture(Axis::symmetric(6.0, 24), 2, 1.2, 0.25);
  FlowConfig cfg;
  cfg.t_end = 0.0;
  const auto empty = run(kFig, init, cfg);
  REQUIRE(empty.ledger.size() == 1);
  CHECK(empty.ledger[0].t == 0.0);
  CHECK(empty.density.values()[100] == init.values()[100]);

  cfg.dt = 2e-3;
  cfg.t_end = 0.2;
  cfg.output_every = 7;
  int calls = 0;
  const auto s = run(kFig, init, cfg, [&](const FlowState&) { ++calls; });
  CHECK(s.ledger.size() == 1 + 14 + 1);  // t = 0, every 7 steps, final step
  CHECK(calls == static_cast<int>(s.ledger.size()));
  CHECK(s.ledger.back().t == doctest::Approx(0.2));
  const double tol = 1e-6 * std::abs(s.ledger.front().h_kappa);
  for (std::size_t k = 1; k < s.ledger.size(); ++k) {
    CHECK(s.ledger[k].h_kappa <= s.ledger[k - 1].h_kappa + tol);
    CHECK(s.ledger[k].i_kappa >= -1e-10);
    CHECK(std::abs(s.ledger[k].mass - 1.0) < 1e-12);
  }
  CHECK(s.conservation.max_leaf_exchange_defect < 1e-12);
  // Root-leaf swap symmetry is not projected; it holds up to discretization.
  CHECK(edge_symmetry_defect(edge_marginal(s.density)) < 1e-3);
}

TEST_CASE("step wrapper matches the stepper") {
  const auto init = gaussian_mixture(Axis::symmetric(6.0, 16), 2, 1.2, 0.25);
  FlowConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 1e-3;
  const auto one = step(kFig, initial_state(kFig, init), cfg);
  cfg.record_functionals = false;
  const auto ran = run(kFig, init, cfg);
  CHECK(one.t == doctest::Approx(1e-3));
  for (std::size_t k = 0; k < init.values().size(); ++k) CHECK(one.density.values()[k] == ran.density.values()[k]);
}

GammaSample ou_gamma(const Axis& a, double t) {
  GammaSample g{t, GammaField{a, {}, 0}};
  g.gamma.values.resize(static_cast<std::size_t>(a.points) * a.points);
  for (int i = 0; i < a.points; ++i)
    for (int j = 0; j < a.points; ++j) g.gamma.values[static_cast<std::size_t>(i) * a.points + j] = a.node(i);
  return g;
}

TEST_CASE("edge flow") {
  FlowConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 0.5;
  cfg.record_functionals = false;
  {
    // beta = 0: two independent OU flows on a fine 2-D grid.
    const Axis a = Axis::symmetric(7.0, 241);
    std::vector<GammaSample> series;
    for (long k = 0; k < cfg.steps(); ++k) series.push_back(ou_gamma(a, k * cfg.dt));
    const auto init = edge_marginal(gaussian_product(a, 2, 0.0, 2.0));
    const auto e = edge_flow(init, series, cfg);
    CHECK(std::abs(leaf_variance(e) - (1.0 + std::exp(-1.0))) < 1e-3);
    CHECK(e.mass() == doctest::Approx(1.0).epsilon(1e-12));

    FlowConfig zero = cfg;
    zero.t_end = 0.0;
    const auto same = edge_flow(init, {}, zero);
    CHECK(same.values()[777] == init.values()[777]);

    auto shifted = series;
    shifted[3].t += 1e-4;
    CHECK_THROWS_AS(edge_flow(init, shifted, cfg), ConfigError);
    shifted.resize(10);
    CHECK_THROWS_AS(edge_flow(init, shifted, cfg), ConfigError);
  }
  {
    // The companion flow driven by a recorded gamma tracks the joint's edge.
    const Axis a = Axis::symmetric(6.0, 64);
    const auto init = gaussian_mixture(a, 2, 1.2, 0.25);
    cfg.record_gamma = true;
    const auto s = run(kFig, init, cfg);
    REQUIRE(s.gamma_series.size() == 500);
    const auto e = edge_flow(edge_marginal(init), s.gamma_series, cfg);
    const auto target = edge_marginal(s.density);
    CHECK(total_variation(e.grid(), e.values(), target.values()) < 2e-3);
  }
}
