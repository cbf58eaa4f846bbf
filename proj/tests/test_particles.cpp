#include <doctest.h>

#include <cmath>
#include <random>

#include "mlfe/errors.hpp"
#include "mlfe/particles.hpp"
#include "mlfe/measures.hpp"

using namespace mlfe;

namespace {

const PotentialPair kFree = PotentialPair::quadratic(1.0, 0.0);
const PotentialPair kFig = PotentialPair::quadratic(2.0, 1.5);
const Axis kBox = Axis::symmetric(6.0, 64);

ParticleConfig small(double t_end) {
  ParticleConfig c;
  c.n = 20000;
  c.dt = 1e-3;
  c.t_end = t_end;
  c.output_every = 100;
  return c;
}

}  // namespace

TEST_CASE("uncoupled particles follow Ornstein-Uhlenbeck variances") {
  ParticleInit init;
  init.variance = 2.0;
  const auto rows = moment_series(kFree, init, kBox, small(0.5));
  REQUIRE(rows.size() == 6);
  const auto& last = rows.back();
  CHECK(last.t == doctest::Approx(0.5));
  CHECK(std::abs(last.var0 - (1.0 + std::exp(-1.0))) < 3.0 * last.se_var0);
  CHECK(std::abs(last.cov01) < 3.0 * last.se_cov01);
  for (const auto& r : rows) CHECK(std::abs(r.mean0) < 3.0 * r.se_mean0);
}

TEST_CASE("em_step contracts") {
  ParticleInit init;
  auto ens = sample_ensemble(init, 2, kBox, 5000, 42);
  const auto before = ens.states;
  const auto est = estimate_gamma(kFig, ens);
  em_step(kFig, ens, 0.0, est);
  CHECK(ens.states == before);
  CHECK_THROWS_AS(em_step(kFig, ens, -1.0, est), ConfigError);

  auto a = sample_ensemble(init, 2, kBox, 5000, 42);
  auto b = sample_ensemble(init, 2, kBox, 5000, 42);
  for (int k = 0; k < 5; ++k) {
    em_step(kFig, a, 1e-2, estimate_gamma(kFig, a));
    em_step(kFig, b, 1e-2, estimate_gamma(kFig, b));
  }
  CHECK(a.states == b.states);
  auto c = sample_ensemble(init, 2, kBox, 5000, 43);
  CHECK(c.states != sample_ensemble(init, 2, kBox, 5000, 42).states);

  // Large steps are reflected into the box.
  auto wide = sample_ensemble(init, 3, kBox, 2000, 1);
  em_step(PotentialPair::quadratic(1.0, 0.0, 3), wide, 0.1, estimate_gamma(kFree, wide));
  for (double x : wide.states) {
    CHECK(x >= kBox.lower);
    CHECK(x <= kBox.upper);
  }
}

TEST_CASE("binned gamma") {
  ParticleInit init;
  init.variance = 1.0;
  const auto ens = sample_ensemble(init, 2, kBox, 200000, 7);

  const auto est0 = estimate_gamma(kFree, ens);
  for (double x : {-1.0, -0.2, 0.4, 1.3}) CHECK(est0(kFree, x, 0.3) == doctest::Approx(kFree.dU(x)));

  // Grid oracle whose nodes sit at the bin centers.
  const auto est = estimate_gamma(kFig, ens);
  const double half = 6.0 - 0.5 * 12.0 / est.bins;
  const Axis centers{-half, half, est.bins};
  const auto grid = gamma_field(kFig, gaussian_product(centers, 2, 0.0, 1.0));
  int compared = 0;
  double worst = 0.0;
  for (int i = 0; i < est.bins; ++i) {
    for (int j = 0; j < est.bins; ++j) {
      if (!est.populated(i, j)) continue;
      const double diff = est(kFig, centers.node(i), centers.node(j)) - grid.at(i, j);
      worst = std::max(worst, std::abs(diff) / est.standard_error(kFig, i, j));
      ++compared;
    }
  }
  CHECK(compared > 300);
  CHECK(worst < 5.0);

  // Nothing lands near (6, -6); the query falls back and is counted.
  CHECK(est(kFig, 5.9, -5.9) == doctest::Approx(kFig.dU(5.9) + kFig.dW(11.8)));
  CHECK(est.fallback_bins() > 0);
  CHECK(est.unresolved_bins() > 0);
  CHECK(est.unresolved_bins() <= est.fallback_bins());
}

TEST_CASE("Monte Carlo error scales as n^-1/2") {
  ParticleInit init;
  const auto e1 = moments(sample_ensemble(init, 2, kBox, 10000, 3));
  const auto e4 = moments(sample_ensemble(init, 2, kBox, 40000, 3));
  CHECK(e1.se_var0 / e4.se_var0 == doctest::Approx(2.0).epsilon(0.1));
  CHECK(e1.se_cov01 / e4.se_cov01 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("Kolmogorov-Smirnov") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  std::vector<double> a(4000), b(4000), c(4000);
  for (auto& x : a) x = n01(rng);
  for (auto& x : b) x = n01(rng);
  for (auto& x : c) x = n01(rng) + 0.3;
  CHECK(ks_two_sample(a, b).p_value > 0.01);
  CHECK(ks_two_sample(a, c).p_value < 1e-6);
  CHECK(ks_two_sample({1.0, 2.0}, {1.0, 2.0}).statistic == 0.0);
  CHECK_THROWS(ks_two_sample({}, {1.0}));

  ParticleInit init;
  auto ens = sample_ensemble(init, 2, kBox, 20000, 9);
  for (int k = 0; k < 20; ++k) em_step(kFig, ens, 1e-2, estimate_gamma(kFig, ens));
  CHECK(edge_exchangeability_ks(ens).p_value > 0.01);
}

TEST_CASE("config and csv") {
  ParticleConfig c;
  CHECK_NOTHROW(c.validate());
  c.n = 10;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ParticleConfig{};
  c.bins = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  const std::string csv = to_csv({MomentRow{}});
  CHECK(csv.rfind("t,mean0,var0,cov01,se_var0,se_cov01\n", 0) == 0);
}
