#include <doctest.h>

#include <omp.h>

#include <cmath>

#include "mlfe/flow.hpp"
#include "mlfe/functionals.hpp"
#include "mlfe/reference.hpp"

using namespace mlfe;

namespace {

const PotentialPair kFig = PotentialPair::quadratic(2.0, 1.5);

double max_rel_diff(std::span<const double> a, std::span<const double> b) {
  double scale = 0.0, m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    scale = std::max(scale, std::abs(b[k]));
    m = std::max(m, std::abs(a[k] - b[k]));
  }
  return m / std::max(scale, 1e-300);
}

}  // namespace

TEST_CASE("kernels agree with the serial reference") {
  for (int kappa : {2, 3}) {
    const auto pair = PotentialPair::quadratic(2.0, 1.5, kappa);
    const Axis a = Axis::symmetric(6.0, kappa == 2 ? 32 : 14);
    const auto d = correlated_gaussian(a, kappa, 1.0, -0.4, 0.5);
    CAPTURE(kappa);

    const auto g = gamma_field(pair, d);
    const auto gr = reference::gamma_field(pair, d);
    CHECK(max_rel_diff(g.values, gr.values) < 1e-12);
    CHECK(g.fallback_cells == gr.fallback_cells);

    CHECK(h_kappa(pair, d) == doctest::Approx(reference::h_kappa(pair, d)).epsilon(1e-12));
    CHECK(i_kappa(pair, d) == doctest::Approx(reference::i_kappa(pair, d)).epsilon(1e-12));

    FlowConfig cfg;
    cfg.dt = 2e-3;
    cfg.t_end = 2e-3;
    const auto s = step(pair, initial_state(pair, d), cfg);
    const auto r = reference::flow_step(pair, d, cfg.dt);
    CHECK(max_rel_diff(s.density.values(), r.values()) < 1e-12);
  }
}

TEST_CASE("results do not depend on the thread count") {
  const Axis a = Axis::symmetric(6.0, 24);
  const auto d = gaussian_mixture(a, 2, 1.2, 0.25);
  FlowConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 5e-3;
  cfg.output_every = 1;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = run(kFig, d, cfg);
  omp_set_num_threads(3);
  const auto three = run(kFig, d, cfg);
  omp_set_num_threads(saved);
  CHECK(one.density.values().size() == three.density.values().size());
  bool same = true;
  for (std::size_t k = 0; k < one.density.values().size(); ++k) same &= one.density.values()[k] == three.density.values()[k];
  CHECK(same);
  for (std::size_t k = 0; k < one.ledger.size(); ++k) {
    CHECK(one.ledger[k].h_kappa == three.ledger[k].h_kappa);
    CHECK(one.ledger[k].i_kappa == three.ledger[k].i_kappa);
  }
}
