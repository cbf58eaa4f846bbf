#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mlfe/grid.hpp"

using namespace mlfe;

TEST_CASE("trapezoid weights") {
  const auto w = trapezoid_weights(Axis{-1.0, 1.0, 3});
  REQUIRE(w.size() == 3);
  CHECK(w[0] == doctest::Approx(0.5));
  CHECK(w[1] == doctest::Approx(1.0));
  CHECK(w[2] == doctest::Approx(0.5));

  for (int n : {2, 9, 64, 101}) {
    const Axis a = Axis::symmetric(4.0, n);
    TensorGrid g(a, 1);
    std::vector<double> ones(n, 1.0);
    CHECK(integrate(g, ones) == doctest::Approx(8.0).epsilon(1e-15));
  }

  const Axis a = Axis::symmetric(8.0, 257);
  TensorGrid g(a, 1);
  std::vector<double> f(a.points);
  for (int i = 0; i < a.points; ++i) {
    const double x = a.node(i);
    f[i] = x * x * std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  }
  CHECK(std::abs(integrate(g, f) - 1.0) < 1e-10);
}

TEST_CASE("affine integrands are exact on the tensor grid") {
  const Axis a = Axis::symmetric(3.0, 17);
  TensorGrid g(a, 3);
  std::vector<double> f(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto m = g.to_multi(k);
    f[k] = 2.0 + a.node(m[0]) - 3.0 * a.node(m[2]);
  }
  CHECK(integrate(g, f) == doctest::Approx(2.0 * 216.0).epsilon(1e-14));
}

TEST_CASE("linear index round trip") {
  for (int arity : {2, 3, 4}) {
    TensorGrid g(Axis::symmetric(1.0, 9), arity);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(g.to_linear(g.to_multi(k)) == k);
    CHECK(g.stride(arity - 1) == 1);
  }
}

TEST_CASE("central gradient") {
  {
    const Axis a = Axis::symmetric(4.0, 33);
    TensorGrid g(a, 1);
    std::vector<double> f = a.nodes();
    for (double d : central_gradient(g, f, 0)) CHECK(d == doctest::Approx(1.0).epsilon(1e-13));
  }
  {
    // h = 0.1 with a node at x = 1
    const Axis a{-2.0, 2.0, 41};
    TensorGrid g(a, 1);
    std::vector<double> f(a.points);
    for (int i = 0; i < a.points; ++i) f[i] = a.node(i) * a.node(i);
    const auto d = central_gradient(g, f, 0);
    CHECK(d[30] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(d[0] == doctest::Approx(-4.0).epsilon(1e-12));  // one-sided stencil, still exact
  }
  {
    const Axis a{-1.0, 1.0, 41};  // h = 0.05
    TensorGrid g(a, 1);
    std::vector<double> f(a.points);
    for (int i = 0; i < a.points; ++i) f[i] = std::sin(a.node(i));
    const double h = a.spacing();
    CHECK(std::abs(central_gradient(g, f, 0)[20] - 1.0) < h * h);
  }
  TensorGrid g(Axis::symmetric(1.0, 9), 2);
  std::vector<double> f(g.size(), 0.0);
  CHECK_THROWS_AS(central_gradient(g, f, 2), std::out_of_range);
}

TEST_CASE("central gradient converges at second order") {
  auto err = [](int n) {
    const Axis a = Axis::symmetric(2.0, n);
    TensorGrid g(a, 1);
    std::vector<double> f(a.points);
    for (int i = 0; i < a.points; ++i) f[i] = std::sin(a.node(i));
    const auto d = central_gradient(g, f, 0);
    double e = 0.0;
    for (int i = 0; i < a.points; ++i) e = std::max(e, std::abs(d[i] - std::cos(a.node(i))));
    return e;
  };
  const double ratio = err(41) / err(81);
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("log gradient") {
  const Axis a = Axis::symmetric(6.0, 12 * 32 + 1);  // h = 1/32
  TensorGrid g(a, 1);
  std::vector<double> p(a.points), c(a.points, 0.3), z(a.points, 0.0);
  for (int i = 0; i < a.points; ++i) p[i] = std::exp(-0.5 * a.node(i) * a.node(i));
  const auto lg = log_gradient(g, p);
  for (int i = 0; i < a.points; ++i) CHECK(std::abs(lg[0][i] + a.node(i)) < 1e-6);
  const auto lc = log_gradient(g, c);
  for (double d : lc[0]) CHECK(std::abs(d) < 1e-12);
  for (int i = 0; i < a.points / 2; ++i) z[i] = 1.0;
  const auto lz = log_gradient(g, z);
  for (double d : lz[0]) CHECK(std::isfinite(d));
}

TEST_CASE("pencils cover the grid once") {
  TensorGrid g(Axis::symmetric(1.0, 8), 3);
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<int> hits(g.size(), 0);
    std::size_t count = 0;
    for_each_pencil(g, axis, [&](std::size_t first, std::size_t stride) {
      CHECK(first == pencil_offset(g, axis, count));
      ++count;
      for (int i = 0; i < g.points(); ++i) ++hits[first + i * stride];
    });
    CHECK(count == pencil_count(g, axis));
    for (int h : hits) CHECK(h == 1);
  }
}
