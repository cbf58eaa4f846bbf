#include "mlfe/reference.hpp"

#include <algorithm>
#include <cmath>

#include "mlfe/flow.hpp"

namespace mlfe::reference {

namespace {

double serial_integral(const TensorGrid& grid, const std::vector<double>& f) {
  const auto w = trapezoid_weights(grid.axis());
  double s = 0.0;
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    const MultiIndex m = grid.to_multi(idx);
    double wt = 1.0;
    for (int k = 0; k < grid.arity(); ++k) wt *= w[m[k]];
    s += wt * f[idx];
  }
  return s;
}

std::vector<double> point(const TensorGrid& grid, const MultiIndex& m) {
  std::vector<double> x(grid.arity());
  for (int k = 0; k < grid.arity(); ++k) x[k] = grid.axis().node(m[k]);
  return x;
}

// d/dx_axis of f at a node: central inside, one-sided second order at the ends.
double derivative(const TensorGrid& grid, const std::vector<double>& f, std::size_t idx, int axis) {
  const MultiIndex m = grid.to_multi(idx);
  const int n = grid.points();
  const std::size_t s = grid.stride(axis);
  const double h = grid.axis().spacing();
  if (m[axis] == 0) return (-3.0 * f[idx] + 4.0 * f[idx + s] - f[idx + 2 * s]) / (2.0 * h);
  if (m[axis] == n - 1) return (3.0 * f[idx] - 4.0 * f[idx - s] + f[idx - 2 * s]) / (2.0 * h);
  return (f[idx + s] - f[idx - s]) / (2.0 * h);
}

}  // namespace

GammaField gamma_field(const PotentialPair& pair, const JointDensity& density, double floor) {
  const auto& grid = density.grid();
  const int n = grid.points();
  const auto w = trapezoid_weights(density.axis());
  const auto v = density.values();
  std::vector<double> num(static_cast<std::size_t>(n) * n, 0.0), den(num.size(), 0.0);
  for (std::size_t idx = 0; idx < v.size(); ++idx) {
    const MultiIndex m = grid.to_multi(idx);
    double wt = 1.0;
    for (int k = 2; k <= density.kappa(); ++k) wt *= w[m[k]];
    const double x0 = grid.axis().node(m[0]);
    const double x2 = grid.axis().node(m[2]);
    num[m[0] * n + m[1]] += wt * v[idx] * pair.dW(x0 - x2);
    den[m[0] * n + m[1]] += wt * v[idx];
  }
  GammaField g{density.axis(), std::vector<double>(num.size()), 0};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double x = grid.axis().node(i), y = grid.axis().node(j);
      const std::size_t k = static_cast<std::size_t>(i) * n + j;
      if (den[k] < floor) {
        g.values[k] = pair.dU(x);
        ++g.fallback_cells;
      } else {
        g.values[k] = pair.dU(x) + pair.dW(x - y) + (density.kappa() - 1) * num[k] / den[k];
      }
    }
  }
  return g;
}

double h_kappa(const PotentialPair& pair, const JointDensity& density) {
  const auto& grid = density.grid();
  const auto v = density.values();
  const auto edge = edge_marginal(density);
  std::vector<double> f(v.size(), 0.0);
  for (std::size_t idx = 0; idx < v.size(); ++idx) {
    if (!(v[idx] > kLogFloor)) continue;
    const MultiIndex m = grid.to_multi(idx);
    const double e = std::max(edge.at(m[0], m[1]), kLogFloor);
    f[idx] = v[idx] * (std::log(v[idx]) - 0.5 * density.kappa() * std::log(e) +
                       pair.g(point(grid, m)));
  }
  return serial_integral(grid, f);
}

double i_kappa(const PotentialPair& pair, const JointDensity& density) {
  const auto& grid = density.grid();
  const auto v = density.values();
  const auto edge = edge_marginal(density);
  std::vector<double> logv(v.size()), loge(edge.values().size());
  for (std::size_t i = 0; i < v.size(); ++i) logv[i] = std::log(std::max(v[i], kLogFloor));
  for (std::size_t i = 0; i < loge.size(); ++i) loge[i] = std::log(std::max(edge.values()[i], kLogFloor));
  std::vector<double> f(v.size(), 0.0);
  for (std::size_t idx = 0; idx < v.size(); ++idx) {
    if (!(v[idx] > kLogFloor)) continue;
    const MultiIndex m = grid.to_multi(idx);
    const double root = pair.b(point(grid, m)) + derivative(grid, logv, idx, 0);
    const std::size_t e = static_cast<std::size_t>(m[0]) * grid.points() + m[1];
    const double leaf = derivative(grid, logv, idx, 1) - derivative(edge.grid(), loge, e, 1);
    f[idx] = v[idx] * (root * root + density.kappa() * leaf * leaf);
  }
  return serial_integral(grid, f);
}

JointDensity flow_step(const PotentialPair& pair, const JointDensity& density, double dt) {
  const auto& grid = density.grid();
  const int n = grid.points();
  const double h = grid.axis().spacing();
  const auto w = trapezoid_weights(density.axis());
  const auto gamma = reference::gamma_field(pair, density);
  JointDensity out = density;
  auto& v = out.values();
  std::vector<double> delta(n);
  for (int axis = 0; axis <= density.kappa(); ++axis) {
    const std::size_t stride = grid.stride(axis);
    for (std::size_t p = 0; p < pencil_count(grid, axis); ++p) {
      const std::size_t off = pencil_offset(grid, axis, p);
      const MultiIndex m = grid.to_multi(off);
      for (int i = 0; i + 1 < n; ++i) {
        if (axis == 0) {
          auto lo = point(grid, m), hi = lo;
          lo[0] = grid.axis().node(i);
          hi[0] = grid.axis().node(i + 1);
          double phi_lo = pair.U(lo[0]), phi_hi = pair.U(hi[0]);
          for (int k = 1; k <= density.kappa(); ++k) {
            phi_lo += pair.W(lo[0] - lo[k]);
            phi_hi += pair.W(hi[0] - hi[k]);
          }
          delta[i] = phi_hi - phi_lo;
        } else {
          delta[i] = 0.5 * h * (gamma.at(i, m[0]) + gamma.at(i + 1, m[0]));
        }
      }
      solve_pencil(v.data() + off, stride, n, delta.data(), w.data(), dt / h);
    }
  }
  symmetrize_in_place(out);
  return out;
}

}  // namespace mlfe::reference
