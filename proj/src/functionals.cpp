#include "mlfe/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "mlfe/errors.hpp"

namespace mlfe {

namespace {

// Leaf coordinates beyond axis 1 for each "rest" offset inside an (i, j) block.
struct RestTable {
  int count = 1;
  std::vector<double> weight;     // product of trapezoid weights over axes 2..kappa
  std::vector<int> leaves;        // count * (kappa - 1) node indices
};

RestTable rest_table(int n, int kappa, const std::vector<double>& w) {
  RestTable t;
  const int extra = kappa - 1;
  for (int a = 0; a < extra; ++a) t.count *= n;
  t.weight.resize(t.count);
  t.leaves.resize(static_cast<std::size_t>(t.count) * extra);
  for (int r = 0; r < t.count; ++r) {
    int rem = r;
    double prod = 1.0;
    for (int a = extra - 1; a >= 0; --a) {
      const int k = rem % n;
      rem /= n;
      t.leaves[static_cast<std::size_t>(r) * extra + a] = k;
      prod *= w[k];
    }
    t.weight[r] = prod;
  }
  return t;
}

inline double stencil(const double* f, int i, int n, std::size_t stride, double inv2h) {
  if (i == 0) return (-3.0 * f[0] + 4.0 * f[stride] - f[2 * stride]) * inv2h;
  if (i == n - 1) return (3.0 * f[0] - 4.0 * f[-static_cast<std::ptrdiff_t>(stride)] +
                          f[-2 * static_cast<std::ptrdiff_t>(stride)]) * inv2h;
  return (f[stride] - f[-static_cast<std::ptrdiff_t>(stride)]) * inv2h;
}

std::vector<double> safe_log(std::span<const double> v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::log(std::max(v[i], kLogFloor));
  return out;
}

double combine_slabs(const std::vector<double>& slabs) {
  CompensatedSum acc;
  for (double s : slabs) acc.add(s);
  return acc.value();
}

}  // namespace

double h_kappa(const PotentialPair& pair, const JointDensity& density) {
  const int n = density.grid().points();
  const int kappa = density.kappa();
  const auto x = density.axis().nodes();
  const auto w = trapezoid_weights(density.axis());
  const auto rest = rest_table(n, kappa, w);
  const int extra = kappa - 1;
  const auto edge = edge_marginal(density);
  const double* v = density.values().data();

  std::vector<double> slabs(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    double slab = 0.0;
    const double u0 = pair.U(x[i]);
    for (int j = 0; j < n; ++j) {
      const double* blk = v + (static_cast<std::size_t>(i) * n + j) * rest.count;
      const double e = edge.at(i, j);
      const double log_e = std::log(std::max(e, kLogFloor));
      const double w01 = pair.W(x[i] - x[j]);
      double row = 0.0;
      for (int r = 0; r < rest.count; ++r) {
        const double p = blk[r];
        if (!(p > kLogFloor)) continue;
        double wsum = w01;
        for (int a = 0; a < extra; ++a) wsum += pair.W(x[i] - x[rest.leaves[r * extra + a]]);
        const double gval = u0 + 0.5 * wsum;
        row += rest.weight[r] * p * (std::log(p) - 0.5 * kappa * log_e + gval);
      }
      slab += w[j] * row;
    }
    slabs[i] = w[i] * slab;
  }
  return combine_slabs(slabs);
}

double i_kappa(const PotentialPair& pair, const JointDensity& density) {
  const auto& grid = density.grid();
  const int n = grid.points();
  const int kappa = density.kappa();
  const auto x = density.axis().nodes();
  const auto w = trapezoid_weights(density.axis());
  const auto rest = rest_table(n, kappa, w);
  const int extra = kappa - 1;
  const double inv2h = 0.5 / density.axis().spacing();
  const auto values = density.values();
  const auto logv = safe_log(values);
  const auto edge = edge_marginal(density);
  const auto log_edge = safe_log(edge.values());
  const auto dlog_edge1 = central_gradient(edge.grid(), log_edge, 1);
  const std::size_t s0 = grid.stride(0), s1 = grid.stride(1);

  std::vector<double> slabs(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    double slab = 0.0;
    const double du0 = pair.dU(x[i]);
    for (int j = 0; j < n; ++j) {
      const std::size_t base = (static_cast<std::size_t>(i) * n + j) * rest.count;
      const double de1 = dlog_edge1[static_cast<std::size_t>(i) * n + j];
      const double dw01 = pair.dW(x[i] - x[j]);
      double row = 0.0;
      for (int r = 0; r < rest.count; ++r) {
        const std::size_t idx = base + r;
        const double p = values[idx];
        if (!(p > kLogFloor)) continue;
        double bval = du0 + dw01;
        for (int a = 0; a < extra; ++a) bval += pair.dW(x[i] - x[rest.leaves[r * extra + a]]);
        const double d0 = stencil(logv.data() + idx, i, n, s0, inv2h);
        const double d1 = stencil(logv.data() + idx, j, n, s1, inv2h);
        const double root = bval + d0;
        const double leaf = d1 - de1;
        row += rest.weight[r] * p * (root * root + kappa * leaf * leaf);
      }
      slab += w[j] * row;
    }
    slabs[i] = w[i] * slab;
  }
  return combine_slabs(slabs);
}

EdgeDensity swap_symmetrized(const EdgeDensity& edge) {
  const int n = edge.grid().points();
  std::vector<double> s(edge.values().begin(), edge.values().end());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s[i * n + j] = 0.5 * (edge.at(i, j) + edge.at(j, i));
  }
  return EdgeDensity(edge.axis(), std::move(s));
}

double h_hat2(const PotentialPair& pair, const EdgeDensity& edge, double symmetry_tol) {
  if (pair.kappa() != 2) throw ConfigError("h_hat2 is only defined for kappa = 2");
  const auto vals = edge.values();
  const double peak = *std::max_element(vals.begin(), vals.end());
  if (edge_symmetry_defect(edge) > symmetry_tol * peak) {
    throw ConfigError("h_hat2 needs a swap-symmetric edge density");
  }
  const int n = edge.grid().points();
  const auto x = edge.axis().nodes();
  const auto root = root_marginal(edge);
  std::vector<double> integrand(vals.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    const double log_root = std::log(std::max(root.values[i], kLogFloor));
    for (int j = 0; j < n; ++j) {
      const double e = edge.at(i, j);
      if (!(e > kLogFloor)) continue;
      integrand[i * n + j] = e * (pair.U(x[i]) + pair.W(x[i] - x[j]) + std::log(e) - log_root);
    }
  }
  return integrate(edge.grid(), integrand);
}

FunctionalReport evaluate_functionals(const PotentialPair& pair, const JointDensity& density,
                                      double t) {
  FunctionalReport r;
  r.t = t;
  r.h_kappa = h_kappa(pair, density);
  r.i_kappa = i_kappa(pair, density);
  if (density.kappa() == 2) r.h_hat2 = h_hat2(pair, swap_symmetrized(edge_marginal(density)));
  try {
    r.lower_bound = coercivity_profile(pair).lower_bound();
  } catch (const NotCoercive&) {
    r.lower_bound = std::numeric_limits<double>::quiet_NaN();
  }
  r.mass = density.mass();
  r.second_moment = second_moment(density);
  return r;
}

double dissipation_residual(std::span<const FunctionalReport> series) {
  if (series.size() < 3) throw std::invalid_argument("dissipation residual needs >= 3 reports");
  for (std::size_t k = 1; k < series.size(); ++k) {
    if (!(series[k].t > series[k - 1].t)) throw std::invalid_argument("reports are not sorted by t");
  }
  // Cumulative trapezoid integral of I.
  std::vector<double> cum(series.size(), 0.0);
  for (std::size_t k = 1; k < series.size(); ++k) {
    cum[k] = cum[k - 1] +
             0.5 * (series[k].t - series[k - 1].t) * (series[k].i_kappa + series[k - 1].i_kappa);
  }
  double worst = 0.0;
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (std::size_t t = s + 1; t < series.size(); ++t) {
      const double integral = cum[t] - cum[s];
      const double gap = (series[t].h_kappa - series[s].h_kappa) + integral;
      worst = std::max(worst, std::abs(gap) / std::max(1.0, integral));
    }
  }
  return worst;
}

std::vector<FunctionalReport> time_window(std::span<const FunctionalReport> series, double t0,
                                          double t1) {
  std::vector<FunctionalReport> out;
  const double eps = 1e-9;
  for (const auto& r : series) {
    if (r.t >= t0 - eps && r.t <= t1 + eps) out.push_back(r);
  }
  return out;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string to_csv(std::span<const FunctionalReport> series) {
  std::string out = kFlowCsvHeader;
  out += '\n';
  for (const auto& r : series) {
    out += format_double(r.t) + ',' + format_double(r.h_kappa) + ',' + format_double(r.i_kappa) +
           ',' + format_double(r.h_hat2.value_or(std::numeric_limits<double>::quiet_NaN())) + ',' +
           format_double(r.mass) + ',' + format_double(r.second_moment) + '\n';
  }
  return out;
}

}  // namespace mlfe
