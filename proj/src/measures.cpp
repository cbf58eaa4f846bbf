#include "mlfe/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mlfe/errors.hpp"

namespace mlfe {

JointDensity::JointDensity(Axis axis, int kappa, std::vector<double> values)
    : grid_(axis, 1 + kappa), kappa_(kappa), values_(std::move(values)) {
  if (kappa < 2 || kappa > 3) throw std::invalid_argument("kappa must be 2 or 3");
  if (values_.size() != grid_.size()) throw std::invalid_argument("joint density size mismatch");
}

JointDensity JointDensity::zeros(Axis axis, int kappa) {
  const TensorGrid grid(axis, 1 + kappa);
  return JointDensity(axis, kappa, std::vector<double>(grid.size(), 0.0));
}

EdgeDensity::EdgeDensity(Axis axis, std::vector<double> values)
    : grid_(axis, 2), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw std::invalid_argument("edge density size mismatch");
}

double RootDensity::mass() const { return integrate(TensorGrid(axis, 1), values); }

namespace {

std::vector<std::vector<int>> leaf_permutations(int kappa) {
  std::vector<int> p(kappa);
  std::iota(p.begin(), p.end(), 1);
  std::vector<std::vector<int>> all;
  do {
    all.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return all;
}

void normalize(const TensorGrid& grid, std::vector<double>& v) {
  const double m = integrate(grid, v);
  if (!(m > 0.0) || !std::isfinite(m)) throw NumericalError("density has zero or non-finite mass");
  const double inv = 1.0 / m;
  for (double& x : v) x *= inv;
}

// Contracts the trailing axes 2..kappa of block (i, j) with trapezoid weights,
// returning r_k = sum_{rest} w(rest) v(i, j, k, rest) for k along axis 2.
void leaf_row(const double* block, int n, int kappa, const std::vector<double>& w,
              double* r) {
  if (kappa == 2) {
    std::copy(block, block + n, r);
    return;
  }
  for (int k = 0; k < n; ++k) {
    const double* row = block + static_cast<std::size_t>(k) * n;
    double s = 0.0;
    for (int l = 0; l < n; ++l) s += w[l] * row[l];
    r[k] = s;
  }
}

}  // namespace

void symmetrize_in_place(JointDensity& density) {
  const auto& grid = density.grid();
  const int n = grid.points();
  auto& v = density.values();
  if (density.kappa() == 2) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      double* slab = v.data() + static_cast<std::size_t>(i) * n * n;
      for (int j = 0; j < n; ++j) {
        for (int k = j + 1; k < n; ++k) {
          const double avg = 0.5 * (slab[j * n + k] + slab[k * n + j]);
          slab[j * n + k] = avg;
          slab[k * n + j] = avg;
        }
      }
    }
  } else {
    const auto perms = leaf_permutations(density.kappa());
    std::vector<double> out(v.size());
    const double inv = 1.0 / perms.size();
#pragma omp parallel for schedule(static)
    for (std::size_t idx = 0; idx < v.size(); ++idx) {
      const MultiIndex m = grid.to_multi(idx);
      double s = 0.0;
      for (const auto& p : perms) {
        MultiIndex q = m;
        for (int a = 0; a < density.kappa(); ++a) q[1 + a] = m[p[a]];
        s += v[grid.to_linear(q)];
      }
      out[idx] = s * inv;
    }
    v.swap(out);
  }
  normalize(grid, v);
}

JointDensity symmetrize(const JointDensity& density) {
  JointDensity out = density;
  symmetrize_in_place(out);
  return out;
}

EdgeDensity edge_marginal(const JointDensity& density) {
  const int n = density.grid().points();
  const int kappa = density.kappa();
  const auto w = trapezoid_weights(density.axis());
  const std::size_t block = density.grid().stride(1);
  std::vector<double> e(static_cast<std::size_t>(n) * n);
  const double* v = density.values().data();
#pragma omp parallel
  {
    std::vector<double> r(n);
#pragma omp for schedule(static)
    for (int ij = 0; ij < n * n; ++ij) {
      leaf_row(v + ij * block, n, kappa, w, r.data());
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += w[k] * r[k];
      e[ij] = s;
    }
  }
  return EdgeDensity(density.axis(), std::move(e));
}

RootDensity root_marginal(const EdgeDensity& edge) {
  const int n = edge.grid().points();
  const auto w = trapezoid_weights(edge.axis());
  RootDensity r{edge.axis(), std::vector<double>(n)};
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += w[j] * edge.at(i, j);
    r.values[i] = s;
  }
  return r;
}

RootDensity root_marginal(const JointDensity& density) {
  return root_marginal(edge_marginal(density));
}

GammaField gamma_field(const PotentialPair& pair, const JointDensity& density, double floor) {
  const int n = density.grid().points();
  const int kappa = density.kappa();
  const Axis& axis = density.axis();
  const auto x = axis.nodes();
  const auto w = trapezoid_weights(axis);
  const std::size_t block = density.grid().stride(1);
  const double* v = density.values().data();

  // dw[i*n + k] = w_k W'(x_i - x_k)
  std::vector<double> dw(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) dw[i * n + k] = w[k] * pair.dW(x[i] - x[k]);
  }

  GammaField gamma{axis, std::vector<double>(static_cast<std::size_t>(n) * n), 0};
  std::vector<unsigned char> fell_back(static_cast<std::size_t>(n) * n, 0);
#pragma omp parallel
  {
    std::vector<double> r(n);
#pragma omp for schedule(static)
    for (int ij = 0; ij < n * n; ++ij) {
      const int i = ij / n;
      const int j = ij % n;
      leaf_row(v + ij * block, n, kappa, w, r.data());
      double num = 0.0, den = 0.0;
      const double* dwi = dw.data() + static_cast<std::size_t>(i) * n;
      for (int k = 0; k < n; ++k) {
        num += dwi[k] * r[k];
        den += w[k] * r[k];
      }
      if (den < floor) {
        gamma.values[ij] = pair.dU(x[i]);
        fell_back[ij] = 1;
      } else {
        gamma.values[ij] = pair.dU(x[i]) + pair.dW(x[i] - x[j]) + (kappa - 1) * num / den;
      }
    }
  }
  gamma.fallback_cells = std::count(fell_back.begin(), fell_back.end(), 1);
  return gamma;
}

double entropy(const TensorGrid& grid, std::span<const double> values) {
  std::vector<double> t(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double p = values[i];
    t[i] = p > 0.0 ? p * std::log(p) : 0.0;
  }
  return integrate(grid, t);
}

double entropy(const RootDensity& d) { return entropy(TensorGrid(d.axis, 1), d.values); }

double second_moment(const TensorGrid& grid, std::span<const double> values) {
  const auto x = grid.axis().nodes();
  const int n = grid.points();
  // By linearity: sum over axes k of int x_k^2 v.
  double total = 0.0;
  std::vector<double> t(values.size());
  for (int k = 0; k < grid.arity(); ++k) {
    const std::size_t stride = grid.stride(k);
    for (std::size_t idx = 0; idx < values.size(); ++idx) {
      const double xi = x[(idx / stride) % n];
      t[idx] = xi * xi * values[idx];
    }
    total += integrate(grid, t);
  }
  return total;
}

double leaf_exchange_defect(const JointDensity& density) {
  const auto& grid = density.grid();
  const auto v = density.values();
  const auto perms = leaf_permutations(density.kappa());
  double defect = 0.0;
  for (std::size_t idx = 0; idx < v.size(); ++idx) {
    const MultiIndex m = grid.to_multi(idx);
    for (const auto& p : perms) {
      MultiIndex q = m;
      for (int a = 0; a < density.kappa(); ++a) q[1 + a] = m[p[a]];
      defect = std::max(defect, std::abs(v[idx] - v[grid.to_linear(q)]));
    }
  }
  return defect;
}

double edge_symmetry_defect(const EdgeDensity& edge) {
  const int n = edge.grid().points();
  double defect = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) defect = std::max(defect, std::abs(edge.at(i, j) - edge.at(j, i)));
  }
  return defect;
}

bool AdmissibilityReport::admissible(double mass_tol, double symmetry_tol) const {
  return std::abs(mass_defect) < mass_tol && leaf_exchange_defect < symmetry_tol &&
         edge_symmetry_defect < symmetry_tol && min_value >= 0.0 && std::isfinite(entropy) &&
         std::isfinite(second_moment);
}

AdmissibilityReport admissibility_check(const JointDensity& density) {
  AdmissibilityReport r;
  r.mass_defect = density.mass() - 1.0;
  r.entropy = entropy(density);
  r.second_moment = second_moment(density);
  r.leaf_exchange_defect = leaf_exchange_defect(density);
  r.edge_symmetry_defect = edge_symmetry_defect(edge_marginal(density));
  const auto v = density.values();
  r.min_value = *std::min_element(v.begin(), v.end());
  return r;
}

namespace {

std::vector<double> gaussian_nodes(const Axis& axis, double mean, double variance) {
  if (!(variance > 0.0)) throw std::invalid_argument("variance must be positive");
  std::vector<double> p(axis.points);
  for (int i = 0; i < axis.points; ++i) {
    const double d = axis.node(i) - mean;
    p[i] = std::exp(-0.5 * d * d / variance);
  }
  return p;
}

std::vector<double> outer_product(const TensorGrid& grid, const std::vector<double>& p) {
  std::vector<double> v(grid.size());
  for (std::size_t idx = 0; idx < v.size(); ++idx) {
    const MultiIndex m = grid.to_multi(idx);
    double prod = 1.0;
    for (int k = 0; k < grid.arity(); ++k) prod *= p[m[k]];
    v[idx] = prod;
  }
  return v;
}

}  // namespace

JointDensity gaussian_product(const Axis& axis, int kappa, double mean, double variance) {
  const TensorGrid grid(axis, 1 + kappa);
  auto p = gaussian_nodes(axis, mean, variance);
  normalize(TensorGrid(axis, 1), p);
  auto v = outer_product(grid, p);
  normalize(grid, v);
  return JointDensity(axis, kappa, std::move(v));
}

JointDensity gaussian_mixture(const Axis& axis, int kappa, double m, double variance) {
  const TensorGrid grid(axis, 1 + kappa);
  auto plus = gaussian_nodes(axis, m, variance);
  auto minus = gaussian_nodes(axis, -m, variance);
  normalize(TensorGrid(axis, 1), plus);
  normalize(TensorGrid(axis, 1), minus);
  auto a = outer_product(grid, plus);
  const auto b = outer_product(grid, minus);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = 0.5 * (a[i] + b[i]);
  JointDensity d(axis, kappa, std::move(a));
  symmetrize_in_place(d);
  return d;
}

JointDensity correlated_gaussian(const Axis& axis, int kappa, double variance, double root_leaf,
                                 double leaf_leaf) {
  const int d = 1 + kappa;
  // Gauss-Jordan inverse of the (1+kappa)^2 covariance.
  std::vector<double> a(d * d), inv(d * d, 0.0);
  for (int r = 0; r < d; ++r) {
    inv[r * d + r] = 1.0;
    for (int c = 0; c < d; ++c) {
      const double rho = r == c ? 1.0 : (r == 0 || c == 0) ? root_leaf : leaf_leaf;
      a[r * d + c] = variance * rho;
    }
  }
  for (int c = 0; c < d; ++c) {
    const double piv = a[c * d + c];
    if (!(piv > 1e-12)) throw ConfigError("correlated_gaussian: covariance is not positive definite");
    for (int k = 0; k < d; ++k) {
      a[c * d + k] /= piv;
      inv[c * d + k] /= piv;
    }
    for (int r = 0; r < d; ++r) {
      if (r == c) continue;
      const double f = a[r * d + c];
      for (int k = 0; k < d; ++k) {
        a[r * d + k] -= f * a[c * d + k];
        inv[r * d + k] -= f * inv[c * d + k];
      }
    }
  }
  const TensorGrid grid(axis, d);
  const auto x = axis.nodes();
  std::vector<double> v(grid.size());
#pragma omp parallel for schedule(static)
  for (std::size_t idx = 0; idx < v.size(); ++idx) {
    const MultiIndex m = grid.to_multi(idx);
    double q = 0.0;
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) q += x[m[r]] * inv[r * d + c] * x[m[c]];
    }
    v[idx] = std::exp(-0.5 * q);
  }
  normalize(grid, v);
  return JointDensity(axis, kappa, std::move(v));
}

double total_variation(const TensorGrid& grid, std::span<const double> a,
                       std::span<const double> b) {
  if (a.size() != b.size() || a.size() != grid.size()) {
    throw std::invalid_argument("total variation needs fields on the same grid");
  }
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = std::abs(a[i] - b[i]);
  return 0.5 * integrate(grid, d);
}

}  // namespace mlfe
