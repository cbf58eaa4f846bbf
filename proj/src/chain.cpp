#include "mlfe/chain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mlfe/errors.hpp"
#include "mlfe/functionals.hpp"

namespace mlfe {

TransferOperator TransferOperator::build(const PotentialPair& pair, const Axis& axis) {
  if (pair.kappa() != 2) throw ConfigError("the transfer operator is defined for kappa = 2");
  TransferOperator op{axis, {}, trapezoid_weights(axis)};
  const int n = axis.points;
  const auto x = axis.nodes();
  op.kernel.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double k = std::exp(-0.5 * pair.Q(x[i], x[j]));
      if (!std::isfinite(k)) throw NumericalError("transfer kernel overflows; shrink the domain");
      op.kernel[static_cast<std::size_t>(i) * n + j] = k;
    }
  }
  return op;
}

TransferOperator TransferOperator::scaled(double c) const {
  TransferOperator op = *this;
  for (double& k : op.kernel) k *= c;
  return op;
}

double log_partition(const TransferOperator& op, int n) {
  if (n < 1) throw ConfigError("log_partition needs n >= 1");
  const int m = op.points();
  std::vector<double> v(op.weights), u(m);
  double log_acc = 0.0;
  for (int e = 0; e < 2 * n; ++e) {
#pragma omp parallel for schedule(static) if (m > 128)
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += v[i] * op.at(i, j);
      u[j] = op.weights[j] * s;
    }
    const double peak = *std::max_element(u.begin(), u.end());
    if (!(peak > 0.0) || !std::isfinite(peak)) {
      throw NumericalError("chain contraction under- or overflowed despite scaling");
    }
    for (int j = 0; j < m; ++j) v[j] = u[j] / peak;
    log_acc += std::log(peak);
  }
  double total = 0.0;
  for (double x : v) total += x;
  return log_acc + std::log(total);
}

double log_partition(const PotentialPair& pair, const Axis& axis, int n) {
  return log_partition(TransferOperator::build(pair, axis), n);
}

double h_star_spectral(const TransferOperator& op) {
  const int m = op.points();
  std::vector<double> sw(m), v(m), u(m);
  for (int i = 0; i < m; ++i) sw[i] = std::sqrt(op.weights[i]);
  double norm = 0.0;
  for (int i = 0; i < m; ++i) {
    v[i] = sw[i];
    norm += v[i] * v[i];
  }
  for (double& x : v) x /= std::sqrt(norm);
  double lambda = 0.0;
  for (int it = 0; it < 100000; ++it) {
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int j = 0; j < m; ++j) s += op.at(i, j) * sw[j] * v[j];
      u[i] = sw[i] * s;
    }
    double rq = 0.0, nn = 0.0;
    for (int i = 0; i < m; ++i) {
      rq += v[i] * u[i];
      nn += u[i] * u[i];
    }
    if (!(nn > 0.0) || !std::isfinite(nn)) throw NumericalError("power iteration lost the iterate");
    nn = std::sqrt(nn);
    for (int i = 0; i < m; ++i) v[i] = u[i] / nn;
    if (it > 0 && std::abs(rq - lambda) <= 1e-12 * std::abs(rq)) return -std::log(rq);
    lambda = rq;
  }
  throw NumericalError("power iteration stagnated");
}

double h_star_spectral(const PotentialPair& pair, const Axis& axis) {
  return h_star_spectral(TransferOperator::build(pair, axis));
}

namespace {

void require_chain_density(const JointDensity& d) {
  if (d.kappa() != 2) throw ConfigError("chain quantities need a kappa = 2 density");
}

double mean_g(const PotentialPair& pair, const JointDensity& d) {
  const auto& grid = d.grid();
  const auto x = d.axis().nodes();
  const auto v = d.values();
  std::vector<double> t(v.size());
  for (std::size_t idx = 0; idx < v.size(); ++idx) {
    const MultiIndex m = grid.to_multi(idx);
    const double pt[3] = {x[m[0]], x[m[1]], x[m[2]]};
    t[idx] = v[idx] * pair.g(pt);
  }
  return integrate(grid, t);
}

// Triple factor T(a, b, c) = nu(root = b, leaf1 = a, leaf2 = c), its
// (center, right) pair marginal, and the axis weights.
struct LiftFactors {
  int points = 0;
  std::vector<double> triple;     // [a][b][c]
  std::vector<double> pair;       // [b][c] = sum_a w_a T(a, b, c)
  std::vector<double> inv_pair;   // 1 / pair, 0 where pair vanishes
  std::vector<double> weights;

  double t(int a, int b, int c) const {
    return triple[(static_cast<std::size_t>(a) * points + b) * points + c];
  }
};

LiftFactors lift_factors(const JointDensity& d) {
  LiftFactors f;
  const int n = d.grid().points();
  f.points = n;
  f.weights = trapezoid_weights(d.axis());
  f.triple.resize(static_cast<std::size_t>(n) * n * n);
  const auto v = d.values();
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        f.triple[(static_cast<std::size_t>(a) * n + b) * n + c] =
            v[(static_cast<std::size_t>(b) * n + a) * n + c];
      }
    }
  }
  f.pair.assign(static_cast<std::size_t>(n) * n, 0.0);
  f.inv_pair.assign(f.pair.size(), 0.0);
  for (int b = 0; b < n; ++b) {
    for (int c = 0; c < n; ++c) {
      double s = 0.0;
      for (int a = 0; a < n; ++a) s += f.weights[a] * f.t(a, b, c);
      f.pair[b * n + c] = s;
      f.inv_pair[b * n + c] = s > 0.0 ? 1.0 / s : 0.0;
    }
  }
  return f;
}

// Visits every grid point of the (sites)-fold product with the lift density
// psi and the product of quadrature weights. Denominators cover the interior
// pairs (s, s+1), s = 1 .. sites-3.
template <class Leaf>
void stream_lift(const LiftFactors& f, int sites, int s, int* idx, double psi, double wprod,
                 Leaf& leaf) {
  const int n = f.points;
  if (s == sites) {
    leaf(idx, psi, wprod);
    return;
  }
  const bool divide = s - 1 >= 1 && s - 1 <= sites - 3;
  for (int k = 0; k < n; ++k) {
    idx[s] = k;
    double p = psi;
    if (s >= 2) {
      p *= f.t(idx[s - 2], idx[s - 1], k);
      if (divide) p *= f.inv_pair[static_cast<std::size_t>(idx[s - 1]) * n + k];
    }
    if (p == 0.0) continue;
    stream_lift(f, sites, s + 1, idx, p, wprod * f.weights[k], leaf);
  }
}

// Runs stream_lift in parallel over the first site; `make` returns a fresh
// accumulator and the per-slice accumulators are merged in slice order.
template <class Acc, class Make>
Acc parallel_lift(const LiftFactors& f, int sites, Make make) {
  const int n = f.points;
  std::vector<Acc> parts(n, make());
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n; ++k) {
    int idx[8] = {k};
    stream_lift(f, sites, 1, idx, 1.0, f.weights[k], parts[k]);
  }
  Acc total = make();
  for (const auto& p : parts) total.merge(p);
  return total;
}

void require_coarse(const JointDensity& d, int max_points) {
  if (d.grid().points() > max_points) {
    throw ConfigError("brute-force lift quadrature is limited to " + std::to_string(max_points) +
                      " points per axis");
  }
}

}  // namespace

double lift_entropy(const PotentialPair& pair, const JointDensity& density, int n) {
  require_chain_density(density);
  const double log_z = log_partition(pair, density.axis(), n);
  return log_z + (2.0 * n - 1.0) * entropy(density) -
         (2.0 * n - 2.0) * entropy(edge_marginal(density)) + 2.0 * n * mean_g(pair, density);
}

namespace {

struct EntropyAcc {
  const std::vector<double>* half_q = nullptr;
  int points = 0;
  int sites = 0;
  double log_z = 0.0;
  double sum = 0.0;

  void operator()(const int* idx, double psi, double wprod) {
    double energy = 0.0;
    for (int s = 0; s + 1 < sites; ++s) energy += (*half_q)[static_cast<std::size_t>(idx[s]) * points + idx[s + 1]];
    sum += wprod * psi * (std::log(psi) + energy + log_z);
  }
  void merge(const EntropyAcc& o) { sum += o.sum; }
};

}  // namespace

double lift_entropy_brute_force(const PotentialPair& pair, const JointDensity& density, int n) {
  require_chain_density(density);
  require_coarse(density, 24);
  if (n < 1 || n > 3) throw ConfigError("brute-force lift entropy supports n in 1..3");
  const auto f = lift_factors(density);
  const int m = f.points;
  const auto x = density.axis().nodes();
  std::vector<double> half_q(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) half_q[static_cast<std::size_t>(i) * m + j] = 0.5 * pair.Q(x[i], x[j]);
  }
  const double log_z = log_partition(pair, density.axis(), n);
  const int sites = 2 * n + 1;
  auto acc = parallel_lift<EntropyAcc>(f, sites, [&] {
    EntropyAcc a;
    a.half_q = &half_q;
    a.points = m;
    a.sites = sites;
    a.log_z = log_z;
    return a;
  });
  return acc.sum;
}

namespace {

struct MomentAcc {
  const std::vector<double>* x = nullptr;
  int site = 0;
  double m[4] = {0, 0, 0, 0};  // 1, x_v, x_v^2, x_{v-1} x_{v+1}

  void operator()(const int* idx, double psi, double wprod) {
    const double p = psi * wprod;
    const double xv = (*x)[idx[site]];
    m[0] += p;
    m[1] += p * xv;
    m[2] += p * xv * xv;
    m[3] += p * (*x)[idx[site - 1]] * (*x)[idx[site + 1]];
  }
  void merge(const MomentAcc& o) {
    for (int k = 0; k < 4; ++k) m[k] += o.m[k];
  }
};

}  // namespace

double lift_marginal_check(const JointDensity& density, int n, int v) {
  require_chain_density(density);
  require_coarse(density, 24);
  if (n < 2 || n > 3) throw ConfigError("lift_marginal_check supports n in {2, 3}");
  if (std::abs(v) > n - 1) throw ConfigError("lift_marginal_check needs an interior vertex");
  const auto f = lift_factors(density);
  const int m = f.points;
  const auto x = density.axis().nodes();
  const auto acc = parallel_lift<MomentAcc>(f, 2 * n + 1, [&] {
    MomentAcc a;
    a.x = &x;
    a.site = v + n;
    return a;
  });
  // The same moments under nu itself, read as a chain triple.
  double ref[4] = {0, 0, 0, 0};
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      for (int c = 0; c < m; ++c) {
        const double p = f.weights[a] * f.weights[b] * f.weights[c] * f.t(a, b, c);
        ref[0] += p;
        ref[1] += p * x[b];
        ref[2] += p * x[b] * x[b];
        ref[3] += p * x[a] * x[c];
      }
    }
  }
  double defect = 0.0;
  for (int k = 0; k < 4; ++k) defect = std::max(defect, std::abs(acc.m[k] - ref[k]));
  return defect;
}

namespace {

struct FisherAcc {
  const LiftFactors* f = nullptr;
  const std::vector<double>* drift = nullptr;   // b at the triple (a, b, c)
  const std::vector<double>* d_root = nullptr;  // d_b log T(a, b, c)
  const std::vector<double>* d_left = nullptr;  // d_a log T(a, b, c)
  const std::vector<double>* d_right = nullptr; // d_c log T(a, b, c)
  const std::vector<double>* dp_right = nullptr;  // d_c log P(b, c)
  const std::vector<double>* dq_left = nullptr;   // d_a log P'(a, b), P' = sum_c T
  double t1 = 0.0, t2 = 0.0, cross = 0.0;

  std::size_t tri(int a, int b, int c) const {
    const std::size_t n = f->points;
    return (a * n + b) * n + c;
  }
  void operator()(const int* idx, double psi, double wprod) {
    const std::size_t n = f->points;
    const std::size_t center = tri(idx[1], idx[2], idx[3]);
    const double theta1 = (*drift)[center] + (*d_root)[center];
    const double left = (*d_right)[tri(idx[0], idx[1], idx[2])] - (*dp_right)[idx[1] * n + idx[2]];
    const double right = (*d_left)[tri(idx[2], idx[3], idx[4])] - (*dq_left)[idx[2] * n + idx[3]];
    const double theta2 = left + right;
    const double p = psi * wprod;
    t1 += p * theta1 * theta1;
    t2 += p * theta2 * theta2;
    cross += p * theta1 * theta2;
  }
  void merge(const FisherAcc& o) {
    t1 += o.t1;
    t2 += o.t2;
    cross += o.cross;
  }
};

std::vector<double> safe_log_of(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::log(std::max(v[i], kLogFloor));
  return out;
}

}  // namespace

FisherVertexReport fisher_interior_vertex(const PotentialPair& pair, const JointDensity& density) {
  require_chain_density(density);
  require_coarse(density, 32);
  const auto f = lift_factors(density);
  const int n = f.points;
  const Axis& axis = density.axis();
  const auto x = axis.nodes();
  const TensorGrid g3(axis, 3), g2(axis, 2);

  const auto log_t = safe_log_of(f.triple);
  const auto d_left = central_gradient(g3, log_t, 0);
  const auto d_root = central_gradient(g3, log_t, 1);
  const auto d_right = central_gradient(g3, log_t, 2);
  const auto dp_right = central_gradient(g2, safe_log_of(f.pair), 1);
  std::vector<double> left_pair(static_cast<std::size_t>(n) * n, 0.0);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      double s = 0.0;
      for (int c = 0; c < n; ++c) s += f.weights[c] * f.t(a, b, c);
      left_pair[static_cast<std::size_t>(a) * n + b] = s;
    }
  }
  const auto dq_left = central_gradient(g2, safe_log_of(left_pair), 0);
  std::vector<double> drift(f.triple.size());
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        const double pt[3] = {x[b], x[a], x[c]};
        drift[(static_cast<std::size_t>(a) * n + b) * n + c] = pair.b(pt);
      }
    }
  }
  const auto acc = parallel_lift<FisherAcc>(f, 5, [&] {
    FisherAcc a;
    a.f = &f;
    a.drift = &drift;
    a.d_root = &d_root;
    a.d_left = &d_left;
    a.d_right = &d_right;
    a.dp_right = &dp_right;
    a.dq_left = &dq_left;
    return a;
  });
  return {acc.t1, acc.t2, acc.cross};
}

std::vector<ChainReport> chain_report(const PotentialPair& pair, const JointDensity& density,
                                      const std::vector<int>& n_list) {
  require_chain_density(density);
  const auto op = TransferOperator::build(pair, density.axis());
  const double h_star = h_star_spectral(op);
  const double s_nu = entropy(density);
  const double s_edge = entropy(edge_marginal(density));
  const double g_mean = mean_g(pair, density);
  std::vector<ChainReport> rows;
  for (int n : n_list) {
    ChainReport r;
    r.n = n;
    r.log_z = log_partition(op, n);
    r.per_site_log_z = r.log_z / (2.0 * n + 1.0);
    r.h_star_spectral = h_star;
    r.lift_entropy = r.log_z + (2.0 * n - 1.0) * s_nu - (2.0 * n - 2.0) * s_edge + 2.0 * n * g_mean;
    r.lift_entropy_per_site = r.lift_entropy / (2.0 * n + 1.0);
    rows.push_back(r);
  }
  return rows;
}

std::string to_csv(const std::vector<ChainReport>& rows) {
  std::string out = kChainCsvHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.n) + ',' + format_double(r.log_z) + ',' + format_double(r.per_site_log_z) +
           ',' + format_double(r.lift_entropy) + ',' + format_double(r.lift_entropy_per_site) + '\n';
  }
  return out;
}

double gaussian_log_partition(double alpha, double beta, int n) {
  if (n < 1) throw ConfigError("gaussian_log_partition needs n >= 1");
  // Per edge, Q/2 = (alpha + beta)/4 (x^2 + y^2) - beta/4 (x - y)^2: interior
  // diagonal alpha, end diagonal alpha/2, off-diagonal beta/2.
  const int m = 2 * n + 1;
  const double off2 = 0.25 * beta * beta;
  double log_det = 0.0, prev = 0.0;
  for (int k = 0; k < m; ++k) {
    const double d = (k == 0 || k == m - 1) ? 0.5 * alpha : alpha;
    const double r = k == 0 ? d : d - off2 / prev;
    if (!(r > 0.0)) throw NotCoercive("chain Hessian is not positive definite");
    log_det += std::log(r);
    prev = r;
  }
  return 0.5 * m * std::log(2.0 * std::numbers::pi) - 0.5 * log_det;
}

}  // namespace mlfe
