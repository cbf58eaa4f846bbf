#include "mlfe/cayley.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mlfe/errors.hpp"
#include "mlfe/functionals.hpp"

namespace mlfe {

namespace {

double log_sum_exp(const double* a, int n) {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) m = std::max(m, a[i]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(a[i] - m);
  return m + std::log(s);
}

double safe_log(double v) { return std::log(std::max(v, kLogFloor)); }

}  // namespace

void CayleyOptions::validate() const {
  if (!(tol > 0.0)) throw ConfigError("cayley.tol must be positive");
  if (max_iter < 1) throw ConfigError("cayley.max_iter must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("cayley.damping must lie in (0, 1]");
}

RootDensity uniform_root(const Axis& axis) {
  RootDensity r{axis, std::vector<double>(axis.points, 1.0 / (axis.upper - axis.lower))};
  return r;
}

RootDensity gaussian_root(const Axis& axis, double mean, double variance) {
  if (!(variance > 0.0)) throw ConfigError("gaussian_root needs a positive variance");
  RootDensity r{axis, std::vector<double>(axis.points)};
  for (int i = 0; i < axis.points; ++i) {
    const double d = axis.node(i) - mean;
    r.values[i] = std::exp(-0.5 * d * d / variance);
  }
  const double m = r.mass();
  for (double& v : r.values) v /= m;
  return r;
}

CayleySolution solve_fixed_point(const PotentialPair& pair, const RootDensity& init,
                                 const CayleyOptions& opts) {
  opts.validate();
  const Axis& axis = init.axis;
  const int n = axis.points;
  const int kappa = pair.kappa();
  const auto x = axis.nodes();
  const auto w = trapezoid_weights(axis);
  if (*std::min_element(init.values.begin(), init.values.end()) <= 0.0) {
    throw ConfigError("cayley initializer must be positive");
  }
  const double init_mass = init.mass();
  if (std::abs(init_mass - 1.0) > 1e-8) throw ConfigError("cayley initializer must have unit mass");

  const double inv_k = 1.0 / kappa;
  const double expo = (kappa - 1.0) / kappa;
  // log of the kernel e^{-W(x_i - x_j) - U(x_j)/kappa} times the weight w_j.
  std::vector<double> log_kernel(static_cast<std::size_t>(n) * n);
  std::vector<double> u(n), log_w(n);
  for (int j = 0; j < n; ++j) {
    u[j] = pair.U(x[j]);
    log_w[j] = std::log(w[j]);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      log_kernel[i * n + j] = -pair.W(x[i] - x[j]) - u[j] * inv_k + log_w[j];
    }
  }

  CayleySolution sol;
  sol.nu0 = init;
  for (double& v : sol.nu0.values) v /= init_mass;
  auto& nu = sol.nu0.values;
  std::vector<double> log_src(n), log_rhs(n), scratch(n), next(n), image(n);

  for (int it = 1; it <= opts.max_iter; ++it) {
    for (int j = 0; j < n; ++j) log_src[j] = expo * safe_log(nu[j]);
#pragma omp parallel
    {
      std::vector<double> row(n);
#pragma omp for schedule(static)
      for (int i = 0; i < n; ++i) {
        const double* k = log_kernel.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) row[j] = k[j] + log_src[j];
        log_rhs[i] = -u[i] * inv_k + log_sum_exp(row.data(), n);
      }
    }
    // nu0 = rhs^kappa / Z^kappa with Z^kappa = int rhs^kappa.
    for (int i = 0; i < n; ++i) scratch[i] = kappa * log_rhs[i] + log_w[i];
    const double log_zk = log_sum_exp(scratch.data(), n);
    if (!std::isfinite(log_zk)) throw NonPositiveIterate("cayley iterate lost all mass");
    sol.z_nu0 = std::exp(log_zk * inv_k);
    double change = 0.0;
    for (int i = 0; i < n; ++i) {
      const double target = std::exp(kappa * log_rhs[i] - log_zk);
      if (!std::isfinite(target)) throw NonPositiveIterate("cayley iterate is not finite");
      image[i] = target;
      next[i] = (1.0 - opts.damping) * nu[i] + opts.damping * target;
      change += w[i] * std::abs(next[i] - nu[i]);
    }
    if (*std::max_element(next.begin(), next.end()) <= 0.0) {
      throw NonPositiveIterate("cayley iterate vanished; enlarge the domain or refine the grid");
    }
    sol.iterations = it;
    sol.residual_l1 = change;
    if (change < opts.tol) {
      // Linear damping keeps a 2^-k trace of the initializer, which dominates
      // the far tails; the undamped image takes its tails from e^{-U}.
      nu.swap(image);
      break;
    }
    nu.swap(next);
    if (it == opts.max_iter) {
      throw MaxIterExceeded("cayley solver did not converge within max_iter");
    }
  }
  const double m = sol.nu0.mass();
  for (double& v : nu) v /= m;

  sol.edge = assemble_edge(pair, sol.nu0);
  if (opts.assemble_joint) sol.joint = assemble_joint(root_marginal(sol.edge), sol.edge, kappa);
  return sol;
}

EdgeDensity assemble_edge(const PotentialPair& pair, const RootDensity& nu0, double* z_out) {
  const Axis& axis = nu0.axis;
  const int n = axis.points;
  const int kappa = pair.kappa();
  const auto x = axis.nodes();
  const double expo = (kappa - 1.0) / kappa;
  std::vector<double> log_e(static_cast<std::size_t>(n) * n);
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double ai = -pair.U(x[i]) / kappa + expo * safe_log(nu0.values[i]);
    for (int j = 0; j < n; ++j) {
      const double aj = -pair.U(x[j]) / kappa + expo * safe_log(nu0.values[j]);
      const double v = ai + aj - pair.W(x[i] - x[j]);
      log_e[i * n + j] = v;
      peak = std::max(peak, v);
    }
  }
  std::vector<double> e(log_e.size());
  for (std::size_t k = 0; k < e.size(); ++k) e[k] = std::exp(log_e[k] - peak);
  EdgeDensity edge(axis, std::move(e));
  const double mass = edge.mass();
  for (double& v : edge.values()) v /= mass;
  if (z_out) *z_out = mass * std::exp(peak);
  return edge;
}

JointDensity assemble_joint(const RootDensity& nu0, const EdgeDensity& edge, int kappa) {
  const Axis& axis = edge.axis();
  const int n = axis.points;
  JointDensity joint = JointDensity::zeros(axis, kappa);
  auto& v = joint.values();
  const auto& grid = joint.grid();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double root = nu0.values[i];
    if (!(root > kLogFloor)) continue;
    const double scale = std::pow(root, 1 - kappa);
    const std::size_t slab = grid.stride(0);
    for (std::size_t r = 0; r < slab; ++r) {
      const MultiIndex m = grid.to_multi(i * slab + r);
      double prod = scale;
      for (int a = 1; a <= kappa; ++a) prod *= edge.at(i, m[a]);
      v[i * slab + r] = prod;
    }
  }
  const double mass = joint.mass();
  if (!(mass > 0.0)) throw NumericalError("assembled joint has zero mass");
  for (double& p : v) p /= mass;
  return joint;
}

StationarityReport stationarity_residuals(const PotentialPair& pair, const CayleySolution& sol) {
  if (sol.joint.values().empty()) throw ConfigError("stationarity residuals need an assembled joint");
  const Axis& axis = sol.nu0.axis;
  const int n = axis.points;
  const int kappa = pair.kappa();
  const auto x = axis.nodes();
  const auto w = trapezoid_weights(axis);
  const TensorGrid line(axis, 1);
  StationarityReport rep;

  std::vector<double> log_nu(n);
  for (int i = 0; i < n; ++i) log_nu[i] = safe_log(sol.nu0.values[i]);
  const auto dlog_nu = central_gradient(line, log_nu, 0);
  const auto edge_root = root_marginal(sol.edge);
  for (int i = 0; i < n; ++i) {
    if (!(sol.nu0.values[i] > 1e-8)) continue;
    ++rep.bulk_nodes;
    double zeta = 0.0;
    for (int j = 0; j < n; ++j) zeta += w[j] * pair.dW(x[i] - x[j]) * sol.edge.at(i, j);
    zeta /= edge_root.values[i];
    const double r = dlog_nu[i] + pair.dU(x[i]) + kappa * zeta;
    rep.gradient_identity = std::max(rep.gradient_identity, std::abs(r));
  }

  rep.i_kappa = i_kappa(pair, sol.joint);

  const auto gamma = gamma_field(pair, sol.joint);
  std::vector<double> log_e(sol.edge.values().size());
  for (std::size_t k = 0; k < log_e.size(); ++k) log_e[k] = safe_log(sol.edge.values()[k]);
  const auto dlog_e = central_gradient(sol.edge.grid(), log_e, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!(sol.edge.at(i, j) > 1e-8)) continue;
      const double r = gamma.at(i, j) + dlog_e[static_cast<std::size_t>(i) * n + j];
      rep.conditional_drift = std::max(rep.conditional_drift, std::abs(r));
    }
  }
  return rep;
}

std::vector<double> to_lacker_zhang(const PotentialPair& pair, const CayleySolution& sol) {
  const Axis& axis = sol.nu0.axis;
  std::vector<double> f(axis.points);
  for (int i = 0; i < axis.points; ++i) {
    f[i] = -(pair.U(axis.node(i)) + safe_log(sol.nu0.values[i])) / pair.kappa();
  }
  return f;
}

CayleySolution from_lacker_zhang(const PotentialPair& pair, const Axis& axis,
                                 const std::vector<double>& f, bool assemble) {
  const int n = axis.points;
  if (static_cast<int>(f.size()) != n) throw ConfigError("F must have one value per node");
  const auto w = trapezoid_weights(axis);
  std::vector<double> expo(n), weighted(n);
  for (int i = 0; i < n; ++i) {
    expo[i] = -pair.U(axis.node(i)) - pair.kappa() * f[i];
    weighted[i] = expo[i] + std::log(w[i]);
  }
  const double log_zf = log_sum_exp(weighted.data(), n);
  if (!std::isfinite(log_zf)) throw NumericalError("Z_F diverges on the truncated domain");
  CayleySolution sol;
  sol.nu0 = RootDensity{axis, std::vector<double>(n)};
  for (int i = 0; i < n; ++i) sol.nu0.values[i] = std::exp(expo[i] - log_zf);
  sol.edge = assemble_edge(pair, sol.nu0, &sol.z_nu0);
  if (assemble) sol.joint = assemble_joint(root_marginal(sol.edge), sol.edge, pair.kappa());
  return sol;
}

double lacker_zhang_residual(const PotentialPair& pair, const Axis& axis,
                             const std::vector<double>& f) {
  const int n = axis.points;
  const auto x = axis.nodes();
  const auto w = trapezoid_weights(axis);
  std::vector<double> row(n);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      row[j] = -pair.U(x[j]) - pair.W(x[i] - x[j]) - (pair.kappa() - 1) * f[j] + std::log(w[j]);
    }
    const double c = f[i] + log_sum_exp(row.data(), n);
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  return hi - lo;
}

double gaussian_fixed_point_variance(double alpha, double beta, int kappa) {
  const double a = alpha + beta;
  double s = a;  // precision 1/sigma^2, started at the beta = 0 value
  for (int it = 0; it < 100000; ++it) {
    const double p = a / kappa + (kappa - 1.0) * s / kappa - 0.5 * beta;
    if (!(p > 0.0)) throw NotCoercive("Gaussian fixed point map leaves the integrable regime");
    const double next = a - 0.5 * kappa * beta - kappa * beta * beta / (4.0 * p);
    if (!(next > 0.0)) throw NotCoercive("Gaussian fixed point has non-positive precision");
    const double damped = 0.5 * (s + next);
    if (std::abs(damped - s) < 1e-15 * s) return 1.0 / damped;
    s = damped;
  }
  throw MaxIterExceeded("Gaussian variance map did not converge");
}

}  // namespace mlfe
