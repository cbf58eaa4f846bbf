#include "mlfe/flow.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "mlfe/errors.hpp"

namespace mlfe {

void FlowConfig::validate() const {
  if (!(dt > 0.0) || dt > 0.1) throw ConfigError("flow.dt must lie in (0, 0.1]");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("flow.t_end must be >= 0");
  if (output_every < 1) throw ConfigError("flow.output_every must be positive");
  if (symmetrize_every < 1) throw ConfigError("flow.symmetrize_every must be positive");
}

long FlowConfig::steps() const { return std::lround(t_end / dt); }

double bernoulli_weight(double z) {
  if (std::abs(z) < 1e-8) return 1.0 - 0.5 * z;
  if (z > 700.0) return z * std::exp(-z);
  return z / std::expm1(z);
}

namespace {

constexpr double kMassAbort = 1e-8;

// Tridiagonal factorization for one pencil: row i reads
//   sub_i r_{i-1} + diag_i r_i + sup_i r_{i+1} = w_i r_i(old).
struct PencilFactor {
  std::vector<double> sub, cprime, pivot;  // pivot = 1 / (diag - sub c'_{i-1})
};

void factor_pencil(int n, const double* delta, std::size_t delta_stride, const double* w,
                   double dt_over_h, double* sub, double* cprime, double* pivot,
                   std::size_t out_stride) {
  double prev_c = 0.0;
  for (int i = 0; i < n; ++i) {
    double diag = w[i];
    double a = 0.0, c = 0.0;
    if (i > 0) {
      const double d = delta[(i - 1) * delta_stride];
      a = -dt_over_h * bernoulli_weight(d);
      diag += dt_over_h * bernoulli_weight(-d);
    }
    if (i < n - 1) {
      const double d = delta[i * delta_stride];
      c = -dt_over_h * bernoulli_weight(-d);
      diag += dt_over_h * bernoulli_weight(d);
    }
    const double denom = diag - a * prev_c;
    if (!(denom > 0.0) || !std::isfinite(denom)) {
      throw NumericalError("tridiagonal solve failed: non-positive pivot (check dt and grid)");
    }
    const double p = 1.0 / denom;
    prev_c = c * p;
    sub[i * out_stride] = a;
    cprime[i * out_stride] = prev_c;
    pivot[i * out_stride] = p;
  }
}

}  // namespace

void solve_pencil(double* values, std::size_t stride, int n, const double* delta,
                  const double* weights, double dt_over_h) {
  std::vector<double> sub(n), cprime(n), pivot(n);
  factor_pencil(n, delta, 1, weights, dt_over_h, sub.data(), cprime.data(), pivot.data(), 1);
  double prev = 0.0;
  for (int i = 0; i < n; ++i) {
    double& r = values[i * stride];
    r = (weights[i] * r - sub[i] * prev) * pivot[i];
    prev = r;
  }
  for (int i = n - 2; i >= 0; --i) values[i * stride] -= cprime[i] * values[(i + 1) * stride];
}

FlowStepper::FlowStepper(PotentialPair pair, Axis axis, int kappa, FlowConfig cfg)
    : pair_(std::move(pair)), grid_(axis, 1 + kappa), kappa_(kappa), cfg_(cfg) {
  cfg_.validate();
  weights_ = trapezoid_weights(axis);
  const int n = axis.points;
  const auto x = axis.nodes();
  const double dt_over_h = cfg_.dt / axis.spacing();
  const std::size_t lanes = grid_.stride(0);

  // Exact potential differences of U(s) + sum_v W(s - x_v) between nodes i+1 and i.
  std::vector<double> udiff(n - 1), wdiff(static_cast<std::size_t>(n - 1) * n);
  for (int i = 0; i + 1 < n; ++i) {
    udiff[i] = pair_.U(x[i + 1]) - pair_.U(x[i]);
    for (int k = 0; k < n; ++k) wdiff[i * n + k] = pair_.W(x[i + 1] - x[k]) - pair_.W(x[i] - x[k]);
  }
  root_sub_.resize(n * lanes);
  root_cprime_.resize(n * lanes);
  root_pivot_.resize(n * lanes);
#pragma omp parallel
  {
    std::vector<double> delta(n);
#pragma omp for schedule(static)
    for (std::size_t lane = 0; lane < lanes; ++lane) {
      const MultiIndex m = grid_.to_multi(lane);  // leaf indices sit at m[1..kappa]
      for (int i = 0; i + 1 < n; ++i) {
        double d = udiff[i];
        for (int v = 1; v <= kappa_; ++v) d += wdiff[i * n + m[v]];
        delta[i] = d;
      }
      factor_pencil(n, delta.data(), 1, weights_.data(), dt_over_h, root_sub_.data() + lane,
                    root_cprime_.data() + lane, root_pivot_.data() + lane, lanes);
    }
  }
}

void FlowStepper::sweep_root(std::vector<double>& v) const {
  const int n = grid_.points();
  const std::size_t lanes = grid_.stride(0);
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (lanes + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t lo = c * kChunk;
    const std::size_t hi = std::min(lanes, lo + kChunk);
    for (int i = 0; i < n; ++i) {
      double* row = v.data() + i * lanes;
      const double* prev = i > 0 ? v.data() + (i - 1) * lanes : nullptr;
      const double* a = root_sub_.data() + i * lanes;
      const double* p = root_pivot_.data() + i * lanes;
      const double wi = weights_[i];
      if (prev) {
        for (std::size_t l = lo; l < hi; ++l) row[l] = (wi * row[l] - a[l] * prev[l]) * p[l];
      } else {
        for (std::size_t l = lo; l < hi; ++l) row[l] = wi * row[l] * p[l];
      }
    }
    for (int i = n - 2; i >= 0; --i) {
      double* row = v.data() + i * lanes;
      const double* next = v.data() + (i + 1) * lanes;
      const double* cp = root_cprime_.data() + i * lanes;
      for (std::size_t l = lo; l < hi; ++l) row[l] -= cp[l] * next[l];
    }
  }
}

void FlowStepper::sweep_leaf(std::vector<double>& v, int axis, const GammaField& gamma) const {
  const int n = grid_.points();
  const double h = grid_.axis().spacing();
  const double dt_over_h = cfg_.dt / h;

  // One factorization per root node: the leaf drift gamma(x_v, x0) only sees x0.
  std::vector<double> sub(static_cast<std::size_t>(n) * n), cprime(sub.size()), pivot(sub.size());
#pragma omp parallel
  {
    std::vector<double> delta(n);
#pragma omp for schedule(static)
    for (int i0 = 0; i0 < n; ++i0) {
      for (int m = 0; m + 1 < n; ++m) {
        delta[m] = 0.5 * h * (gamma.at(m, i0) + gamma.at(m + 1, i0));
      }
      factor_pencil(n, delta.data(), 1, weights_.data(), dt_over_h, sub.data() + i0 * n,
                    cprime.data() + i0 * n, pivot.data() + i0 * n, 1);
    }
  }

  const std::size_t stride = grid_.stride(axis);
  const std::size_t outer = grid_.size() / (n * stride);
  const std::size_t slab = grid_.stride(0);
#pragma omp parallel for schedule(static)
  for (std::size_t o = 0; o < outer; ++o) {
    double* blk = v.data() + o * n * stride;
    const std::size_t i0 = (o * n * stride) / slab;
    const double* a = sub.data() + i0 * n;
    const double* cp = cprime.data() + i0 * n;
    const double* p = pivot.data() + i0 * n;
    for (int m = 0; m < n; ++m) {
      double* row = blk + m * stride;
      const double wm = weights_[m];
      if (m > 0) {
        const double* prev = row - stride;
        for (std::size_t l = 0; l < stride; ++l) row[l] = (wm * row[l] - a[m] * prev[l]) * p[m];
      } else {
        for (std::size_t l = 0; l < stride; ++l) row[l] = wm * row[l] * p[m];
      }
    }
    for (int m = n - 2; m >= 0; --m) {
      double* row = blk + m * stride;
      const double* next = row + stride;
      for (std::size_t l = 0; l < stride; ++l) row[l] -= cp[m] * next[l];
    }
  }
}

namespace {

double min_value(std::span<const double> v) { return *std::min_element(v.begin(), v.end()); }

double leaf_defect_fast(const JointDensity& d) {
  if (d.kappa() != 2) return leaf_exchange_defect(d);
  const int n = d.grid().points();
  const auto v = d.values();
  double defect = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* s = v.data() + static_cast<std::size_t>(i) * n * n;
    for (int j = 0; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) defect = std::max(defect, std::abs(s[j * n + k] - s[k * n + j]));
    }
  }
  return defect;
}

}  // namespace

void FlowStepper::advance(FlowState& state) {
  auto& v = state.density.values();
  state.gamma = gamma_field(pair_, state.density);
  if (cfg_.record_gamma) state.gamma_series.push_back({state.t, state.gamma});

  const double before = integrate(grid_, v);
  sweep_root(v);
  for (int axis = 1; axis <= kappa_; ++axis) sweep_leaf(v, axis, state.gamma);
  const double after = integrate(grid_, v);

  auto& log = state.conservation;
  log.max_sweep_mass_change = std::max(log.max_sweep_mass_change, std::abs(after - before));
  log.min_value = std::min(log.min_value, min_value(v));

  ++step_index_;
  if (step_index_ % cfg_.symmetrize_every == 0) {
    symmetrize_in_place(state.density);
    log.max_leaf_exchange_defect = std::max(log.max_leaf_exchange_defect, leaf_defect_fast(state.density));
  }
  const double defect = std::abs(state.density.mass() - 1.0);
  log.max_mass_defect = std::max(log.max_mass_defect, defect);
  if (defect > kMassAbort || !std::isfinite(defect)) {
    throw NumericalError("mass defect exceeded 1e-8; aborting flow");
  }
  ++log.steps;
  state.t += cfg_.dt;
}

FlowState initial_state(const PotentialPair& pair, const JointDensity& init) {
  FlowState s;
  s.t = 0.0;
  s.density = init;
  s.gamma = gamma_field(pair, init);
  s.conservation.min_value = min_value(init.values());
  return s;
}

FlowState step(const PotentialPair& pair, const FlowState& state, const FlowConfig& cfg) {
  FlowStepper stepper(pair, state.density.axis(), state.density.kappa(), cfg);
  FlowState next = state;
  stepper.advance(next);
  return next;
}

FlowState run(const PotentialPair& pair, const JointDensity& init, const FlowConfig& cfg,
              const FlowObserver& on_output) {
  cfg.validate();
  if (pair.kappa() != init.kappa()) throw ConfigError("potential pair and density disagree on kappa");
  FlowState state = initial_state(pair, init);
  auto record = [&] {
    if (cfg.record_functionals) state.ledger.push_back(evaluate_functionals(pair, state.density, state.t));
    if (on_output) on_output(state);
  };
  record();
  const long steps = cfg.steps();
  if (steps == 0) return state;
  FlowStepper stepper(pair, init.axis(), init.kappa(), cfg);
  for (long k = 1; k <= steps; ++k) {
    stepper.advance(state);
    state.t = k * cfg.dt;  // avoid drift from repeated addition
    if (k % cfg.output_every == 0 || k == steps) record();
  }
  return state;
}

EdgeDensity edge_flow(const EdgeDensity& init_edge, const std::vector<GammaSample>& gamma_series,
                      const FlowConfig& cfg) {
  cfg.validate();
  const long steps = cfg.steps();
  if (static_cast<long>(gamma_series.size()) < steps) {
    throw ConfigError("edge_flow: gamma series shorter than the requested run");
  }
  const Axis& axis = init_edge.axis();
  const int n = axis.points;
  const double h = axis.spacing();
  const auto w = trapezoid_weights(axis);
  EdgeDensity e = init_edge;
  auto& v = e.values();
  std::vector<double> delta(n);
  for (long k = 0; k < steps; ++k) {
    const auto& sample = gamma_series[k];
    if (std::abs(sample.t - k * cfg.dt) > 1e-9 || !(sample.gamma.axis == axis)) {
      throw ConfigError("edge_flow: gamma series does not match the time grid");
    }
    const auto& g = sample.gamma;
    // Axis 0 carries gamma(x0, x1); axis 1 carries gamma(x1, x0).
    for (int j = 0; j < n; ++j) {
      for (int m = 0; m + 1 < n; ++m) delta[m] = 0.5 * h * (g.at(m, j) + g.at(m + 1, j));
      solve_pencil(v.data() + j, n, n, delta.data(), w.data(), cfg.dt / h);
    }
    for (int i = 0; i < n; ++i) {
      for (int m = 0; m + 1 < n; ++m) delta[m] = 0.5 * h * (g.at(m, i) + g.at(m + 1, i));
      solve_pencil(v.data() + static_cast<std::size_t>(i) * n, 1, n, delta.data(), w.data(), cfg.dt / h);
    }
  }
  return e;
}

}  // namespace mlfe
