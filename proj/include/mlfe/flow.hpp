#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "mlfe/functionals.hpp"
#include "mlfe/measures.hpp"
#include "mlfe/potentials.hpp"

namespace mlfe {

enum class FlowScheme { split_implicit };

struct FlowConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  int output_every = 10;
  FlowScheme scheme = FlowScheme::split_implicit;
  int symmetrize_every = 1;
  /// Keep gamma of every step (needed by edge_flow).
  bool record_gamma = false;
  /// Evaluate functionals at output steps (off for pure transport runs).
  bool record_functionals = true;

  void validate() const;  // throws ConfigError
  long steps() const;
};

/// Extremes seen by the conservation and symmetry checks over a run.
struct ConservationLog {
  double max_sweep_mass_change = 0.0;  // |mass after sweeps - mass before| per step
  double max_mass_defect = 0.0;        // |mass - 1| after projection
  double min_value = std::numeric_limits<double>::infinity();
  double max_leaf_exchange_defect = 0.0;
  long steps = 0;
};

struct GammaSample {
  double t = 0.0;
  GammaField gamma;
};

struct FlowState {
  double t = 0.0;
  JointDensity density;
  GammaField gamma;
  std::vector<FunctionalReport> ledger;
  std::vector<GammaSample> gamma_series;
  ConservationLog conservation;
};

/// Scharfetter-Gummel weight B(z) = z / (e^z - 1).
double bernoulli_weight(double z);

/// One implicit zero-flux drift-diffusion solve along a single pencil:
///   w_i (r_i' - r_i) = -dt (F_{i+1/2} - F_{i-1/2}),
///   F_{i+1/2} = (B(d_i) r_i - B(-d_i) r_{i+1}) / h,
/// where d_i is the potential difference between nodes i+1 and i. The
/// operator is an M-matrix, so the update is positive and conserves
/// sum_i w_i r_i. Throws NumericalError on a degenerate pivot.
void solve_pencil(double* values, std::size_t stride, int n, const double* delta,
                  const double* weights, double dt_over_h);

/// Frozen-gamma Lie-split implicit stepper for the joint density.
///
/// Sweep order is axis 0 (root, drift b) then leaves 1..kappa (drift
/// gamma(x_v, x0)), followed by leaf symmetrization. The root-axis
/// factorization does not depend on the density and is built once.
class FlowStepper {
 public:
  FlowStepper(PotentialPair pair, Axis axis, int kappa, FlowConfig cfg);

  /// Advances the state by one dt in place.
  void advance(FlowState& state);

  const FlowConfig& config() const { return cfg_; }

 private:
  void sweep_root(std::vector<double>& v) const;
  void sweep_leaf(std::vector<double>& v, int axis, const GammaField& gamma) const;

  PotentialPair pair_;
  TensorGrid grid_;
  int kappa_;
  FlowConfig cfg_;
  std::vector<double> weights_;
  // Root-axis factorization, laid out [node][lane] with lane = leaf multi-index.
  std::vector<double> root_sub_, root_cprime_, root_pivot_;
  long step_index_ = 0;
};

/// Starts a state at t = 0 with gamma evaluated on the initial density.
FlowState initial_state(const PotentialPair& pair, const JointDensity& init);

/// One step; convenience wrapper that builds a stepper.
FlowState step(const PotentialPair& pair, const FlowState& state, const FlowConfig& cfg);

using FlowObserver = std::function<void(const FlowState&)>;

/// Steps to t_end, appending a ledger row at t = 0, every output_every steps
/// and at the final step. `on_output` runs after each ledger row.
FlowState run(const PotentialPair& pair, const JointDensity& init, const FlowConfig& cfg,
              const FlowObserver& on_output = {});

/// Two-coordinate companion flow for the edge marginal with drifts
/// (gamma(x0,x1), gamma(x1,x0)) taken from a recorded joint run.
/// Requires one gamma sample per step at t = k dt.
EdgeDensity edge_flow(const EdgeDensity& init_edge, const std::vector<GammaSample>& gamma_series,
                      const FlowConfig& cfg);

}  // namespace mlfe
