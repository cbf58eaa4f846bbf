#pragma once

#include <span>
#include <string>

#include <json.hpp>

#include "mlfe/functionals.hpp"
#include "mlfe/run_config.hpp"

namespace mlfe {

/// Initial joint density described by cfg.init on cfg's axis.
JointDensity initial_density(const RunConfig& cfg);

/// Writes one JSON object per line to standard error.
void emit_event(const nlohmann::json& event);

/// Largest one-step increase of H_kappa over the whole series and of the
/// edge free energy over rows with t in (t0, t1).
struct ContrastSummary {
  double h_kappa_max_increase = 0.0;
  double h_hat2_max_increase = 0.0;
  double h_hat2_increase_time = 0.0;
};
ContrastSummary contrast_summary(std::span<const FunctionalReport> series, double t0 = 0.05,
                                 double t1 = 1.0);

// Each command writes its artifacts into cfg.out_dir and throws ConfigError or
// NumericalError on failure; run_command maps those to exit codes 2 and 3.
void cmd_flow(const RunConfig& cfg);
void cmd_cayley(const RunConfig& cfg);
void cmd_chain(const RunConfig& cfg);
void cmd_particles(const RunConfig& cfg);
void cmd_compare_mrf(const RunConfig& cfg);

int run_command(const std::string& name, const RunConfig& cfg);

}  // namespace mlfe
