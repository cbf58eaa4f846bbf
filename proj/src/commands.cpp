#include "mlfe/commands.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <limits>

#include "mlfe/cayley.hpp"
#include "mlfe/chain.hpp"
#include "mlfe/density_io.hpp"
#include "mlfe/errors.hpp"
#include "mlfe/particles.hpp"
#include "mlfe/svg.hpp"

namespace mlfe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void prepare_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + cfg.out_dir.string() + "'");
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

CayleySolution solve_for(const RunConfig& cfg, bool assemble) {
  CayleyOptions opts = cfg.cayley;
  opts.assemble_joint = assemble;
  return solve_fixed_point(cfg.pair, uniform_root(cfg.axis()), opts);
}

json conservation_json(const ConservationLog& log) {
  return {{"steps", log.steps},
          {"max_sweep_mass_change", log.max_sweep_mass_change},
          {"max_mass_defect", log.max_mass_defect},
          {"min_value", log.min_value},
          {"max_leaf_exchange_defect", log.max_leaf_exchange_defect}};
}

std::vector<double> column(std::span<const FunctionalReport> s, double FunctionalReport::*m) {
  std::vector<double> out;
  for (const auto& r : s) out.push_back(r.*m);
  return out;
}

std::vector<double> h_hat2_column(std::span<const FunctionalReport> s) {
  std::vector<double> out;
  for (const auto& r : s) out.push_back(r.h_hat2.value_or(std::numeric_limits<double>::quiet_NaN()));
  return out;
}

FlowState run_flow(const RunConfig& cfg) {
  const auto init = initial_density(cfg);
  long rows = 0;
  auto observer = [&](const FlowState& s) {
    if (cfg.snapshot_every > 0 && rows % cfg.snapshot_every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "snapshot_%06ld.bin", rows);
      write_density(cfg.out_dir / name, s.density);
    }
    ++rows;
  };
  const auto start = std::chrono::steady_clock::now();
  auto state = run(cfg.pair, init, cfg.flow, observer);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  emit_event({{"event", "flow_done"}, {"steps", state.conservation.steps}, {"seconds", secs}});
  return state;
}

}  // namespace

JointDensity initial_density(const RunConfig& cfg) {
  const Axis axis = cfg.axis();
  switch (cfg.init.kind) {
    case InitKind::gaussian_product:
      return gaussian_product(axis, cfg.kappa, cfg.init.mean, cfg.init.variance);
    case InitKind::gaussian_mixture:
      return gaussian_mixture(axis, cfg.kappa, cfg.init.m, cfg.init.variance);
    case InitKind::correlated_gaussian:
      return correlated_gaussian(axis, cfg.kappa, cfg.init.variance, cfg.init.root_leaf,
                                 cfg.init.leaf_leaf);
    case InitKind::cayley:
      return solve_for(cfg, true).joint;
  }
  throw ConfigError("unknown init type");
}

void emit_event(const json& event) { std::cerr << event.dump() << std::endl; }

ContrastSummary contrast_summary(std::span<const FunctionalReport> series, double t0, double t1) {
  ContrastSummary c;
  c.h_kappa_max_increase = -std::numeric_limits<double>::infinity();
  c.h_hat2_max_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < series.size(); ++k) {
    c.h_kappa_max_increase = std::max(c.h_kappa_max_increase, series[k].h_kappa - series[k - 1].h_kappa);
    if (series[k].t > t0 && series[k].t < t1 && series[k].h_hat2 && series[k - 1].h_hat2) {
      const double inc = *series[k].h_hat2 - *series[k - 1].h_hat2;
      if (inc > c.h_hat2_max_increase) {
        c.h_hat2_max_increase = inc;
        c.h_hat2_increase_time = series[k].t;
      }
    }
  }
  return c;
}

void cmd_flow(const RunConfig& cfg) {
  prepare_out_dir(cfg);
  const auto state = run_flow(cfg);
  write_file_atomic(cfg.out_dir / "flow_timeseries.csv", to_csv(state.ledger));
  write_json(cfg.out_dir / "conservation.json", conservation_json(state.conservation));
  PlotPanel h{"sparse free energy", "t", "H_kappa", {{"H_kappa", column(state.ledger, &FunctionalReport::t),
                                                      column(state.ledger, &FunctionalReport::h_kappa)}}};
  std::vector<PlotPanel> panels{h};
  if (cfg.kappa == 2) {
    panels.push_back({"edge free energy", "t", "H_hat_2",
                      {{"H_hat_2", column(state.ledger, &FunctionalReport::t), h_hat2_column(state.ledger),
                        "#d62728"}}});
  }
  write_file_atomic(cfg.out_dir / "flow_functionals.svg", render_svg(panels));
}

void cmd_compare_mrf(const RunConfig& cfg) {
  if (cfg.kappa != 2) throw ConfigError("compare-mrf needs kappa = 2");
  prepare_out_dir(cfg);
  const auto state = run_flow(cfg);
  write_file_atomic(cfg.out_dir / "flow_timeseries.csv", to_csv(state.ledger));
  const auto t = column(state.ledger, &FunctionalReport::t);
  std::vector<PlotPanel> panels{
      {"H_kappa(mu_t)", "t", "H_kappa", {{"H_kappa", t, column(state.ledger, &FunctionalReport::h_kappa)}}},
      {"H_hat_2(mu_t)", "t", "H_hat_2", {{"H_hat_2", t, h_hat2_column(state.ledger), "#d62728"}}}};
  write_file_atomic(cfg.out_dir / "compare_mrf.svg", render_svg(panels));
  const auto c = contrast_summary(state.ledger);
  write_json(cfg.out_dir / "contrast.json",
             {{"h_kappa_max_increase", c.h_kappa_max_increase},
              {"h_hat2_max_increase", c.h_hat2_max_increase},
              {"h_hat2_increase_time", c.h_hat2_increase_time},
              {"conservation", conservation_json(state.conservation)}});
  emit_event({{"event", "contrast"}, {"h_kappa_max_increase", c.h_kappa_max_increase},
              {"h_hat2_max_increase", c.h_hat2_max_increase}});
}

void cmd_cayley(const RunConfig& cfg) {
  prepare_out_dir(cfg);
  const auto sol = solve_for(cfg, true);
  const auto rep = stationarity_residuals(cfg.pair, sol);
  std::string csv = "x,nu0\n";
  for (int i = 0; i < sol.nu0.axis.points; ++i) {
    csv += format_double(sol.nu0.axis.node(i)) + ',' + format_double(sol.nu0.values[i]) + '\n';
  }
  write_file_atomic(cfg.out_dir / "nu0.csv", csv);
  double var = 0.0;
  const auto w = trapezoid_weights(sol.nu0.axis);
  for (int i = 0; i < sol.nu0.axis.points; ++i) {
    const double x = sol.nu0.axis.node(i);
    var += w[i] * x * x * sol.nu0.values[i];
  }
  json j = {{"iterations", sol.iterations},
            {"residual_l1", sol.residual_l1},
            {"z_nu0", sol.z_nu0},
            {"root_variance", var},
            {"gradient_identity", rep.gradient_identity},
            {"i_kappa", rep.i_kappa},
            {"conditional_drift", rep.conditional_drift},
            {"h_kappa", h_kappa(cfg.pair, sol.joint)}};
  if (cfg.pair.family() == PotentialFamily::quadratic) {
    j["gaussian_oracle_variance"] = gaussian_fixed_point_variance(cfg.pair.alpha(), cfg.pair.beta(), cfg.kappa);
  }
  write_json(cfg.out_dir / "residuals.json", j);
  write_density(cfg.out_dir / "joint.bin", sol.joint);
  emit_event({{"event", "cayley_done"}, {"iterations", sol.iterations}, {"i_kappa", rep.i_kappa}});
}

void cmd_chain(const RunConfig& cfg) {
  if (cfg.kappa != 2) throw ConfigError("chain needs kappa = 2");
  prepare_out_dir(cfg);
  const auto density = initial_density(cfg);
  const auto rows = chain_report(cfg.pair, density, cfg.chain.n_list);
  write_file_atomic(cfg.out_dir / "chain_report.csv", to_csv(rows));
  write_json(cfg.out_dir / "h_star.json",
             {{"h_star", rows.front().h_star_spectral}, {"h2_density", h_kappa(cfg.pair, density)}});
}

void cmd_particles(const RunConfig& cfg) {
  if (cfg.init.kind == InitKind::cayley || cfg.init.kind == InitKind::correlated_gaussian) {
    throw ConfigError("particles support gaussian_product and gaussian_mixture starts only");
  }
  prepare_out_dir(cfg);
  ParticleInit init;
  init.kind = cfg.init.kind == InitKind::gaussian_mixture ? ParticleInit::Kind::gaussian_mixture
                                                          : ParticleInit::Kind::gaussian_product;
  init.mean = cfg.init.mean;
  init.m = cfg.init.m;
  init.variance = cfg.init.variance;
  ParticleEnsemble final_state;
  const auto rows = moment_series(cfg.pair, init, cfg.axis(), cfg.particles, &final_state);
  write_file_atomic(cfg.out_dir / "particles_timeseries.csv", to_csv(rows));
  const auto ks = edge_exchangeability_ks(final_state);
  emit_event({{"event", "particles_done"}, {"ks_statistic", ks.statistic}, {"ks_p_value", ks.p_value}});
}

int run_command(const std::string& name, const RunConfig& cfg) {
  try {
    if (name == "flow") cmd_flow(cfg);
    else if (name == "cayley") cmd_cayley(cfg);
    else if (name == "chain") cmd_chain(cfg);
    else if (name == "particles") cmd_particles(cfg);
    else if (name == "compare-mrf") cmd_compare_mrf(cfg);
    else throw ConfigError("unknown command '" + name + "'");
  } catch (const ConfigError& e) {
    emit_event({{"event", "error"}, {"kind", "config"}, {"message", e.what()}});
    return 2;
  } catch (const NumericalError& e) {
    emit_event({{"event", "error"}, {"kind", "numerical"}, {"message", e.what()}});
    return 3;
  }
  return 0;
}

}  // namespace mlfe
