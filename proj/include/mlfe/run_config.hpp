#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlfe/cayley.hpp"
#include "mlfe/flow.hpp"
#include "mlfe/particles.hpp"
#include "mlfe/potentials.hpp"

namespace mlfe {

struct GridConfig {
  double half_width = 6.0;
  int points = 64;

  Axis axis() const { return Axis::symmetric(half_width, points); }
};

enum class InitKind { gaussian_product, gaussian_mixture, correlated_gaussian, cayley };

struct InitConfig {
  InitKind kind = InitKind::gaussian_product;
  double mean = 0.0;
  double m = 1.2;
  double variance = 1.0;
  double root_leaf = -0.5;  // correlations of correlated_gaussian
  double leaf_leaf = 0.9;
};

struct ChainConfig {
  std::vector<int> n_list{1, 2, 4, 8, 16, 32, 64};
};

/// One experiment. Parsed from JSON; every object rejects keys it does not know.
///
///   {"kappa": 2,
///    "potentials": {"family": "quadratic", "alpha": 2, "beta": 1.5},
///    "grid": {"half_width": 6, "points": 64},
///    "flow": {"dt": 1e-3, "t_end": 1.5, "output_every": 10,
///             "symmetrize_every": 1, "snapshot_every": 0},
///    "init": {"type": "correlated_gaussian",
///             "params": {"variance": 1, "root_leaf": -0.5, "leaf_leaf": 0.9}},
///    "particles": {"n": 200000, "seed": 7, "bins": 48, "n_min": 20,
///                  "dt": 5e-4, "t_end": 1, "output_every": 50},
///    "chain": {"n_list": [1, 2, 4]},
///    "cayley": {"tol": 1e-10, "max_iter": 500, "damping": 0.5},
///    "out_dir": "out/fig1"}
///
/// Only kappa, potentials and grid are required.
struct RunConfig {
  int kappa = 2;
  PotentialPair pair = PotentialPair::quadratic(2.0, 1.5, 2);
  GridConfig grid;
  FlowConfig flow;
  int snapshot_every = 0;  // in output rows; 0 disables density snapshots
  InitConfig init;
  ParticleConfig particles;
  ChainConfig chain;
  CayleyOptions cayley;
  std::filesystem::path out_dir = "out";

  Axis axis() const { return grid.axis(); }
};

RunConfig parse_run_config(const nlohmann::json& j);
/// Reads and parses a config file; throws ConfigError on any problem.
RunConfig load_run_config(const std::filesystem::path& path);

/// "1,2,4" -> {1, 2, 4}; throws ConfigError.
std::vector<int> parse_n_list(const std::string& text);

}  // namespace mlfe
