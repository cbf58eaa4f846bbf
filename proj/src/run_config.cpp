#include "mlfe/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "mlfe/errors.hpp"

namespace mlfe {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

double number(const json& j, const std::string& where, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

long long integer(const json& j, const std::string& where, const char* key, long long fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  return v.get<long long>();
}

InitConfig parse_init(const json& j) {
  reject_unknown(j, "init", {"type", "params"});
  InitConfig init;
  if (!j.contains("type") || !j.at("type").is_string()) throw ConfigError("init.type is required");
  const auto type = j.at("type").get<std::string>();
  const json params = j.value("params", json::object());
  if (type == "gaussian_product") {
    reject_unknown(params, "init.params", {"mean", "variance"});
    init.kind = InitKind::gaussian_product;
    init.mean = number(params, "init.params", "mean", 0.0);
    init.variance = number(params, "init.params", "variance", 1.0);
  } else if (type == "gaussian_mixture") {
    reject_unknown(params, "init.params", {"m", "variance"});
    init.kind = InitKind::gaussian_mixture;
    init.m = number(params, "init.params", "m", 1.2);
    init.variance = number(params, "init.params", "variance", 0.25);
  } else if (type == "correlated_gaussian") {
    reject_unknown(params, "init.params", {"variance", "root_leaf", "leaf_leaf"});
    init.kind = InitKind::correlated_gaussian;
    init.variance = number(params, "init.params", "variance", 1.0);
    init.root_leaf = number(params, "init.params", "root_leaf", -0.5);
    init.leaf_leaf = number(params, "init.params", "leaf_leaf", 0.9);
  } else if (type == "cayley") {
    reject_unknown(params, "init.params", {});
    init.kind = InitKind::cayley;
  } else {
    throw ConfigError("init.type must be gaussian_product, gaussian_mixture, correlated_gaussian or cayley");
  }
  if (!(init.variance > 0.0)) throw ConfigError("init variance must be positive");
  return init;
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  reject_unknown(j, "config", {"kappa", "potentials", "grid", "flow", "init", "particles", "chain",
                               "cayley", "out_dir"});
  RunConfig cfg;
  if (!j.contains("kappa")) throw ConfigError("config.kappa is required");
  cfg.kappa = static_cast<int>(integer(j, "config", "kappa", 2));
  if (cfg.kappa != 2 && cfg.kappa != 3) throw ConfigError("config.kappa must be 2 or 3");
  if (!j.contains("potentials")) throw ConfigError("config.potentials is required");
  cfg.pair = PotentialPair::from_json(j.at("potentials"), cfg.kappa);

  if (!j.contains("grid")) throw ConfigError("config.grid is required");
  const auto& g = j.at("grid");
  reject_unknown(g, "grid", {"half_width", "points"});
  cfg.grid.half_width = number(g, "grid", "half_width", 6.0);
  cfg.grid.points = static_cast<int>(integer(g, "grid", "points", 64));
  if (!(cfg.grid.half_width > 0.0)) throw ConfigError("grid.half_width must be positive");
  if (cfg.grid.points < 8 || cfg.grid.points > 1025) throw ConfigError("grid.points must lie in [8, 1025]");

  if (j.contains("flow")) {
    const auto& f = j.at("flow");
    reject_unknown(f, "flow", {"dt", "t_end", "output_every", "symmetrize_every", "snapshot_every"});
    cfg.flow.dt = number(f, "flow", "dt", cfg.flow.dt);
    cfg.flow.t_end = number(f, "flow", "t_end", cfg.flow.t_end);
    cfg.flow.output_every = static_cast<int>(integer(f, "flow", "output_every", cfg.flow.output_every));
    cfg.flow.symmetrize_every =
        static_cast<int>(integer(f, "flow", "symmetrize_every", cfg.flow.symmetrize_every));
    cfg.snapshot_every = static_cast<int>(integer(f, "flow", "snapshot_every", 0));
    if (cfg.snapshot_every < 0) throw ConfigError("flow.snapshot_every must be >= 0");
  }
  cfg.flow.validate();

  if (j.contains("init")) cfg.init = parse_init(j.at("init"));

  if (j.contains("particles")) {
    const auto& p = j.at("particles");
    reject_unknown(p, "particles", {"n", "seed", "bins", "n_min", "dt", "t_end", "output_every"});
    const long long n = integer(p, "particles", "n", static_cast<long long>(cfg.particles.n));
    if (n < 0) throw ConfigError("particles.n must be positive");
    cfg.particles.n = static_cast<std::size_t>(n);
    if (p.contains("seed")) {
      if (!p.at("seed").is_number_unsigned() && !p.at("seed").is_number_integer()) {
        throw ConfigError("particles.seed must be an integer");
      }
      cfg.particles.seed = p.at("seed").get<std::uint64_t>();
    }
    cfg.particles.bins = static_cast<int>(integer(p, "particles", "bins", cfg.particles.bins));
    cfg.particles.n_min = static_cast<int>(integer(p, "particles", "n_min", cfg.particles.n_min));
    cfg.particles.dt = number(p, "particles", "dt", cfg.particles.dt);
    cfg.particles.t_end = number(p, "particles", "t_end", cfg.particles.t_end);
    cfg.particles.output_every =
        static_cast<int>(integer(p, "particles", "output_every", cfg.particles.output_every));
  }
  cfg.particles.validate();

  if (j.contains("chain")) {
    const auto& c = j.at("chain");
    reject_unknown(c, "chain", {"n_list"});
    if (c.contains("n_list")) {
      const auto& list = c.at("n_list");
      if (!list.is_array() || list.empty()) throw ConfigError("chain.n_list must be a non-empty array");
      cfg.chain.n_list.clear();
      for (const auto& v : list) {
        if (!v.is_number_integer() || v.get<int>() < 1) throw ConfigError("chain.n_list entries must be positive integers");
        cfg.chain.n_list.push_back(v.get<int>());
      }
    }
  }

  if (j.contains("cayley")) {
    const auto& c = j.at("cayley");
    reject_unknown(c, "cayley", {"tol", "max_iter", "damping"});
    cfg.cayley.tol = number(c, "cayley", "tol", cfg.cayley.tol);
    cfg.cayley.max_iter = static_cast<int>(integer(c, "cayley", "max_iter", cfg.cayley.max_iter));
    cfg.cayley.damping = number(c, "cayley", "damping", cfg.cayley.damping);
  }
  cfg.cayley.validate();

  if (j.contains("out_dir")) {
    if (!j.at("out_dir").is_string()) throw ConfigError("config.out_dir must be a string");
    cfg.out_dir = j.at("out_dir").get<std::string>();
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_run_config(j);
}

std::vector<int> parse_n_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("--n-list expects positive integers separated by commas");
    }
  }
  if (out.empty()) throw ConfigError("--n-list is empty");
  return out;
}

}  // namespace mlfe
