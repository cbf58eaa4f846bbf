#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mlfe/chain.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "mlfe_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(MLFE_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  const std::string s = slurp(p);
  return s.substr(0, s.find('\n'));
}

fs::path write_config(const std::string& name, nlohmann::json j) {
  fs::create_directories(kRoot);
  const fs::path p = kRoot / (name + ".json");
  std::ofstream(p) << j.dump(2);
  return p;
}

nlohmann::json base(int points) {
  return {{"kappa", 2},
          {"potentials", {{"family", "quadratic"}, {"alpha", 2.0}, {"beta", 1.5}}},
          {"grid", {{"half_width", 6.0}, {"points", points}}}};
}

}  // namespace

TEST_CASE("error contract") {
  fs::remove_all(kRoot);
  const fs::path out = kRoot / "missing_out";
  CHECK(run("flow --config " + (kRoot / "nope.json").string() + " --out " + out.string()) == 2);
  CHECK_FALSE(fs::exists(out));

  auto j = base(16);
  j["surprise"] = true;
  CHECK(run("flow --config " + write_config("unknown", j).string() + " --out " + out.string()) == 2);
  CHECK_FALSE(fs::exists(out));

  CHECK(run("flow") == 2);
  CHECK(run("bogus --config x") == 2);

  auto c = base(32);
  c["cayley"] = {{"max_iter", 1}};
  CHECK(run("cayley --config " + write_config("diverge", c).string() + " --out " + (kRoot / "c").string()) == 3);
}

TEST_CASE("flow artifacts") {
  auto j = base(16);
  j["flow"] = {{"dt", 2e-3}, {"t_end", 0.02}, {"output_every", 5}, {"snapshot_every", 1}};
  j["init"] = {{"type", "gaussian_mixture"}, {"params", {{"m", 1.2}, {"variance", 0.25}}}};
  const auto cfg = write_config("flow", j);
  const fs::path a = kRoot / "flow_a", b = kRoot / "flow_b";
  REQUIRE(run("flow --config " + cfg.string() + " --out " + a.string() + " --threads 1") == 0);
  CHECK(first_line(a / "flow_timeseries.csv") == "t,h_kappa,i_kappa,h_hat2,mass,second_moment");
  CHECK(fs::exists(a / "flow_functionals.svg"));
  CHECK(fs::exists(a / "snapshot_000000.bin"));
  const auto cons = nlohmann::json::parse(slurp(a / "conservation.json"));
  CHECK(cons.contains("min_value"));

  setenv("MLFE_THREADS", "2", 1);
  REQUIRE(run("flow --config " + cfg.string() + " --out " + b.string()) == 0);
  unsetenv("MLFE_THREADS");
  CHECK(slurp(a / "flow_timeseries.csv") == slurp(b / "flow_timeseries.csv"));
  CHECK(slurp(a / "flow_functionals.svg") == slurp(b / "flow_functionals.svg"));
  for (const auto& e : fs::directory_iterator(a)) CHECK(e.path().extension() != ".tmp");
}

TEST_CASE("chain artifacts") {
  const auto cfg = write_config("chain", base(24));
  const fs::path out = kRoot / "chain";
  REQUIRE(run("chain --config " + cfg.string() + " --n-list 1,2 --out " + out.string()) == 0);
  std::istringstream csv(slurp(out / "chain_report.csv"));
  std::string header, row1, row2, extra;
  std::getline(csv, header);
  std::getline(csv, row1);
  std::getline(csv, row2);
  CHECK(header == "n,log_z,per_site_log_z,lift_entropy,lift_entropy_per_site");
  CHECK_FALSE(std::getline(csv, extra));

  // n = 1 against a direct 3-D sum.
  const auto pair = mlfe::PotentialPair::quadratic(2.0, 1.5);
  const mlfe::Axis a = mlfe::Axis::symmetric(6.0, 24);
  const auto w = mlfe::trapezoid_weights(a);
  double s = 0.0;
  for (int i = 0; i < 24; ++i)
    for (int k = 0; k < 24; ++k)
      for (int l = 0; l < 24; ++l)
        s += w[i] * w[k] * w[l] * std::exp(-0.5 * (pair.Q(a.node(i), a.node(k)) + pair.Q(a.node(k), a.node(l))));
  const double log_z1 = std::stod(row1.substr(row1.find(',') + 1));
  CHECK(row1.rfind("1,", 0) == 0);
  CHECK(log_z1 == doctest::Approx(std::log(s)).epsilon(1e-10));

  const auto h = nlohmann::json::parse(slurp(out / "h_star.json"));
  CHECK(h.at("h_star").get<double>() == doctest::Approx(mlfe::h_star_spectral(pair, a)).epsilon(1e-12));
}

TEST_CASE("cayley, particles and compare-mrf artifacts") {
  const fs::path c = kRoot / "cayley";
  REQUIRE(run("cayley --config " + write_config("cayley", base(33)).string() + " --out " + c.string()) == 0);
  CHECK(first_line(c / "nu0.csv") == "x,nu0");
  CHECK(fs::exists(c / "joint.bin"));
  const auto res = nlohmann::json::parse(slurp(c / "residuals.json"));
  CHECK(res.at("i_kappa").get<double>() < 1e-3);

  auto p = base(32);
  p["particles"] = {{"n", 2000}, {"seed", 5}, {"dt", 1e-2}, {"t_end", 0.05}, {"output_every", 1}};
  const fs::path pp = kRoot / "particles";
  REQUIRE(run("particles --config " + write_config("particles", p).string() + " --out " + pp.string()) == 0);
  CHECK(first_line(pp / "particles_timeseries.csv") == "t,mean0,var0,cov01,se_var0,se_cov01");
  auto bad = p;
  bad["init"] = {{"type", "cayley"}};
  CHECK(run("particles --config " + write_config("particles_bad", bad).string() + " --out " + (kRoot / "pb").string()) == 2);

  auto m = base(16);
  m["flow"] = {{"dt", 2e-3}, {"t_end", 0.02}, {"output_every", 2}};
  const fs::path mm = kRoot / "mrf";
  REQUIRE(run("compare-mrf --config " + write_config("mrf", m).string() + " --out " + mm.string()) == 0);
  CHECK(fs::exists(mm / "compare_mrf.svg"));
  CHECK(first_line(mm / "flow_timeseries.csv") == "t,h_kappa,i_kappa,h_hat2,mass,second_moment");
  const auto contrast = nlohmann::json::parse(slurp(mm / "contrast.json"));
  CHECK(contrast.contains("h_hat2_max_increase"));
}
