#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlfe/grid.hpp"
#include "mlfe/potentials.hpp"

namespace mlfe {

/// n particles, each a root coordinate followed by kappa leaves, confined to
/// the box [axis.lower, axis.upper].
struct ParticleEnsemble {
  int kappa = 2;
  Axis box;
  std::uint64_t seed = 0;
  long step = 0;
  double t = 0.0;
  std::vector<double> states;  // n * (1 + kappa), particle-major

  std::size_t size() const { return states.size() / (1 + kappa); }
  const double* particle(std::size_t p) const { return states.data() + p * (1 + kappa); }
  double* particle(std::size_t p) { return states.data() + p * (1 + kappa); }
};

/// Binned estimate of gamma(x, y), x the root value and y a leaf value.
///
/// Each particle contributes, for every ordered leaf pair (v, w), the other
/// leaf X_w to the bin of (X_0, X_v). W' is affine for both implemented
/// families, so the bin mean of W'(x - Z) is W'(x - mean Z).
struct BinnedGamma {
  Axis box;
  int bins = 48;
  int n_min = 20;
  int kappa = 2;
  std::vector<double> sum, sum_sq;
  std::vector<long> count;
  // Level l merges 2^l x 2^l fine bins; a thin fine bin defers to the first
  // populated ancestor before the plain fallback.
  struct Level {
    int bins = 0;
    std::vector<double> sum;
    std::vector<long> count;
  };
  std::vector<Level> coarse;

  /// Rebuilds `coarse` from the fine sums and counts.
  void build_pyramid();

  int bin_of(double x) const;
  bool populated(int bx, int by) const { return count[bx * bins + by] >= n_min; }
  double mean_other(int bx, int by) const;
  /// Standard error of the interaction term in bin (bx, by).
  double standard_error(const PotentialPair& pair, int bx, int by) const;
  /// gamma-hat(x, y); falls back to U'(x) + W'(x - y) where no level is populated.
  double operator()(const PotentialPair& pair, double x, double y) const;
  /// Fine bins below n_min, and those with no populated ancestor either.
  std::size_t fallback_bins() const;
  std::size_t unresolved_bins() const;
};

struct ParticleConfig {
  std::size_t n = 200000;
  std::uint64_t seed = 20240521;
  int bins = 48;
  int n_min = 20;
  double dt = 5e-4;
  double t_end = 1.0;
  int output_every = 50;

  void validate() const;  // throws ConfigError
};

/// Gaussian product N(mean, variance) per coordinate, or the symmetric
/// two-component mixture with centers +-m; draws come from the counter RNG.
struct ParticleInit {
  enum class Kind { gaussian_product, gaussian_mixture } kind = Kind::gaussian_product;
  double mean = 0.0;
  double m = 0.0;
  double variance = 1.0;
};

ParticleEnsemble sample_ensemble(const ParticleInit& init, int kappa, const Axis& box,
                                 std::size_t n, std::uint64_t seed);

BinnedGamma estimate_gamma(const PotentialPair& pair, const ParticleEnsemble& ens, int bins = 48,
                           int n_min = 20);

/// Advances every particle by dt with the estimator frozen, then reflects into
/// the box and applies a uniformly random leaf permutation per particle.
/// Noise for particle p at step k is a pure function of (seed, k, p).
void em_step(const PotentialPair& pair, ParticleEnsemble& ens, double dt,
             const BinnedGamma& estimator);

struct MomentRow {
  double t = 0.0;
  double mean0 = 0.0;
  double var0 = 0.0;
  double cov01 = 0.0;
  double se_var0 = 0.0;
  double se_cov01 = 0.0;
  double se_mean0 = 0.0;
};

/// Root mean and variance plus the root-leaf covariance averaged over leaves,
/// with Monte Carlo standard errors.
MomentRow moments(const ParticleEnsemble& ens);

/// Runs to cfg.t_end recording a row at t = 0, every output_every steps and at
/// the end.
std::vector<MomentRow> moment_series(const PotentialPair& pair, const ParticleInit& init,
                                     const Axis& box, const ParticleConfig& cfg,
                                     ParticleEnsemble* final_state = nullptr);

inline constexpr const char* kParticleCsvHeader = "t,mean0,var0,cov01,se_var0,se_cov01";
std::string to_csv(const std::vector<MomentRow>& rows);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Compares (X0, X1) from the first half of the ensemble against (X1, X0)
/// from the second half along a few fixed projections; returns the smallest
/// p-value.
KsResult edge_exchangeability_ks(const ParticleEnsemble& ens);

}  // namespace mlfe
