#include "mlfe/particles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mlfe/errors.hpp"
#include "mlfe/functionals.hpp"

namespace mlfe {

namespace {

constexpr std::size_t kChunk = 4096;  // fixed work split keeps sums thread-count independent
constexpr int kCoarsestBins = 6;      // merged bins stay local: far corners still fall back

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// splitmix64 as a UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

SplitMix64 stream(std::uint64_t seed, std::uint64_t step, std::uint64_t particle) {
  return SplitMix64(mix64(mix64(seed ^ mix64(step + 0x632BE59BD9B4E019ULL)) + particle));
}

double reflect(double x, double lo, double hi) {
  const double width = hi - lo;
  if (x >= lo && x <= hi) return x;
  // Fold onto one period of length 2 * width, then mirror.
  double r = std::fmod(x - lo, 2.0 * width);
  if (r < 0.0) r += 2.0 * width;
  return r <= width ? lo + r : hi - (r - width);
}

void permute_leaves(double* leaves, int kappa, SplitMix64& rng) {
  for (int i = kappa - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(leaves[i], leaves[j]);
  }
}

}  // namespace

void ParticleConfig::validate() const {
  if (n < 1000) throw ConfigError("particles.n must be at least 1000");
  if (bins < 2) throw ConfigError("particles.bins must be at least 2");
  if (n_min < 1) throw ConfigError("particles.n_min must be positive");
  if (!(dt > 0.0)) throw ConfigError("particles.dt must be positive");
  if (!(t_end >= 0.0)) throw ConfigError("particles.t_end must be >= 0");
  if (output_every < 1) throw ConfigError("particles.output_every must be positive");
}

int BinnedGamma::bin_of(double x) const {
  const int b = static_cast<int>(std::floor((x - box.lower) / (box.upper - box.lower) * bins));
  return std::clamp(b, 0, bins - 1);
}

double BinnedGamma::mean_other(int bx, int by) const {
  const std::size_t k = static_cast<std::size_t>(bx) * bins + by;
  return sum[k] / count[k];
}

double BinnedGamma::standard_error(const PotentialPair& pair, int bx, int by) const {
  const std::size_t k = static_cast<std::size_t>(bx) * bins + by;
  const double c = static_cast<double>(count[k]);
  if (c < 2) return std::numeric_limits<double>::infinity();
  const double mean = sum[k] / c;
  const double var = std::max(0.0, (sum_sq[k] - c * mean * mean) / (c - 1.0));
  // W'(x - Z) = W'(x) + (beta/2) Z for W = -(beta/4) x^2.
  return (kappa - 1) * 0.5 * std::abs(pair.beta()) * std::sqrt(var / c);
}

void BinnedGamma::build_pyramid() {
  coarse.clear();
  int prev_bins = bins;
  const std::vector<double>* prev_sum = &sum;
  const std::vector<long>* prev_count = &count;
  while (prev_bins >= 2 * kCoarsestBins) {
    Level lv;
    lv.bins = (prev_bins + 1) / 2;
    const std::size_t cells = static_cast<std::size_t>(lv.bins) * lv.bins;
    lv.sum.assign(cells, 0.0);
    lv.count.assign(cells, 0);
    for (int i = 0; i < prev_bins; ++i) {
      for (int j = 0; j < prev_bins; ++j) {
        const std::size_t from = static_cast<std::size_t>(i) * prev_bins + j;
        const std::size_t to = static_cast<std::size_t>(i / 2) * lv.bins + j / 2;
        lv.sum[to] += (*prev_sum)[from];
        lv.count[to] += (*prev_count)[from];
      }
    }
    coarse.push_back(std::move(lv));
    prev_bins = coarse.back().bins;
    prev_sum = &coarse.back().sum;
    prev_count = &coarse.back().count;
  }
}

namespace {

// Mean of the other leaf at the finest populated level, or NaN.
double resolve(const BinnedGamma& g, int bx, int by) {
  if (g.populated(bx, by)) return g.mean_other(bx, by);
  for (const auto& lv : g.coarse) {
    bx /= 2;
    by /= 2;
    const std::size_t k = static_cast<std::size_t>(bx) * lv.bins + by;
    if (lv.count[k] >= g.n_min) return lv.sum[k] / lv.count[k];
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double BinnedGamma::operator()(const PotentialPair& pair, double x, double y) const {
  const double base = pair.dU(x) + pair.dW(x - y);
  const double z = resolve(*this, bin_of(x), bin_of(y));
  if (std::isnan(z)) return base;
  return base + (kappa - 1) * pair.dW(x - z);
}

std::size_t BinnedGamma::fallback_bins() const {
  return std::count_if(count.begin(), count.end(), [&](long c) { return c < n_min; });
}

std::size_t BinnedGamma::unresolved_bins() const {
  std::size_t n = 0;
  for (int i = 0; i < bins; ++i)
    for (int j = 0; j < bins; ++j) n += std::isnan(resolve(*this, i, j)) ? 1 : 0;
  return n;
}

ParticleEnsemble sample_ensemble(const ParticleInit& init, int kappa, const Axis& box,
                                 std::size_t n, std::uint64_t seed) {
  if (!(init.variance > 0.0)) throw ConfigError("particle init variance must be positive");
  ParticleEnsemble ens;
  ens.kappa = kappa;
  ens.box = box;
  ens.seed = seed;
  ens.states.resize(n * (1 + kappa));
  const double sd = std::sqrt(init.variance);
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < n; ++p) {
    auto rng = stream(seed, ~std::uint64_t{0}, p);
    std::normal_distribution<double> normal;
    double center = init.mean;
    if (init.kind == ParticleInit::Kind::gaussian_mixture) center = (rng() & 1) ? init.m : -init.m;
    double* s = ens.particle(p);
    for (int k = 0; k <= kappa; ++k) s[k] = reflect(center + sd * normal(rng), box.lower, box.upper);
  }
  return ens;
}

BinnedGamma estimate_gamma(const PotentialPair& pair, const ParticleEnsemble& ens, int bins,
                           int n_min) {
  (void)pair;
  BinnedGamma g;
  g.box = ens.box;
  g.bins = bins;
  g.n_min = n_min;
  g.kappa = ens.kappa;
  const std::size_t cells = static_cast<std::size_t>(bins) * bins;
  const std::size_t n = ens.size();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> sums(chunks * cells, 0.0), squares(chunks * cells, 0.0);
  std::vector<long> counts(chunks * cells, 0);
  const int kappa = ens.kappa;
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < chunks; ++c) {
    double* s = sums.data() + c * cells;
    double* q = squares.data() + c * cells;
    long* k = counts.data() + c * cells;
    const std::size_t end = std::min(n, (c + 1) * kChunk);
    for (std::size_t p = c * kChunk; p < end; ++p) {
      const double* x = ens.particle(p);
      const int b0 = g.bin_of(x[0]);
      for (int v = 1; v <= kappa; ++v) {
        const std::size_t cell = static_cast<std::size_t>(b0) * bins + g.bin_of(x[v]);
        for (int w = 1; w <= kappa; ++w) {
          if (w == v) continue;
          s[cell] += x[w];
          q[cell] += x[w] * x[w];
          ++k[cell];
        }
      }
    }
  }
  g.sum.assign(cells, 0.0);
  g.sum_sq.assign(cells, 0.0);
  g.count.assign(cells, 0);
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t i = 0; i < cells; ++i) {
      g.sum[i] += sums[c * cells + i];
      g.sum_sq[i] += squares[c * cells + i];
      g.count[i] += counts[c * cells + i];
    }
  }
  // With kappa - 1 other leaves per (v, particle), the count above is (kappa-1)
  // samples per particle; the bin mean is still the conditional mean of Z.
  g.build_pyramid();
  return g;
}

void em_step(const PotentialPair& pair, ParticleEnsemble& ens, double dt,
             const BinnedGamma& estimator) {
  if (dt < 0.0) throw ConfigError("em_step needs dt >= 0");
  if (dt == 0.0) return;
  const int kappa = ens.kappa;
  const double noise = std::sqrt(2.0 * dt);
  const double lo = ens.box.lower, hi = ens.box.upper;
  const std::size_t n = ens.size();
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < n; ++p) {
    auto rng = stream(ens.seed, static_cast<std::uint64_t>(ens.step), p);
    std::normal_distribution<double> normal;
    double* x = ens.particle(p);
    double next[kMaxArity];
    next[0] = x[0] - dt * pair.b(std::span<const double>(x, 1 + kappa)) + noise * normal(rng);
    for (int v = 1; v <= kappa; ++v) {
      next[v] = x[v] - dt * estimator(pair, x[v], x[0]) + noise * normal(rng);
    }
    for (int k = 0; k <= kappa; ++k) x[k] = reflect(next[k], lo, hi);
    permute_leaves(x + 1, kappa, rng);
  }
  ++ens.step;
  ens.t += dt;
}

MomentRow moments(const ParticleEnsemble& ens) {
  const std::size_t n = ens.size();
  const int kappa = ens.kappa;
  const double nd = static_cast<double>(n);
  CompensatedSum s0, sl;
  for (std::size_t p = 0; p < n; ++p) {
    const double* x = ens.particle(p);
    s0.add(x[0]);
    double leaf = 0.0;
    for (int v = 1; v <= kappa; ++v) leaf += x[v];
    sl.add(leaf / kappa);
  }
  const double m0 = s0.value() / nd;
  const double ml = sl.value() / nd;
  CompensatedSum a, a2, c, c2;
  for (std::size_t p = 0; p < n; ++p) {
    const double* x = ens.particle(p);
    const double d0 = x[0] - m0;
    double dl = 0.0;
    for (int v = 1; v <= kappa; ++v) dl += x[v] - ml;
    const double q = d0 * d0;
    const double r = d0 * dl / kappa;
    a.add(q);
    a2.add(q * q);
    c.add(r);
    c2.add(r * r);
  }
  MomentRow row;
  row.t = ens.t;
  row.mean0 = m0;
  row.var0 = a.value() / (nd - 1.0);
  row.cov01 = c.value() / (nd - 1.0);
  const double mq = a.value() / nd, mr = c.value() / nd;
  row.se_var0 = std::sqrt(std::max(0.0, a2.value() / nd - mq * mq) / nd);
  row.se_cov01 = std::sqrt(std::max(0.0, c2.value() / nd - mr * mr) / nd);
  row.se_mean0 = std::sqrt(row.var0 / nd);
  return row;
}

std::vector<MomentRow> moment_series(const PotentialPair& pair, const ParticleInit& init,
                                     const Axis& box, const ParticleConfig& cfg,
                                     ParticleEnsemble* final_state) {
  cfg.validate();
  auto ens = sample_ensemble(init, pair.kappa(), box, cfg.n, cfg.seed);
  std::vector<MomentRow> rows{moments(ens)};
  const long steps = std::lround(cfg.t_end / cfg.dt);
  for (long k = 1; k <= steps; ++k) {
    const auto est = estimate_gamma(pair, ens, cfg.bins, cfg.n_min);
    em_step(pair, ens, cfg.dt, est);
    ens.t = k * cfg.dt;
    if (k % cfg.output_every == 0 || k == steps) rows.push_back(moments(ens));
  }
  if (final_state) *final_state = std::move(ens);
  return rows;
}

std::string to_csv(const std::vector<MomentRow>& rows) {
  std::string out = kParticleCsvHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += format_double(r.t) + ',' + format_double(r.mean0) + ',' + format_double(r.var0) + ',' +
           format_double(r.cov01) + ',' + format_double(r.se_var0) + ',' +
           format_double(r.se_cov01) + '\n';
  }
  return out;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS test needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  const double lambda = (en + 0.12 + 0.11 / en) * d;
  // Kolmogorov tail Q(lambda) = 2 sum_k (-1)^{k-1} exp(-2 k^2 lambda^2).
  double q = 0.0;
  if (lambda < 1e-3) {
    q = 1.0;
  } else {
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
      const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
      q += term;
      if (std::abs(term) < 1e-12) break;
      sign = -sign;
    }
    q = std::clamp(2.0 * q, 0.0, 1.0);
  }
  return {d, q};
}

KsResult edge_exchangeability_ks(const ParticleEnsemble& ens) {
  const std::size_t half = ens.size() / 2;
  constexpr double dirs[][2] = {{1.0, 0.0}, {1.0, -1.0}, {1.0, 2.0}};
  KsResult worst{0.0, 1.0};
  for (const auto& d : dirs) {
    std::vector<double> a(half), b(half);
    for (std::size_t p = 0; p < half; ++p) {
      const double* x = ens.particle(p);
      const double* y = ens.particle(half + p);
      a[p] = d[0] * x[0] + d[1] * x[1];
      b[p] = d[0] * y[1] + d[1] * y[0];
    }
    const auto r = ks_two_sample(std::move(a), std::move(b));
    if (r.p_value < worst.p_value) worst = r;
  }
  // Bonferroni over the projections.
  worst.p_value = std::min(1.0, worst.p_value * std::size(dirs));
  return worst;
}

}  // namespace mlfe
