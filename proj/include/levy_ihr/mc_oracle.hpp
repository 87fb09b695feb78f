#pragma once
// Monte Carlo first-passage simulator for hyper-exponential jump diffusions
// with crossing-type attribution.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "levy_ihr/errors.hpp"
#include "levy_ihr/hejd.hpp"
#include "levy_ihr/models.hpp"
#include "levy_ihr/parallel.hpp"

namespace levy_ihr {

struct McConfig {
  std::int64_t n_paths = 1000000;
  std::uint64_t seed = 42;
  bool bridge_correction = true;
  double horizon = 1.0;
  double monitor_dt = 0.0;                  // > 0 splits diffusion segments into a grid
  std::optional<double> exp_horizon_rate;   // independent Exp(rate) horizon instead of a fixed one
  int threads = 1;

  void validate() const {
    if (n_paths < 1) throw DomainError("n_paths must be >= 1");
    if (!exp_horizon_rate && !(horizon > 0.0)) throw DomainError("horizon must be positive");
    if (exp_horizon_rate && !(*exp_horizon_rate > 0.0)) throw DomainError("exponential horizon rate must be positive");
    if (monitor_dt < 0.0) throw DomainError("monitor_dt must be non-negative");
  }
};

struct McResult {
  std::int64_t n_paths = 0;
  std::int64_t hits = 0, hits_diffusion = 0;
  std::vector<std::int64_t> hits_by_type;  // loss-side jump types
  double p_hat = 0.0, std_err = 0.0;
  double p_diffusion_hat = 0.0, std_err_diffusion = 0.0;
  std::vector<double> p_jump_by_type_hat, std_err_jump_by_type;

  double p_jump_hat() const {
    double s = 0.0;
    for (double p : p_jump_by_type_hat) s += p;
    return s;
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double binomial_se(std::int64_t k, std::int64_t n) {
  double p = static_cast<double>(k) / n;
  return std::sqrt(p * (1.0 - p) / n);
}

// Outcome of one path: -2 no hit, -1 diffusion hit, i >= 0 type-i jump overshoot.
inline int simulate_path(const HyperExpSpec& s, double dist, bool up, const McConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // work with D = distance to the barrier; the barrier is hit when D <= 0
  const double drift = up ? -s.mu : s.mu;
  const double sig = s.sigma;
  double horizon = cfg.horizon;
  if (cfg.exp_horizon_rate) horizon = std::exponential_distribution<double>(*cfg.exp_horizon_rate)(rng);
  const std::vector<double>& gain_w = up ? s.down_weights : s.up_weights;
  const std::vector<double>& gain_r = up ? s.down_rates : s.up_rates;
  const std::vector<double>& loss_w = up ? s.up_weights : s.down_weights;
  const std::vector<double>& loss_r = up ? s.up_rates : s.down_rates;

  double t = 0.0, d = dist;
  while (true) {
    double next_jump = s.lambda > 0.0 ? t + std::exponential_distribution<double>(s.lambda)(rng) : INFINITY;
    const double seg_end = std::min(next_jump, horizon);
    // diffusion part, optionally on a monitoring grid
    while (t < seg_end) {
      double dt = seg_end - t;
      if (cfg.monitor_dt > 0.0) dt = std::min(dt, cfg.monitor_dt);
      if (sig > 0.0) {
        double b = d + drift * dt + sig * std::sqrt(dt) * normal(rng);
        if (b <= 0.0) return -1;
        if (cfg.bridge_correction && unif(rng) < std::exp(-2.0 * d * b / (sig * sig * dt))) return -1;
        d = b;
      } else {
        d += drift * dt;
        if (d <= 0.0) return -1;  // linear path crosses inside the segment
      }
      t += dt;
    }
    if (next_jump >= horizon) return -2;
    // jump: pick type by the joint weights
    double v = unif(rng);
    bool loss = false;
    std::size_t type = 0;
    double acc = 0.0;
    bool found = false;
    for (std::size_t i = 0; i < gain_w.size() && !found; ++i)
      if (v < (acc += gain_w[i])) found = true, type = i;
    for (std::size_t i = 0; i < loss_w.size() && !found; ++i)
      if (v < (acc += loss_w[i]) || i + 1 == loss_w.size()) found = true, loss = true, type = i;
    if (!found) type = gain_w.size() - 1;  // rounding at the tail of the gain side
    if (loss) {
      d -= std::exponential_distribution<double>(loss_r[type])(rng);
      if (d < 0.0) return static_cast<int>(type);
    } else {
      d += std::exponential_distribution<double>(gain_r[type])(rng);
    }
  }
}

}  // namespace detail

/// Probability that X started at x reaches ell before the horizon, split by
/// crossing type. Up requires x <= ell, Down x >= ell.
inline McResult simulate_fpp(const HyperExpSpec& s, double x, double ell, Direction dir, const McConfig& cfg) {
  s.validate();
  cfg.validate();
  const bool up = dir == Direction::Up;
  if (up ? x > ell : x < ell) throw DomainError("start point is on the far side of the barrier");
  const double dist = std::abs(x - ell);
  const std::size_t types = up ? s.m() : s.n();

  const int workers = std::max(1, std::min<int>(cfg.threads, static_cast<int>(std::min<std::int64_t>(cfg.n_paths, 1 << 20))));
  struct Tally {
    std::int64_t hits = 0, diff = 0;
    std::vector<std::int64_t> by_type;
  };
  std::vector<Tally> tallies(workers);
  const std::int64_t chunk = (cfg.n_paths + workers - 1) / workers;
  parallel_for(static_cast<std::size_t>(workers), workers, [&](std::size_t w) {
    Tally& tl = tallies[w];
    tl.by_type.assign(types, 0);
    const std::int64_t begin = static_cast<std::int64_t>(w) * chunk;
    const std::int64_t end = std::min(cfg.n_paths, begin + chunk);
    for (std::int64_t p = begin; p < end; ++p) {
      std::mt19937_64 rng(detail::splitmix64(cfg.seed ^ detail::splitmix64(static_cast<std::uint64_t>(p))));
      int o = dist == 0.0 ? -1 : detail::simulate_path(s, dist, up, cfg, rng);
      if (o == -2) continue;
      ++tl.hits;
      if (o == -1) ++tl.diff;
      else ++tl.by_type[o];
    }
  });

  McResult r;
  r.n_paths = cfg.n_paths;
  r.hits_by_type.assign(types, 0);
  for (const Tally& tl : tallies) {
    r.hits += tl.hits;
    r.hits_diffusion += tl.diff;
    for (std::size_t i = 0; i < types; ++i) r.hits_by_type[i] += tl.by_type[i];
  }
  const double n = static_cast<double>(r.n_paths);
  r.p_hat = r.hits / n;
  r.std_err = detail::binomial_se(r.hits, r.n_paths);
  r.p_diffusion_hat = r.hits_diffusion / n;
  r.std_err_diffusion = detail::binomial_se(r.hits_diffusion, r.n_paths);
  for (std::size_t i = 0; i < types; ++i) {
    r.p_jump_by_type_hat.push_back(r.hits_by_type[i] / n);
    r.std_err_jump_by_type.push_back(detail::binomial_se(r.hits_by_type[i], r.n_paths));
  }
  return r;
}

}  // namespace levy_ihr
