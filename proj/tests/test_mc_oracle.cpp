#include <gtest/gtest.h>

#include <cmath>

#include "levy_ihr/hejd.hpp"
#include "levy_ihr/mc_oracle.hpp"
#include "levy_ihr/risk.hpp"
#include "test_support.hpp"

using namespace levy_ihr;

namespace {
McConfig cfg(std::int64_t n, double T, std::uint64_t seed = 7) {
  McConfig c;
  c.n_paths = n;
  c.horizon = T;
  c.seed = seed;
  return c;
}
}  // namespace

TEST(McOracle, BrownianReflection) {
  McResult r = simulate_fpp(as_hyperexp(Diffusion{0.0, 1.0}), 0.0, -1.0, Direction::Down, cfg(1000000, 1.0));
  EXPECT_LT(std::abs(r.p_hat - 2.0 * testsupport::norm_cdf(-1.0)), 3.0 * r.std_err);
  EXPECT_EQ(r.hits, r.hits_diffusion);
}

TEST(McOracle, DeterministicDriftHitsSurely) {
  HyperExpSpec s;
  s.mu = -1.0;
  McResult r = simulate_fpp(s, 0.0, -0.5, Direction::Down, cfg(1000, 1.0));
  EXPECT_EQ(r.p_hat, 1.0);
  r = simulate_fpp(s, 0.0, -1.5, Direction::Down, cfg(1000, 1.0));
  EXPECT_EQ(r.p_hat, 0.0);
}

TEST(McOracle, DecompositionCountsAreDisjoint) {
  McResult r = simulate_fpp(testsupport::kou_ref(), 0.0, -0.05, Direction::Down, cfg(100000, 10.0 / 252.0));
  std::int64_t s = r.hits_diffusion;
  for (auto k : r.hits_by_type) s += k;
  EXPECT_EQ(s, r.hits);
  EXPECT_GT(r.hits_by_type[0], 0);
}

TEST(McOracle, ReproducibleAcrossThreadCounts) {
  McConfig c = cfg(50000, 0.1, 99);
  McResult a = simulate_fpp(testsupport::kou_ref(), 0.0, 0.03, Direction::Up, c);
  c.threads = 3;
  McResult b = simulate_fpp(testsupport::kou_ref(), 0.0, 0.03, Direction::Up, c);
  EXPECT_EQ(a.hits, b.hits);
  EXPECT_EQ(a.hits_diffusion, b.hits_diffusion);
  EXPECT_EQ(a.hits_by_type, b.hits_by_type);
  c.seed = 100;
  McResult d = simulate_fpp(testsupport::kou_ref(), 0.0, 0.03, Direction::Up, c);
  EXPECT_NE(a.hits, d.hits);
}

TEST(McOracle, DiscreteMonitoringUnderestimates) {
  McConfig c = cfg(200000, 1.0);
  c.monitor_dt = 1.0 / 252.0;
  const HyperExpSpec s = as_hyperexp(Diffusion{0.0, 1.0});
  McResult with = simulate_fpp(s, 0.0, -1.0, Direction::Down, c);
  c.bridge_correction = false;
  McResult without = simulate_fpp(s, 0.0, -1.0, Direction::Down, c);
  EXPECT_LT(without.p_hat + 3.0 * without.std_err, with.p_hat);
}

TEST(McOracle, FarSideRejected) {
  EXPECT_THROW(simulate_fpp(testsupport::kou_ref(), 0.0, 0.1, Direction::Down, cfg(10, 1.0)), DomainError);
}

TEST(McOracle, KouMatchesHejdFirstPassage) {
  const HyperExpSpec s = testsupport::kou_ref();
  const double T = 10.0 / 252.0;
  FirstPassageSurface surf(s, Direction::Down, T);
  for (double d : {0.02, 0.05, 0.10}) {
    McResult r = simulate_fpp(s, d, 0.0, Direction::Down, cfg(400000, T, 11));
    EXPECT_LT(std::abs(surf.raw(Component::all(), d) - r.p_hat), 3.0 * r.std_err) << d;
    EXPECT_LT(std::abs(surf.raw(Component::diffusion(), d) - r.p_diffusion_hat), 3.0 * r.std_err_diffusion) << d;
    EXPECT_LT(std::abs(surf.raw(Component::jump_total(), d) - r.p_jump_hat()),
              3.0 * detail::binomial_se(r.hits - r.hits_diffusion, r.n_paths))
        << d;
  }
}

TEST(McOracle, LaplaceCarsonValueAtExponentialHorizon) {
  const HyperExpSpec s = testsupport::kou_ref();
  McConfig c = cfg(1000000, 1.0, 5);
  c.exp_horizon_rate = 10.0;
  McResult r = simulate_fpp(s, 0.1, 0.0, Direction::Down, c);
  RandomizedFPP f = randomized_fpp(s, 10.0, Direction::Down);
  EXPECT_LT(std::abs(lc_fpp(f, Component::all(), 0.1, 0.0) - r.p_hat), 3.0 * r.std_err);
}

TEST(McOracle, LongExposureBarrier) {
  // P&L barrier -0.05 on a unit long position maps to X barrier ln(0.95)
  const HyperExpSpec s = testsupport::kou_ref();
  const double T = 10.0 / 252.0;
  double u = fpp(ModelSpec(s), Scenario{ScenarioKind::LongExp, 0.0, 1.0, 1.0}, Component::all(), T, -0.05);
  McResult r = simulate_fpp(s, 0.0, std::log(0.95), Direction::Down, cfg(400000, T, 3));
  EXPECT_LT(std::abs(u - r.p_hat), 3.0 * r.std_err);
}
