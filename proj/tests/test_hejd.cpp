#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "levy_ihr/hejd.hpp"
#include "test_support.hpp"

using namespace levy_ihr;
using testsupport::kou_ref;

namespace {

void check_roots(const HyperExpSpec& s, const RootSet& r) {
  const std::size_t m = s.m(), n = s.n();
  std::size_t nb = m, ng = n;
  switch (r.regime) {
    case Regime::SigmaPos: nb = m + 1, ng = n + 1; break;
    case Regime::SigmaZeroMuPos: nb = m + 1; break;
    case Regime::SigmaZeroMuNeg: ng = n + 1; break;
    default: break;
  }
  ASSERT_EQ(r.betas.size(), nb);
  ASSERT_EQ(r.gammas.size(), ng);
  for (std::size_t k = 0; k < nb; ++k) {
    double lo = k == 0 ? 0.0 : s.up_rates[k - 1];
    EXPECT_GT(r.betas[k], lo);
    if (k < m) EXPECT_LT(r.betas[k], s.up_rates[k]);
  }
  for (std::size_t k = 0; k < ng; ++k) {
    double hi = k == 0 ? 0.0 : -s.down_rates[k - 1];
    EXPECT_LT(r.gammas[k], hi);
    if (k < n) EXPECT_GT(r.gammas[k], -s.down_rates[k]);
  }
  for (double b : r.betas) EXPECT_LT(std::abs(hyperexp_phi(s, b) - r.theta_level), 1e-10 * std::max(1.0, r.theta_level));
  for (double g : r.gammas) EXPECT_LT(std::abs(hyperexp_phi(s, g) - r.theta_level), 1e-10 * std::max(1.0, r.theta_level));
}

}  // namespace

TEST(FindRoots, PureDiffusion) {
  HyperExpSpec s;
  s.sigma = 1.0;
  RootSet r = find_roots(s, 2.0);
  ASSERT_EQ(r.betas.size(), 1u);
  ASSERT_EQ(r.gammas.size(), 1u);
  EXPECT_NEAR(r.betas[0], 2.0, 1e-12);
  EXPECT_NEAR(r.gammas[0], -2.0, 1e-12);
}

TEST(FindRoots, KouAgainstBisection) {
  const HyperExpSpec s = kou_ref();
  RootSet r = find_roots(s, 10.0);
  check_roots(s, r);
  ASSERT_EQ(r.betas.size(), 2u);
  ASSERT_EQ(r.gammas.size(), 2u);
  EXPECT_NEAR(r.betas[0], testsupport::bisect_root(s, 10.0, 1e-12L, 50.0L - 1e-9L), 1e-10);
  EXPECT_NEAR(r.betas[1], testsupport::bisect_root(s, 10.0, 50.0L + 1e-9L, 1e4L), 1e-9);
  EXPECT_NEAR(r.gammas[0], testsupport::bisect_root(s, 10.0, -25.0L + 1e-9L, -1e-12L), 1e-10);
  EXPECT_NEAR(r.gammas[1], testsupport::bisect_root(s, 10.0, -1e4L, -25.0L - 1e-9L), 1e-9);
}

TEST(FindRoots, SigmaZeroNegativeDrift) {
  RootSet r = find_roots(kou_ref(0.0, -0.01), 10.0);
  EXPECT_EQ(r.regime, Regime::SigmaZeroMuNeg);
  EXPECT_EQ(r.betas.size(), 1u);
  EXPECT_EQ(r.gammas.size(), 2u);
  check_roots(kou_ref(0.0, -0.01), r);
}

TEST(FindRoots, CountsAndInterlacingAcrossRegimes) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    for (double sigma : {0.0, 0.3}) {
      for (double mu : {-0.2, 0.0, 0.2}) {
        if (sigma == 0.0 && mu == 0.0 && rep % 2) continue;
        HyperExpSpec s = testsupport::random_spec(rng, 1 + rep % 5, 1 + (rep / 5) % 5, sigma, mu);
        for (double vt : {0.05, 3.0, 400.0}) check_roots(s, find_roots(s, vt));
      }
    }
  }
}

TEST(FindRoots, RejectsNonPositiveLevel) { EXPECT_THROW(find_roots(kou_ref(), 0.0), DomainError); }

TEST(DirichletMatrix, Structure) {
  const HyperExpSpec s = kou_ref();
  RootSet r = find_roots(s, 10.0);
  Eigen::MatrixXd A = build_dirichlet_matrix(s, r, Direction::Up);
  ASSERT_EQ(A.rows(), 2);
  EXPECT_EQ(A(0, 0), 1.0);
  EXPECT_EQ(A(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(A(1, 0), 50.0 / (50.0 - r.betas[0]));
  EXPECT_DOUBLE_EQ(A(1, 1), 50.0 / (50.0 - r.betas[1]));
  Eigen::MatrixXd D = build_dirichlet_matrix(s, r, Direction::Down);
  EXPECT_DOUBLE_EQ(D(1, 0), 25.0 / (25.0 + r.gammas[0]));
  EXPECT_DOUBLE_EQ(D(1, 1), 25.0 / (25.0 + r.gammas[1]));

  HyperExpSpec only_down = kou_ref();
  only_down.up_rates.clear();
  only_down.up_weights.clear();
  only_down.down_weights = {1.0};
  RootSet r2 = find_roots(only_down, 10.0);
  Eigen::MatrixXd U = build_dirichlet_matrix(only_down, r2, Direction::Up);
  ASSERT_EQ(U.rows(), 1);
  EXPECT_EQ(U(0, 0), 1.0);
}

TEST(SolveWeights, DiffusionOnly) {
  HyperExpSpec s;
  s.sigma = 1.0;
  RandomizedFPP f = randomized_fpp(s, 2.0, Direction::Down);
  ASSERT_EQ(f.w_diffusion.size(), 1u);
  EXPECT_NEAR(f.w_diffusion[0], 1.0, 1e-14);
  EXPECT_TRUE(f.w_jump_by_type.empty());
  EXPECT_NEAR(lc_fpp(f, Component::all(), 0.5, 0.0), std::exp(-2.0 * 0.5), 1e-12);
}

TEST(SolveWeights, ContinuousFitSums) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    HyperExpSpec s = testsupport::random_spec(rng, 1 + rep % 4, 1 + rep % 3, 0.25, 0.1);
    for (Direction d : {Direction::Up, Direction::Down}) {
      RandomizedFPP f = randomized_fpp(s, 12.0, d);
      double s0 = 0, sJ = 0;
      for (double w : f.w_diffusion) s0 += w;
      for (double w : f.w_jump_total) sJ += w;
      EXPECT_NEAR(s0, 1.0, 1e-10);
      EXPECT_NEAR(sJ, 0.0, 1e-10);
    }
  }
}

TEST(SolveWeights, ClosedFormMatchesLinearSolve) {
  std::mt19937_64 rng(21);
  for (std::size_t m : {1, 2, 5})
    for (std::size_t n : {1, 2, 5})
      for (double sigma : {0.0, 0.2})
        for (double mu : {-0.3, 0.3}) {
          HyperExpSpec s = testsupport::random_spec(rng, m, n, sigma, mu);
          RootSet r = find_roots(s, 25.0);
          for (Direction d : {Direction::Up, Direction::Down}) {
            RandomizedFPP a = solve_weights(s, r, d), b = solve_weights_linear(s, r, d);
            ASSERT_EQ(a.w_jump_by_type.size(), b.w_jump_by_type.size());
            for (std::size_t i = 0; i < a.w_jump_by_type.size(); ++i)
              for (std::size_t k = 0; k < a.exponents.size(); ++k)
                EXPECT_NEAR(a.w_jump_by_type[i][k], b.w_jump_by_type[i][k], 1e-8);
          }
        }
}

TEST(SolveWeights, DecompositionAgainstCombinedSystem) {
  std::mt19937_64 rng(5);
  HyperExpSpec s = testsupport::random_spec(rng, 3, 4, 0.2, -0.1);
  RootSet r = find_roots(s, 30.0);
  for (Direction d : {Direction::Up, Direction::Down}) {
    RandomizedFPP f = solve_weights(s, r, d);
    Eigen::MatrixXd A = build_dirichlet_matrix(s, r, d);
    Eigen::VectorXd comb = A.lu().solve(Eigen::VectorXd::Ones(A.rows()));
    for (std::size_t k = 0; k < f.exponents.size(); ++k) {
      double acc = f.w_diffusion[k];
      for (const auto& t : f.w_jump_by_type) acc += t[k];
      EXPECT_NEAR(acc, comb(k), 1e-10);
    }
  }
}

TEST(SolveWeights, ReducedSystemTypesSumToTotal) {
  // sigma = 0, mu < 0 has no continuous fit upward
  std::mt19937_64 rng(9);
  HyperExpSpec s = testsupport::random_spec(rng, 4, 3, 0.0, -0.2);
  RandomizedFPP f = randomized_fpp(s, 15.0, Direction::Up);
  EXPECT_FALSE(f.continuous_fit);
  for (std::size_t k = 0; k < f.exponents.size(); ++k) {
    double acc = 0;
    for (const auto& t : f.w_jump_by_type) acc += t[k];
    EXPECT_NEAR(acc, f.w_jump_total[k], 1e-10);
    EXPECT_EQ(f.w_diffusion[k], 0.0);
  }
  EXPECT_EQ(lc_fpp(f, Component::diffusion(), -0.1, 0.0), 0.0);
}

TEST(LcFpp, BoundaryValues) {
  RandomizedFPP f = randomized_fpp(kou_ref(), 10.0, Direction::Up);
  EXPECT_EQ(lc_fpp(f, Component::diffusion(), 0.3, 0.3), 1.0);
  EXPECT_EQ(lc_fpp(f, Component::jump_total(), 0.3, 0.3), 0.0);
  EXPECT_THROW(lc_fpp(f, Component::all(), 0.4, 0.3), DomainError);
  RandomizedFPP g = randomized_fpp(kou_ref(), 10.0, Direction::Down);
  EXPECT_THROW(lc_fpp(g, Component::all(), 0.2, 0.3), DomainError);
}

TEST(LcFpp, DecompositionAndExpHorizonResidual) {
  const HyperExpSpec s = kou_ref();
  RootSet r = find_roots(s, 10.0);
  RandomizedFPP f = solve_weights(s, r, Direction::Down);
  Eigen::MatrixXd A = build_dirichlet_matrix(s, r, Direction::Down);
  for (double dist : {0.001, 0.02, 0.1, 0.5}) {
    double x = dist, ell = 0.0;
    double all = lc_fpp(f, Component::all(), x, ell);
    double dif = lc_fpp(f, Component::diffusion(), x, ell);
    double jt = lc_fpp(f, Component::jump_total(), x, ell);
    double j0 = lc_fpp(f, Component::jump_type(0), x, ell);
    EXPECT_NEAR(all, dif + jt, 1e-10);
    EXPECT_NEAR(jt, j0, 1e-10);
    // A^T LC = e(x) with e_k = exp(gamma_k (x - ell))
    Eigen::Vector2d lc(dif, j0);
    Eigen::Vector2d e(std::exp(r.gammas[0] * (x - ell)), std::exp(r.gammas[1] * (x - ell)));
    EXPECT_LT((A.transpose() * lc - e).lpNorm<Eigen::Infinity>(), 1e-8);
  }
}

TEST(LcFpp, MonotoneInDistanceAndLevel) {
  const HyperExpSpec s = kou_ref();
  for (Direction d : {Direction::Up, Direction::Down}) {
    double prev_t = 1.0;
    for (double vt : {0.5, 2.0, 10.0, 50.0, 300.0}) {
      RandomizedFPP f = randomized_fpp(s, vt, d);
      double prev = 1.0;
      for (double dist = 0.0; dist < 0.5; dist += 0.01) {
        double x = d == Direction::Up ? -dist : dist;
        double v = lc_fpp(f, Component::all(), x, 0.0);
        EXPECT_LE(v, prev + 1e-12);
        EXPECT_GE(v, -1e-12);
        prev = v;
      }
      double at = lc_fpp(f, Component::all(), d == Direction::Up ? -0.05 : 0.05, 0.0);
      EXPECT_LE(at, prev_t + 1e-12);
      prev_t = at;
    }
  }
}
