#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "levy_ihr/gaver_stehfest.hpp"
#include "test_support.hpp"

using namespace levy_ihr;

namespace {
// Classical Stehfest weights V_k for F(s); the Laplace-Carson weights are V_k / k.
long double stehfest_v(int N, int k) {
  auto fact = [](int n) {
    long double r = 1;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
  };
  long double s = 0;
  for (int j = (k + 1) / 2; j <= std::min(k, N); ++j)
    s += std::pow(static_cast<long double>(j), N) * fact(2 * j) /
         (fact(N - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
  return ((k + N) % 2 ? -1 : 1) * s;
}
}  // namespace

TEST(GaverStehfest, LowOrderCoefficients) {
  auto t1 = gs_coefficients(1);
  ASSERT_EQ(t1.zeta.size(), 2u);
  EXPECT_DOUBLE_EQ(t1.zeta[0], 2.0);
  EXPECT_DOUBLE_EQ(t1.zeta[1], -1.0);
  auto t2 = gs_coefficients(2);
  ASSERT_EQ(t2.zeta.size(), 4u);
  EXPECT_DOUBLE_EQ(t2.zeta[0], -2.0);
  EXPECT_DOUBLE_EQ(t2.zeta[1], 13.0);
  EXPECT_DOUBLE_EQ(t2.zeta[2], -16.0);
  EXPECT_DOUBLE_EQ(t2.zeta[3], 6.0);
}

TEST(GaverStehfest, MatchesClassicalStehfestWeights) {
  for (int N = 1; N <= 9; ++N) {
    auto t = gs_coefficients(N);
    for (int k = 1; k <= 2 * N; ++k) {
      double ref = static_cast<double>(stehfest_v(N, k) / k);
      EXPECT_NEAR(t.zeta[k - 1], ref, 1e-12 * std::abs(ref)) << N << " " << k;
    }
  }
}

TEST(GaverStehfest, CoefficientsSumToOne) {
  for (int N = 1; N <= 9; ++N) {
    auto t = gs_coefficients(N);
    double s = 0, mx = 0;
    for (double z : t.zeta) s += z, mx = std::max(mx, std::abs(z));
    EXPECT_NEAR(s, 1.0, 1e-8 * mx) << N;
  }
}

TEST(GaverStehfest, OrderLimits) {
  EXPECT_THROW(gs_coefficients(10), PrecisionError);
  EXPECT_THROW(gs_coefficients(0), DomainError);
}

TEST(GaverStehfest, ConstantTransformIsExact) {
  auto t = gs_coefficients(8);
  for (double tt : {0.01, 1.0, 30.0})
    EXPECT_NEAR(invert_at(t, [](double) { return 0.37; }, tt), 0.37, 1e-7);
}

TEST(GaverStehfest, SmoothFunction) {
  // LC of 1 - e^{-t} is 1/(1+theta)
  auto t = gs_coefficients(8);
  EXPECT_NEAR(invert_at(t, [](double th) { return 1.0 / (1.0 + th); }, 1.0), 1.0 - std::exp(-1.0), 1e-6);
}

TEST(GaverStehfest, BrownianFirstPassage) {
  auto t = gs_coefficients(8);
  auto lc = [](double th) { return std::exp(-std::sqrt(2.0 * th) * 1.0); };
  EXPECT_NEAR(invert_at(t, lc, 1.0), 2.0 * testsupport::norm_cdf(-1.0), 1e-4);
  EXPECT_NEAR(2.0 * testsupport::norm_cdf(-1.0), 0.317311, 1e-6);
}

TEST(GaverStehfest, SuccessiveOrdersContract) {
  auto lc = [](double th) { return std::exp(-std::sqrt(2.0 * th) * 1.0); };
  double prev = INFINITY;
  for (int N = 4; N <= 8; ++N) {
    double d = std::abs(invert_at(gs_coefficients(N), lc, 1.0) - invert_at(gs_coefficients(N + 1), lc, 1.0));
    EXPECT_LT(d, prev) << N;
    prev = d;
  }
}
