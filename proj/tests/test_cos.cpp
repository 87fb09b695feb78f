#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "levy_ihr/cos.hpp"
#include "test_support.hpp"

using namespace levy_ihr;
using testsupport::norm_cdf;
using testsupport::norm_pdf;

TEST(Cos, StandardNormalDensity) {
  CosExpansion e(ModelSpec(Diffusion{0.0, 1.0}), 1.0);
  EXPECT_NEAR(e.density(0.0), 0.3989423, 1e-6);
  for (double x : {-3.0, -1.0, 0.5, 2.5}) EXPECT_NEAR(e.density(x), norm_pdf(x), 1e-9) << x;
}

TEST(Cos, DensityIntegratesToOne) {
  for (ModelSpec m : {ModelSpec(Diffusion{0.0, 1.0}), ModelSpec(testsupport::kou_ref()),
                      ModelSpec(VG{71.21, 72.85, 105.41, 0.2922})}) {
    const double dt = 1.0 / 52.0;
    CosExpansion e(m, dt);
    const int n = 20000;
    const double h = (e.b() - e.a()) / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) acc += (i == 0 || i == n ? 0.5 : 1.0) * e.raw_density(e.a() + i * h);
    EXPECT_NEAR(acc * h, 1.0, 1e-6) << m.name();
  }
}

TEST(Cos, DoublingTermsIsSelfConsistent) {
  const ModelSpec m(CGMY{5.23, 44.84, 77.05, 0.5, 0.1});
  CosExpansion e1(m, 1.0 / 52.0, {10.0, 512});
  CosExpansion e2(m, 1.0 / 52.0, {10.0, 1024});
  double peak = 0.0;
  for (double x = -0.1; x <= 0.1; x += 0.01) peak = std::max(peak, e2.density(x));
  for (double x = -0.1; x <= 0.1; x += 0.01) EXPECT_LT(std::abs(e1.density(x) - e2.density(x)), 1e-8 * peak) << x;
}

TEST(Cos, NormalCdfAndPartialMoments) {
  CosExpansion e(ModelSpec(Diffusion{0.0, 1.0}), 1.0);
  const double q = -1.6448536269514722;
  EXPECT_NEAR(e.cdf(q), 0.05, 1e-9);
  EXPECT_NEAR(e.quantile(0.05), q, 1e-8);
  EXPECT_NEAR(e.partial_mean(q), -norm_pdf(q), 1e-9);
  // E[e^X 1{X<=q}] = e^{1/2} Phi(q - 1)
  EXPECT_NEAR(e.partial_exp(q), std::exp(0.5) * norm_cdf(q - 1.0), 1e-9);
}

TEST(Cos, OutsideRangeRejected) {
  CosExpansion e(ModelSpec(Diffusion{0.0, 1.0}), 1.0);
  EXPECT_THROW(e.density(e.b() + 1.0), RangeError);
  EXPECT_THROW(e.cdf(e.a() - 1.0), RangeError);
}

TEST(Cos, KouMatchesMonteCarloHistogram) {
  const HyperExpSpec s = testsupport::kou_ref();
  const double dt = 1.0;
  CosExpansion e(ModelSpec(s), dt);
  const double lo = e.quantile(0.025), hi = e.quantile(0.975);
  const int bins = 100, n = 1000000;
  std::vector<int> count(bins, 0);
  std::mt19937_64 rng(20240611);
  for (int i = 0; i < n; ++i) {
    double x = testsupport::sample_increment(s, dt, rng);
    if (x >= lo && x < hi) ++count[static_cast<int>((x - lo) / (hi - lo) * bins)];
  }
  const double w = (hi - lo) / bins;
  for (int b = 0; b < bins; ++b) {
    double p = e.cdf(lo + (b + 1) * w) - e.cdf(lo + b * w);
    double se = std::sqrt(p * (1 - p) / n);
    EXPECT_LT(std::abs(count[b] / double(n) - p), 3.0 * se) << b;
  }
}

TEST(Cos, BatchMatchesScalar) {
  CosExpansion e(ModelSpec(VG{71.21, 72.85, 105.41, 0.2922}), 1.0 / 52.0);
  std::vector<double> x, out(11);
  for (int i = 0; i < 11; ++i) x.push_back(-0.05 + 0.01 * i);
  e.raw_density(x.data(), out.data(), x.size());
  for (int i = 0; i < 11; ++i) EXPECT_NEAR(out[i], e.raw_density(x[i]), 1e-12 * std::abs(out[i]));
}
