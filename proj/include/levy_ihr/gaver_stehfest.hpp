#pragma once
// Gaver-Stehfest inversion of Laplace-Carson transforms.

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "levy_ihr/errors.hpp"

namespace levy_ihr {

struct GaverStehfestTable {
  int N = 0;
  std::vector<double> zeta;  // zeta[k-1] for k = 1..2N
};

/// Coefficients zeta_{k,N}. Each inner sum is an exact integer (128-bit);
/// the division by N! * k is the only rounding step.
inline GaverStehfestTable gs_coefficients(int N) {
  if (N < 1) throw DomainError("Gaver-Stehfest order must be >= 1");
  if (N > 9) throw PrecisionError("order " + std::to_string(N) + " exceeds the 64-bit budget (max 9)");
  using i128 = __int128;
  auto binom = [](int n, int k) -> i128 {
    if (k < 0 || k > n) return 0;
    i128 r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  };
  i128 nfact = 1;
  for (int i = 2; i <= N; ++i) nfact *= i;
  GaverStehfestTable t;
  t.N = N;
  for (int k = 1; k <= 2 * N; ++k) {
    i128 acc = 0;
    for (int j = (k + 1) / 2; j <= std::min(k, N); ++j) {
      i128 p = 1;
      for (int e = 0; e <= N; ++e) p *= j;
      acc += p * binom(N, j) * binom(2 * j, j) * binom(j, k - j);
    }
    long double z = static_cast<long double>(acc) / static_cast<long double>(nfact) / k;
    if ((N + k) % 2 == 1) z = -z;
    t.zeta.push_back(static_cast<double>(z));
  }
  return t;
}

/// g_N(t) = sum_k zeta_k * LC(k ln2 / t), summed in ascending k.
inline double invert_at(const GaverStehfestTable& gs, const std::function<double(double)>& transform, double t) {
  if (!(t > 0.0)) throw DomainError("inversion time must be positive");
  const double h = std::log(2.0) / t;
  double acc = 0.0;
  for (std::size_t k = 1; k <= gs.zeta.size(); ++k) acc += gs.zeta[k - 1] * transform(k * h);
  return acc;
}

/// Abscissae k ln2 / t at which the transform is sampled.
inline std::vector<double> gs_abscissae(const GaverStehfestTable& gs, double t) {
  std::vector<double> a;
  const double h = std::log(2.0) / t;
  for (std::size_t k = 1; k <= gs.zeta.size(); ++k) a.push_back(k * h);
  return a;
}

}  // namespace levy_ihr
