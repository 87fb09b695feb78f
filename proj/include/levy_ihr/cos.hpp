#pragma once
// Fourier-cosine recovery of the density, CDF and partial moments of X_dt
// from the characteristic function.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "levy_ihr/errors.hpp"
#include "levy_ihr/models.hpp"

namespace levy_ihr {

struct CosConfig {
  double L = 10.0;
  int K = 512;
  double density_floor = 1e-300;
};

/// Cosine-series coefficients F_k of the density of X_dt on [a, b].
class CosExpansion {
 public:
  CosExpansion(const ModelSpec& model, double dt, const CosConfig& cfg = {}) : cfg_(cfg) {
    if (!(dt > 0.0)) throw DomainError("dt must be positive");
    if (cfg.K < 2) throw DomainError("K must be >= 2");
    Cumulants c = cumulants(model);
    double c1 = c.c1 * dt, c2 = c.c2 * dt, c4 = c.c4 * dt;
    double w = cfg.L * std::sqrt(c2 + std::sqrt(c4));
    if (!(w > 0.0) || !std::isfinite(w)) throw RangeError("degenerate cumulants for the truncation range");
    a_ = c1 - w;
    b_ = c1 + w;
    const double span = b_ - a_;
    F_.resize(cfg.K);
    omega_ = M_PI / span;
    for (int k = 0; k < cfg.K; ++k) {
      double u = k * omega_;
      cplx phi = std::exp(-dt * levy_exponent(model, u));
      F_[k] = 2.0 / span * (phi * std::exp(cplx(0.0, -u * a_))).real();
    }
    F_[0] *= 0.5;
    // drop the trailing run of coefficients below double resolution
    const double cut = 1e-17 * std::abs(F_[0]);
    while (F_.size() > 2 && std::abs(F_.back()) < cut) F_.pop_back();
  }

  double a() const { return a_; }
  double b() const { return b_; }

  /// Series value without range check or flooring (Clenshaw summation).
  double raw_density(double x) const {
    const double c = std::cos(omega_ * (x - a_));
    double b1 = 0.0, b2 = 0.0;
    for (std::size_t k = F_.size() - 1; k >= 1; --k) {
      double b0 = F_[k] + 2.0 * c * b1 - b2;
      b2 = b1;
      b1 = b0;
    }
    return F_[0] + c * b1 - b2;
  }

  /// raw_density over many points, four interleaved Clenshaw chains at a time.
  void raw_density(const double* x, double* out, std::size_t n) const {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      double c[4], b1[4] = {0, 0, 0, 0}, b2[4] = {0, 0, 0, 0};
      for (int j = 0; j < 4; ++j) c[j] = std::cos(omega_ * (x[i + j] - a_));
      for (std::size_t k = F_.size() - 1; k >= 1; --k)
        for (int j = 0; j < 4; ++j) {
          double b0 = F_[k] + 2.0 * c[j] * b1[j] - b2[j];
          b2[j] = b1[j];
          b1[j] = b0;
        }
      for (int j = 0; j < 4; ++j) out[i + j] = F_[0] + c[j] * b1[j] - b2[j];
    }
    for (; i < n; ++i) out[i] = raw_density(x[i]);
  }

  double density(double x) const {
    check(x);
    return std::max(raw_density(x), cfg_.density_floor);
  }

  /// P(X <= x).
  double cdf(double x) const {
    check(x);
    double acc = F_[0] * (x - a_);
    for (std::size_t k = 1; k < F_.size(); ++k) {
      double w = k * omega_;
      acc += F_[k] * std::sin(w * (x - a_)) / w;
    }
    return acc;
  }

  /// E[X 1{X <= x}].
  double partial_mean(double x) const {
    check(x);
    double acc = F_[0] * 0.5 * (x * x - a_ * a_);
    for (std::size_t k = 1; k < F_.size(); ++k) {
      double w = k * omega_;
      double d = w * (x - a_);
      acc += F_[k] * ((x * std::sin(d)) / w + (std::cos(d) - 1.0) / (w * w));
    }
    return acc;
  }

  /// E[e^X 1{X <= x}].
  double partial_exp(double x) const {
    check(x);
    double acc = F_[0] * (std::exp(x) - std::exp(a_));
    for (std::size_t k = 1; k < F_.size(); ++k) {
      double w = k * omega_;
      double d = w * (x - a_);
      acc += F_[k] * (std::exp(x) * (std::cos(d) + w * std::sin(d)) - std::exp(a_)) / (1.0 + w * w);
    }
    return acc;
  }

  /// Smallest x with cdf(x) >= p, by bisection on [a, b].
  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile level must lie in (0,1)");
    double lo = a_, hi = b_;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++it) {
      double mid = 0.5 * (lo + hi);
      if (cdf(mid) < p) lo = mid;
      else hi = mid;
    }
    return 0.5 * (lo + hi);
  }

 private:
  void check(double x) const {
    if (x < a_ || x > b_)
      throw RangeError("x = " + std::to_string(x) + " outside [" + std::to_string(a_) + ", " + std::to_string(b_) + "]");
  }

  CosConfig cfg_;
  double a_ = 0.0, b_ = 0.0, omega_ = 0.0;
  std::vector<double> F_;
};

/// Density of X_dt at each point.
inline std::vector<double> cos_density(const ModelSpec& model, double dt, const std::vector<double>& x,
                                       const CosConfig& cfg = {}) {
  CosExpansion e(model, dt, cfg);
  std::vector<double> out;
  out.reserve(x.size());
  for (double v : x) out.push_back(e.density(v));
  return out;
}

}  // namespace levy_ihr
