#pragma once
// Hyper-exponential approximation of completely monotone Levy densities
// (VG, CGMY) through a discretized Bernstein measure.

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <string>
#include <vector>

#include "levy_ihr/errors.hpp"
#include "levy_ihr/models.hpp"

namespace levy_ihr {

enum class Side { Up, Down };

/// Bernstein measure of one side of the Levy density:
/// pi(y) = int_{low}^inf e^{-u|y|} density(u) du.
/// density(u) = C (u - low)^Y / Gamma(1 + Y), Y = 0 for VG.
struct BernsteinMeasure {
  Side side = Side::Up;
  double C = 0.0;
  double Y = 0.0;
  double support_low = 0.0;

  double density(double u) const {
    if (u <= support_low) return 0.0;
    return C * std::pow(u - support_low, Y) / std::tgamma(1.0 + Y);
  }
  /// mu([a, b)) in closed form.
  double mass(double a, double b) const {
    a = std::max(a, support_low);
    if (b <= a) return 0.0;
    return C / std::tgamma(2.0 + Y) * (std::pow(b - support_low, 1.0 + Y) - std::pow(a - support_low, 1.0 + Y));
  }
  /// Levy density of the side at |y| > 0 (closed form of the Bernstein integral).
  double levy_density(double y) const {
    y = std::abs(y);
    return C * std::exp(-support_low * y) / std::pow(y, 1.0 + Y);
  }
  /// int_{u_max}^inf e^{-u}/u mu(du): jump mass beyond size 1 dropped by truncating at u_max.
  double tail_mass_beyond_one(double u_max) const {
    if (Y == 0.0) return C * boost::math::expint(1, u_max);
    // (u - low)^Y <= u^Y bounds the integrand by C u^{Y-1} e^{-u} / Gamma(1+Y)
    return C / std::tgamma(1.0 + Y) * boost::math::tgamma(Y, u_max);
  }
  /// int_{u_max}^inf 2/u^3 mu(du): second moment of the dropped small jumps (upper bound).
  double small_jump_second_moment(double u_max) const {
    return 2.0 * C / std::tgamma(1.0 + Y) * std::pow(u_max, Y - 2.0) / (2.0 - Y);
  }
};

inline BernsteinMeasure bernstein_measure(const ModelSpec& model, Side side) {
  if (const VG* v = std::get_if<VG>(&model.variant))
    return {side, v->C, 0.0, side == Side::Up ? v->M : v->G};
  if (const CGMY* c = std::get_if<CGMY>(&model.variant))
    return {side, c->C, c->Y, side == Side::Up ? c->M : c->G};
  throw UnsupportedModel(model.name() + " has no Bernstein representation to discretize");
}

struct Discretization {
  std::vector<double> edges;
  std::vector<double> rates;        // interval midpoints
  std::vector<double> intensities;  // Lambda * weight = mass / rate
  double total_intensity = 0.0;
};

struct ApproxConfig {
  int n_up = 100;
  int n_down = 100;
  double delta0 = 1e-8;          // grid starts at support_low + delta0
  double eps_truncation = 1e-6;  // dropped jump mass beyond size 1
  double eps_small_jump = 1e-6;  // second moment of dropped small jumps, picks u_max
  double delta = 1e-3;           // small-jump window for reported error integrals
  double y_max = 0.5;            // upper end of the L2 window
};

/// Midpoint discretization over explicit interval edges.
inline Discretization discretize_on(const BernsteinMeasure& mu, std::vector<double> edges) {
  if (edges.size() < 2) throw DomainError("need at least one interval");
  Discretization d;
  d.edges = std::move(edges);
  for (std::size_t i = 0; i + 1 < d.edges.size(); ++i) {
    double a = d.edges[i], b = d.edges[i + 1];
    if (!(b > a) || a < mu.support_low) throw DomainError("edges must increase from the support of the measure");
    double r = 0.5 * (a + b);
    d.rates.push_back(r);
    d.intensities.push_back(mu.mass(a, b) / r);
    d.total_intensity += d.intensities.back();
  }
  return d;
}

/// Midpoint discretization on a geometric grid over [low + delta0, u_max].
inline Discretization discretize(const BernsteinMeasure& mu, int n_terms, double u_max,
                                 const ApproxConfig& cfg = {}) {
  if (n_terms < 1) throw DomainError("n_terms must be >= 1");
  const double lo = mu.support_low + cfg.delta0;
  if (!(u_max > lo)) throw DomainError("u_max must exceed the support of the Bernstein measure");
  double lost = mu.tail_mass_beyond_one(u_max);
  if (lost >= cfg.eps_truncation)
    throw DomainError("u_max = " + std::to_string(u_max) + " drops jump mass " + std::to_string(lost) +
                      " beyond size 1");
  std::vector<double> edges;
  const double ratio = std::log(u_max / lo) / n_terms;
  for (int i = 0; i <= n_terms; ++i) edges.push_back(i == n_terms ? u_max : lo * std::exp(ratio * i));
  return discretize_on(mu, std::move(edges));
}

/// Smallest u_max whose dropped small-jump second moment is below eps.
inline double choose_u_max(const BernsteinMeasure& mu, double eps) {
  double u = std::pow(2.0 * mu.C / (std::tgamma(1.0 + mu.Y) * (2.0 - mu.Y) * eps), 1.0 / (2.0 - mu.Y));
  return std::max(u, 2.0 * (mu.support_low + 1.0));
}

struct ApproximationReport {
  int n_up = 0;
  int n_down = 0;
  double u_max_up = 0.0, u_max_down = 0.0;
  double eps_truncation = 0.0;  // jump mass beyond size 1 dropped on both sides
  double eps_l2 = 0.0;          // int (pi - pi_n)^2 over delta <= |y| <= y_max
  double eps_small_jump = 0.0;  // int_{-delta}^{delta} y^2 |pi - pi_n|
  double lambda_n = 0.0;
  double drift_matched = 0.0;
  double drift_residual = 0.0;  // |Phi_n(1) - Phi_X(1)|
};

namespace detail {

inline double hyperexp_side_density(const Discretization& d, double y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < d.rates.size(); ++i) acc += d.intensities[i] * d.rates[i] * std::exp(-d.rates[i] * y);
  return acc;
}

inline void side_errors(const BernsteinMeasure& mu, const Discretization& d, const ApproxConfig& cfg, double& l2,
                        double& small) {
  boost::math::quadrature::tanh_sinh<double> q;
  auto diff = [&](double y) { return mu.levy_density(y) - hyperexp_side_density(d, y); };
  // log-substitution y = e^s spreads the quadrature nodes across scales
  l2 += q.integrate([&](double s) { double y = std::exp(s); double e = diff(y); return e * e * y; },
                    std::log(cfg.delta), std::log(cfg.y_max));
  small += q.integrate([&](double s) { double y = std::exp(s); return y * y * std::abs(diff(y)) * y; },
                       std::log(cfg.delta) - 30.0, std::log(cfg.delta));
}

}  // namespace detail

/// Hyper-exponential approximation with drift matched so that Phi_n(1) = Phi_X(1).
/// sigma is carried over unchanged; small jumps are not turned into diffusion.
inline HyperExpSpec approximate(const ModelSpec& model, const ApproxConfig& cfg = {},
                                ApproximationReport* report = nullptr) {
  if (cfg.n_up < 1 || cfg.n_down < 1) throw DomainError("n_up and n_down must be >= 1");
  model.validate();
  BernsteinMeasure up = bernstein_measure(model, Side::Up);
  BernsteinMeasure dn = bernstein_measure(model, Side::Down);
  if (!(up.support_low > 1.0))
    throw DomainError("drift matching at theta = 1 requires M > 1");
  // a quarter of the budget per side leaves room for the discretization error
  double umax_up = choose_u_max(up, 0.25 * cfg.eps_small_jump);
  double umax_dn = choose_u_max(dn, 0.25 * cfg.eps_small_jump);
  Discretization du = discretize(up, cfg.n_up, umax_up, cfg);
  Discretization dd = discretize(dn, cfg.n_down, umax_dn, cfg);

  HyperExpSpec s;
  s.sigma = diffusion_sigma(model);
  s.lambda = du.total_intensity + dd.total_intensity;
  s.up_rates = du.rates;
  s.down_rates = dd.rates;
  for (double x : du.intensities) s.up_weights.push_back(x / s.lambda);
  for (double x : dd.intensities) s.down_weights.push_back(x / s.lambda);
  const double target = laplace_exponent(model, 1.0);
  s.mu = target - 0.5 * s.sigma * s.sigma - hyperexp_jump_part(s, 1.0);

  if (report) {
    ApproximationReport& r = *report;
    r.n_up = cfg.n_up;
    r.n_down = cfg.n_down;
    r.u_max_up = umax_up;
    r.u_max_down = umax_dn;
    r.eps_truncation = up.tail_mass_beyond_one(umax_up) + dn.tail_mass_beyond_one(umax_dn);
    r.eps_l2 = r.eps_small_jump = 0.0;
    detail::side_errors(up, du, cfg, r.eps_l2, r.eps_small_jump);
    detail::side_errors(dn, dd, cfg, r.eps_l2, r.eps_small_jump);
    r.lambda_n = s.lambda;
    r.drift_matched = s.mu;
    r.drift_residual = std::abs(hyperexp_phi(s, 1.0) - target);
  }
  return s;
}

inline HyperExpSpec approximate(const ModelSpec& model, int n_up, int n_down, ApproxConfig cfg = {},
                                ApproximationReport* report = nullptr) {
  cfg.n_up = n_up;
  cfg.n_down = n_down;
  return approximate(model, cfg, report);
}

}  // namespace levy_ihr
