#pragma once
// Roots of Phi(theta) = vartheta for hyper-exponential jump-diffusions,
// the Dirichlet systems fixing the exponential-sum coefficients, and the
// maturity-randomized first-passage probabilities split by crossing type.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "levy_ihr/errors.hpp"
#include "levy_ihr/models.hpp"

namespace levy_ihr {

enum class Regime { SigmaPos, SigmaZeroMuPos, SigmaZeroMuNeg, SigmaZeroMuZero };
enum class Direction { Up, Down };

inline Regime regime_of(const HyperExpSpec& s) {
  if (s.sigma > 0.0) return Regime::SigmaPos;
  if (s.mu > 0.0) return Regime::SigmaZeroMuPos;
  if (s.mu < 0.0) return Regime::SigmaZeroMuNeg;
  return Regime::SigmaZeroMuZero;
}

/// Real roots of Phi(theta) = vartheta. betas ascend from 0, gammas descend from 0.
struct RootSet {
  double theta_level = 0.0;
  std::vector<double> betas;
  std::vector<double> gammas;
  Regime regime = Regime::SigmaPos;
};

namespace detail {

/// Safeguarded Newton on a sign-change bracket [lo, hi].
inline double polish_root(const HyperExpSpec& s, double vt, double lo, double hi) {
  auto g = [&](double t) { return hyperexp_phi(s, t) - vt; };
  double glo = g(lo);
  const bool lo_neg = glo < 0.0;
  const double scale = std::max(1.0, vt);
  // coarse bisection
  for (int it = 0; it < 400; ++it) {
    if (hi - lo <= 1e-6 * std::max(std::abs(lo), std::abs(hi))) break;
    double mid = 0.5 * (lo + hi);
    if ((g(mid) < 0.0) == lo_neg) lo = mid;
    else hi = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double gx = g(x);
    if (gx == 0.0 || std::abs(gx) <= 1e-13 * scale) return x;
    if ((gx < 0.0) == lo_neg) lo = x;
    else hi = x;
    if (std::nextafter(lo, hi) >= hi) return std::abs(g(lo)) < std::abs(g(hi)) ? lo : hi;
    double d = hyperexp_dphi(s, x);
    double xn = x - gx / d;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    x = xn;
  }
  throw ConvergenceError("root polish did not converge in [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]");
}

/// Point just inside a pole at `pole`, moving in direction `dir` (+1 or -1),
/// where g should have sign `want_neg`.
inline double pole_offset(const HyperExpSpec& s, double vt, double pole, int dir, bool want_neg) {
  double off = 1e-9 * std::abs(pole);
  for (int it = 0; it < 60; ++it) {
    double t = pole + dir * off;
    if (t != pole) {
      double gt = hyperexp_phi(s, t) - vt;
      if ((gt < 0.0) == want_neg) return t;
    }
    off *= 0.1;
  }
  throw ConvergenceError("cannot bracket root next to pole " + std::to_string(pole));
}

}  // namespace detail

/// Roots bracketed by the interlacing with the jump rates, then refined.
inline RootSet find_roots(const HyperExpSpec& s, double vartheta) {
  if (!(vartheta > 0.0)) throw DomainError("vartheta must be positive");
  RootSet r;
  r.theta_level = vartheta;
  r.regime = regime_of(s);
  const std::size_t m = s.m(), n = s.n();
  const bool up_outer = r.regime == Regime::SigmaPos || r.regime == Regime::SigmaZeroMuPos;
  const bool down_outer = r.regime == Regime::SigmaPos || r.regime == Regime::SigmaZeroMuNeg;
  auto g = [&](double t) { return hyperexp_phi(s, t) - vartheta; };

  // positive side: g(0) < 0, g -> +inf below each pole, -inf above it
  for (std::size_t i = 0; i < m; ++i) {
    double lo = i == 0 ? 0.0 : detail::pole_offset(s, vartheta, s.up_rates[i - 1], +1, true);
    double hi = detail::pole_offset(s, vartheta, s.up_rates[i], -1, false);
    r.betas.push_back(detail::polish_root(s, vartheta, lo, hi));
  }
  if (up_outer) {
    double lo = m == 0 ? 0.0 : detail::pole_offset(s, vartheta, s.up_rates[m - 1], +1, true);
    double hi = 2.0 * std::max(1.0, std::max(lo, std::sqrt(vartheta)));
    int guard = 0;
    while (g(hi) <= 0.0) {
      lo = hi;
      hi *= 2.0;
      if (++guard > 2000) throw ConvergenceError("outer positive root not bracketed");
    }
    r.betas.push_back(detail::polish_root(s, vartheta, lo, hi));
  }
  // negative side, mirrored
  for (std::size_t j = 0; j < n; ++j) {
    double hi = j == 0 ? 0.0 : detail::pole_offset(s, vartheta, -s.down_rates[j - 1], -1, true);
    double lo = detail::pole_offset(s, vartheta, -s.down_rates[j], +1, false);
    r.gammas.push_back(detail::polish_root(s, vartheta, lo, hi));
  }
  if (down_outer) {
    double hi = n == 0 ? 0.0 : detail::pole_offset(s, vartheta, -s.down_rates[n - 1], -1, true);
    double lo = -2.0 * std::max(1.0, std::max(-hi, std::sqrt(vartheta)));
    int guard = 0;
    while (g(lo) <= 0.0) {
      hi = lo;
      lo *= 2.0;
      if (++guard > 2000) throw ConvergenceError("outer negative root not bracketed");
    }
    r.gammas.push_back(detail::polish_root(s, vartheta, lo, hi));
  }
  return r;
}

/// True when a root sits within rel*rate of a jump rate.
inline bool near_coincident(const HyperExpSpec& s, const RootSet& r, double rel = 1e-8) {
  if (s.lambda == 0.0) return false;
  for (double b : r.betas)
    for (double x : s.up_rates)
      if (std::abs(b - x) < rel * x) return true;
  for (double g : r.gammas)
    for (double e : s.down_rates)
      if (std::abs(g + e) < rel * e) return true;
  return false;
}

/// Boundary-condition matrix. The first row of ones (continuous fit) is
/// present iff the process can creep onto the barrier.
inline Eigen::MatrixXd build_dirichlet_matrix(const HyperExpSpec& s, const RootSet& r, Direction dir) {
  const bool up = dir == Direction::Up;
  const std::vector<double>& roots = up ? r.betas : r.gammas;
  const std::size_t types = up ? s.m() : s.n();
  const std::vector<double>& rates = up ? s.up_rates : s.down_rates;
  const std::size_t dim = roots.size();
  const bool cont = dim == types + 1;
  if (!cont && dim != types) throw SingularityError("root count does not match jump types");
  Eigen::MatrixXd A(dim, dim);
  std::size_t row = 0;
  if (cont) A.row(row++).setOnes();
  for (std::size_t i = 0; i < types; ++i, ++row) {
    for (std::size_t k = 0; k < dim; ++k) {
      double den = up ? rates[i] - roots[k] : rates[i] + roots[k];
      if (den == 0.0) throw SingularityError("root coincides with a jump rate");
      A(row, k) = rates[i] / den;
    }
  }
  return A;
}

/// Exponential-sum representation of LC-transformed first-passage
/// probabilities at one intensity vartheta.
struct RandomizedFPP {
  Direction direction = Direction::Down;
  double theta_level = 0.0;
  std::vector<double> exponents;  // betas (Up) or gammas (Down)
  bool continuous_fit = true;     // barrier reachable without overshoot
  std::vector<double> w_diffusion;
  std::vector<double> w_jump_total;
  std::vector<std::vector<double>> w_jump_by_type;
};

namespace detail {

/// Product of many factors kept as (log|value|, sign).
struct SignedLog {
  double log = 0.0;
  int sign = 1;
  void mul(double v) {
    if (v < 0.0) sign = -sign;
    log += std::log(std::abs(v));
  }
  void div(double v) {
    if (v < 0.0) sign = -sign;
    log -= std::log(std::abs(v));
  }
  SignedLog operator*(const SignedLog& o) const { return {log + o.log, sign * o.sign}; }
  SignedLog operator/(const SignedLog& o) const { return {log - o.log, sign * o.sign}; }
  double value() const { return sign * std::exp(log); }
};

inline std::vector<double> lu_solve(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu,
                                    const Eigen::MatrixXd& A, const Eigen::VectorXd& rhs) {
  Eigen::VectorXd v = lu.solve(rhs);
  double res = (A * v - rhs).lpNorm<Eigen::Infinity>();
  if (!v.allFinite() || res > 1e-8 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>()))
    throw SingularityError("linear solve residual " + std::to_string(res));
  return std::vector<double>(v.data(), v.data() + v.size());
}

/// Closed-form per-type weights when a continuous-fit row is present.
/// Up uses B(x) = prod (xi_s - x), C(x) = prod_{s>=2} (beta_s - x);
/// Down uses B(x) = prod (eta_s + x), C(x) = prod_{s>=2} (gamma_s + x).
inline std::vector<std::vector<double>> closed_form_types_cont(const std::vector<double>& rates,
                                                               const std::vector<double>& roots,
                                                               const std::vector<double>& v0,
                                                               bool up) {
  const std::size_t m = rates.size(), dim = roots.size();
  std::vector<SignedLog> Bk(dim), Cp(dim), Ci(m), Bpi(m);
  for (std::size_t k = 0; k < dim; ++k) {
    for (std::size_t s = 0; s < m; ++s) Bk[k].mul(up ? rates[s] - roots[k] : rates[s] + roots[k]);
    if (k == 0) continue;
    // C'(root_k): Up -prod_{s!=k}(beta_s - beta_k); Down prod_{s!=k}(gamma_s - gamma_k)
    if (up) Cp[k].sign = -1;
    for (std::size_t s = 1; s < dim; ++s)
      if (s != k) Cp[k].mul(roots[s] - roots[k]);
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t s = 1; s < dim; ++s) Ci[i].mul(up ? roots[s] - rates[i] : roots[s] + rates[i]);
    // B'(xi_i) = -prod_{s!=i}(xi_s - xi_i); B'(-eta_j) = prod_{s!=j}(eta_s - eta_j)
    if (up) Bpi[i].sign = -1;
    for (std::size_t s = 0; s < m; ++s)
      if (s != i) Bpi[i].mul(rates[s] - rates[i]);
  }
  std::vector<std::vector<double>> w(m, std::vector<double>(dim));
  const double parity = (!up && (m % 2 == 1)) ? -1.0 : 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    SignedLog f = Ci[i] / Bpi[i];
    f.div(rates[i]);
    double fac = (up ? -1.0 : parity) * f.value();
    w[i][0] = fac * v0[0];
    for (std::size_t k = 1; k < dim; ++k) {
      SignedLog d = Bk[k] * Ci[i] / (Bpi[i] * Cp[k]);
      d.div(up ? rates[i] - roots[k] : rates[i] + roots[k]);
      d.div(rates[i]);
      w[i][k] = fac * v0[k] + (up ? -1.0 : 1.0) * d.value();
    }
  }
  return w;
}

/// Closed-form per-type weights for the reduced (no continuous fit) system.
/// Products run over all roots.
inline std::vector<std::vector<double>> closed_form_types_reduced(const std::vector<double>& rates,
                                                                  const std::vector<double>& roots,
                                                                  bool up) {
  const std::size_t m = rates.size();
  std::vector<SignedLog> Bk(m), Cp(m), Ci(m), Bpi(m);
  for (std::size_t k = 0; k < m; ++k) {
    if (up) Cp[k].sign = -1;
    for (std::size_t s = 0; s < m; ++s) {
      Bk[k].mul(up ? rates[s] - roots[k] : rates[s] + roots[k]);
      if (s != k) Cp[k].mul(roots[s] - roots[k]);
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (up) Bpi[i].sign = -1;
    for (std::size_t s = 0; s < m; ++s) {
      Ci[i].mul(up ? roots[s] - rates[i] : roots[s] + rates[i]);
      if (s != i) Bpi[i].mul(rates[s] - rates[i]);
    }
  }
  std::vector<std::vector<double>> w(m, std::vector<double>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < m; ++k) {
      SignedLog v = Bk[k] * Ci[i] / (Bpi[i] * Cp[k]);
      v.div(rates[i]);
      v.div(up ? rates[i] - roots[k] : rates[i] + roots[k]);
      w[i][k] = (up ? -1.0 : 1.0) * v.value();
    }
  return w;
}

inline RandomizedFPP fpp_shell(const HyperExpSpec& s, const RootSet& r, Direction dir) {
  RandomizedFPP f;
  f.direction = dir;
  f.theta_level = r.theta_level;
  f.exponents = dir == Direction::Up ? r.betas : r.gammas;
  const std::size_t types = dir == Direction::Up ? s.m() : s.n();
  f.continuous_fit = f.exponents.size() == types + 1;
  return f;
}

}  // namespace detail

/// Diffusion and jump-total weights by linear solve, per-type weights in
/// closed form (continuous-fit and reduced variants).
inline RandomizedFPP solve_weights(const HyperExpSpec& s, const RootSet& r, Direction dir) {
  RandomizedFPP f = detail::fpp_shell(s, r, dir);
  const bool up = dir == Direction::Up;
  const std::size_t dim = f.exponents.size();
  const std::size_t types = up ? s.m() : s.n();
  std::vector<double> rates;
  if (types > 0) rates = up ? s.up_rates : s.down_rates;
  if (dim == 0) return f;
  Eigen::MatrixXd A = build_dirichlet_matrix(s, r, dir);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  if (f.continuous_fit) {
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(dim), eJ = Eigen::VectorXd::Ones(dim);
    e0(0) = 1.0;
    eJ(0) = 0.0;
    f.w_diffusion = detail::lu_solve(lu, A, e0);
    f.w_jump_total = detail::lu_solve(lu, A, eJ);
    f.w_jump_by_type = detail::closed_form_types_cont(rates, f.exponents, f.w_diffusion, up);
  } else {
    f.w_diffusion.assign(dim, 0.0);
    f.w_jump_by_type = detail::closed_form_types_reduced(rates, f.exponents, up);
    f.w_jump_total = detail::lu_solve(lu, A, Eigen::VectorXd::Ones(dim));
  }
  // The solved total agrees with the sum of the closed forms to rounding; the
  // sum is kept so the split stays additive after Gaver-Stehfest weighting,
  // whose coefficients reach 1e8.
  for (std::size_t k = 0; k < dim; ++k) {
    double acc = 0.0;
    for (const auto& w : f.w_jump_by_type) acc += w[k];
    f.w_jump_total[k] = acc;
  }
  return f;
}

/// Same representation with every component taken from the linear system
/// (columns of the inverse boundary matrix).
inline RandomizedFPP solve_weights_linear(const HyperExpSpec& s, const RootSet& r, Direction dir) {
  RandomizedFPP f = detail::fpp_shell(s, r, dir);
  const std::size_t dim = f.exponents.size();
  if (dim == 0) return f;
  Eigen::MatrixXd A = build_dirichlet_matrix(s, r, dir);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const std::size_t off = f.continuous_fit ? 1 : 0;
  const std::size_t types = dim - off;
  if (f.continuous_fit) {
    f.w_diffusion = detail::lu_solve(lu, A, Eigen::VectorXd::Unit(dim, 0));
  } else {
    f.w_diffusion.assign(dim, 0.0);
  }
  Eigen::VectorXd eJ = Eigen::VectorXd::Ones(dim);
  if (f.continuous_fit) eJ(0) = 0.0;
  f.w_jump_total = detail::lu_solve(lu, A, eJ);
  for (std::size_t i = 0; i < types; ++i)
    f.w_jump_by_type.push_back(detail::lu_solve(lu, A, Eigen::VectorXd::Unit(dim, i + off)));
  return f;
}

/// Roots and weights at vartheta, nudging vartheta by 1e-6 relative when a
/// root lands on top of a jump rate.
inline RandomizedFPP randomized_fpp(const HyperExpSpec& s, double vartheta, Direction dir) {
  RootSet r = find_roots(s, vartheta);
  for (int it = 0; it < 5 && near_coincident(s, r); ++it) {
    vartheta *= 1.0 + 1e-6;
    r = find_roots(s, vartheta);
  }
  return solve_weights(s, r, dir);
}

enum class ComponentKind { Diffusion, JumpTotal, JumpType, All };

struct Component {
  ComponentKind kind = ComponentKind::All;
  std::size_t type = 0;

  static Component diffusion() { return {ComponentKind::Diffusion, 0}; }
  static Component jump_total() { return {ComponentKind::JumpTotal, 0}; }
  static Component jump_type(std::size_t i) { return {ComponentKind::JumpType, i}; }
  static Component all() { return {ComponentKind::All, 0}; }
};

/// Weight vector for a component.
inline std::vector<double> component_weights(const RandomizedFPP& f, Component c) {
  switch (c.kind) {
    case ComponentKind::Diffusion: return f.w_diffusion;
    case ComponentKind::JumpTotal: return f.w_jump_total;
    case ComponentKind::JumpType:
      if (c.type >= f.w_jump_by_type.size()) throw DomainError("jump type out of range");
      return f.w_jump_by_type[c.type];
    default: {
      std::vector<double> w = f.w_jump_total;
      for (std::size_t k = 0; k < w.size(); ++k) w[k] += f.w_diffusion[k];
      return w;
    }
  }
}

/// LC-transformed first-passage probability of the requested component.
/// Up requires x <= ell, Down x >= ell.
inline double lc_fpp(const RandomizedFPP& f, Component c, double x, double ell) {
  const bool up = f.direction == Direction::Up;
  if (up ? x > ell : x < ell) throw DomainError("start on the far side of the barrier");
  if (x == ell) return (c.kind == ComponentKind::Diffusion || c.kind == ComponentKind::All) ? 1.0 : 0.0;
  std::vector<double> w = component_weights(f, c);
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * std::exp(f.exponents[k] * (x - ell));
  return acc;
}

}  // namespace levy_ihr
