#pragma once
// Levy model parameterizations, Laplace and Levy exponents, cumulants,
// and the well-definedness check for intra-horizon expected shortfall.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "levy_ihr/errors.hpp"

namespace levy_ihr {

using cplx = std::complex<double>;

/// Hyper-exponential jump-diffusion: drift, Brownian volatility and a
/// compound Poisson part whose jump sizes are mixtures of exponentials.
struct HyperExpSpec {
  double mu = 0.0;
  double sigma = 0.0;
  double lambda = 0.0;
  std::vector<double> up_weights, up_rates;
  std::vector<double> down_weights, down_rates;

  std::size_t m() const { return lambda > 0.0 ? up_rates.size() : 0; }
  std::size_t n() const { return lambda > 0.0 ? down_rates.size() : 0; }

  /// True iff the first upside exponential moment beyond 1 exists.
  bool scenario2_safe() const { return m() == 0 || up_rates.front() > 1.0; }

  void validate() const {
    if (!std::isfinite(mu)) throw InvalidSpec("mu must be finite");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidSpec("sigma must be >= 0");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidSpec("lambda must be >= 0");
    if (up_weights.size() != up_rates.size() || down_weights.size() != down_rates.size())
      throw InvalidSpec("weight and rate vectors differ in length");
    if (lambda == 0.0) {
      if (!up_rates.empty() || !down_rates.empty())
        throw InvalidSpec("lambda = 0 requires no jump types");
      if (sigma == 0.0 && mu == 0.0) throw InvalidSpec("degenerate zero process");
      return;
    }
    if (up_rates.empty() && down_rates.empty())
      throw InvalidSpec("lambda > 0 requires at least one jump type");
    double total = 0.0;
    for (double w : up_weights) {
      if (!(w > 0.0)) throw InvalidSpec("up weights must be positive");
      total += w;
    }
    for (double w : down_weights) {
      if (!(w > 0.0)) throw InvalidSpec("down weights must be positive");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidSpec("jump weights must sum to 1");
    auto check_rates = [](const std::vector<double>& r, const char* side) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(r[i] > 0.0) || !std::isfinite(r[i]))
          throw InvalidSpec(std::string(side) + " rates must be positive");
        if (i > 0 && !(r[i] > r[i - 1]))
          throw InvalidSpec(std::string(side) + " rates must be strictly increasing");
      }
    };
    check_rates(up_rates, "up");
    check_rates(down_rates, "down");
  }
};

/// Kou double-exponential model as a hyper-exponential spec.
inline HyperExpSpec kou(double mu, double sigma, double lambda, double p, double xi, double eta) {
  HyperExpSpec s;
  s.mu = mu;
  s.sigma = sigma;
  s.lambda = lambda;
  s.up_weights = {p};
  s.up_rates = {xi};
  s.down_weights = {1.0 - p};
  s.down_rates = {eta};
  return s;
}

struct Diffusion {
  double mu = 0.0;
  double sigma = 1.0;
};

struct VG {
  double C = 1.0, G = 1.0, M = 1.0;
  double drift = 0.0;
};

struct CGMY {
  double C = 1.0, G = 1.0, M = 1.0, Y = 0.5;
  double drift = 0.0;
};

struct ModelSpec {
  std::variant<Diffusion, HyperExpSpec, VG, CGMY> variant;

  ModelSpec() : variant(Diffusion{}) {}
  ModelSpec(Diffusion d) : variant(d) {}
  ModelSpec(HyperExpSpec h) : variant(std::move(h)) {}
  ModelSpec(VG v) : variant(v) {}
  ModelSpec(CGMY c) : variant(c) {}

  bool is_diffusion() const { return std::holds_alternative<Diffusion>(variant); }
  bool is_hyperexp() const { return std::holds_alternative<HyperExpSpec>(variant); }
  bool is_vg() const { return std::holds_alternative<VG>(variant); }
  bool is_cgmy() const { return std::holds_alternative<CGMY>(variant); }
  bool completely_monotone() const { return is_vg() || is_cgmy(); }

  std::string name() const {
    switch (variant.index()) {
      case 0: return "diffusion";
      case 1: return "kou";
      case 2: return "vg";
      default: return "cgmy";
    }
  }

  void validate() const {
    std::visit(
        [](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Diffusion>) {
            if (!(m.sigma >= 0.0)) throw InvalidSpec("sigma must be >= 0");
          } else if constexpr (std::is_same_v<T, HyperExpSpec>) {
            m.validate();
          } else {
            if (!(m.C > 0.0 && m.G > 0.0 && m.M > 0.0)) throw InvalidSpec("C, G, M must be positive");
            if constexpr (std::is_same_v<T, CGMY>) {
              if (!(m.Y >= 0.0 && m.Y < 2.0)) throw InvalidSpec("Y must lie in [0, 2)");
              if (std::abs(m.Y - 1.0) < 1e-12) throw InvalidSpec("Y = 1 is not supported");
            }
          }
        },
        variant);
  }
};

/// Diffusion as a jump-free hyper-exponential spec.
inline HyperExpSpec as_hyperexp(const Diffusion& d) {
  HyperExpSpec s;
  s.mu = d.mu;
  s.sigma = d.sigma;
  return s;
}

enum class ScenarioKind { Direct, LongExp, ShortExp };

/// P&L scenario: z is the starting accumulated P&L; z1, z2 are position
/// constants for the exponential (stock-like) scenarios.
struct Scenario {
  ScenarioKind kind = ScenarioKind::Direct;
  double z = 0.0;
  double z1 = 1.0;
  double z2 = 1.0;
};

inline std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Direct: return "direct";
    case ScenarioKind::LongExp: return "long";
    default: return "short";
  }
}

inline ScenarioKind scenario_from_string(const std::string& s) {
  if (s == "direct") return ScenarioKind::Direct;
  if (s == "long") return ScenarioKind::LongExp;
  if (s == "short") return ScenarioKind::ShortExp;
  throw InvalidSpec("unknown scenario '" + s + "'");
}

// ---------------------------------------------------------------------------
// Hyper-exponential exponent and derivatives.

/// Jump part written as sum p*theta/(xi-theta) so that Phi(0) = 0 exactly.
template <class T>
T hyperexp_jump_part(const HyperExpSpec& s, T theta) {
  T acc = 0.0;
  if (s.lambda == 0.0) return acc;
  for (std::size_t i = 0; i < s.up_rates.size(); ++i)
    acc += s.up_weights[i] * theta / (s.up_rates[i] - theta);
  for (std::size_t j = 0; j < s.down_rates.size(); ++j)
    acc -= s.down_weights[j] * theta / (s.down_rates[j] + theta);
  return s.lambda * acc;
}

/// Real-line Laplace exponent, including the rational continuation past poles.
inline double hyperexp_phi(const HyperExpSpec& s, double theta) {
  return s.mu * theta + 0.5 * s.sigma * s.sigma * theta * theta + hyperexp_jump_part(s, theta);
}

inline double hyperexp_dphi(const HyperExpSpec& s, double theta) {
  double acc = 0.0;
  if (s.lambda > 0.0) {
    for (std::size_t i = 0; i < s.up_rates.size(); ++i) {
      double d = s.up_rates[i] - theta;
      acc += s.up_weights[i] * s.up_rates[i] / (d * d);
    }
    for (std::size_t j = 0; j < s.down_rates.size(); ++j) {
      double d = s.down_rates[j] + theta;
      acc -= s.down_weights[j] * s.down_rates[j] / (d * d);
    }
  }
  return s.mu + s.sigma * s.sigma * theta + s.lambda * acc;
}

namespace detail {

inline bool is_pole(const HyperExpSpec& s, double theta) {
  if (s.lambda == 0.0) return false;
  for (double r : s.up_rates)
    if (theta == r) return true;
  for (double r : s.down_rates)
    if (theta == -r) return true;
  return false;
}

inline cplx vg_phi(const VG& v, cplx th) {
  return v.drift * th - v.C * (std::log(1.0 - th / v.M) + std::log(1.0 + th / v.G));
}

inline cplx cgmy_phi(const CGMY& c, cplx th) {
  if (c.Y == 0.0) return vg_phi(VG{c.C, c.G, c.M, c.drift}, th);
  double g = std::tgamma(-c.Y);
  return c.drift * th + c.C * g *
                            (std::pow(c.M - th, c.Y) - std::pow(c.M, c.Y) +
                             std::pow(c.G + th, c.Y) - std::pow(c.G, c.Y));
}

}  // namespace detail

/// Laplace exponent Phi(theta) = log E[exp(theta X_1)].
inline double laplace_exponent(const ModelSpec& model, double theta) {
  if (theta == 0.0) return 0.0;
  return std::visit(
      [theta](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Diffusion>) {
          return m.mu * theta + 0.5 * m.sigma * m.sigma * theta * theta;
        } else if constexpr (std::is_same_v<T, HyperExpSpec>) {
          if (detail::is_pole(m, theta)) throw PoleError("theta = " + std::to_string(theta));
          return hyperexp_phi(m, theta);
        } else {
          if (!(theta < m.M && theta > -m.G))
            throw DomainError("theta outside (-G, M): " + std::to_string(theta));
          if constexpr (std::is_same_v<T, VG>)
            return detail::vg_phi(m, cplx(theta)).real();
          else
            return detail::cgmy_phi(m, cplx(theta)).real();
        }
      },
      model.variant);
}

/// Levy exponent Psi(theta) = -log E[exp(i theta X_1)] = -Phi(i theta).
inline cplx levy_exponent(const ModelSpec& model, double theta) {
  if (theta == 0.0) return 0.0;
  const cplx ith(0.0, theta);
  return std::visit(
      [&](const auto& m) -> cplx {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Diffusion>) {
          return -(m.mu * ith + 0.5 * m.sigma * m.sigma * ith * ith);
        } else if constexpr (std::is_same_v<T, HyperExpSpec>) {
          return -(m.mu * ith + 0.5 * m.sigma * m.sigma * ith * ith + hyperexp_jump_part(m, ith));
        } else if constexpr (std::is_same_v<T, VG>) {
          return -detail::vg_phi(m, ith);
        } else {
          return -detail::cgmy_phi(m, ith);
        }
      },
      model.variant);
}

/// First four cumulants of X_1 (derivatives of Phi at 0).
struct Cumulants {
  double c1 = 0, c2 = 0, c3 = 0, c4 = 0;
};

inline Cumulants cumulants(const ModelSpec& model) {
  return std::visit(
      [](const auto& m) -> Cumulants {
        using T = std::decay_t<decltype(m)>;
        Cumulants k;
        if constexpr (std::is_same_v<T, Diffusion>) {
          k.c1 = m.mu;
          k.c2 = m.sigma * m.sigma;
        } else if constexpr (std::is_same_v<T, HyperExpSpec>) {
          double s[5] = {0, 0, 0, 0, 0};
          const double fact[5] = {1, 1, 2, 6, 24};
          for (int r = 1; r <= 4; ++r) {
            double a = 0.0;
            if (m.lambda > 0.0) {
              for (std::size_t i = 0; i < m.up_rates.size(); ++i)
                a += m.up_weights[i] / std::pow(m.up_rates[i], r);
              for (std::size_t j = 0; j < m.down_rates.size(); ++j)
                a += (r % 2 ? -1.0 : 1.0) * m.down_weights[j] / std::pow(m.down_rates[j], r);
            }
            s[r] = m.lambda * fact[r] * a;
          }
          k.c1 = m.mu + s[1];
          k.c2 = m.sigma * m.sigma + s[2];
          k.c3 = s[3];
          k.c4 = s[4];
        } else {
          double C = m.C, G = m.G, M = m.M, Y = 0.0;
          if constexpr (std::is_same_v<T, CGMY>) Y = m.Y;
          double c[5];
          for (int r = 1; r <= 4; ++r)
            c[r] = C * std::tgamma(r - Y) * (std::pow(M, Y - r) + (r % 2 ? -1.0 : 1.0) * std::pow(G, Y - r));
          k.c1 = m.drift + c[1];
          k.c2 = c[2];
          k.c3 = c[3];
          k.c4 = c[4];
        }
        return k;
      },
      model.variant);
}

/// Continuous volatility sigma_X of the model (zero for pure-jump VG/CGMY).
inline double diffusion_sigma(const ModelSpec& model) {
  if (auto d = std::get_if<Diffusion>(&model.variant)) return d->sigma;
  if (auto h = std::get_if<HyperExpSpec>(&model.variant)) return h->sigma;
  return 0.0;
}

struct WellDefinedness {
  bool ok = true;
  std::vector<std::string> reasons;
};

/// Intra-horizon expected shortfall is finite iff the loss side carries a
/// finite exponential moment. Long exposures have losses bounded by z2.
inline WellDefinedness check_ies_well_defined(const ModelSpec& model, const Scenario& scenario) {
  WellDefinedness r;
  if (scenario.kind != ScenarioKind::ShortExp) return r;
  double upside = std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Diffusion>) {
          return INFINITY;
        } else if constexpr (std::is_same_v<T, HyperExpSpec>) {
          return m.m() == 0 ? INFINITY : m.up_rates.front();
        } else {
          return m.M;
        }
      },
      model.variant);
  if (!(upside > 1.0)) {
    r.ok = false;
    r.reasons.push_back("no θ*>1 with finite upside exponential moment");
  }
  return r;
}

}  // namespace levy_ihr
