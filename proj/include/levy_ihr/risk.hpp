#pragma once
// Intra-horizon value at risk and expected shortfall, their point-in-time
// counterparts and diffusion/jump risk contributions.

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "levy_ihr/cm_approximation.hpp"
#include "levy_ihr/cos.hpp"
#include "levy_ihr/errors.hpp"
#include "levy_ihr/gaver_stehfest.hpp"
#include "levy_ihr/hejd.hpp"
#include "levy_ihr/models.hpp"
#include "levy_ihr/parallel.hpp"

namespace levy_ihr {

/// Hyper-exponential spec used for first-passage computations of a model.
inline HyperExpSpec to_hyperexp(const ModelSpec& model, const ApproxConfig& cfg = {}) {
  if (const Diffusion* d = std::get_if<Diffusion>(&model.variant)) return as_hyperexp(*d);
  if (const HyperExpSpec* h = std::get_if<HyperExpSpec>(&model.variant)) return *h;
  return approximate(model, cfg);
}

/// Overshoot tolerance for inverted probabilities: values within it are
/// clamped to [0,1] with a warning, values beyond it are rejected.
constexpr double kProbabilitySlack = 1e-4;

inline double clamp_probability(double v) {
  if (v < -kProbabilitySlack || v > 1.0 + kProbabilitySlack || !std::isfinite(v))
    throw PrecisionError("inverted probability " + std::to_string(v) + " outside [0,1]");
  if (v < 0.0 || v > 1.0) {
    spdlog::warn("clamping inverted probability {} to [0,1]", v);
    return std::clamp(v, 0.0, 1.0);
  }
  return v;
}

/// Gaver-Stehfest inverted first-passage probabilities at a fixed horizon,
/// as functions of the barrier distance |x - ell| >= 0.
class FirstPassageSurface {
 public:
  FirstPassageSurface(HyperExpSpec spec, Direction dir, double t, int gs_order = 8, int threads = 1)
      : spec_(std::move(spec)), dir_(dir), t_(t), gs_(gs_coefficients(gs_order)) {
    spec_.validate();
    std::vector<double> th = gs_abscissae(gs_, t);
    terms_.resize(th.size());
    parallel_for(th.size(), threads, [&](std::size_t k) { terms_[k] = randomized_fpp(spec_, th[k], dir_); });
  }

  const HyperExpSpec& spec() const { return spec_; }
  Direction direction() const { return dir_; }
  double horizon() const { return t_; }
  const GaverStehfestTable& table() const { return gs_; }
  const std::vector<RandomizedFPP>& terms() const { return terms_; }
  std::size_t jump_types() const { return dir_ == Direction::Up ? spec_.m() : spec_.n(); }
  const std::vector<double>& loss_rates() const { return dir_ == Direction::Up ? spec_.up_rates : spec_.down_rates; }
  const std::vector<double>& loss_weights() const {
    return dir_ == Direction::Up ? spec_.up_weights : spec_.down_weights;
  }

  /// Inverted value before clamping.
  double raw(Component c, double distance) const {
    if (distance < 0.0) throw DomainError("negative barrier distance");
    if (distance == 0.0) return (c.kind == ComponentKind::Diffusion || c.kind == ComponentKind::All) ? 1.0 : 0.0;
    if (std::isinf(distance)) return 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      const RandomizedFPP& f = terms_[k];
      double s = 0.0;
      const std::vector<double> w = component_weights(f, c);
      for (std::size_t r = 0; r < w.size(); ++r) s += w[r] * std::exp(-std::abs(f.exponents[r]) * distance);
      acc += gs_.zeta[k] * s;
    }
    return acc;
  }

  double probability(Component c, double distance) const { return clamp_probability(raw(c, distance)); }

 private:
  HyperExpSpec spec_;
  Direction dir_;
  double t_;
  GaverStehfestTable gs_;
  std::vector<RandomizedFPP> terms_;
};

/// Maps P&L barrier levels to barrier distances of the driving process.
struct ScenarioMap {
  Scenario sc;

  Direction direction() const { return sc.kind == ScenarioKind::ShortExp ? Direction::Up : Direction::Down; }

  void check_start() const {
    if (sc.kind == ScenarioKind::LongExp && !(sc.z > -sc.z2)) throw DomainError("long exposure requires z > -z2");
    if (sc.kind == ScenarioKind::ShortExp && !(sc.z < sc.z2)) throw DomainError("short exposure requires z < z2");
  }

  /// Distance for barrier ell <= z; infinite when the barrier is unreachable.
  double distance(double ell) const {
    check_start();
    if (ell > sc.z) throw DomainError("barrier above the starting P&L");
    switch (sc.kind) {
      case ScenarioKind::Direct: return sc.z - ell;
      case ScenarioKind::LongExp:
        if (ell < -sc.z2) throw DomainError("long exposure requires ell >= -z2");
        if (ell == -sc.z2) return INFINITY;
        return std::log((sc.z2 + sc.z) / (sc.z2 + ell));
      default: return std::log((sc.z2 - ell) / (sc.z2 - sc.z));
    }
  }

  /// Inverse of distance().
  double level(double d) const {
    switch (sc.kind) {
      case ScenarioKind::Direct: return sc.z - d;
      case ScenarioKind::LongExp: return (sc.z2 + sc.z) * std::exp(-d) - sc.z2;
      default: return sc.z2 - (sc.z2 - sc.z) * std::exp(d);
    }
  }

  /// int_{lower}^{ell*} e^{root (x(ell) - ell_X(ell))} d ell in closed form.
  double exp_integral(double root, double ell_star) const {
    switch (sc.kind) {
      case ScenarioKind::Direct: return -std::exp(root * (sc.z - ell_star)) / root;
      case ScenarioKind::LongExp: {
        const double A = sc.z2 + sc.z;
        return A / (1.0 - root) * std::pow((sc.z2 + ell_star) / A, 1.0 - root);
      }
      default: {
        if (!(root > 1.0))
          throw WellDefinednessError("short-exposure tail integral diverges (root " + std::to_string(root) + " <= 1)");
        const double B = sc.z2 - sc.z;
        return std::pow(B, root) * std::pow(sc.z2 - ell_star, 1.0 - root) / (root - 1.0);
      }
    }
  }
};

struct RiskQuery {
  ModelSpec model;
  Scenario scenario;
  double alpha = 0.01;
  double T = 10.0 / 252.0;
  int gs_order = 8;
  int threads = 1;
  ApproxConfig approx;
  CosConfig cos;

  void validate() const {
    model.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
    if (!(T > 0.0)) throw DomainError("horizon must be positive");
  }
};

struct ContributionSet {
  double diffusion = 0.0;
  double jump_total = 0.0;
  std::vector<double> jump_by_type;  // loss-side jump types
};

struct RiskReport {
  double ivar = 0.0, ies = 0.0;
  double pit_var = 0.0, pit_es = 0.0;
  double omega = 0.0;
  ContributionSet contrib_ivar, contrib_integral, contrib_ies;
  std::map<int, double> cluster_ivar;  // top-k loss-side jump clusters
  std::map<int, double> cluster_ies;
  double avg_loss_jump_size = 0.0;     // probability-weighted mean loss-side jump size
};

/// Risk computations for one query; the first-passage surface is built once.
class RiskEngine {
 public:
  explicit RiskEngine(RiskQuery q) : q_(std::move(q)), map_{q_.scenario} {
    q_.validate();
    map_.check_start();
    surface_ = std::make_unique<FirstPassageSurface>(to_hyperexp(q_.model, q_.approx), map_.direction(), q_.T,
                                                     q_.gs_order, q_.threads);
  }

  const RiskQuery& query() const { return q_; }
  const FirstPassageSurface& surface() const { return *surface_; }
  const ScenarioMap& scenario_map() const { return map_; }

  /// u(T, z; ell) for the requested component.
  double fpp(Component c, double ell) const { return surface_->probability(c, map_.distance(ell)); }
  double fpp_raw(Component c, double ell) const { return surface_->raw(c, map_.distance(ell)); }

  double ivar() const {
    const double z = q_.scenario.z;
    const double tol = 1e-8;
    const double eps = 1e-9 * std::max(1.0, std::abs(z));
    if (!(fpp_raw(Component::all(), z - eps) > q_.alpha))
      throw BracketError("first-passage probability just below the start is already <= alpha");
    double lo = lower_bracket();
    double hi = z - eps;
    for (int it = 0; it < 400 && hi - lo > tol; ++it) {
      double mid = 0.5 * (lo + hi);
      if (fpp_raw(Component::all(), mid) <= q_.alpha) lo = mid;
      else hi = mid;
    }
    return -lo;
  }

  /// (1/alpha) int_{lower}^{ell*} u_c(ell) d ell, term by term in closed form.
  double tail_integral(Component c, double ell_star) const {
    const auto& terms = surface_->terms();
    const auto& zeta = surface_->table().zeta;
    double acc = 0.0;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const std::vector<double> w = component_weights(terms[k], c);
      double s = 0.0;
      for (std::size_t r = 0; r < w.size(); ++r) s += w[r] * map_.exp_integral(terms[k].exponents[r], ell_star);
      acc += zeta[k] * s;
    }
    return acc / q_.alpha;
  }

  double ies_given(double ivar_value) const {
    auto wd = check_ies_well_defined(q_.model, q_.scenario);
    if (!wd.ok) throw WellDefinednessError(wd.reasons.empty() ? "ill-posed" : wd.reasons.front());
    return ivar_value + tail_integral(Component::all(), -ivar_value);
  }

  double ies() const { return ies_given(ivar()); }

  /// Terminal VaR/ES through the COS expansion of X_T.
  std::pair<double, double> pit_risk() const {
    CosExpansion e(q_.model, q_.T, q_.cos);
    const double a = q_.alpha;
    const Scenario& s = q_.scenario;
    switch (s.kind) {
      case ScenarioKind::Direct: {
        double qx = e.quantile(a);
        double tail = e.partial_mean(qx) / e.cdf(qx);
        return {-(s.z + qx), -(s.z + tail)};
      }
      case ScenarioKind::LongExp: {
        const double A = s.z2 + s.z;
        double qx = e.quantile(a);
        double tail = e.partial_exp(qx) / e.cdf(qx);
        return {s.z2 - A * std::exp(qx), s.z2 - A * tail};
      }
      default: {
        const double B = s.z2 - s.z;
        double qx = e.quantile(1.0 - a);
        double tail = (e.partial_exp(e.b()) - e.partial_exp(qx)) / (1.0 - e.cdf(qx));
        return {B * std::exp(qx) - s.z2, B * tail - s.z2};
      }
    }
  }

  RiskReport report() const {
    RiskReport r;
    r.ivar = ivar();
    r.ies = ies_given(r.ivar);
    std::tie(r.pit_var, r.pit_es) = pit_risk();
    r.omega = r.ivar / r.ies;
    const double ell = -r.ivar;
    const std::size_t types = surface_->jump_types();

    auto block = [&](auto&& value) {
      ContributionSet cs;
      double total = value(Component::all());
      cs.diffusion = value(Component::diffusion()) / total;
      cs.jump_total = value(Component::jump_total()) / total;
      for (std::size_t i = 0; i < types; ++i) cs.jump_by_type.push_back(value(Component::jump_type(i)) / total);
      return cs;
    };
    r.contrib_ivar = block([&](Component c) { return fpp_raw(c, ell); });
    r.contrib_integral = block([&](Component c) { return tail_integral(c, ell); });
    const double w = r.omega;
    r.contrib_ies.diffusion = (1 - w) * r.contrib_integral.diffusion + w * r.contrib_ivar.diffusion;
    r.contrib_ies.jump_total = (1 - w) * r.contrib_integral.jump_total + w * r.contrib_ivar.jump_total;
    for (std::size_t i = 0; i < types; ++i)
      r.contrib_ies.jump_by_type.push_back((1 - w) * r.contrib_integral.jump_by_type[i] +
                                           w * r.contrib_ivar.jump_by_type[i]);

    // clusters: loss-side jump types ranked by mean jump size 1/rate, largest first
    std::vector<std::size_t> order(types);
    std::iota(order.begin(), order.end(), 0);
    const auto& rates = surface_->loss_rates();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rates[a] < rates[b]; });
    for (int k : {3, 5, 10}) {
      double si = 0.0, se = 0.0;
      for (std::size_t j = 0; j < std::min<std::size_t>(k, types); ++j) {
        si += r.contrib_ivar.jump_by_type[order[j]];
        se += r.contrib_ies.jump_by_type[order[j]];
      }
      r.cluster_ivar[k] = si;
      r.cluster_ies[k] = se;
    }
    const auto& wts = surface_->loss_weights();
    double wsum = 0.0, msum = 0.0;
    for (std::size_t i = 0; i < types; ++i) wsum += wts[i], msum += wts[i] / rates[i];
    r.avg_loss_jump_size = wsum > 0.0 ? msum / wsum : 0.0;
    return r;
  }

 private:
  double lower_bracket() const {
    const Scenario& s = q_.scenario;
    if (s.kind == ScenarioKind::LongExp) {
      double lo = -s.z2 + 1e-12 * std::max(1.0, s.z2);
      if (fpp_raw(Component::all(), lo) > q_.alpha) throw BracketError("alpha-level not reached above -z2");
      return lo;
    }
    Cumulants c = cumulants(ModelSpec(surface_->spec()));
    double d = 40.0 * std::sqrt(c.c2 * q_.T) + std::abs(c.c1) * q_.T;
    for (int it = 0; it < 60; ++it) {
      double lo = map_.level(d);
      if (fpp_raw(Component::all(), lo) <= q_.alpha) return lo;
      d *= 2.0;
    }
    throw BracketError("no lower bracket for the alpha-level");
  }

  RiskQuery q_;
  ScenarioMap map_;
  std::unique_ptr<FirstPassageSurface> surface_;
};

inline double ivar(const RiskQuery& q) { return RiskEngine(q).ivar(); }
inline double ies(const RiskQuery& q) { return RiskEngine(q).ies(); }
inline std::pair<double, double> pit_risk(const RiskQuery& q) { return RiskEngine(q).pit_risk(); }
/// Full report; the contribution blocks are its contrib_* and cluster fields.
inline RiskReport contributions(const RiskQuery& q) { return RiskEngine(q).report(); }

/// u(t, z; ell) for a single evaluation.
inline double fpp(const ModelSpec& model, const Scenario& scenario, Component c, double t, double ell, int gs_order = 8,
                  const ApproxConfig& approx = {}) {
  ScenarioMap map{scenario};
  double d = map.distance(ell);
  if (d == 0.0) return (c.kind == ComponentKind::Diffusion || c.kind == ComponentKind::All) ? 1.0 : 0.0;
  FirstPassageSurface s(to_hyperexp(model, approx), map.direction(), t, gs_order);
  return s.probability(c, d);
}

}  // namespace levy_ihr
