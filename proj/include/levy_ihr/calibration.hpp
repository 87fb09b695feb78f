#pragma once
// Price ingestion, COS-based maximum likelihood and rolling-window
// calibration of Kou, VG and CGMY models.

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "levy_ihr/cos.hpp"
#include "levy_ihr/errors.hpp"
#include "levy_ihr/models.hpp"

namespace levy_ihr {

using Date = std::chrono::year_month_day;

inline Date parse_date(const std::string& s) {
  int y = 0;
  unsigned m = 0, d = 0;
  auto rd = [&](std::size_t pos, std::size_t len, auto& out) {
    if (pos + len > s.size()) return false;
    auto r = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return r.ec == std::errc() && r.ptr == s.data() + pos + len;
  };
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !rd(0, 4, y) || !rd(5, 2, m) || !rd(8, 2, d))
    throw ParseError("bad date '" + s + "'");
  Date out{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!out.ok()) throw ParseError("invalid date '" + s + "'");
  return out;
}

inline std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

/// ISO-8601 (week-year, week number).
inline std::pair<int, int> iso_week(const Date& d) {
  using namespace std::chrono;
  const sys_days sd{d};
  const unsigned wd = weekday{sd}.iso_encoding();  // Mon=1 .. Sun=7
  const sys_days thursday = sd + days{4 - static_cast<int>(wd)};
  const year_month_day ty{thursday};
  const sys_days jan1{ty.year() / January / 1};
  return {static_cast<int>(ty.year()), static_cast<int>((thursday - jan1).count() / 7 + 1)};
}

enum class Frequency { Daily, Weekly };

struct ReturnSeries {
  std::vector<Date> dates;  // end date of each return period
  std::vector<double> log_returns;
  double period_dt = 1.0 / 52.0;

  std::size_t size() const { return log_returns.size(); }
};

/// Reads `date,price` rows and returns log returns at the requested frequency;
/// weekly keeps the last observation of each ISO week.
inline ReturnSeries ingest_prices(std::istream& in, Frequency freq = Frequency::Weekly) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw EmptySeriesError("no header");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "date,price") throw ParseError("line 1: expected header 'date,price'");
  std::vector<Date> dates;
  std::vector<double> prices;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (comma == std::string::npos) throw ParseError(where + "expected two fields");
    Date d;
    try {
      d = parse_date(line.substr(0, comma));
    } catch (const ParseError& e) {
      throw ParseError(where + e.what());
    }
    const std::string ps = line.substr(comma + 1);
    double p = 0.0;
    auto r = std::from_chars(ps.data(), ps.data() + ps.size(), p);
    if (r.ec != std::errc() || r.ptr != ps.data() + ps.size() || !std::isfinite(p))
      throw ParseError(where + "bad price '" + ps + "'");
    if (!(p > 0.0)) throw ParseError(where + "non-positive price");
    if (!dates.empty() && !(std::chrono::sys_days{d} > std::chrono::sys_days{dates.back()}))
      throw ParseError(where + "dates must be strictly increasing");
    dates.push_back(d);
    prices.push_back(p);
  }
  if (freq == Frequency::Weekly) {
    std::vector<Date> wd;
    std::vector<double> wp;
    for (std::size_t i = 0; i < dates.size(); ++i) {
      if (!wd.empty() && iso_week(wd.back()) == iso_week(dates[i])) {
        wd.back() = dates[i];
        wp.back() = prices[i];
      } else {
        wd.push_back(dates[i]);
        wp.push_back(prices[i]);
      }
    }
    dates.swap(wd);
    prices.swap(wp);
  }
  if (prices.size() < 2) throw EmptySeriesError("fewer than two prices after sampling");
  ReturnSeries s;
  s.period_dt = freq == Frequency::Weekly ? 1.0 / 52.0 : 1.0 / 252.0;
  for (std::size_t i = 1; i < prices.size(); ++i) {
    s.dates.push_back(dates[i]);
    s.log_returns.push_back(std::log(prices[i] / prices[i - 1]));
  }
  return s;
}

inline ReturnSeries ingest_prices(const std::string& path, Frequency freq = Frequency::Weekly) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path);
  return ingest_prices(f, freq);
}

enum class Variant { Kou, VG, CGMY };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::Kou: return "kou";
    case Variant::VG: return "vg";
    default: return "cgmy";
  }
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "kou") return Variant::Kou;
  if (s == "vg") return Variant::VG;
  if (s == "cgmy") return Variant::CGMY;
  throw InvalidSpec("unknown model variant '" + s + "'");
}

/// Free parameters of a variant in unconstrained coordinates.
struct ParamMap {
  Variant variant = Variant::Kou;
  double fixed_y = 0.5;  // CGMY fine structure

  std::size_t dim() const { return variant == Variant::Kou ? 6 : 4; }

  ModelSpec to_model(const std::vector<double>& z) const {
    auto logistic = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    if (variant == Variant::Kou)
      return kou(z[0], std::exp(z[1]), std::exp(z[2]), logistic(z[3]), 1.0 + std::exp(z[4]), std::exp(z[5]));
    // M > 1 keeps the exponential moment used by drift matching and by short exposures
    const double C = std::exp(z[0]), G = std::exp(z[1]), M = 1.0 + std::exp(z[2]), b = z[3];
    if (variant == Variant::VG) return VG{C, G, M, b};
    return CGMY{C, G, M, fixed_y, b};
  }

  std::vector<double> from_model(const ModelSpec& m) const {
    if (const HyperExpSpec* h = std::get_if<HyperExpSpec>(&m.variant)) {
      if (h->m() != 1 || h->n() != 1) throw InvalidSpec("calibration handles single-rate Kou only");
      double p = h->up_weights[0];
      return {h->mu, std::log(h->sigma), std::log(h->lambda), std::log(p / (1 - p)), std::log(h->up_rates[0] - 1.0),
              std::log(h->down_rates[0])};
    }
    double C, G, M, b;
    if (const VG* v = std::get_if<VG>(&m.variant)) C = v->C, G = v->G, M = v->M, b = v->drift;
    else if (const CGMY* c = std::get_if<CGMY>(&m.variant)) C = c->C, G = c->G, M = c->M, b = c->drift;
    else throw UnsupportedModel(m.name() + " is not a calibration variant");
    return {std::log(C), std::log(G), std::log(M - 1.0), b};
  }
};

/// Mean negative log-likelihood of i.i.d. increments over dt; densities below
/// the floor or outside the COS range count as the floor.
inline double neg_log_likelihood(const ModelSpec& m, const std::vector<double>& x, double dt, const CosConfig& cfg = {}) {
  CosExpansion e(m, dt, cfg);
  std::vector<double> f(x.size());
  e.raw_density(x.data(), f.data(), x.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double v = (x[i] < e.a() || x[i] > e.b()) ? cfg.density_floor : std::max(f[i], cfg.density_floor);
    acc -= std::log(v);
  }
  return acc / static_cast<double>(x.size());
}

struct CalibrationResult {
  ModelSpec model;
  double neg_log_lik = INFINITY;
  Date window_start{}, window_end{};
  bool converged = false;
  int iterations = 0;
};

struct FitOptions {
  int starts = 5;
  int max_iter = 3000;
  double simplex_tol = 1e-6;  // characteristic simplex size in transformed coordinates
  double initial_step = 0.5;
  std::uint64_t seed = 1;
  double fixed_y = 0.5;
  CosConfig cos;
};

/// Moment-matched starting point from the sample cumulants.
inline ModelSpec moment_start(Variant v, const std::vector<double>& x, double dt, double fixed_y = 0.5) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double m2 = 0.0, m4 = 0.0;
  for (double r : x) {
    double d = r - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) throw NonConvergence("return series has zero variance");
  const double c2 = m2 / dt;
  // excess kurtosis floored so the jump part stays identifiable
  const double c4 = std::max(m4 - 3.0 * m2 * m2, 0.5 * m2 * m2) / dt;
  if (v == Variant::Kou) {
    // half the variance to jumps with symmetric rates k: 2 lambda / k^2 = c2/2, 24 lambda / k^4 = c4
    double k = std::max(std::sqrt(6.0 * c2 / c4), 2.0);
    double lambda = 0.25 * c2 * k * k;
    return kou(mean / dt, std::sqrt(0.5 * c2), lambda, 0.4, k, k);
  }
  const double Y = v == Variant::VG ? 0.0 : fixed_y;
  double k = std::max(std::sqrt((3.0 - Y) * (2.0 - Y) * c2 / c4), 2.0);
  double C = c2 / (2.0 * std::tgamma(2.0 - Y) * std::pow(k, Y - 2.0));
  if (v == Variant::VG) return VG{C, k, k, mean / dt};
  return CGMY{C, k, k, Y, mean / dt};
}

namespace detail {

struct NmOutcome {
  std::vector<double> z;
  double f = INFINITY;
  int iterations = 0;
  bool converged = false;
};

inline NmOutcome nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> z0,
                             double step, double tol, int max_iter) {
  const std::size_t n = z0.size();
  struct Ctx {
    const std::function<double(const std::vector<double>&)>* f;
    std::size_t n;
  } ctx{&f, n};
  gsl_multimin_function fn;
  fn.n = n;
  fn.params = &ctx;
  fn.f = [](const gsl_vector* v, void* p) {
    auto* c = static_cast<Ctx*>(p);
    std::vector<double> z(c->n);
    for (std::size_t i = 0; i < c->n; ++i) z[i] = gsl_vector_get(v, i);
    double val = (*c->f)(z);
    return std::isfinite(val) ? val : 1e100;
  };
  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* ss = gsl_vector_alloc(n);
  for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x, i, z0[i]);
  gsl_vector_set_all(ss, step);
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(s, &fn, x, ss);
  NmOutcome out;
  int status = GSL_CONTINUE;
  while (status == GSL_CONTINUE && out.iterations < max_iter) {
    ++out.iterations;
    if (gsl_multimin_fminimizer_iterate(s)) break;
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), tol);
  }
  out.converged = status == GSL_SUCCESS;
  out.f = s->fval;
  out.z.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.z[i] = gsl_vector_get(s->x, i);
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(ss);
  gsl_vector_free(x);
  return out;
}

inline void silence_gsl() {
  static const bool once = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)once;
}

}  // namespace detail

/// Multistart Nelder-Mead MLE. The first start is `init` (or the moment
/// match), the others jitter it in transformed coordinates.
inline CalibrationResult mle_fit(const std::vector<double>& x, double dt, Variant variant, const FitOptions& opt = {},
                                 std::optional<ModelSpec> init = std::nullopt) {
  detail::silence_gsl();
  if (x.size() < 52) throw DomainError("calibration window needs at least 52 observations");
  if (opt.starts < 1) throw DomainError("need at least one start");
  ParamMap pm{variant, opt.fixed_y};
  std::vector<double> z0 = pm.from_model(init ? *init : moment_start(variant, x, dt, opt.fixed_y));
  auto objective = [&](const std::vector<double>& z) {
    try {
      return neg_log_likelihood(pm.to_model(z), x, dt, opt.cos);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> jitter(0.0, 0.5);
  CalibrationResult best;
  best.model = pm.to_model(z0);
  for (int s = 0; s < opt.starts; ++s) {
    std::vector<double> start = z0;
    if (s > 0)
      for (double& v : start) v += jitter(rng) * std::max(1.0, 0.1 * std::abs(v));
    detail::NmOutcome o = detail::nelder_mead(objective, start, opt.initial_step, opt.simplex_tol, opt.max_iter);
    // polish from the best vertex with a fresh simplex
    if (std::isfinite(o.f)) {
      detail::NmOutcome p = detail::nelder_mead(objective, o.z, 0.05, opt.simplex_tol, opt.max_iter);
      p.iterations += o.iterations;
      if (p.f <= o.f) o = p;
    }
    if (o.f < best.neg_log_lik) {
      best.neg_log_lik = o.f;
      best.model = pm.to_model(o.z);
      best.converged = o.converged;
    }
    best.iterations += o.iterations;
  }
  if (!std::isfinite(best.neg_log_lik)) best.converged = false;
  return best;
}

inline CalibrationResult mle_fit(const ReturnSeries& s, Variant variant, const FitOptions& opt = {},
                                 std::optional<ModelSpec> init = std::nullopt) {
  CalibrationResult r = mle_fit(s.log_returns, s.period_dt, variant, opt, init);
  if (!s.dates.empty()) {
    r.window_start = s.dates.front();
    r.window_end = s.dates.back();
  }
  return r;
}

struct RollingOptions {
  std::size_t window = 260;
  std::size_t step = 1;
  bool warm_start = true;
  // cold multistart comparison on every k-th window (0 disables); the warm
  // result is replaced when it is worse by more than 1e-6
  std::size_t cold_check_every = 1;
  FitOptions fit;
};

struct WindowFailure {
  Date window_end{};
  std::string message;
};

struct RollingResult {
  std::vector<CalibrationResult> results;
  std::vector<WindowFailure> failures;
  std::size_t cold_fallbacks = 0;
};

inline RollingResult rolling_calibrate(const ReturnSeries& s, Variant variant, const RollingOptions& opt = {}) {
  if (opt.window < 52) throw DomainError("window must be at least 52 observations");
  if (opt.step < 1) throw DomainError("step must be >= 1");
  if (s.size() < opt.window) throw DomainError("series shorter than the window");
  RollingResult out;
  std::optional<ModelSpec> prev;
  std::size_t k = 0;
  for (std::size_t end = opt.window; end <= s.size(); end += opt.step, ++k) {
    ReturnSeries w;
    w.period_dt = s.period_dt;
    w.dates.assign(s.dates.begin() + (end - opt.window), s.dates.begin() + end);
    w.log_returns.assign(s.log_returns.begin() + (end - opt.window), s.log_returns.begin() + end);
    try {
      CalibrationResult r;
      if (opt.warm_start && prev) {
        FitOptions warm = opt.fit;
        warm.starts = 1;
        r = mle_fit(w, variant, warm, prev);
        if (opt.cold_check_every > 0 && k % opt.cold_check_every == 0) {
          CalibrationResult cold = mle_fit(w, variant, opt.fit);
          if (r.neg_log_lik > cold.neg_log_lik + 1e-6) {
            r = cold;
            ++out.cold_fallbacks;
          }
        }
      } else {
        r = mle_fit(w, variant, opt.fit);
      }
      if (std::isfinite(r.neg_log_lik)) prev = r.model;
      out.results.push_back(r);
    } catch (const Error& e) {
      out.failures.push_back({w.dates.back(), e.what()});
    }
  }
  return out;
}

}  // namespace levy_ihr
