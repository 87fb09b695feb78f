// levy-ihr: calibration, intra-horizon risk, contributions and MC fixtures.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "levy_ihr/calibration.hpp"
#include "levy_ihr/io.hpp"
#include "levy_ihr/mc_oracle.hpp"
#include "levy_ihr/risk.hpp"

namespace fs = std::filesystem;
using namespace levy_ihr;

namespace {

struct Common {
  std::uint64_t seed = 42;
  int threads = 1;
  std::string output_dir = ".";
  int gs_order = 8;
  int n_exp = 100;
  double alpha = 0.01;
  double horizon_days = 10.0;
  std::string scenario = "long";
  double z = 0.0, z2 = 1.0;
  std::string model;
  std::string input;
  std::string params;
  std::string date = "-";
  bool svg = false;
};

constexpr double kTradingDays = 252.0;

ModelSpec load_params(const std::string& arg) {
  std::string text = arg;
  if (!arg.empty() && arg.front() != '{') {
    std::ifstream f(arg);
    if (!f) throw ParseError("cannot open params file " + arg);
    text.assign(std::istreambuf_iterator<char>(f), {});
  }
  try {
    return model_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw InvalidSpec(std::string("params are not valid JSON: ") + e.what());
  }
}

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path().empty() ? fs::path(".") : p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ParseError("cannot write " + p.string());
  f << content;
}

std::string table_text(const CsvTable& t) {
  std::ostringstream ss;
  write_csv(ss, t);
  return ss.str();
}

/// Polyline chart of the numeric columns against row index.
std::string svg_chart(const CsvTable& t, const std::vector<std::string>& cols) {
  const double W = 800, H = 400, pad = 40;
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (const auto& c : cols) lo = std::min(lo, t.num(r, c)), hi = std::max(hi, t.num(r, c));
  if (!(hi > lo)) hi = lo + 1.0;
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const std::size_t n = t.rows.size();
  for (std::size_t k = 0; k < cols.size(); ++k) {
    s << "<polyline fill=\"none\" stroke=\"" << colors[k % 4] << "\" points=\"";
    for (std::size_t r = 0; r < n; ++r) {
      double x = pad + (n > 1 ? (W - 2 * pad) * r / (n - 1) : 0.0);
      double y = H - pad - (H - 2 * pad) * (t.num(r, cols[k]) - lo) / (hi - lo);
      s << fmt_double(x) << "," << fmt_double(y) << " ";
    }
    s << "\"/>\n<text x=\"" << pad + 120 * k << "\" y=\"20\" fill=\"" << colors[k % 4] << "\">" << cols[k]
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

int cmd_calibrate(const Common& c, double fix_y, std::size_t window, std::size_t step, int starts,
                  std::size_t cold_every, const std::string& frequency) {
  const Variant v = variant_from_string(c.model);
  ReturnSeries s = ingest_prices(c.input, frequency == "daily" ? Frequency::Daily : Frequency::Weekly);
  RollingOptions opt;
  opt.window = window;
  opt.step = step;
  opt.cold_check_every = cold_every;
  opt.fit.starts = starts;
  opt.fit.seed = c.seed;
  opt.fit.fixed_y = fix_y;
  RollingResult rr = rolling_calibrate(s, v, opt);
  const fs::path out = fs::path(c.output_dir) / ("calibration_" + c.model + ".csv");
  write_file(out, table_text(calibration_table(v, rr.results)));
  spdlog::info("{} windows written to {} ({} cold fallbacks)", rr.results.size(), out.string(), rr.cold_fallbacks);
  for (const auto& f : rr.failures) std::cerr << "window ending " << format_date(f.window_end) << ": " << f.message << "\n";
  return rr.failures.empty() ? 0 : 2;
}

struct DatedModel {
  std::string date;
  ModelSpec model;
};

std::vector<DatedModel> risk_inputs(const Common& c) {
  std::vector<DatedModel> out;
  if (!c.params.empty()) {
    out.push_back({c.date, load_params(c.params)});
  } else if (!c.input.empty()) {
    for (auto& r : parse_calibration_table(read_csv(c.input))) out.push_back({r.end_date, r.model});
  } else {
    throw InvalidSpec("either --params or --input (calibration CSV) is required");
  }
  if (!c.model.empty())
    for (const auto& d : out)
      if (d.model.name() != c.model && !(c.model == "kou" && d.model.is_hyperexp()))
        throw InvalidSpec("--model " + c.model + " does not match the supplied " + d.model.name() + " parameters");
  return out;
}

int cmd_risk(const Common& c, bool contrib) {
  std::vector<DatedModel> inputs = risk_inputs(c);
  CsvTable t;
  t.header = contrib ? contrib_header() : risk_header();
  const double T = c.horizon_days / kTradingDays;
  Scenario sc{scenario_from_string(c.scenario), c.z, 1.0, c.z2};
  int failures = 0;
  for (const auto& in : inputs) {
    try {
      RiskQuery q;
      q.model = in.model;
      q.scenario = sc;
      q.alpha = c.alpha;
      q.T = T;
      q.gs_order = c.gs_order;
      q.threads = c.threads;
      q.approx.n_up = q.approx.n_down = c.n_exp;
      RiskReport r = RiskEngine(q).report();
      t.rows.push_back(contrib ? contrib_row(in.date, in.model.name(), c.alpha, T, r)
                               : risk_row(in.date, in.model.name(), c.alpha, T, r));
    } catch (const Error& e) {
      ++failures;
      std::cerr << "date " << in.date << ": " << e.what() << "\n";
    }
  }
  const std::string stem = (contrib ? "contrib_" : "risk_") + (c.model.empty() ? inputs.front().model.name() : c.model);
  write_file(fs::path(c.output_dir) / (stem + ".csv"), table_text(t));
  if (c.svg && !t.rows.empty()) {
    std::vector<std::string> cols = contrib ? std::vector<std::string>{"jump_ies", "top3_ies", "top5_ies", "top10_ies"}
                                            : std::vector<std::string>{"ivar", "ies", "pit_var", "pit_es"};
    write_file(fs::path(c.output_dir) / (stem + ".svg"), svg_chart(t, cols));
  }
  return failures ? 2 : 0;
}

int cmd_oracle(const Common& c, double x, double ell, const std::string& direction, std::int64_t paths,
               std::optional<double> horizon_years, std::optional<double> exp_rate) {
  ModelSpec m = load_params(c.params);
  HyperExpSpec s = to_hyperexp(m, [&] {
    ApproxConfig a;
    a.n_up = a.n_down = c.n_exp;
    return a;
  }());
  McConfig cfg;
  cfg.n_paths = paths;
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  cfg.horizon = horizon_years ? *horizon_years : c.horizon_days / kTradingDays;
  cfg.exp_horizon_rate = exp_rate;
  Direction dir = direction == "up" ? Direction::Up : Direction::Down;
  McResult r = simulate_fpp(s, x, ell, dir, cfg);
  json j = mc_to_json(r);
  j["config"] = {{"model", model_to_json(m)}, {"x", x},          {"ell", ell},  {"direction", direction},
                 {"seed", c.seed},            {"horizon", cfg.horizon}, {"bridge_correction", cfg.bridge_correction}};
  if (exp_rate) j["config"]["exp_horizon_rate"] = *exp_rate;
  write_file(fs::path(c.output_dir) / "oracle.json", j.dump(2) + "\n");
  return 0;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("levy_ihr");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("LEVY_IHR_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Intra-horizon risk for Levy models"};
  app.require_subcommand(1);
  Common c;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", c.seed, "RNG seed");
    sub->add_option("--threads", c.threads, "worker cap")->check(CLI::PositiveNumber);
    sub->add_option("--output-dir", c.output_dir, "output directory");
    sub->add_option("--gs-order", c.gs_order, "Gaver-Stehfest order N")->check(CLI::Range(1, 9));
    sub->add_option("--n-exp", c.n_exp, "exponential terms per side for VG/CGMY")->check(CLI::PositiveNumber);
    sub->add_option("--model", c.model, "kou, vg, cgmy or diffusion");
  };
  auto add_risk = [&](CLI::App* sub) {
    add_common(sub);
    sub->add_option("--alpha", c.alpha, "tail level")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--horizon-days", c.horizon_days, "horizon in trading days")->check(CLI::PositiveNumber);
    sub->add_option("--scenario", c.scenario, "direct, long or short")
        ->check(CLI::IsMember({"direct", "long", "short"}));
    sub->add_option("--z", c.z, "starting P&L");
    sub->add_option("--z2", c.z2, "exposure for long/short scenarios");
    sub->add_option("--input", c.input, "calibration CSV");
    sub->add_option("--params", c.params, "model JSON text or file");
    sub->add_option("--date", c.date, "date label when --params is used");
    sub->add_flag("--svg", c.svg, "also write an SVG chart");
  };

  auto* cal = app.add_subcommand("calibrate", "rolling MLE calibration from a date,price CSV");
  add_common(cal);
  cal->add_option("--input", c.input, "price CSV")->required();
  double fix_y = 0.5;
  std::size_t window = 260, step = 1, cold_every = 1;
  int starts = 5;
  std::string frequency = "weekly";
  cal->add_option("--window", window, "window length in observations");
  cal->add_option("--step", step, "window step");
  cal->add_option("--fix-y", fix_y, "CGMY fine-structure parameter")->check(CLI::Range(0.0, 1.99));
  cal->add_option("--starts", starts, "multistarts per cold fit")->check(CLI::PositiveNumber);
  cal->add_option("--cold-check-every", cold_every, "cold multistart comparison period (0 = off)");
  cal->add_option("--frequency", frequency, "weekly or daily")->check(CLI::IsMember({"weekly", "daily"}));

  auto* risk = app.add_subcommand("risk", "iVaR, iES and point-in-time risk");
  add_risk(risk);
  auto* contrib = app.add_subcommand("contrib", "diffusion/jump contributions and jump clusters");
  add_risk(contrib);

  auto* oracle = app.add_subcommand("oracle", "Monte Carlo first-passage fixture");
  add_common(oracle);
  oracle->add_option("--params", c.params, "model JSON text or file")->required();
  oracle->add_option("--horizon-days", c.horizon_days, "horizon in trading days");
  double x = 0.0, ell = -0.05;
  std::string direction = "down";
  std::int64_t paths = 1000000;
  std::optional<double> horizon_years, exp_rate;
  oracle->add_option("--x", x, "start value of X");
  oracle->add_option("--ell", ell, "barrier");
  oracle->add_option("--direction", direction, "down or up")->check(CLI::IsMember({"down", "up"}));
  oracle->add_option("--paths", paths, "number of paths")->check(CLI::PositiveNumber);
  oracle->add_option("--horizon-years", horizon_years, "horizon in years (overrides --horizon-days)");
  oracle->add_option("--exp-rate", exp_rate, "exponential horizon rate (Laplace-Carson value)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*cal) {
      if (c.model.empty()) throw InvalidSpec("--model is required");
      return cmd_calibrate(c, fix_y, window, step, starts, cold_every, frequency);
    }
    if (*risk) return cmd_risk(c, false);
    if (*contrib) return cmd_risk(c, true);
    return cmd_oracle(c, x, ell, direction, paths, horizon_years, exp_rate);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
