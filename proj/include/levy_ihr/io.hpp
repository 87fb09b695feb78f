#pragma once
// JSON model specs and fixed-column CSV records.

#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "levy_ihr/calibration.hpp"
#include "levy_ihr/cm_approximation.hpp"
#include "levy_ihr/errors.hpp"
#include "levy_ihr/mc_oracle.hpp"
#include "levy_ihr/models.hpp"
#include "levy_ihr/risk.hpp"

namespace levy_ihr {

using json = nlohmann::json;

/// Shortest text that parses back to the same double.
inline std::string fmt_double(double v) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline json model_to_json(const ModelSpec& m) {
  json j;
  if (const Diffusion* d = std::get_if<Diffusion>(&m.variant)) {
    j["variant"] = "diffusion";
    j["params"] = {{"mu", d->mu}, {"sigma", d->sigma}};
  } else if (const HyperExpSpec* h = std::get_if<HyperExpSpec>(&m.variant)) {
    if (h->m() == 1 && h->n() == 1) {
      j["variant"] = "kou";
      j["params"] = {{"mu", h->mu},        {"sigma", h->sigma},       {"lambda", h->lambda},
                     {"p", h->up_weights[0]}, {"xi", h->up_rates[0]}, {"eta", h->down_rates[0]}};
    } else {
      j["variant"] = "hyperexp";
      j["params"] = {{"mu", h->mu},
                     {"sigma", h->sigma},
                     {"lambda", h->lambda},
                     {"up_weights", h->up_weights},
                     {"up_rates", h->up_rates},
                     {"down_weights", h->down_weights},
                     {"down_rates", h->down_rates}};
    }
  } else if (const VG* v = std::get_if<VG>(&m.variant)) {
    j["variant"] = "vg";
    j["params"] = {{"C", v->C}, {"G", v->G}, {"M", v->M}, {"drift", v->drift}};
  } else {
    const CGMY& c = std::get<CGMY>(m.variant);
    j["variant"] = "cgmy";
    j["params"] = {{"C", c.C}, {"G", c.G}, {"M", c.M}, {"Y", c.Y}, {"drift", c.drift}};
  }
  return j;
}

inline ModelSpec model_from_json(const json& j) {
  try {
    const std::string v = j.at("variant").get<std::string>();
    const json& p = j.at("params");
    auto num = [&](const char* k) { return p.at(k).get<double>(); };
    auto opt = [&](const char* k) { return p.contains(k) ? p.at(k).get<double>() : 0.0; };
    ModelSpec m;
    if (v == "diffusion") m = Diffusion{opt("mu"), num("sigma")};
    else if (v == "kou") m = kou(opt("mu"), num("sigma"), num("lambda"), num("p"), num("xi"), num("eta"));
    else if (v == "hyperexp") {
      HyperExpSpec s;
      s.mu = opt("mu");
      s.sigma = num("sigma");
      s.lambda = num("lambda");
      s.up_weights = p.at("up_weights").get<std::vector<double>>();
      s.up_rates = p.at("up_rates").get<std::vector<double>>();
      s.down_weights = p.at("down_weights").get<std::vector<double>>();
      s.down_rates = p.at("down_rates").get<std::vector<double>>();
      m = s;
    } else if (v == "vg") m = VG{num("C"), num("G"), num("M"), opt("drift")};
    else if (v == "cgmy") m = CGMY{num("C"), num("G"), num("M"), num("Y"), opt("drift")};
    else throw InvalidSpec("unknown variant '" + v + "'");
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw InvalidSpec(std::string("malformed model JSON: ") + e.what());
  }
}

inline json report_to_json(const ApproximationReport& r) {
  return {{"n_up", r.n_up},
          {"n_down", r.n_down},
          {"u_max_up", r.u_max_up},
          {"u_max_down", r.u_max_down},
          {"eps_truncation", r.eps_truncation},
          {"eps_l2", r.eps_l2},
          {"eps_small_jump", r.eps_small_jump},
          {"lambda_n", r.lambda_n},
          {"drift_matched", r.drift_matched},
          {"drift_residual", r.drift_residual}};
}

inline json mc_to_json(const McResult& r) {
  return {{"n_paths", r.n_paths},
          {"p_hat", r.p_hat},
          {"stderr", r.std_err},
          {"components",
           {{"diffusion", r.p_diffusion_hat},
            {"diffusion_stderr", r.std_err_diffusion},
            {"jump_by_type", r.p_jump_by_type_hat},
            {"jump_by_type_stderr", r.std_err_jump_by_type}}}};
}

// ---- CSV ----

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ParseError("missing column '" + name + "'");
  }
  const std::string& at(std::size_t row, const std::string& name) const { return rows.at(row).at(column(name)); }
  double num(std::size_t row, const std::string& name) const {
    const std::string& s = at(row, name);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') throw ParseError("row " + std::to_string(row + 2) + ": bad number '" + s + "'");
    return v;
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty CSV");
  t.header = split_csv_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto r = split_csv_line(line);
    if (r.size() != t.header.size()) throw ParseError("line " + std::to_string(lineno) + ": wrong field count");
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path);
  return read_csv(f);
}

inline void write_csv(std::ostream& out, const CsvTable& t) {
  auto line = [&](const std::vector<std::string>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
    out << "\n";
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

// calibration rows: end_date, variant, params..., nll, converged

inline std::vector<std::string> param_names(Variant v) {
  switch (v) {
    case Variant::Kou: return {"mu", "sigma", "lambda", "p", "xi", "eta"};
    case Variant::VG: return {"C", "G", "M", "drift"};
    default: return {"C", "G", "M", "Y", "drift"};
  }
}

inline std::vector<double> param_values(const ModelSpec& m) {
  const json j = model_to_json(m);
  std::vector<double> out;
  for (const std::string& k : param_names(variant_from_string(j.at("variant")))) out.push_back(j["params"].at(k).get<double>());
  return out;
}

inline CsvTable calibration_table(Variant v, const std::vector<CalibrationResult>& rs) {
  CsvTable t;
  t.header = {"end_date", "variant"};
  for (const auto& n : param_names(v)) t.header.push_back(n);
  t.header.push_back("nll");
  t.header.push_back("converged");
  for (const auto& r : rs) {
    std::vector<std::string> row = {format_date(r.window_end), to_string(v)};
    for (double x : param_values(r.model)) row.push_back(fmt_double(x));
    row.push_back(fmt_double(r.neg_log_lik));
    row.push_back(r.converged ? "1" : "0");
    t.rows.push_back(std::move(row));
  }
  return t;
}

struct CalibrationRow {
  std::string end_date;
  ModelSpec model;
  double nll = 0.0;
  bool converged = false;
};

inline std::vector<CalibrationRow> parse_calibration_table(const CsvTable& t) {
  std::vector<CalibrationRow> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const std::string var = t.at(i, "variant");
    json p;
    for (const auto& n : param_names(variant_from_string(var))) p[n] = t.num(i, n);
    CalibrationRow r{t.at(i, "end_date"), model_from_json({{"variant", var}, {"params", p}}), t.num(i, "nll"),
                     t.at(i, "converged") == "1"};
    out.push_back(std::move(r));
  }
  return out;
}

// risk rows: date, model, alpha, T, ivar, ies, pit_var, pit_es, omega, contrib_*, ratios

inline std::vector<std::string> risk_header() {
  return {"date",
          "model",
          "alpha",
          "T",
          "ivar",
          "ies",
          "pit_var",
          "pit_es",
          "omega",
          "contrib_ivar_diffusion",
          "contrib_ivar_jump",
          "contrib_ies_diffusion",
          "contrib_ies_jump",
          "ratio_ivar_pit_var",
          "ratio_ies_pit_es"};
}

inline std::vector<std::string> risk_row(const std::string& date, const std::string& model, double alpha, double T,
                                         const RiskReport& r) {
  return {date,
          model,
          fmt_double(alpha),
          fmt_double(T),
          fmt_double(r.ivar),
          fmt_double(r.ies),
          fmt_double(r.pit_var),
          fmt_double(r.pit_es),
          fmt_double(r.omega),
          fmt_double(r.contrib_ivar.diffusion),
          fmt_double(r.contrib_ivar.jump_total),
          fmt_double(r.contrib_ies.diffusion),
          fmt_double(r.contrib_ies.jump_total),
          fmt_double(r.ivar / r.pit_var),
          fmt_double(r.ies / r.pit_es)};
}

inline std::vector<std::string> contrib_header() {
  return {"date",         "model",        "alpha",         "T",           "diffusion_ivar", "jump_ivar",
          "diffusion_ies", "jump_ies",    "top3_ivar",     "top5_ivar",   "top10_ivar",     "top3_ies",
          "top5_ies",     "top10_ies",    "avg_down_jump_size"};
}

inline std::vector<std::string> contrib_row(const std::string& date, const std::string& model, double alpha, double T,
                                            const RiskReport& r) {
  return {date,
          model,
          fmt_double(alpha),
          fmt_double(T),
          fmt_double(r.contrib_ivar.diffusion),
          fmt_double(r.contrib_ivar.jump_total),
          fmt_double(r.contrib_ies.diffusion),
          fmt_double(r.contrib_ies.jump_total),
          fmt_double(r.cluster_ivar.at(3)),
          fmt_double(r.cluster_ivar.at(5)),
          fmt_double(r.cluster_ivar.at(10)),
          fmt_double(r.cluster_ies.at(3)),
          fmt_double(r.cluster_ies.at(5)),
          fmt_double(r.cluster_ies.at(10)),
          fmt_double(r.avg_loss_jump_size)};
}

}  // namespace levy_ihr
