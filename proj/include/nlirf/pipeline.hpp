#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "calendar.hpp"
#include "csv.hpp"
#include "dgp.hpp"
#include "error.hpp"
#include "factor.hpp"
#include "inference.hpp"
#include "irf.hpp"
#include "lp.hpp"
#include "panel.hpp"
#include "svg.hpp"
#include "symmetry.hpp"

namespace nlirf {

namespace fs = std::filesystem;
using nlohmann::json;

/// Batch run settings. Relative input paths resolve against `base_dir`
/// (the directory of the config file).
struct PipelineConfig {
  fs::path base_dir = ".";
  std::optional<fs::path> panel;
  std::optional<fs::path> surprises;
  std::optional<fs::path> shocks;
  std::optional<fs::path> reassignment;
  std::optional<json> model;
  std::optional<PanelSchema> schema;
  std::optional<MonthRange> window;
  int horizon = 25;
  Criterion criterion = Criterion::aic;
  PenaltyMode penalty = PenaltyMode::paper;
  ClusterBy cluster = ClusterBy::country;
  double coverage = 0.6;
  std::size_t n_draws = 100000;
  std::uint64_t seed = 42;
  int bootstrap_replicates = 4999;
  std::vector<double> scales = {0.5, 0.75, 1.0, 1.25, 1.5};
  ScaledFormula scaled_formula = ScaledFormula::as_printed;
  AhatSample ahat_sample = AhatSample::all_months;
  int sim_periods = 2000;
  int sim_countries = 5;
  int oracle_paths = 50000;
  int oracle_shock = 0;
  double oracle_delta = 1.0;
  CalendarMonth sim_start{2000, 1};
  fs::path out = "out";

  fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }

  static PipelineConfig from_json(const json& j, const fs::path& base_dir = ".") {
    static const std::set<std::string> known = {
        "panel",   "surprises", "shocks",   "reassignment", "model",         "schema",
        "window",  "horizon",   "criterion", "penalty",     "cluster",       "coverage",
        "n_draws", "seed",      "bootstrap_replicates",     "scales",        "scaled_formula",
        "a_hat_sample",         "simulate", "out"};
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [k, v] : j.items())
      if (!known.contains(k)) throw ConfigError("unknown config key '" + k + "'");
    PipelineConfig c;
    c.base_dir = base_dir;
    try {
      if (j.contains("panel")) c.panel = j["panel"].get<std::string>();
      if (j.contains("surprises")) c.surprises = j["surprises"].get<std::string>();
      if (j.contains("shocks")) c.shocks = j["shocks"].get<std::string>();
      if (j.contains("reassignment")) c.reassignment = j["reassignment"].get<std::string>();
      if (j.contains("model")) {
        if (j["model"].is_string()) {
          std::ifstream in(c.resolve(j["model"].get<std::string>()));
          if (!in) throw ConfigError("cannot open model file " + j["model"].get<std::string>());
          c.model = json::parse(in);
        } else {
          c.model = j["model"];
        }
      }
      if (j.contains("schema"))
        c.schema = PanelSchema{j["schema"].at("outcomes").get<std::vector<std::string>>(),
                               j["schema"].value("controls", std::vector<std::string>{})};
      if (j.contains("window")) c.window = MonthRange::parse(j["window"].get<std::string>());
      c.horizon = j.value("horizon", c.horizon);
      if (j.contains("criterion")) c.criterion = parse_criterion(j["criterion"].get<std::string>());
      if (j.contains("penalty")) c.penalty = parse_penalty(j["penalty"].get<std::string>());
      if (j.contains("cluster")) c.cluster = parse_cluster(j["cluster"].get<std::string>());
      c.coverage = j.value("coverage", c.coverage);
      c.n_draws = j.value("n_draws", c.n_draws);
      c.seed = j.value("seed", c.seed);
      c.bootstrap_replicates = j.value("bootstrap_replicates", c.bootstrap_replicates);
      if (j.contains("scales")) c.scales = j["scales"].get<std::vector<double>>();
      if (j.contains("scaled_formula")) {
        const auto f = j["scaled_formula"].get<std::string>();
        if (f == "as_printed") c.scaled_formula = ScaledFormula::as_printed;
        else if (f == "per_unit_scale") c.scaled_formula = ScaledFormula::per_unit_scale;
        else throw ConfigError("unknown scaled_formula '" + f + "'");
      }
      if (j.contains("a_hat_sample")) {
        const auto f = j["a_hat_sample"].get<std::string>();
        if (f == "all_months") c.ahat_sample = AhatSample::all_months;
        else if (f == "conference_months") c.ahat_sample = AhatSample::conference_months;
        else throw ConfigError("unknown a_hat_sample '" + f + "'");
      }
      if (j.contains("simulate")) {
        const auto& s = j["simulate"];
        c.sim_periods = s.value("periods", c.sim_periods);
        c.sim_countries = s.value("countries", c.sim_countries);
        c.oracle_paths = s.value("oracle_paths", c.oracle_paths);
        c.oracle_shock = s.value("oracle_shock", c.oracle_shock);
        c.oracle_delta = s.value("oracle_delta", c.oracle_delta);
        if (s.contains("start")) c.sim_start = CalendarMonth::parse(s["start"].get<std::string>());
      }
      if (j.contains("out")) c.out = c.resolve(j["out"].get<std::string>());
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
  }

  static PipelineConfig load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return from_json(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
  }

  void validate() const {
    if (surprises && shocks) throw ConfigError("config must name exactly one of 'surprises' and 'shocks'");
    if (window && window->empty()) throw ConfigError("window is empty");
    if (horizon < 0) throw ConfigError("horizon must be non-negative");
    if (!(coverage > 0 && coverage < 1)) throw ConfigError("coverage must be in (0, 1)");
    if (bootstrap_replicates < 1) throw ConfigError("bootstrap_replicates must be positive");
    if (scales.empty()) throw ConfigError("scales must not be empty");
  }

  static Criterion parse_criterion(const std::string& s) {
    if (s == "aic") return Criterion::aic;
    if (s == "bic") return Criterion::bic;
    throw ConfigError("criterion must be aic or bic, got '" + s + "'");
  }
  static PenaltyMode parse_penalty(const std::string& s) {
    if (s == "paper") return PenaltyMode::paper;
    if (s == "coefficients") return PenaltyMode::coefficients;
    throw ConfigError("penalty must be paper or coefficients, got '" + s + "'");
  }
  static ClusterBy parse_cluster(const std::string& s) {
    if (s == "country") return ClusterBy::country;
    if (s == "month") return ClusterBy::month;
    throw ConfigError("cluster must be country or month, got '" + s + "'");
  }
};

/// Messages a stage wants surfaced to the user without failing.
struct StageReport {
  std::vector<std::string> warnings;
  std::vector<fs::path> written;
};

namespace detail {

inline void write_text(StageReport& rep, const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  rep.written.push_back(path);
}

inline csv::Table read_csv_input(const fs::path& p) { return csv::read_file(p.string()); }

inline json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("missing stage input " + p.string() + " (run the earlier stage first)");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(p.string() + ": " + e.what());
  }
}

inline json matrix_json(const Eigen::MatrixXd& m) { return matrix_to_json(m); }

/// Standard vocabulary when every variable belongs to it, else outcomes and
/// controls in order of first appearance.
inline PanelSchema infer_schema(const std::vector<PanelRow>& rows) {
  const auto std_schema = PanelSchema::standard();
  PanelSchema s;
  bool standard = true;
  for (const auto& r : rows) {
    auto& names = r.country == kEuroAreaId ? s.controls : s.outcomes;
    if (std::find(names.begin(), names.end(), r.variable) == names.end()) names.push_back(r.variable);
    if (!std_schema.outcome_index(r.variable) && !std_schema.control_index(r.variable)) standard = false;
  }
  return standard ? std_schema : s;
}

inline fs::path panel_input(const PipelineConfig& c) {
  if (c.panel) return c.resolve(*c.panel);
  if (c.model) return c.out / "sim_panel.csv";
  throw ConfigError("config names no panel input");
}

inline PanelDataset load_pipeline_panel(const PipelineConfig& c) {
  const auto rows = panel_rows_from_csv(read_csv_input(panel_input(c)));
  auto panel = load_panel(rows, c.schema ? *c.schema : infer_schema(rows));
  return c.window ? panel.restricted(*c.window) : panel;
}

inline ShockSet load_stage_shocks(const PipelineConfig& c) {
  const auto p = c.out / "shocks.csv";
  if (!fs::exists(p)) throw DataError("missing stage input " + p.string() + " (run identify first)");
  auto s = read_monthly_shocks(read_csv_input(p));
  return c.window ? s.restricted(*c.window) : s;
}

inline double series_sd(const std::vector<double>& v) {
  if (v.size() < 2) throw DataError("shock series too short");
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

// ---------------------------------------------------------------- identify

inline StageReport run_identify(const PipelineConfig& c) {
  StageReport rep;
  const bool simulated = !c.surprises && !c.shocks && c.model;
  if (!c.surprises && !c.shocks && !simulated) throw ConfigError("config must name one of 'surprises' and 'shocks'");

  if (c.shocks || simulated) {
    const auto src = c.shocks ? c.resolve(*c.shocks) : c.out / "sim_shocks.csv";
    auto shocks = read_monthly_shocks(detail::read_csv_input(src));
    if (c.window) shocks = shocks.restricted(*c.window);
    detail::write_text(rep, c.out / "shocks.csv", emit_monthly_shocks(shocks));
    json report = {{"skipped", true}, {"source", src.filename().string()}};
    detail::write_text(rep, c.out / "identification.json", report.dump(2) + "\n");
    return rep;
  }

  const auto surprises = read_surprises(detail::read_csv_input(c.resolve(*c.surprises)));
  const auto model = estimate_factor_mle(surprises.values);
  auto id = identify_factors(model, SignRestrictionMatrix::standard(), c.n_draws, c.seed);
  rep.warnings.insert(rep.warnings.end(), model.warnings.begin(), model.warnings.end());
  rep.warnings.insert(rep.warnings.end(), id.warnings.begin(), id.warnings.end());

  ShockEventTable events{surprises.dates, id.factors};
  Reassignment reassign;
  if (c.reassignment) reassign = read_reassignment(detail::read_csv_input(c.resolve(*c.reassignment)));
  MonthRange window{surprises.dates.front().calendar_month(), surprises.dates.front().calendar_month()};
  for (const auto& d : surprises.dates) {
    window.first = std::min(window.first, d.calendar_month());
    window.last = std::max(window.last, d.calendar_month());
  }
  if (c.window) window = *c.window;
  const auto shocks = assign_event_table(events, window, reassign);

  json ar1 = json::object();
  for (int k = 0; k < 3; ++k) {
    std::vector<double> f(id.factors.col(k).data(), id.factors.col(k).data() + id.factors.rows());
    const auto a = ar1_check(f);
    ar1[std::string(shock_name(k))] = {{"coefficient", a.coefficient}, {"std_error", a.std_error}, {"p_value", a.p_value}};
    if (a.warn)
      rep.warnings.push_back(std::string(shock_name(k)) + " shock shows serial correlation (AR(1) " +
                             std::to_string(a.coefficient) + ", p " + std::to_string(a.p_value) + ")");
  }

  json report = {{"skipped", false},
                 {"events", surprises.dates.size()},
                 {"n_draws", id.n_draws},
                 {"accepted", id.accepted},
                 {"acceptance_rate", id.acceptance_rate},
                 {"seed", id.seed},
                 {"selected_index", id.selected_index},
                 {"factor_iterations", model.iterations},
                 {"factor_converged", model.converged},
                 {"heywood", model.heywood},
                 {"loadings", detail::matrix_json(model.loadings)},
                 {"specific_variances", std::vector<double>(model.specific_variances.data(),
                                                            model.specific_variances.data() + model.specific_variances.size())},
                 {"rotation", detail::matrix_json(id.rotation)},
                 {"rotated_loadings", detail::matrix_json(id.rotated_loadings)},
                 {"median_loadings", detail::matrix_json(id.median_loadings)},
                 {"ar1", ar1},
                 {"warnings", rep.warnings}};
  detail::write_text(rep, c.out / "identification.json", report.dump(2) + "\n");
  detail::write_text(rep, c.out / "shock_events.csv", emit_shock_events(events));
  detail::write_text(rep, c.out / "shocks.csv", emit_monthly_shocks(shocks));
  return rep;
}

// ---------------------------------------------------------------- estimate

/// Coefficients of one fit restricted to the shock blocks, enough to form
/// every restriction the inference stage tests.
struct StoredFit {
  std::vector<std::string> names;
  Eigen::VectorXd beta;
  Eigen::MatrixXd omega;
  int n_obs = 0;
  int n_params = 0;

  static StoredFit from(const FitResult& f, bool with_gamma) {
    StoredFit s;
    std::vector<Eigen::Index> idx;
    for (int k = 0; k < 3; ++k) {
      s.names.push_back(psi_name(k));
      idx.push_back(static_cast<Eigen::Index>(f.index(psi_name(k))));
    }
    if (with_gamma)
      for (int k = 0; k < 3; ++k) {
        s.names.push_back(gamma_name(k));
        idx.push_back(static_cast<Eigen::Index>(f.index(gamma_name(k))));
      }
    const auto m = static_cast<Eigen::Index>(idx.size());
    s.beta.resize(m);
    s.omega.resize(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      s.beta(a) = f.beta(idx[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < m; ++b) s.omega(a, b) = f.omega(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
    s.n_obs = f.n_obs;
    s.n_params = f.n_params;
    return s;
  }

  /// Value and standard error of sum_k w_k * coef(name_k).
  std::pair<double, double> contrast(const std::map<std::string, double>& w) const {
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(beta.size());
    for (const auto& [name, v] : w) {
      auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) throw DataError("stored fit has no coefficient '" + name + "'");
      r(it - names.begin()) += v;
    }
    return {r.dot(beta), std::sqrt(std::max(0.0, (r * omega * r.transpose())(0, 0)))};
  }

  json to_json() const {
    return {{"names", names},
            {"beta", std::vector<double>(beta.data(), beta.data() + beta.size())},
            {"omega", detail::matrix_to_json(omega)},
            {"n_obs", n_obs},
            {"n_params", n_params}};
  }
  static StoredFit from_json(const json& j) {
    StoredFit s;
    s.names = j.at("names").get<std::vector<std::string>>();
    auto b = j.at("beta").get<std::vector<double>>();
    s.beta = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    s.omega = detail::matrix_from_json(j.at("omega"), "omega");
    s.n_obs = j.value("n_obs", 0);
    s.n_params = j.value("n_params", 0);
    return s;
  }
};

/// Per-shock plug-in inputs.
struct ShockScales {
  std::vector<double> delta;
  std::vector<double> threshold;
  std::vector<double> a_hat_sign;
  std::vector<double> a_hat_size;
};

inline ShockScales shock_scales(const ShockSet& shocks, double coverage, AhatSample sample) {
  ShockScales sc;
  for (const auto& s : shocks.series) {
    const double d = detail::series_sd(s.values);
    const double b = threshold_from_quantile(s, coverage);
    sc.delta.push_back(d);
    sc.threshold.push_back(b);
    sc.a_hat_sign.push_back(estimate_A(s, d, ShockTransform::abs_value(), sample).a_hat);
    sc.a_hat_size.push_back(estimate_A(s, d, ShockTransform::threshold_shift(b), sample).a_hat);
  }
  return sc;
}

namespace detail {

struct IrfRow {
  std::string spec;
  std::string flavor;
  std::string outcome;
  int shock = 0;
  int h = 0;
  double value = 0.0;
  double delta = 1.0;
  double se = 0.0;
};

inline std::string emit_irf_rows(const std::vector<IrfRow>& rows, bool with_se) {
  std::ostringstream out;
  out << "shock,outcome,spec,flavor,h,value,delta" << (with_se ? ",se\n" : "\n");
  for (const auto& r : rows) {
    out << shock_name(r.shock) << ',' << r.outcome << ',' << r.spec << ',' << r.flavor << ',' << r.h << ','
        << csv::format_double(r.value) << ',' << csv::format_double(r.delta);
    if (with_se) out << ',' << csv::format_double(r.se);
    out << '\n';
  }
  return out.str();
}

/// One panel per (outcome, shock), rows = outcomes, one series per
/// (spec, flavor) group in `rows`.
inline std::string irf_figure(const std::string& title, const std::vector<std::string>& outcomes,
                              const std::vector<IrfRow>& rows) {
  static const std::array<const char*, 6> colors = {"#c0392b", "#1f4e9c", "#27ae60", "#8e44ad", "#d35400", "#7f8c8d"};
  std::vector<svg::Panel> panels;
  for (const auto& o : outcomes)
    for (int s = 0; s < 3; ++s) {
      svg::Panel p{o + " / " + std::string(shock_name(s)), {}};
      std::vector<std::string> keys;
      std::map<std::string, std::vector<double>> curves;
      for (const auto& r : rows) {
        if (r.outcome != o || r.shock != s) continue;
        const auto key = r.spec + " " + r.flavor;
        if (!curves.contains(key)) keys.push_back(key);
        auto& v = curves[key];
        if (static_cast<int>(v.size()) <= r.h) v.resize(static_cast<std::size_t>(r.h) + 1, std::nan(""));
        v[static_cast<std::size_t>(r.h)] = r.value;
      }
      for (std::size_t k = 0; k < keys.size(); ++k)
        p.series.push_back({keys[k], colors[k % colors.size()], curves[keys[k]], false});
      panels.push_back(std::move(p));
    }
  return svg::line_grid(title, panels, static_cast<int>(outcomes.size()), 3);
}

}  // namespace detail

inline StageReport run_estimate(const PipelineConfig& c) {
  StageReport rep;
  const auto panel = detail::load_pipeline_panel(c);
  const auto shocks = detail::load_stage_shocks(c);
  const auto sc = shock_scales(shocks, c.coverage, c.ahat_sample);
  const auto& outcomes = panel.schema.outcomes;
  const int ny = static_cast<int>(outcomes.size());
  const int H = c.horizon;
  constexpr int kMaxSelected = 24;

  json store = {{"horizon", H},
                {"outcomes", outcomes},
                {"delta", sc.delta},
                {"threshold", sc.threshold},
                {"a_hat_sign", sc.a_hat_sign},
                {"a_hat_size", sc.a_hat_size},
                {"fits", json::array()}};
  std::vector<detail::IrfRow> linear_rows, sign_rows, size_rows, cond_rows, scaled_rows;
  const SelectionOptions sel_opt{c.criterion, c.penalty, {2, 3, 4, 5, 6}};

  for (int j = 0; j < ny; ++j) {
    const auto& name = outcomes[static_cast<std::size_t>(j)];
    SelectionResult sel{name, {}};
    for (int h = 0; h <= std::min(H, kMaxSelected); ++h) sel.per_horizon.push_back(select_specification(panel, shocks, j, h, sel_opt));
    detail::write_text(rep, c.out / ("selection_" + name + ".csv"), emit_selection_csv(sel));

    std::vector<std::vector<double>> psi_lin(3), psi_sign(3), gam_sign(3), psi_size(3), gam_size(3);
    std::vector<StoredFit> fits_lin, fits_sign, fits_size;
    for (int h = 0; h <= H; ++h) {
      const auto& choice = sel.at(h);
      LpSpec spec{j, h, choice.lags, choice.trend, ShockTransform::identity(), {}, 0};
      const auto lin = StoredFit::from(fit_lp(panel, shocks, spec, c.cluster), false);
      spec.transform = ShockTransform::abs_value();
      const auto sgn = StoredFit::from(fit_lp(panel, shocks, spec, c.cluster), true);
      spec.transform = ShockTransform::threshold_shift(0.0);
      spec.thresholds = sc.threshold;
      const auto siz = StoredFit::from(fit_lp(panel, shocks, spec, c.cluster), true);
      for (int s = 0; s < 3; ++s) {
        const auto k = static_cast<std::size_t>(s);
        psi_lin[k].push_back(lin.beta(s));
        psi_sign[k].push_back(sgn.beta(s));
        gam_sign[k].push_back(sgn.beta(3 + s));
        psi_size[k].push_back(siz.beta(s));
        gam_size[k].push_back(siz.beta(3 + s));
      }
      for (const auto& [label, f] : {std::pair<const char*, const StoredFit*>{"linear", &lin}, {"sign", &sgn}, {"size", &siz}}) {
        auto e = f->to_json();
        e["spec"] = label;
        e["outcome"] = j;
        e["h"] = h;
        e["lags"] = {choice.lags.p, choice.lags.q, choice.lags.r};
        e["trend"] = choice.trend.label();
        store["fits"].push_back(e);
      }
      fits_lin.push_back(lin);
      fits_sign.push_back(sgn);
      fits_size.push_back(siz);
    }

    for (int s = 0; s < 3; ++s) {
      const auto k = static_cast<std::size_t>(s);
      const auto psi = psi_name(s), gam = gamma_name(s);
      const auto& series = shocks.series[k];
      const auto lin_curve = linear_irf(psi_lin[k], sc.delta[k]);
      const auto sign_curve = unconditional_irf(psi_sign[k], gam_sign[k], {sc.delta[k], sc.a_hat_sign[k]});
      const auto size_curve = unconditional_irf(psi_size[k], gam_size[k], {sc.delta[k], sc.a_hat_size[k]});
      const auto [pos, neg] = conditional_irfs(psi_sign[k], gam_sign[k]);
      const auto t = ShockTransform::threshold_shift(sc.threshold[k]);
      const auto scaled = scaled_irf_family(psi_size[k], gam_size[k], series.values, t, sc.delta[k], c.scales, c.scaled_formula);
      for (int h = 0; h <= H; ++h) {
        const auto hh = static_cast<std::size_t>(h);
        const double lin_se = fits_lin[hh].contrast({{psi, sc.delta[k]}}).second;
        const detail::IrfRow lin_row{"linear", "unconditional", name, s, h, lin_curve.values[hh], sc.delta[k], lin_se};
        linear_rows.push_back(lin_row);
        sign_rows.push_back(lin_row);
        size_rows.push_back(lin_row);
        sign_rows.push_back({"sign", "unconditional", name, s, h, sign_curve.values[hh], sc.delta[k],
                             fits_sign[hh].contrast({{psi, sc.delta[k]}, {gam, sc.a_hat_sign[k]}}).second});
        size_rows.push_back({"size", "unconditional", name, s, h, size_curve.values[hh], sc.delta[k],
                             fits_size[hh].contrast({{psi, sc.delta[k]}, {gam, sc.a_hat_size[k]}}).second});
        cond_rows.push_back({"sign", pos.flavor_label(), name, s, h, pos.values[hh], 1.0,
                             fits_sign[hh].contrast({{psi, 1.0}, {gam, 1.0}}).second});
        cond_rows.push_back({"sign", neg.flavor_label(), name, s, h, neg.values[hh], 1.0,
                             fits_sign[hh].contrast({{psi, -1.0}, {gam, 1.0}}).second});
        for (const auto& curve : scaled) {
          const double a = curve.scale;
          const double ahat = mean_transform_shift(series.values, a * sc.delta[k], t);
          const double inner = c.scaled_formula == ScaledFormula::as_printed ? a : 1.0;
          scaled_rows.push_back({"size", curve.flavor_label(), name, s, h, curve.values[hh], curve.delta,
                                 fits_size[hh].contrast({{psi, sc.delta[k]}, {gam, ahat * inner / a}}).second});
        }
      }
    }
  }

  detail::write_text(rep, c.out / "coefficients.json", store.dump(1) + "\n");
  const std::array<std::tuple<const char*, const char*, const std::vector<detail::IrfRow>*>, 5> figs = {{
      {"linear", "Linear impulse responses", &linear_rows},
      {"sign", "Sign specification: unconditional responses", &sign_rows},
      {"size", "Size specification: unconditional responses", &size_rows},
      {"conditional", "Sign specification: responses conditional on the shock sign", &cond_rows},
      {"scaled", "Size specification: scaled responses", &scaled_rows},
  }};
  std::vector<detail::IrfRow> all = linear_rows;
  for (const auto* rows : {&sign_rows, &size_rows, &cond_rows, &scaled_rows})
    for (const auto& r : *rows)
      if (r.spec != "linear") all.push_back(r);
  detail::write_text(rep, c.out / "irfs.csv", detail::emit_irf_rows(all, false));
  for (const auto& [key, title, rows] : figs) {
    detail::write_text(rep, c.out / ("irf_" + std::string(key) + ".csv"), detail::emit_irf_rows(*rows, true));
    detail::write_text(rep, c.out / ("irf_" + std::string(key) + ".svg"), detail::irf_figure(title, outcomes, *rows));
  }
  return rep;
}

// ------------------------------------------------------------------ infer

struct InferenceFamily {
  std::string key;
  std::string title;
  std::string spec;  // which stored fit
  RestrictionKind kind;
};

inline const std::array<InferenceFamily, 6>& inference_families() {
  static const std::array<InferenceFamily, 6> f = {{
      {"sign_gamma", "Sign specification: transformed-shock coefficient", "sign", RestrictionKind::gamma_only},
      {"size_gamma", "Size specification: transformed-shock coefficient", "size", RestrictionKind::gamma_only},
      {"sign_plugin", "Sign specification: unconditional response", "sign", RestrictionKind::plugin_irf},
      {"size_plugin", "Size specification: unconditional response", "size", RestrictionKind::plugin_irf},
      {"conditional_pos", "Sign specification: response to a positive shock", "sign", RestrictionKind::conditional_pos},
      {"conditional_neg", "Sign specification: response to a negative shock", "sign", RestrictionKind::conditional_neg},
  }};
  return f;
}

inline std::vector<SignificanceTable> inference_tables(const json& store) {
  const int H = store.at("horizon").get<int>();
  const auto outcomes = store.at("outcomes").get<std::vector<std::string>>();
  const auto delta = store.at("delta").get<std::vector<double>>();
  const auto ahat_sign = store.at("a_hat_sign").get<std::vector<double>>();
  const auto ahat_size = store.at("a_hat_size").get<std::vector<double>>();
  std::map<std::tuple<std::string, int, int>, StoredFit> fits;
  for (const auto& f : store.at("fits"))
    fits[{f.at("spec").get<std::string>(), f.at("outcome").get<int>(), f.at("h").get<int>()}] = StoredFit::from_json(f);

  std::vector<SignificanceTable> out;
  for (const auto& fam : inference_families()) {
    WaldGrid grid;
    for (int j = 0; j < static_cast<int>(outcomes.size()); ++j)
      for (int h = 0; h <= H; ++h) {
        auto it = fits.find({fam.spec, j, h});
        if (it == fits.end()) continue;
        for (int s = 0; s < 3; ++s) {
          const auto k = static_cast<std::size_t>(s);
          const double a = fam.spec == "sign" ? ahat_sign[k] : ahat_size[k];
          const auto r = build_restriction(fam.kind, s, it->second.names, delta[k], a);
          grid[{j, s, h}] = wald_test(r.r, it->second.beta, it->second.omega);
        }
      }
    out.push_back(significance_table(outcomes, 3, H, grid, fam.title));
  }
  return out;
}

inline StageReport run_infer(const PipelineConfig& c) {
  StageReport rep;
  const auto store = detail::read_json_file(c.out / "coefficients.json");
  std::vector<SignificanceTable> tables;
  try {
    tables = inference_tables(store);
  } catch (const json::exception& e) {
    throw DataError(std::string("coefficients.json: ") + e.what());
  }
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const auto& key = inference_families()[i].key;
    detail::write_text(rep, c.out / ("significance_" + key + ".csv"), emit_significance_csv(tables[i]));
    detail::write_text(rep, c.out / ("significance_" + key + ".svg"), svg::band_table(tables[i]));
  }
  return rep;
}

// --------------------------------------------------------------- symmetry

inline json symmetry_report_json(const SymmetryReport& r) {
  json j = {{"replicates", r.tests.empty() ? 0 : r.tests.front().replicates},
            {"seed", r.tests.empty() ? 0 : r.tests.front().seed},
            {"shocks", json::object()}};
  for (std::size_t i = 0; i < r.shocks.size(); ++i) {
    const auto& s = r.stats[i];
    const auto& t = r.tests[i];
    auto test = [](const SymmetryTestResult& x) { return json{{"statistic", x.statistic}, {"p_value", x.p_value}}; };
    j["shocks"][r.shocks[i]] = {{"n", s.n},         {"mean", s.mean},  {"sd", s.sd},       {"skewness", s.skewness},
                                {"q80", s.q80},     {"cm", test(t.cm)}, {"m1", test(t.mgg)}, {"m2", test(t.mira)}};
  }
  return j;
}

inline StageReport run_symmetry(const PipelineConfig& c) {
  StageReport rep;
  const auto shocks = detail::load_stage_shocks(c);
  SymmetryReport r;
  std::vector<svg::Histogram> hists;
  std::ostringstream hist_csv;
  hist_csv << "shock,bin_lo,bin_hi,count\n";
  for (int k = 0; k < shocks.size(); ++k) {
    const auto& v = shocks.series[static_cast<std::size_t>(k)].values;
    r.shocks.emplace_back(shock_name(k));
    r.stats.push_back(sample_stats(v));
    r.tests.push_back(symmetry_tests(v, {c.bootstrap_replicates, c.seed}));
    hists.push_back(svg::histogram(v, 30));
    const auto& h = hists.back();
    for (std::size_t b = 0; b < h.counts.size(); ++b)
      hist_csv << shock_name(k) << ',' << csv::format_double(h.lo + h.width * static_cast<double>(b)) << ','
               << csv::format_double(h.lo + h.width * static_cast<double>(b + 1)) << ',' << h.counts[b] << '\n';
  }
  detail::write_text(rep, c.out / "symmetry.json", symmetry_report_json(r).dump(2) + "\n");
  detail::write_text(rep, c.out / "symmetry_hist.csv", hist_csv.str());
  detail::write_text(rep, c.out / "symmetry_hist.svg", svg::histogram_panels(r.shocks, hists));
  return rep;
}

// --------------------------------------------------------------- simulate

inline StageReport run_simulate(const PipelineConfig& c) {
  StageReport rep;
  if (!c.model) throw ConfigError("simulate needs a 'model' in the config");
  const auto m = model_from_json(*c.model);
  const auto sim = simulate(m, c.sim_periods, c.sim_countries, c.seed);
  detail::write_text(rep, c.out / "sim_model.json", model_to_json(m).dump(2) + "\n");
  detail::write_text(rep, c.out / "sim_panel.csv", emit_panel(sim.to_panel(c.sim_start)));
  detail::write_text(rep, c.out / "sim_shocks.csv", emit_monthly_shocks(sim.to_shocks(c.sim_start)));

  const auto oracle = true_irf_oracle(m, c.oracle_shock, c.oracle_delta, c.horizon, c.oracle_paths, splitmix64(c.seed));
  std::ostringstream o;
  o << "outcome,h,value,se\n";
  for (int v = 0; v < m.n_y; ++v)
    for (int h = 0; h <= c.horizon; ++h)
      o << 'y' << v + 1 << ',' << h << ',' << csv::format_double(oracle.mean(h, v)) << ','
        << csv::format_double(oracle.std_error(h, v)) << '\n';
  detail::write_text(rep, c.out / "oracle_irf.csv", o.str());

  std::vector<svg::Panel> panels;
  for (int v = 0; v < m.n_y; ++v) {
    std::vector<double> vals;
    for (int h = 0; h <= c.horizon; ++h) vals.push_back(oracle.mean(h, v));
    panels.push_back({"y" + std::to_string(v + 1) + " / " + std::string(shock_name(c.oracle_shock)), {{"oracle", "#1f4e9c", vals, false}}});
  }
  detail::write_text(rep, c.out / "oracle_irf.svg", svg::line_grid("Oracle responses", panels, m.n_y, 1));
  return rep;
}

/// Every stage in order; a model in the config adds the simulation first.
inline StageReport run_all(const PipelineConfig& c) {
  StageReport rep;
  auto merge = [&](StageReport r) {
    rep.warnings.insert(rep.warnings.end(), r.warnings.begin(), r.warnings.end());
    rep.written.insert(rep.written.end(), r.written.begin(), r.written.end());
  };
  if (c.model) merge(run_simulate(c));
  merge(run_identify(c));
  merge(run_estimate(c));
  merge(run_infer(c));
  merge(run_symmetry(c));
  return rep;
}

}  // namespace nlirf
