#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "calendar.hpp"
#include "csv.hpp"
#include "error.hpp"

namespace nlirf {

inline constexpr std::string_view kEuroAreaId = "EA";

/// Names of the country outcome variables and the common euro-area
/// controls. The standard schema is the 5 + 4 vocabulary of the study;
/// custom schemas are used by synthetic panels of other dimensions.
struct PanelSchema {
  std::vector<std::string> outcomes;
  std::vector<std::string> controls;

  static PanelSchema standard() {
    return {{"reer", "unemployment", "cpi", "industrial_production", "long_term_rate"},
            {"ea_cpi", "ea_unemployment", "ea_industrial_production", "ea_reer"}};
  }

  std::optional<int> outcome_index(std::string_view name) const {
    for (std::size_t i = 0; i < outcomes.size(); ++i)
      if (outcomes[i] == name) return static_cast<int>(i);
    return std::nullopt;
  }
  std::optional<int> control_index(std::string_view name) const {
    for (std::size_t i = 0; i < controls.size(); ++i)
      if (controls[i] == name) return static_cast<int>(i);
    return std::nullopt;
  }
  bool operator==(const PanelSchema&) const = default;
};

/// All outcome variables of one country over its own contiguous window.
/// Row i of `values` is month window.first + i; column v is outcome v.
struct CountryPanel {
  std::string country;
  MonthRange window;
  Eigen::MatrixXd values;

  bool covers(CalendarMonth m) const { return window.contains(m); }
  double at(CalendarMonth m, int variable) const { return values(window.index_of(m), variable); }
  bool operator==(const CountryPanel& o) const {
    return country == o.country && window == o.window && values == o.values;
  }
};

/// Common euro-area controls z_t.
struct ControlPanel {
  MonthRange window{{2000, 1}, {1999, 12}};
  Eigen::MatrixXd values;

  bool covers(CalendarMonth m) const { return window.contains(m); }
  double at(CalendarMonth m, int variable) const { return values(window.index_of(m), variable); }
  bool operator==(const ControlPanel& o) const {
    return (window == o.window && values == o.values) || (window.empty() && o.window.empty());
  }
};

/// Unbalanced country-month panel plus euro-area controls.
struct PanelDataset {
  PanelSchema schema;
  std::vector<CountryPanel> countries;  // sorted by country id
  ControlPanel controls;

  /// Union of the country windows.
  MonthRange sample() const {
    if (countries.empty()) throw DataError("panel has no countries");
    MonthRange r = countries.front().window;
    for (const auto& c : countries) {
      r.first = std::min(r.first, c.window.first);
      r.last = std::max(r.last, c.window.last);
    }
    return r;
  }

  bool operator==(const PanelDataset&) const = default;

  /// Clips every window to `window`; countries left without observations
  /// are dropped. Used for sub-sample runs such as a pre-2020 cut.
  PanelDataset restricted(MonthRange window) const {
    PanelDataset out{schema, {}, {}};
    for (const auto& c : countries) {
      MonthRange w{std::max(c.window.first, window.first), std::min(c.window.last, window.last)};
      if (w.empty()) continue;
      out.countries.push_back({c.country, w, c.values.middleRows(c.window.index_of(w.first), w.length())});
    }
    if (out.countries.empty()) throw DataError("panel is empty after applying window " + window.str());
    if (!controls.window.empty()) {
      MonthRange w{std::max(controls.window.first, window.first), std::min(controls.window.last, window.last)};
      if (!w.empty())
        out.controls = {w, controls.values.middleRows(controls.window.index_of(w.first), w.length())};
    }
    return out;
  }
};

/// One row of the long-format panel file.
struct PanelRow {
  std::string country;
  CalendarMonth month;
  std::string variable;
  double value = 0.0;
};

namespace detail {

struct SeriesAccumulator {
  std::map<CalendarMonth, double> obs;
};

inline std::pair<MonthRange, std::vector<double>> contiguous(const std::string& who,
                                                             const std::map<CalendarMonth, double>& obs) {
  MonthRange w{obs.begin()->first, obs.rbegin()->first};
  std::vector<double> v;
  v.reserve(w.length());
  CalendarMonth expect = w.first;
  for (const auto& [m, x] : obs) {
    if (m != expect) throw DataError("gap in series " + who + ": first missing month " + expect.str());
    v.push_back(x);
    ++expect;
  }
  return {w, std::move(v)};
}

}  // namespace detail

/// Builds a panel from long-format rows. Windows are inferred per country
/// from the observed months; every outcome series of a country must cover
/// that window without gaps, and the controls must cover the union of the
/// country windows.
inline PanelDataset load_panel(std::span<const PanelRow> rows, const PanelSchema& schema = PanelSchema::standard()) {
  // (country, variable) -> month -> value
  std::map<std::pair<std::string, std::string>, std::map<CalendarMonth, double>> series;
  for (const auto& r : rows) {
    bool is_outcome = schema.outcome_index(r.variable).has_value();
    bool is_control = schema.control_index(r.variable).has_value();
    if (!is_outcome && !is_control) throw DataError("unknown variable '" + r.variable + "'");
    if (is_control && r.country != kEuroAreaId)
      throw DataError("euro-area control '" + r.variable + "' must use country id " + std::string(kEuroAreaId));
    if (is_outcome && r.country == kEuroAreaId)
      throw DataError("country id " + std::string(kEuroAreaId) + " is reserved for euro-area controls");
    if (!std::isfinite(r.value))
      throw DataError("non-finite value at (" + r.country + ", " + r.month.str() + ", " + r.variable + ")");
    auto [it, inserted] = series[{r.country, r.variable}].emplace(r.month, r.value);
    if (!inserted)
      throw DataError("duplicate observation (" + r.country + ", " + r.month.str() + ", " + r.variable + ")");
  }

  PanelDataset panel{schema, {}, {}};
  std::set<std::string> country_ids;
  for (const auto& [key, obs] : series)
    if (key.first != kEuroAreaId) country_ids.insert(key.first);

  for (const auto& id : country_ids) {
    std::optional<MonthRange> window;
    for (const auto& var : schema.outcomes) {
      auto it = series.find({id, var});
      if (it == series.end()) throw DataError("country " + id + " has no observations of '" + var + "'");
      for (const auto& [m, x] : it->second) {
        if (!window) window = MonthRange{m, m};
        window->first = std::min(window->first, m);
        window->last = std::max(window->last, m);
      }
    }
    CountryPanel cp{id, *window, Eigen::MatrixXd(window->length(), static_cast<Eigen::Index>(schema.outcomes.size()))};
    for (std::size_t v = 0; v < schema.outcomes.size(); ++v) {
      const auto& obs = series.at({id, schema.outcomes[v]});
      std::string who = "(" + id + ", " + schema.outcomes[v] + ")";
      if (obs.begin()->first != window->first)
        throw DataError("gap in series " + who + ": first missing month " + window->first.str());
      auto [w, vals] = detail::contiguous(who, obs);
      if (w.last != window->last)
        throw DataError("gap in series " + who + ": first missing month " + (w.last + 1).str());
      for (int i = 0; i < w.length(); ++i) cp.values(i, static_cast<Eigen::Index>(v)) = vals[i];
    }
    panel.countries.push_back(std::move(cp));
  }
  if (panel.countries.empty()) throw DataError("panel has no country observations");

  if (!schema.controls.empty()) {
    std::optional<MonthRange> window;
    std::vector<std::vector<double>> cols;
    for (const auto& var : schema.controls) {
      auto it = series.find({std::string(kEuroAreaId), var});
      if (it == series.end()) throw DataError("euro-area control '" + var + "' is missing");
      auto [w, vals] = detail::contiguous("(EA, " + var + ")", it->second);
      if (window && !(*window == w))
        throw DataError("euro-area control '" + var + "' window " + w.str() + " differs from " + window->str());
      window = w;
      cols.push_back(std::move(vals));
    }
    MonthRange need = panel.sample();
    if (!window->contains(need.first) || !window->contains(need.last)) {
      CalendarMonth missing = window->contains(need.first) ? window->last + 1 : need.first;
      throw DataError("euro-area controls do not cover the panel sample; first missing month " + missing.str());
    }
    panel.controls.window = *window;
    panel.controls.values.resize(window->length(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t v = 0; v < cols.size(); ++v)
      for (int i = 0; i < window->length(); ++i) panel.controls.values(i, static_cast<Eigen::Index>(v)) = cols[v][i];
  }
  return panel;
}

inline std::vector<PanelRow> panel_rows_from_csv(const csv::Table& t) {
  csv::expect_header(t, {"country", "month", "variable", "value"}, "panel CSV");
  std::vector<PanelRow> rows;
  rows.reserve(t.rows.size());
  for (const auto& r : t.rows)
    rows.push_back({r[0], CalendarMonth::parse(r[1]), r[2], csv::parse_double(r[3])});
  return rows;
}

inline PanelDataset load_panel_csv(const csv::Table& t, const PanelSchema& schema = PanelSchema::standard()) {
  auto rows = panel_rows_from_csv(t);
  return load_panel(rows, schema);
}

/// Long-format CSV in the same layout `load_panel_csv` reads.
inline std::string emit_panel(const PanelDataset& panel) {
  std::ostringstream out;
  out << "country,month,variable,value\n";
  for (const auto& c : panel.countries)
    for (std::size_t v = 0; v < panel.schema.outcomes.size(); ++v)
      for (int i = 0; i < c.window.length(); ++i)
        out << c.country << ',' << c.window.at(i).str() << ',' << panel.schema.outcomes[v] << ','
            << csv::format_double(c.values(i, static_cast<Eigen::Index>(v))) << '\n';
  if (!panel.controls.window.empty())
    for (std::size_t v = 0; v < panel.schema.controls.size(); ++v)
      for (int i = 0; i < panel.controls.window.length(); ++i)
        out << kEuroAreaId << ',' << panel.controls.window.at(i).str() << ',' << panel.schema.controls[v] << ','
            << csv::format_double(panel.controls.values(i, static_cast<Eigen::Index>(v))) << '\n';
  return out.str();
}

/// Removes the monthly seasonal pattern: residuals of a least-squares
/// regression on the 12 month-of-year dummies (no intercept), with the
/// grand mean added back. The least-squares fit on a full dummy basis is the
/// within-month mean, so the projection reduces to subtracting it.
inline std::vector<double> deseasonalize_monthly(std::span<const double> values, CalendarMonth start) {
  if (values.size() < 24)
    throw DataError("deseasonalization needs at least 24 monthly observations, got " + std::to_string(values.size()));
  std::array<double, 12> sum{};
  std::array<int, 12> count{};
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    int m = (start + static_cast<int>(i)).month - 1;
    sum[m] += values[i];
    ++count[m];
    total += values[i];
  }
  const double grand = total / static_cast<double>(values.size());
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    int m = (start + static_cast<int>(i)).month - 1;
    out[i] = values[i] - sum[m] / count[m] + grand;
  }
  return out;
}

/// 100 * ln(v).
inline std::vector<double> to_log_points(std::span<const double> values, CalendarMonth start) {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0))
      throw DataError("log transform needs positive values; got " + csv::format_double(values[i]) + " at " +
                      (start + static_cast<int>(i)).str());
    out[i] = 100.0 * std::log(values[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Identified shocks on the monthly calendar.

enum class ShockKind { monetary = 0, information = 1, spread = 2 };
inline constexpr std::array<std::string_view, 3> kShockNames = {"monetary", "information", "spread"};

inline std::string_view shock_name(int k) { return kShockNames.at(static_cast<std::size_t>(k)); }

enum class ShockFlag { conference, filled_zero };

/// Monthly shock values; months without a conference hold 0.
struct ShockSeries {
  ShockKind kind = ShockKind::monetary;
  MonthRange window;
  std::vector<double> values;
  std::vector<ShockFlag> flags;

  double at(CalendarMonth m) const { return values[static_cast<std::size_t>(window.index_of(m))]; }

  std::vector<double> conference_values() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (flags[i] == ShockFlag::conference) out.push_back(values[i]);
    return out;
  }

  /// Mean within `tol` of 0 and standard deviation within `tol` of 1 over
  /// conference months.
  bool is_standardized(double tol = 0.1) const {
    auto v = conference_values();
    if (v.size() < 2) return false;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    return std::abs(mean) <= tol && std::abs(sd - 1.0) <= tol;
  }
};

/// The shock vector x_t: one series per kind on a shared window.
struct ShockSet {
  MonthRange window;
  std::vector<ShockSeries> series;

  int size() const { return static_cast<int>(series.size()); }
  bool covers(CalendarMonth m) const { return window.contains(m); }
  double at(int kind, CalendarMonth m) const { return series[static_cast<std::size_t>(kind)].at(m); }

  /// Restricts every series to the overlap with `w`.
  ShockSet restricted(MonthRange w) const {
    MonthRange r{std::max(window.first, w.first), std::min(window.last, w.last)};
    if (r.empty()) throw DataError("shock series do not overlap window " + w.str());
    ShockSet out{r, {}};
    auto off = static_cast<std::ptrdiff_t>(window.index_of(r.first));
    for (const auto& s : series)
      out.series.push_back({s.kind, r, {s.values.begin() + off, s.values.begin() + off + r.length()},
                            {s.flags.begin() + off, s.flags.begin() + off + r.length()}});
    return out;
  }
};

struct ShockEvent {
  EventDate date;
  double value = 0.0;
};

/// Explicit date -> month overrides for months holding two conferences.
using Reassignment = std::map<EventDate, CalendarMonth>;

namespace detail {

inline std::vector<std::pair<CalendarMonth, std::size_t>> place_events(std::span<const EventDate> dates,
                                                                       MonthRange window,
                                                                       const Reassignment& reassign) {
  std::map<CalendarMonth, std::size_t> slot;
  std::vector<std::pair<CalendarMonth, std::size_t>> placed;
  for (std::size_t i = 0; i < dates.size(); ++i) {
    auto it = reassign.find(dates[i]);
    CalendarMonth m = it != reassign.end() ? it->second : dates[i].calendar_month();
    if (!window.contains(m)) continue;
    auto [pos, fresh] = slot.emplace(m, i);
    if (!fresh)
      throw DataError("two events in " + m.str() + " (" + dates[pos->second].str() + ", " + dates[i].str() +
                      ") and no reassignment entry");
    placed.emplace_back(m, i);
  }
  return placed;
}

}  // namespace detail

/// Places conference events on the monthly calendar. Events outside the
/// window are ignored; months without an event are 0 and flagged
/// filled_zero.
inline ShockSeries assign_shocks_to_months(std::span<const ShockEvent> events, MonthRange window,
                                           const Reassignment& reassign = {},
                                           ShockKind kind = ShockKind::monetary) {
  if (window.empty()) throw ConfigError("shock window is empty");
  std::vector<EventDate> dates;
  for (const auto& e : events) dates.push_back(e.date);
  ShockSeries s{kind, window, std::vector<double>(static_cast<std::size_t>(window.length()), 0.0),
                std::vector<ShockFlag>(static_cast<std::size_t>(window.length()), ShockFlag::filled_zero)};
  for (auto [m, i] : detail::place_events(dates, window, reassign)) {
    auto k = static_cast<std::size_t>(window.index_of(m));
    s.values[k] = events[i].value;
    s.flags[k] = ShockFlag::conference;
  }
  return s;
}

/// Event-level identified shocks, one column per kind.
struct ShockEventTable {
  std::vector<EventDate> dates;
  Eigen::MatrixXd values;  // events x kinds
};

inline ShockEventTable read_shock_events(const csv::Table& t) {
  csv::expect_header(t, {"date", "monetary", "information", "spread"}, "shock event CSV");
  ShockEventTable out{{}, Eigen::MatrixXd(static_cast<Eigen::Index>(t.rows.size()), 3)};
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out.dates.push_back(EventDate::parse(t.rows[i][0]));
    for (int k = 0; k < 3; ++k) out.values(static_cast<Eigen::Index>(i), k) = csv::parse_double(t.rows[i][k + 1]);
  }
  return out;
}

inline std::string emit_shock_events(const ShockEventTable& t) {
  std::ostringstream out;
  out << "date,monetary,information,spread\n";
  for (std::size_t i = 0; i < t.dates.size(); ++i) {
    out << t.dates[i].str();
    for (int k = 0; k < t.values.cols(); ++k) out << ',' << csv::format_double(t.values(static_cast<Eigen::Index>(i), k));
    out << '\n';
  }
  return out.str();
}

inline Reassignment read_reassignment(const csv::Table& t) {
  csv::expect_header(t, {"date", "assign_to_month"}, "reassignment CSV");
  Reassignment r;
  for (const auto& row : t.rows) r[EventDate::parse(row[0])] = CalendarMonth::parse(row[1]);
  return r;
}

inline ShockSet assign_event_table(const ShockEventTable& events, MonthRange window, const Reassignment& reassign = {}) {
  ShockSet out{window, {}};
  for (int k = 0; k < events.values.cols(); ++k) {
    std::vector<ShockEvent> ev;
    for (std::size_t i = 0; i < events.dates.size(); ++i)
      ev.push_back({events.dates[i], events.values(static_cast<Eigen::Index>(i), k)});
    out.series.push_back(assign_shocks_to_months(ev, window, reassign, static_cast<ShockKind>(k)));
  }
  return out;
}

/// Monthly shock CSV `month,monetary,information,spread`. Conference months
/// are recovered on read as the months where any shock is nonzero.
inline std::string emit_monthly_shocks(const ShockSet& shocks) {
  std::ostringstream out;
  out << "month";
  for (int k = 0; k < shocks.size(); ++k) out << ',' << shock_name(k);
  out << '\n';
  for (int i = 0; i < shocks.window.length(); ++i) {
    out << shocks.window.at(i).str();
    for (const auto& s : shocks.series) out << ',' << csv::format_double(s.values[static_cast<std::size_t>(i)]);
    out << '\n';
  }
  return out.str();
}

inline ShockSet read_monthly_shocks(const csv::Table& t) {
  csv::expect_header(t, {"month", "monetary", "information", "spread"}, "monthly shock CSV");
  if (t.rows.empty()) throw DataError("monthly shock CSV has no rows");
  std::vector<CalendarMonth> months;
  for (const auto& r : t.rows) months.push_back(CalendarMonth::parse(r[0]));
  MonthRange w{months.front(), months.back()};
  for (std::size_t i = 0; i < months.size(); ++i)
    if (months[i] != w.first + static_cast<int>(i))
      throw DataError("monthly shock CSV: first missing month " + (w.first + static_cast<int>(i)).str());
  ShockSet out{w, {}};
  for (int k = 0; k < 3; ++k)
    out.series.push_back({static_cast<ShockKind>(k), w, std::vector<double>(months.size()),
                          std::vector<ShockFlag>(months.size(), ShockFlag::filled_zero)});
  for (std::size_t i = 0; i < months.size(); ++i) {
    bool any = false;
    for (int k = 0; k < 3; ++k) {
      double v = csv::parse_double(t.rows[i][static_cast<std::size_t>(k) + 1]);
      out.series[static_cast<std::size_t>(k)].values[i] = v;
      any = any || v != 0.0;
    }
    if (any)
      for (auto& s : out.series) s.flags[i] = ShockFlag::conference;
  }
  return out;
}

}  // namespace nlirf
