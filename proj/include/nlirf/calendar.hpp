#pragma once

#include <compare>
#include <cstdio>
#include <string>
#include <string_view>

#include "error.hpp"

namespace nlirf {

/// A (year, month) pair. Months are totally ordered and support integer
/// differences, which is all the monthly panel needs.
struct CalendarMonth {
  int year = 2000;
  int month = 1;  // 1..12

  constexpr CalendarMonth() = default;
  constexpr CalendarMonth(int y, int m) : year(y), month(m) {
    if (m < 1 || m > 12) throw DataError("month out of range: " + std::to_string(m));
  }

  /// Months since year 0, January.
  constexpr int ordinal() const { return year * 12 + (month - 1); }
  static constexpr CalendarMonth from_ordinal(int ord) {
    int y = ord >= 0 ? ord / 12 : -((-ord + 11) / 12);
    return CalendarMonth(y, ord - y * 12 + 1);
  }

  constexpr CalendarMonth operator+(int months) const { return from_ordinal(ordinal() + months); }
  constexpr CalendarMonth operator-(int months) const { return from_ordinal(ordinal() - months); }
  constexpr int operator-(const CalendarMonth& other) const { return ordinal() - other.ordinal(); }
  CalendarMonth& operator++() { return *this = *this + 1; }

  constexpr bool operator==(const CalendarMonth&) const = default;
  constexpr auto operator<=>(const CalendarMonth& o) const { return ordinal() <=> o.ordinal(); }

  /// `YYYY-MM`
  std::string str() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
  }
  /// `YYYYMmm`, the layout used in the panel composition tables.
  std::string label() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04dM%02d", year, month);
    return buf;
  }

  /// Accepts `YYYY-MM` and `YYYYMmm`.
  static CalendarMonth parse(std::string_view text) {
    int y = 0, m = 0;
    std::string s(text);
    char tail = 0;
    if (std::sscanf(s.c_str(), "%d-%d%c", &y, &m, &tail) == 2 ||
        std::sscanf(s.c_str(), "%dM%d%c", &y, &m, &tail) == 2) {
      if (m >= 1 && m <= 12) return CalendarMonth(y, m);
    }
    throw DataError("cannot parse month '" + s + "' (expected YYYY-MM)");
  }
};

/// Inclusive month range [first, last].
struct MonthRange {
  CalendarMonth first;
  CalendarMonth last;

  int length() const { return last - first + 1; }
  bool empty() const { return last < first; }
  bool contains(CalendarMonth m) const { return first <= m && m <= last; }
  /// Position of `m` inside the range (may be out of bounds).
  int index_of(CalendarMonth m) const { return m - first; }
  CalendarMonth at(int i) const { return first + i; }
  bool operator==(const MonthRange&) const = default;

  /// Accepts `YYYY-MM:YYYY-MM`.
  static MonthRange parse(std::string_view text) {
    auto colon = text.find(':');
    if (colon == std::string_view::npos)
      throw ConfigError("window must be YYYY-MM:YYYY-MM, got '" + std::string(text) + "'");
    MonthRange r{CalendarMonth::parse(text.substr(0, colon)), CalendarMonth::parse(text.substr(colon + 1))};
    if (r.empty()) throw ConfigError("window is empty: " + std::string(text));
    return r;
  }
  std::string str() const { return first.str() + ":" + last.str(); }
};

/// Day-resolution date, used only for conference events and the
/// reassignment map.
struct EventDate {
  int year = 2000;
  int month = 1;
  int day = 1;

  CalendarMonth calendar_month() const { return {year, month}; }
  bool operator==(const EventDate&) const = default;
  auto operator<=>(const EventDate&) const = default;

  std::string str() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
  }
  static EventDate parse(std::string_view text) {
    std::string s(text);
    int y = 0, m = 0, d = 0;
    char tail = 0;
    if (std::sscanf(s.c_str(), "%d-%d-%d%c", &y, &m, &d, &tail) != 3 || m < 1 || m > 12 || d < 1 || d > 31)
      throw DataError("cannot parse date '" + s + "' (expected YYYY-MM-DD)");
    return {y, m, d};
  }
};

}  // namespace nlirf
