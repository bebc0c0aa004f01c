#pragma once

#include <cmath>
#include <string>

#include "error.hpp"

namespace nlirf {

/// Non-linear transform f applied to shocks. `abs_value` is even and picks
/// up sign effects; `threshold_shift` is odd, vanishes on [-b, b] and picks
/// up size effects.
struct ShockTransform {
  enum class Kind { identity, abs_value, threshold_shift };
  Kind kind = Kind::identity;
  double b = 0.0;

  static ShockTransform identity() { return {Kind::identity, 0.0}; }
  static ShockTransform abs_value() { return {Kind::abs_value, 0.0}; }
  static ShockTransform threshold_shift(double b) {
    if (!(b >= 0)) throw ConfigError("threshold must be non-negative");
    return {Kind::threshold_shift, b};
  }

  double operator()(double x) const {
    switch (kind) {
      case Kind::identity:
        return x;
      case Kind::abs_value:
        return std::abs(x);
      case Kind::threshold_shift:
        if (x <= -b) return x + b;
        if (x >= b) return x - b;
        return 0.0;
    }
    return x;
  }

  std::string name() const {
    switch (kind) {
      case Kind::identity:
        return "identity";
      case Kind::abs_value:
        return "abs_value";
      case Kind::threshold_shift:
        return "threshold_shift";
    }
    return "?";
  }

  static ShockTransform parse(const std::string& name, double b = 0.0) {
    if (name == "identity") return identity();
    if (name == "abs_value") return abs_value();
    if (name == "threshold_shift") return threshold_shift(b);
    throw ConfigError("unknown transform '" + name + "'");
  }
};

inline double transform_eval(const ShockTransform& t, double x) { return t(x); }

}  // namespace nlirf
