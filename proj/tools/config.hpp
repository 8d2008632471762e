#pragma once

// JSON run configurations: every section tracks the keys it has read and
// rejects the rest.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "kimura/errors.hpp"
#include "kimura/grid.hpp"
#include "kimura/kimura_op.hpp"
#include "kimura/model_kernels.hpp"
#include "kimura/solve_ops.hpp"

namespace kimura::cli {

using nlohmann::json;

class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }
  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  bool has(const std::string& k) const { return j_.contains(k); }

  const json& raw(const std::string& k) {
    if (!j_.contains(k)) throw ConfigError(where_ + ": '" + k + "' is required");
    seen_.insert(k);
    return j_.at(k);
  }

  double num(const std::string& k) {
    const json& v = raw(k);
    if (!v.is_number()) throw ConfigError(where_ + ": '" + k + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(where_ + ": '" + k + "' must be finite");
    return d;
  }
  double num(const std::string& k, double dflt) { return has(k) ? num(k) : dflt; }

  long integer(const std::string& k, long dflt) {
    if (!has(k)) return dflt;
    const json& v = raw(k);
    if (!v.is_number_integer()) throw ConfigError(where_ + ": '" + k + "' must be an integer");
    return v.get<long>();
  }

  std::uint64_t u64(const std::string& k, std::uint64_t dflt) {
    if (!has(k)) return dflt;
    const json& v = raw(k);
    if (!v.is_number_unsigned()) throw ConfigError(where_ + ": '" + k + "' must be a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& k, bool dflt) {
    if (!has(k)) return dflt;
    const json& v = raw(k);
    if (!v.is_boolean()) throw ConfigError(where_ + ": '" + k + "' must be true or false");
    return v.get<bool>();
  }

  std::string str(const std::string& k, std::optional<std::string> dflt = std::nullopt) {
    if (!has(k)) {
      if (dflt) return *dflt;
      throw ConfigError(where_ + ": '" + k + "' is required");
    }
    const json& v = raw(k);
    if (!v.is_string()) throw ConfigError(where_ + ": '" + k + "' must be a string");
    return v.get<std::string>();
  }

  /// A number or an array of numbers.
  std::vector<double> nums(const std::string& k) {
    const json& v = raw(k);
    std::vector<double> out;
    if (v.is_number()) out.push_back(v.get<double>());
    else if (v.is_array())
      for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(where_ + ": '" + k + "' must hold numbers");
        out.push_back(e.get<double>());
      }
    else throw ConfigError(where_ + ": '" + k + "' must be a number or an array of numbers");
    for (double d : out)
      if (!std::isfinite(d)) throw ConfigError(where_ + ": '" + k + "' must be finite");
    return out;
  }
  std::vector<double> nums(const std::string& k, std::vector<double> dflt) { return has(k) ? nums(k) : dflt; }

  std::string path(const std::string& k) const { return where_ + "." + k; }

  /// Call once every key has been read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

/// "t": number (real time) or {"tau", "theta"}.
inline SectorTime parse_time(Section& s, const std::string& k) {
  const json& v = s.raw(k);
  if (v.is_number()) return SectorTime::real(v.get<double>());
  Section t(v, s.path(k));
  const double tau = t.num("tau"), theta = t.num("theta", 0.0);
  t.finish();
  return SectorTime(tau, theta);
}

/// An explicit array or {"lo", "hi", "n", "spacing": "linear" | "sqrt"}.
inline std::vector<double> parse_axis(const json& v, const std::string& where) {
  if (v.is_array()) {
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(where + ": axis entries must be numbers");
      out.push_back(e.get<double>());
    }
    if (out.empty()) throw ConfigError(where + ": empty axis");
    for (std::size_t i = 1; i < out.size(); ++i)
      if (!(out[i] > out[i - 1])) throw ConfigError(where + ": axis must be strictly increasing");
    return out;
  }
  Section a(v, where);
  const double lo = a.num("lo"), hi = a.num("hi");
  const long n = a.integer("n", 41);
  const std::string spacing = a.str("spacing", "linear");
  a.finish();
  if (n < 2 || n > 100000) throw ConfigError(where + ": 'n' must lie in [2, 100000]");
  if (!(hi > lo)) throw ConfigError(where + ": need hi > lo");
  if (spacing == "linear") return linspace(lo, hi, static_cast<std::size_t>(n));
  if (spacing == "sqrt") {
    if (lo < 0.0) throw ConfigError(where + ": sqrt spacing needs lo >= 0");
    auto s = linspace(std::sqrt(lo), std::sqrt(hi), static_cast<std::size_t>(n));
    for (auto& e : s) e *= e;
    s.front() = lo;
    s.back() = hi;
    return s;
  }
  throw ConfigError(where + ": unknown spacing '" + spacing + "'");
}

inline Axes parse_axes(Section& s, const std::string& k) {
  const json& v = s.raw(k);
  if (!v.is_array() || v.empty()) throw ConfigError(s.path(k) + ": expected an array of axes");
  // A flat numeric array is a single axis.
  if (v[0].is_number()) return {parse_axis(v, s.path(k))};
  Axes out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(parse_axis(v[i], s.path(k) + "[" + std::to_string(i) + "]"));
  return out;
}

inline ModelSpec parse_model(Section& s) {
  ModelSpec spec{s.nums("b", {}), static_cast<int>(s.integer("m", 0))};
  try {
    spec.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

/// Data f(point) from a named family acting on one coordinate.
struct DataFunction {
  std::string name;
  std::function<double(double)> g;
  std::size_t coord = 0;
  double operator()(const std::vector<double>& p) const { return g(p.at(coord)); }
  double operator()(double x) const { return g(x); }
};

inline DataFunction parse_function(const json& v, const std::string& where) {
  Section f(v, where);
  DataFunction d;
  d.name = f.str("name");
  d.coord = static_cast<std::size_t>(f.integer("coordinate", 0));
  if (d.name == "constant") {
    const double c = f.num("value", 1.0);
    d.g = [c](double) { return c; };
  } else if (d.name == "linear") {
    const double a = f.num("offset", 0.0), b = f.num("slope", 1.0);
    d.g = [a, b](double x) { return a + b * x; };
  } else if (d.name == "power") {
    const double p = f.num("exponent");
    d.g = [p](double x) { return std::pow(std::abs(x), p); };
  } else if (d.name == "bump") {
    const double c = f.num("centre", 1.25), w = f.num("half_width", 0.75);
    if (!(w > 0.0)) throw ConfigError(where + ": half_width must be positive");
    d.g = [c, w](double x) {
      const double s = (x - c) / w;
      return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0;
    };
  } else if (d.name == "gaussian") {
    const double c = f.num("centre", 1.0), w = f.num("width", 0.5);
    if (!(w > 0.0)) throw ConfigError(where + ": width must be positive");
    d.g = [c, w](double x) { return std::exp(-(x - c) * (x - c) / w); };
  } else if (d.name == "sin_bump") {
    const double L = f.num("length", std::numbers::pi);
    if (!(L > 0.0)) throw ConfigError(where + ": length must be positive");
    d.g = [L](double x) { return x > 0.0 && x < L ? std::sin(std::numbers::pi * x / L) : 0.0; };
  } else if (d.name == "min_sqrt") {
    const double cap = f.num("cap", 1.0);
    d.g = [cap](double x) { return std::min(std::sqrt(std::max(x, 0.0)), cap); };
  } else if (d.name == "step") {
    const double at = f.num("at", 0.5);
    d.g = [at](double x) { return x < at ? 1.0 : 0.0; };
  } else {
    throw ConfigError(where + ": unknown function '" + d.name + "'");
  }
  f.finish();
  return d;
}

/// {"b0", "b1", "s"}: x(1-x) d^2 + [b0 (1-x) - b1 x + s x(1-x)] d.
inline KimuraOp1D parse_wf_operator(const json& v, const std::string& where) {
  Section o(v, where);
  const double b0 = o.num("b0", 0.0), b1 = o.num("b1", 0.0), s = o.num("s", 0.0);
  o.finish();
  if (b0 < 0.0 || b1 < 0.0) throw ConfigError(where + ": b0 and b1 must be nonnegative");
  return KimuraOp1D::wright_fisher(b0, b1, s);
}

}  // namespace kimura::cli
