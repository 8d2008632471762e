#pragma once

// Boundary behaviour of Kimura operators on polyhedra: tangent/transverse
// faces, the terminal boundary, and the long-time limit in one dimension.
//
// Faces are affine, rho_F(x) = n_F . x + c_F >= 0, so L rho_F = V . n_F and
// only the drift enters the classification. A stratum is the intersection of
// a set S of faces (S empty is the interior P). It is terminal when L is
// tangent to every face in S and transverse to every face of its boundary;
// minimal strata have no boundary, so tangent corners are terminal. The
// number of terminal strata is the predicted dimension of Ker L.

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kimura/errors.hpp"
#include "kimura/kimura_op.hpp"
#include "kimura/quadrature.hpp"

namespace kimura {

struct Face {
  std::string name;
  std::vector<double> normal;  // gradient of the defining function
  double offset = 0.0;
  double rho(const std::vector<double>& x) const {
    double s = offset;
    for (std::size_t i = 0; i < x.size(); ++i) s += normal[i] * x[i];
    return s;
  }
};

enum class DomainKind { interval, orthant_cube, simplex };

struct DomainSpec {
  DomainKind kind = DomainKind::interval;
  int dim = 1;
  std::vector<Face> faces;

  /// [0,1]^n with faces x_i = 0 ("x<i>=0") and x_i = 1 ("x<i>=1").
  static DomainSpec cube(int n) {
    if (n < 1) throw DomainError("DomainSpec: dimension must be positive");
    DomainSpec d{n == 1 ? DomainKind::interval : DomainKind::orthant_cube, n, {}};
    for (int i = 0; i < n; ++i) {
      std::vector<double> e(n, 0.0);
      e[i] = 1.0;
      d.faces.push_back({"x" + std::to_string(i + 1) + "=0", e, 0.0});
      e[i] = -1.0;
      d.faces.push_back({"x" + std::to_string(i + 1) + "=1", e, 1.0});
    }
    return d;
  }
  static DomainSpec interval() { return cube(1); }

  /// {x_i >= 0, sum x_i <= 1}; face i is lambda_i = 0 with lambda_0 = 1 - sum x.
  static DomainSpec simplex(int n) {
    if (n < 1) throw DomainError("DomainSpec: dimension must be positive");
    DomainSpec d{DomainKind::simplex, n, {}};
    d.faces.push_back({"lambda0=0", std::vector<double>(n, -1.0), 1.0});
    for (int i = 0; i < n; ++i) {
      std::vector<double> e(n, 0.0);
      e[i] = 1.0;
      d.faces.push_back({"lambda" + std::to_string(i + 1) + "=0", e, 0.0});
    }
    return d;
  }

  /// Whether the faces in S meet (S is a set of face indices).
  bool feasible(const std::vector<int>& S) const {
    if (kind == DomainKind::simplex) return static_cast<int>(S.size()) <= dim;
    for (int f : S)
      if (std::find(S.begin(), S.end(), f ^ 1) != S.end()) return false;  // x_i = 0 and x_i = 1
    return true;
  }

  /// Lattice points of the closed stratum of S with m subdivisions.
  std::vector<std::vector<double>> stratum_points(const std::vector<int>& S, int m) const {
    std::vector<std::vector<double>> pts;
    if (kind == DomainKind::simplex) {
      // barycentric lattice lambda_j = k_j / m, zero on S
      std::vector<int> free;
      for (int j = 0; j <= dim; ++j)
        if (std::find(S.begin(), S.end(), j) == S.end()) free.push_back(j);
      std::vector<int> k(free.size(), 0);
      std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int left) {
        if (pos + 1 == free.size()) {
          k[pos] = left;
          std::vector<double> lam(dim + 1, 0.0);
          for (std::size_t q = 0; q < free.size(); ++q) lam[free[q]] = static_cast<double>(k[q]) / m;
          pts.emplace_back(lam.begin() + 1, lam.end());
          return;
        }
        for (int v = 0; v <= left; ++v) {
          k[pos] = v;
          rec(pos + 1, left - v);
        }
      };
      rec(0, m);
      return pts;
    }
    std::vector<int> fixed(dim, -1);  // -1 free, 0 or 1 pinned
    for (int f : S) fixed[f / 2] = f % 2;
    std::vector<double> x(dim);
    std::function<void(int)> rec = [&](int i) {
      if (i == dim) {
        pts.push_back(x);
        return;
      }
      if (fixed[i] >= 0) {
        x[i] = fixed[i];
        rec(i + 1);
        return;
      }
      for (int k = 0; k <= m; ++k) {
        x[i] = static_cast<double>(k) / m;
        rec(i + 1);
      }
    };
    rec(0);
    return pts;
  }

  /// Regularity: at every vertex the active normals are linearly independent.
  void validate() const {
    if (static_cast<int>(faces.size()) != (kind == DomainKind::simplex ? dim + 1 : 2 * dim))
      throw DomainError("DomainSpec: face count does not match the kind");
    for (const auto& f : faces)
      if (static_cast<int>(f.normal.size()) != dim) throw DimensionError("DomainSpec: face normal dimension");
    // Corners of the simplex and cube are simple by construction; check the
    // Gram determinant of each vertex's active normals anyway.
    for (const auto& v : stratum_points({}, 1)) {
      std::vector<const Face*> act;
      for (const auto& f : faces)
        if (std::abs(f.rho(v)) < 1e-12) act.push_back(&f);
      if (static_cast<int>(act.size()) != dim) throw InvariantError("DomainSpec: corner is not simple");
      std::vector<double> g(dim * dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
          double s = 0.0;
          for (int k = 0; k < dim; ++k) s += act[i]->normal[k] * act[j]->normal[k];
          g[i * dim + j] = s;
        }
      // Gaussian elimination for the determinant sign
      double det = 1.0;
      for (int c = 0; c < dim; ++c) {
        int p = c;
        for (int r = c + 1; r < dim; ++r)
          if (std::abs(g[r * dim + c]) > std::abs(g[p * dim + c])) p = r;
        if (std::abs(g[p * dim + c]) < 1e-12) throw InvariantError("DomainSpec: dependent face gradients at a corner");
        if (p != c)
          for (int k = 0; k < dim; ++k) std::swap(g[p * dim + k], g[c * dim + k]);
        det *= g[c * dim + c];
        for (int r = c + 1; r < dim; ++r) {
          const double q = g[r * dim + c] / g[c * dim + c];
          for (int k = c; k < dim; ++k) g[r * dim + k] -= q * g[c * dim + k];
        }
      }
      if (!(det > 0.0)) throw InvariantError("DomainSpec: degenerate corner");
    }
  }
};

/// L = sum a_ij d_i d_j + sum V_i d_i; coefficients written into A (dim^2) and V.
struct PolyOperator {
  int dim = 1;
  std::function<void(const std::vector<double>&, std::vector<double>&, std::vector<double>&)> coefficients;

  /// c(x) L for a positive function c.
  PolyOperator scaled(std::function<double(const std::vector<double>&)> c) const {
    auto base = coefficients;
    return {dim, [base, c](const std::vector<double>& x, std::vector<double>& A, std::vector<double>& V) {
              base(x, A, V);
              const double s = c(x);
              for (auto& a : A) a *= s;
              for (auto& v : V) v *= s;
            }};
  }

  /// Classical Kimura second-order part x_i (delta_ij - x_j) on the simplex
  /// plus the drift V_i = b_i - (sum_j b_j) x_i, b indexed by face (b_0 first).
  static PolyOperator kimura_simplex(int n, std::vector<double> b) {
    if (b.empty()) b.assign(n + 1, 0.0);
    if (static_cast<int>(b.size()) != n + 1) throw DimensionError("kimura_simplex: need n+1 face weights");
    double B = 0.0;
    for (double v : b) B += v;
    return {n, [n, b, B](const std::vector<double>& x, std::vector<double>& A, std::vector<double>& V) {
              A.assign(n * n, 0.0);
              V.assign(n, 0.0);
              for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) A[i * n + j] = x[i] * ((i == j) - x[j]);
                V[i] = b[i + 1] - B * x[i];
              }
            }};
  }

  /// sum x_i (1 - x_i) d_i^2 + [b0_i (1 - x_i) - b1_i x_i] d_i on the cube.
  static PolyOperator kimura_cube(int n, std::vector<double> b0, std::vector<double> b1) {
    if (static_cast<int>(b0.size()) != n || static_cast<int>(b1.size()) != n)
      throw DimensionError("kimura_cube: need n weights per side");
    return {n, [n, b0, b1](const std::vector<double>& x, std::vector<double>& A, std::vector<double>& V) {
              A.assign(n * n, 0.0);
              V.assign(n, 0.0);
              for (int i = 0; i < n; ++i) {
                A[i * n + i] = x[i] * (1.0 - x[i]);
                V[i] = b0[i] * (1.0 - x[i]) - b1[i] * x[i];
              }
            }};
  }

  static PolyOperator from_1d(const KimuraOp1D& op) {
    return {1, [op](const std::vector<double>& x, std::vector<double>& A, std::vector<double>& V) {
              A.assign(1, op.a(x[0]) * x[0] * (1.0 - x[0]));
              V.assign(1, op.drift(x[0]));
            }};
  }
};

enum class FaceLabel { tangent, transverse, not_clean };

inline const char* to_string(FaceLabel l) {
  switch (l) {
    case FaceLabel::tangent: return "tangent";
    case FaceLabel::transverse: return "transverse";
    default: return "not-clean";
  }
}

struct FaceClassification {
  std::string face;
  FaceLabel label = FaceLabel::not_clean;
  double min_L_rho = 0.0, max_L_rho = 0.0;  // over the sampled closed face
};

struct StratumInfo {
  std::vector<std::string> faces;  // empty: the interior P
  int dimension = 0;
  bool terminal = false;
};

struct ClassifyOptions {
  double tangent_tol = 1e-10;    // relative to the coefficient scale
  double transverse_min = 1e-6;  // absolute lower bound of L rho on a transverse face
  int samples = 16;              // lattice subdivisions per stratum
};

struct BoundaryClassification {
  std::vector<FaceClassification> faces;
  std::vector<StratumInfo> terminal;
  int predicted_null_dim = 0;
  double coefficient_scale = 0.0;
};

/// Face labels and terminal strata; throws NotCleanError for a face that is
/// neither tangent nor transverse at the tolerances.
inline BoundaryClassification classify_boundary(const DomainSpec& dom, const PolyOperator& L,
                                                const ClassifyOptions& opt = {}) {
  dom.validate();
  if (L.dim != dom.dim) throw DimensionError("classify_boundary: operator and domain dimensions differ");
  if (opt.samples < 1) throw DomainError("classify_boundary: samples must be positive");
  const int nf = static_cast<int>(dom.faces.size());
  std::vector<double> A, V;

  BoundaryClassification out;
  // Coefficient scale over the whole closed domain.
  for (const auto& x : dom.stratum_points({}, opt.samples)) {
    L.coefficients(x, A, V);
    for (double a : A) out.coefficient_scale = std::max(out.coefficient_scale, std::abs(a));
    for (double v : V) out.coefficient_scale = std::max(out.coefficient_scale, std::abs(v));
  }
  const double eps = opt.tangent_tol * std::max(out.coefficient_scale, 1e-300);

  auto range_on = [&](int face, const std::vector<int>& S) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& x : dom.stratum_points(S, opt.samples)) {
      L.coefficients(x, A, V);
      double lr = 0.0;
      for (int i = 0; i < dom.dim; ++i) lr += V[i] * dom.faces[face].normal[i];
      lo = std::min(lo, lr);
      hi = std::max(hi, lr);
    }
    return std::pair{lo, hi};
  };
  auto label_of = [&](double lo, double hi) {
    if (std::max(std::abs(lo), std::abs(hi)) <= eps) return FaceLabel::tangent;
    if (lo >= opt.transverse_min) return FaceLabel::transverse;
    return FaceLabel::not_clean;
  };

  for (int f = 0; f < nf; ++f) {
    const auto [lo, hi] = range_on(f, {f});
    FaceClassification c{dom.faces[f].name, label_of(lo, hi), lo, hi};
    out.faces.push_back(c);
  }
  for (const auto& c : out.faces)
    if (c.label == FaceLabel::not_clean) {
      std::ostringstream msg;
      msg << "classify_boundary: face " << c.face << " is neither tangent nor transverse (L rho in [" << c.min_L_rho
          << ", " << c.max_L_rho << "])";
      throw NotCleanError(msg.str());
    }

  // Enumerate strata by face subsets.
  for (unsigned mask = 0; mask < (1u << nf); ++mask) {
    std::vector<int> S;
    for (int f = 0; f < nf; ++f)
      if (mask & (1u << f)) S.push_back(f);
    if (!dom.feasible(S)) continue;
    bool tangent = true;
    for (int f : S) tangent = tangent && out.faces[f].label == FaceLabel::tangent;
    if (!tangent) continue;
    bool transverse_boundary = true;
    for (int g = 0; g < nf && transverse_boundary; ++g) {
      if (mask & (1u << g)) continue;
      auto T = S;
      T.push_back(g);
      if (!dom.feasible(T)) continue;
      const auto [lo, hi] = range_on(g, T);
      transverse_boundary = label_of(lo, hi) == FaceLabel::transverse;
    }
    if (!transverse_boundary) continue;
    StratumInfo s;
    for (int f : S) s.faces.push_back(dom.faces[f].name);
    s.dimension = dom.dim - static_cast<int>(S.size());
    s.terminal = true;
    out.terminal.push_back(s);
  }
  out.predicted_null_dim = static_cast<int>(out.terminal.size());
  return out;
}

/// Domain and operator from a JSON document:
///   {"kind": "interval"|"orthant_cube"|"simplex", "dimension": n,
///    "operator": {"name": "kimura_classical" | "wright_fisher",
///                 "weights": [...], "weights_far": [...], "multiplier": {"kappa": k}},
///    "tolerances": {"tangent": t, "transverse": c}, "samples": m}
/// Unknown keys raise ConfigError.
struct BoundaryProblem {
  DomainSpec domain;
  PolyOperator op;
  ClassifyOptions options;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + it.key() + "'");
  }
}

inline std::vector<double> vec_or(const nlohmann::json& j, const char* key, std::vector<double> dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_array()) throw ConfigError(std::string("'") + key + "' must be an array");
  std::vector<double> v;
  for (const auto& e : j[key]) {
    if (!e.is_number()) throw ConfigError(std::string("'") + key + "' must hold numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

}  // namespace detail

inline BoundaryProblem boundary_problem_from_json(const nlohmann::json& j) {
  detail::reject_unknown(j, {"kind", "dimension", "operator", "tolerances", "samples"}, "domain");
  if (!j.contains("kind") || !j["kind"].is_string()) throw ConfigError("domain: 'kind' is required");
  const std::string kind = j["kind"];
  const int n = j.value("dimension", 1);
  if (n < 1 || n > 8) throw ConfigError("domain: 'dimension' must lie in [1, 8]");
  BoundaryProblem p;
  if (kind == "simplex") p.domain = DomainSpec::simplex(n);
  else if (kind == "orthant_cube" || kind == "interval") p.domain = DomainSpec::cube(kind == "interval" ? 1 : n);
  else throw ConfigError("domain: unknown kind '" + kind + "'");
  const int d = p.domain.dim;

  const nlohmann::json op = j.value("operator", nlohmann::json::object());
  detail::reject_unknown(op, {"name", "weights", "weights_far", "multiplier"}, "operator");
  const std::string name = op.value("name", std::string("kimura_classical"));
  if (name != "kimura_classical" && name != "wright_fisher") throw ConfigError("operator: unknown name '" + name + "'");
  if (p.domain.kind == DomainKind::simplex) {
    if (op.contains("weights_far")) throw ConfigError("operator: 'weights_far' applies to cubes only");
    p.op = PolyOperator::kimura_simplex(d, detail::vec_or(op, "weights", std::vector<double>(d + 1, 0.0)));
  } else {
    p.op = PolyOperator::kimura_cube(d, detail::vec_or(op, "weights", std::vector<double>(d, 0.0)),
                                     detail::vec_or(op, "weights_far", std::vector<double>(d, 0.0)));
  }
  if (op.contains("multiplier")) {
    const auto& m = op["multiplier"];
    detail::reject_unknown(m, {"kappa"}, "multiplier");
    const double kappa = m.value("kappa", 0.0);
    if (!(kappa > -1.0 / d)) throw ConfigError("multiplier: 1 + kappa sum x must stay positive");
    p.op = p.op.scaled([kappa](const std::vector<double>& x) {
      double s = 0.0;
      for (double v : x) s += v;
      return 1.0 + kappa * s;
    });
  }
  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    detail::reject_unknown(t, {"tangent", "transverse"}, "tolerances");
    p.options.tangent_tol = t.value("tangent", p.options.tangent_tol);
    p.options.transverse_min = t.value("transverse", p.options.transverse_min);
  }
  p.options.samples = j.value("samples", p.options.samples);
  return p;
}

/// lim_{t -> inf} e^{tL} f for a 1-D Kimura operator:
///   both ends tangent   f(0) (1 - h) + f(1) h,  h the L-harmonic function with h(0)=0, h(1)=1
///   one end tangent     f at that end
///   both transverse     integral of f against the normalized speed measure
struct LongTimeLimit {
  std::vector<double> functionals;  // l_j(f)
  std::vector<std::function<double(double)>> basis;  // w_j with l_j(w_k) = delta_jk
  std::string regime;

  double operator()(double x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < basis.size(); ++j) s += functionals[j] * basis[j](x);
    return s;
  }
};

namespace detail {

// int_{a}^{b} g with orientation (the adaptive rule skips reversed intervals).
template <class G>
double oriented_integral(G&& g, double a, double b, QuadTolerance tol) {
  if (b >= a) return integrate_or_throw(g, {a, b}, tol, "long_time_limit").value;
  return -integrate_or_throw(g, {b, a}, tol, "long_time_limit").value;
}

}  // namespace detail

template <class F>
LongTimeLimit long_time_limit(const KimuraOp1D& op, F&& f, const ClassifyOptions& copt = {}) {
  op.validate();
  const auto cls = classify_boundary(DomainSpec::interval(), PolyOperator::from_1d(op), copt);
  const bool t0 = cls.faces[0].label == FaceLabel::tangent, t1 = cls.faces[1].label == FaceLabel::tangent;
  const QuadTolerance tol{1e-13, 1e-11, 2000};
  LongTimeLimit out;
  auto one = [](double) { return 1.0; };
  if (t0 && t1) {
    // h' = exp(-int_{1/2}^y drift/A), finite because the drift vanishes at both ends.
    auto r = [op](double y) { return op.drift(y) / (op.a(y) * y * (1.0 - y)); };
    auto dh = [r, tol](double y) {
      return std::exp(-detail::oriented_integral(r, 0.5, y, tol));
    };
    const double total = integrate_or_throw(dh, {0.0, 1.0}, tol, "long_time_limit").value;
    auto h = [dh, total, tol](double x) {
      if (x <= 0.0) return 0.0;
      if (x >= 1.0) return 1.0;
      return integrate_or_throw(dh, {0.0, x}, tol, "long_time_limit").value / total;
    };
    out.regime = "absorbing at both ends";
    out.functionals = {static_cast<double>(f(0.0)), static_cast<double>(f(1.0))};
    out.basis = {[h](double x) { return 1.0 - h(x); }, h};
  } else if (t0 || t1) {
    const double end = t0 ? 0.0 : 1.0;
    out.regime = t0 ? "absorbing at 0" : "absorbing at 1";
    out.functionals = {static_cast<double>(f(end))};
    out.basis = {one};
  } else {
    // speed density x^{b0-1} (1-x)^{b1-1} G(x) with G smooth
    const double b0 = op.drift(0.0) / op.a(0.0), b1 = -op.drift(1.0) / op.a(1.0);
    auto rt = [op, b0, b1](double y) {
      return op.drift(y) / (op.a(y) * y * (1.0 - y)) - b0 / y + b1 / (1.0 - y);
    };
    auto G = [rt, b0, b1, op, tol](double y) {
      const double J = detail::oriented_integral(rt, 0.5, y, tol);
      return std::pow(2.0, b0 + b1) * std::exp(J) / op.a(y);
    };
    auto against = [&](auto&& g) {
      const double left = integrate_algebraic_endpoint(
                              b0, 0.5, [&](double y) { return std::pow(1.0 - y, b1 - 1.0) * G(y) * g(y); }, tol)
                              .value;
      const double right = integrate_algebraic_endpoint(
                               b1, 0.5, [&](double z) { return std::pow(1.0 - z, b0 - 1.0) * G(1.0 - z) * g(1.0 - z); },
                               tol)
                               .value;
      return left + right;
    };
    const double mass = against(one);
    out.regime = "ergodic";
    out.functionals = {against([&](double y) { return static_cast<double>(f(y)); }) / mass};
    out.basis = {one};
  }
  return out;
}

}  // namespace kimura
