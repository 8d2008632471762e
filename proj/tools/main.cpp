// kimura: command-line front end over the library.
//
// Every command reads a JSON config (unknown keys are errors), computes in
// memory, and only then writes its outputs plus manifest.json into --out.
// Exit codes: 0 success, 1 numeric failure, 2 usage or config error.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "json.hpp"
#include "kimura/boundary.hpp"
#include "kimura/errors.hpp"
#include "kimura/grid.hpp"
#include "kimura/model_kernels.hpp"
#include "kimura/parallel.hpp"
#include "kimura/sampling.hpp"
#include "kimura/solve_ops.hpp"
#include "kimura/verify.hpp"
#include "kimura/verify_checks.hpp"
#include "kimura/wf_geometry.hpp"
#include "kimura/wf_parametrix.hpp"

#ifndef KIMURA_VERSION
#define KIMURA_VERSION "unknown"
#endif

namespace {

using nlohmann::json;
using namespace kimura;
using cli::Section;

/// Raised when a run completes but its result is a failure (exit code 1).
struct NumericFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path;
  std::uint64_t seed = 1;
  bool seed_given = false;
  unsigned workers = 0;
  std::string out = ".";
};

/// Output files held in memory until the command has finished.
struct Outputs {
  std::vector<std::pair<std::string, std::string>> files;
  json truncations = json::object();
  json extra = json::object();
  bool failed = false;

  void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
};

std::string fmt(double v) { return fmt17(v); }

// FNV-1a over the canonical (key-sorted) dump.
std::string config_hash(const json& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : cfg.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

/// Writes every file through a temporary name and renames at the end, so an
/// error leaves no partial output behind.
void commit(const Globals& g, const std::string& command, const json& cfg, const Outputs& out, double seconds) {
  namespace fs = std::filesystem;
  fs::create_directories(g.out);
  json manifest{{"command", command},
                {"config_hash", config_hash(cfg)},
                {"version", KIMURA_VERSION},
                {"seed", g.seed},
                {"workers", g.workers},
                {"wall_time_s", seconds},
                {"truncations", out.truncations}};
  json names = json::array();
  for (const auto& [name, _] : out.files) names.push_back(name);
  manifest["outputs"] = names;
  if (!out.extra.empty()) manifest["summary"] = out.extra;

  std::vector<std::pair<fs::path, std::string>> all(out.files.begin(), out.files.end());
  all.emplace_back("manifest.json", manifest.dump(2) + "\n");
  std::vector<fs::path> tmps;
  try {
    for (const auto& [name, content] : all) {
      const fs::path tmp = fs::path(g.out) / (name.string() + ".tmp");
      std::ofstream f(tmp, std::ios::binary);
      f << content;
      f.close();
      if (!f) throw std::runtime_error("cannot write " + tmp.string());
      tmps.push_back(tmp);
    }
    for (std::size_t i = 0; i < all.size(); ++i) fs::rename(tmps[i], fs::path(g.out) / all[i].first);
  } catch (...) {
    std::error_code ec;
    for (const auto& t : tmps) fs::remove(t, ec);
    throw;
  }
}

std::vector<std::string> coordinate_names(const ModelSpec& spec) {
  std::vector<std::string> n;
  for (std::size_t i = 0; i < spec.n(); ++i) n.push_back("x" + std::to_string(i + 1));
  for (int k = 0; k < spec.m; ++k) n.push_back("y" + std::to_string(k + 1));
  return n;
}

std::string grid_csv(const GridFunction<cplx>& g, const std::vector<std::string>& names) {
  std::ostringstream s;
  for (const auto& n : names) s << n << ',';
  s << "value_re,value_im\n";
  for (std::size_t k = 0; k < g.values.size(); ++k) {
    for (double c : g.point(k)) s << fmt(c) << ',';
    s << fmt(g.values[k].real()) << ',' << fmt(g.values[k].imag()) << '\n';
  }
  return s.str();
}

json metadata_json(const std::map<std::string, std::string>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

void add_solution(Outputs& out, const GridFunction<cplx>& g, const std::vector<std::string>& names) {
  out.add("solution.csv", grid_csv(g, names));
  out.add("solution_meta.json", metadata_json(g.metadata).dump(2) + "\n");
  for (const auto& [k, v] : g.metadata)
    if (k.find("trunc") != std::string::npos || k.find("tail") != std::string::npos ||
        k.find("tau_max") != std::string::npos || k.find("ray_") != std::string::npos ||
        k.find("error") != std::string::npos || k.find("panel") != std::string::npos)
      out.truncations[k] = v;
}

// ---------------------------------------------------------------------------
// kernel

void kernel_eval(const json& cfg, Outputs& out) {
  Section s(cfg, "kernel eval");
  const double b = s.num("b");
  const SectorTime t = cli::parse_time(s, "t");
  const auto xs = s.nums("x");
  const auto ys = cli::parse_axis(s.raw("y"), "kernel eval.y");
  s.finish();
  if (!(b >= 0.0)) throw ConfigError("kernel eval: b must be nonnegative");
  for (double y : ys)
    if (!(y > 0.0)) throw ConfigError("kernel eval: y values must be positive (the atom is reported separately)");
  const cplx tv = t.value();
  std::ostringstream o;
  o << "b,t_re,t_im,x,y,log_k,sign,phase,atom_weight\n";
  const std::string head = fmt(b) + ',' + fmt(tv.real()) + ',' + fmt(tv.imag()) + ',';
  for (double x : xs) {
    if (!(x >= 0.0)) throw ConfigError("kernel eval: x values must be nonnegative");
    if (b == 0.0) {
      const cplx a = atom_weight(0.0, t, x);
      o << head << fmt(x) << ",0," << fmt(std::log(std::abs(a))) << ',' << (t.is_real() ? "1" : "") << ','
        << fmt(std::arg(a)) << ',' << fmt(std::abs(a)) << '\n';
    }
    for (double y : ys) {
      const LogComplex k = kernel_density(b, t, x, y);
      std::string sign;
      if (t.is_real()) sign = k.is_zero() ? "0" : (std::cos(k.phase) < 0.0 ? "-1" : "1");
      o << head << fmt(x) << ',' << fmt(y) << ',' << fmt(k.log_magnitude) << ',' << sign << ',' << fmt(k.phase)
        << ",\n";
    }
  }
  out.add("kernel.csv", o.str());
  out.truncations["kernel_eval"] = "closed form; no quadrature";
}

void kernel_measure(const json& cfg, Outputs& out) {
  Section s(cfg, "kernel measure");
  const double b = s.num("b"), t = s.num("t");
  const auto xs = s.nums("x");
  const auto ys = cli::parse_axis(s.raw("y"), "kernel measure.y");
  s.finish();
  if (!(b >= 0.0)) throw ConfigError("kernel measure: b must be nonnegative");
  if (!(t > 0.0)) throw ConfigError("kernel measure: t must be positive");
  std::ostringstream o;
  o << "b,t,x,atom_weight,y,density,cdf\n";
  json masses = json::array();
  for (double x : xs) {
    if (!(x >= 0.0)) throw ConfigError("kernel measure: x values must be nonnegative");
    const auto mu = transition_measure_1d(b, SectorTime::real(t), x);
    for (double y : ys)
      o << fmt(b) << ',' << fmt(t) << ',' << fmt(x) << ',' << fmt(mu.atom_weight) << ',' << fmt(y) << ','
        << fmt(mu.density(y)) << ',' << fmt(transition_cdf(b, t, x, y)) << '\n';
    const auto m = kernel_mass(b, SectorTime::real(t), x);
    if (!m.converged) throw ConvergenceError("kernel measure: mass quadrature did not converge");
    masses.push_back({{"x", x}, {"total_mass", m.value.real()}});
  }
  out.add("measure.csv", o.str());
  out.extra["total_mass"] = masses;
  out.truncations["cdf_quadrature"] = "adaptive Gauss-Kronrod in u = sqrt(y/t), Gaussian tail e^-60 dropped";
}

// ---------------------------------------------------------------------------
// solve

struct SolveCommon {
  ModelSpec spec;
  Axes axes;
  std::vector<std::string> names;
};

SolveCommon solve_common(Section& s) {
  SolveCommon c;
  c.spec = cli::parse_model(s);
  c.axes = cli::parse_axes(s, "axes");
  if (c.axes.size() != c.spec.dim()) throw ConfigError("solve: one axis per coordinate (n + m) is required");
  for (std::size_t d = 0; d < c.spec.n(); ++d)
    if (c.axes[d].front() < 0.0) throw ConfigError("solve: degenerate axes must be nonnegative");
  c.names = coordinate_names(c.spec);
  return c;
}

void solve_cauchy(const json& cfg, Outputs& out, const Globals& g) {
  Section s(cfg, "solve cauchy");
  auto c = solve_common(s);
  const SectorTime t = cli::parse_time(s, "t");
  const auto f = cli::parse_function(s.raw("f"), "solve cauchy.f");
  CauchyOptions opt;
  opt.tol = s.num("tolerance", opt.tol);
  opt.workers = g.workers;
  s.finish();
  add_solution(out, apply_cauchy(c.spec, t, f, c.axes, opt), c.names);
}

void solve_duhamel(const json& cfg, Outputs& out, const Globals& g) {
  Section s(cfg, "solve duhamel");
  auto c = solve_common(s);
  const double t = s.num("t");
  const auto f = cli::parse_function(s.raw("g"), "solve duhamel.g");
  const double slope = s.num("time_slope", 0.0);
  const long panels = s.integer("panels", 4);
  s.finish();
  DuhamelOptions opt;
  opt.cauchy.workers = g.workers;
  auto src = [&](const std::vector<double>& p, double tt) { return f(p) * (1.0 + slope * tt); };
  add_solution(out, apply_duhamel(c.spec, src, t, static_cast<int>(panels), c.axes, opt), c.names);
}

cplx parse_complex(Section& s, const std::string& k) {
  const auto v = s.nums(k);
  if (v.size() == 1) return {v[0], 0.0};
  if (v.size() == 2) return {v[0], v[1]};
  throw ConfigError("'" + k + "' must be a number or [re, im]");
}

void solve_resolvent(const json& cfg, Outputs& out, const Globals& g) {
  Section s(cfg, "solve resolvent");
  auto c = solve_common(s);
  const cplx mu = parse_complex(s, "mu");
  const auto f = cli::parse_function(s.raw("f"), "solve resolvent.f");
  ResolventOptions opt;
  if (s.has("theta")) opt.theta = s.num("theta");
  s.finish();
  opt.workers = g.workers;
  add_solution(out, resolvent_apply(c.spec, mu, f, c.axes, opt), c.names);
}

void solve_semigroup(const json& cfg, Outputs& out, const Globals& g) {
  Section s(cfg, "solve semigroup");
  auto c = solve_common(s);
  const double t = s.num("t");
  const auto f = cli::parse_function(s.raw("f"), "solve semigroup.f");
  Contour contour;
  contour.alpha = s.num("alpha", contour.alpha);
  contour.R = s.num("R", contour.R);
  s.finish();
  RayLaplace::Options ray;
  ray.workers = g.workers;
  add_solution(out, semigroup_via_contour(c.spec, f, c.axes, t, contour, ray), c.names);
  out.truncations["contour_ray_tail_log"] = fmt(contour.tail_log);
}

void solve_wf(const json& cfg, Outputs& out, const Globals& g) {
  Section s(cfg, "solve wf");
  const KimuraOp1D op = cli::parse_wf_operator(s.raw("operator"), "solve wf.operator");
  const auto f = cli::parse_function(s.raw("f"), "solve wf.f");
  const double t = s.num("t"), dt = s.num("dt", 1e-3), delta = s.num("delta", 0.1);
  WfStepperOptions opt;
  opt.nodes = static_cast<int>(s.integer("nodes", opt.nodes));
  s.finish();
  opt.workers = g.workers;
  const auto v = solve_wf_parametrix(op, [&](double x) { return f(x); }, t, dt, delta, opt);
  std::ostringstream o;
  o << "x,value\n";
  for (std::size_t i = 0; i < v.values.size(); ++i) o << fmt(v.axes[0][i]) << ',' << fmt(v.values[i]) << '\n';
  out.add("solution.csv", o.str());
  out.add("solution_meta.json", metadata_json(v.metadata).dump(2) + "\n");
  out.truncations["wf_steps"] = v.metadata.at("steps");
  out.truncations["wf_collar_delta"] = fmt(delta);
}

// ---------------------------------------------------------------------------
// sample

std::uint64_t seed_of(Section& s, const Globals& g) {
  const std::uint64_t c = s.u64("seed", 1);
  return g.seed_given ? g.seed : c;
}

void sample_transition_cmd(const json& cfg, Outputs& out, Globals& g) {
  Section s(cfg, "sample transition");
  const double b = s.num("b"), t = s.num("t"), x = s.num("x");
  const long n = s.integer("n", 10000);
  g.seed = seed_of(s, g);
  s.finish();
  if (n < 1) throw ConfigError("sample transition: n must be positive");
  RngStream rng(g.seed, 0);
  std::ostringstream o;
  o << "y\n";
  std::size_t atoms = 0;
  for (long i = 0; i < n; ++i) {
    const double y = sample_transition(b, t, x, rng);
    atoms += y == 0.0;
    o << fmt(y) << '\n';
  }
  out.add("samples.csv", o.str());
  out.extra["atom_fraction"] = static_cast<double>(atoms) / static_cast<double>(n);
}

void sample_path_cmd(const json& cfg, Outputs& out, Globals& g) {
  Section s(cfg, "sample path");
  const double x0 = s.num("x0");
  const long n_paths = s.integer("n_paths", 1);
  g.seed = seed_of(s, g);
  std::ostringstream o;
  if (s.has("operator")) {
    const KimuraOp1D op = cli::parse_wf_operator(s.raw("operator"), "sample path.operator");
    const double dt = s.num("dt", 1e-3), horizon = s.num("horizon", 1.0);
    WfPathOptions po;
    po.delta = s.num("delta", po.delta);
    po.record = true;
    s.finish();
    const WfPathSampler sampler(op, dt, po);
    o << "path,t,x,fate\n";
    for (long p = 0; p < n_paths; ++p) {
      RngStream rng(g.seed, static_cast<std::uint64_t>(p));
      const auto r = sampler.run(x0, horizon, rng);
      const char* fate = r.fate == PathFate::at_zero ? "at_zero" : r.fate == PathFate::at_one ? "at_one" : "unabsorbed";
      o << p << ",0," << fmt(x0) << ',' << fate << '\n';
      for (std::size_t k = 0; k < r.trajectory.size(); ++k)
        o << p << ',' << fmt(dt * static_cast<double>(k + 1)) << ',' << fmt(r.trajectory[k]) << ',' << fate << '\n';
    }
    out.truncations["wf_path_dt"] = fmt(dt);
    out.truncations["wf_path_horizon"] = fmt(horizon);
  } else {
    const double b = s.num("b");
    const auto times = s.nums("times");
    s.finish();
    o << "path,t,x\n";
    for (long p = 0; p < n_paths; ++p) {
      RngStream rng(g.seed, static_cast<std::uint64_t>(p));
      const auto path = sample_path_model(b, times, x0, rng);
      for (std::size_t k = 0; k < path.size(); ++k) o << p << ',' << fmt(times[k]) << ',' << fmt(path[k]) << '\n';
    }
  }
  if (n_paths < 1) throw ConfigError("sample path: n_paths must be positive");
  out.add("paths.csv", o.str());
}

void sample_mc(const json& cfg, Outputs& out, Globals& g, bool fixation) {
  const std::string where = fixation ? "sample fixation" : "sample absorb";
  Section s(cfg, where);
  const KimuraOp1D op =
      s.has("operator") ? cli::parse_wf_operator(s.raw("operator"), where + ".operator") : KimuraOp1D::neutral();
  const double x0 = s.num("x0");
  const long n = s.integer("n", 20000);
  McOptions opt;
  opt.dt = s.num("dt", opt.dt);
  opt.horizon = s.num("horizon", opt.horizon);
  opt.path.delta = s.num("delta", opt.path.delta);
  g.seed = seed_of(s, g);
  s.finish();
  if (n < 2) throw ConfigError(where + ": n must be at least 2");
  if (!(x0 >= 0.0 && x0 <= 1.0)) throw ConfigError(where + ": x0 must lie in [0, 1]");
  opt.seed = g.seed;
  opt.workers = g.workers;
  const McEstimate e = fixation ? estimate_fixation(op, x0, static_cast<std::size_t>(n), opt)
                                : estimate_absorption_time(op, x0, static_cast<std::size_t>(n), opt);
  json r{{"kind", fixation ? "fixation" : "absorption_time"},
         {"x0", x0},
         {"mean", e.mean},
         {"std_error", e.std_error},
         {"n", e.n},
         {"unabsorbed", e.unabsorbed},
         {"flagged", e.flagged},
         {"dt", opt.dt},
         {"horizon", opt.horizon}};
  out.add("estimate.jsonl", r.dump() + "\n");
  out.truncations["mc_horizon"] = fmt(opt.horizon);
  out.truncations["mc_unabsorbed"] = e.unabsorbed;
  if (e.flagged) out.failed = true;
}

// ---------------------------------------------------------------------------
// holder, classify

void holder_norm_cmd(const json& cfg, Outputs& out, const Globals& g) {
  Section s(cfg, "holder norm");
  const auto f = cli::parse_function(s.raw("f"), "holder norm.f");
  const auto ax = cli::parse_axis(s.raw("axis"), "holder norm.axis");
  const double gamma = s.num("gamma");
  const long order = s.integer("order", 0);
  HolderOptions opt;
  opt.max_distance = s.num("max_distance", opt.max_distance);
  s.finish();
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("holder norm: gamma must lie in (0, 1]");
  if (order != 0 && order != 2) throw ConfigError("holder norm: order must be 0 or 2");
  opt.workers = g.workers;
  GridFunction<double> gf(std::vector<std::vector<double>>{ax});
  for (std::size_t i = 0; i < ax.size(); ++i) gf.values[i] = f(ax[i]);
  const HolderReport r = order == 0 ? holder_seminorm(gf, gamma, opt) : holder_norm_2plus(gf, gamma, nullptr, nullptr, opt);
  json j{{"kind", order == 0 ? "holder_norm" : "holder_norm_2plus"},
         {"gamma", r.gamma},
         {"sup_norm", r.sup_norm},
         {"seminorm", r.seminorm},
         {"norm", r.norm()},
         {"pairs", r.pairs},
         {"grid_restricted", r.grid_restricted}};
  if (order == 2) {
    json comps = json::array();
    for (const auto& c : r.components) comps.push_back({{"name", c.name}, {"sup_norm", c.sup_norm}, {"seminorm", c.seminorm}});
    j["components"] = comps;
    j["vanishing_ok"] = r.vanishing_ok;
    j["vanishing_value"] = r.vanishing_value;
  }
  out.add("holder.jsonl", j.dump() + "\n");
}

WfPoint parse_point(const json& v, const std::string& where) {
  Section p(v, where);
  WfPoint w{p.nums("x", {}), p.nums("y", {})};
  p.finish();
  try {
    w.validate();
  } catch (const DomainError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return w;
}

void holder_distance_cmd(const json& cfg, Outputs& out) {
  Section s(cfg, "holder distance");
  const WfPoint p = parse_point(s.raw("p"), "holder distance.p"), q = parse_point(s.raw("q"), "holder distance.q");
  const bool parabolic = s.has("t") || s.has("s");
  const double t = s.num("t", 0.0), tq = s.num("s", 0.0);
  s.finish();
  if (p.x.size() != q.x.size() || p.y.size() != q.y.size()) throw ConfigError("holder distance: dimension mismatch");
  json j{{"kind", "wf_distance"}, {"distance", wf_distance(p, q)}};
  if (parabolic) j["parabolic_distance"] = wf_parabolic_distance(p, t, q, tq);
  out.add("holder.jsonl", j.dump() + "\n");
}

void classify_cmd(const json& cfg, Outputs& out) {
  const BoundaryProblem bp = boundary_problem_from_json(cfg);
  const BoundaryClassification c = classify_boundary(bp.domain, bp.op, bp.options);
  json faces = json::array();
  for (const auto& f : c.faces)
    faces.push_back({{"face", f.face}, {"label", to_string(f.label)}, {"min_L_rho", f.min_L_rho}, {"max_L_rho", f.max_L_rho}});
  json terminal = json::array();
  for (const auto& st : c.terminal) terminal.push_back({{"faces", st.faces}, {"dimension", st.dimension}});
  json r{{"kind", "classification"},
         {"faces", faces},
         {"terminal", terminal},
         {"terminal_count", c.terminal.size()},
         {"predicted_null_dim", c.predicted_null_dim},
         {"coefficient_scale", c.coefficient_scale}};
  out.add("classification.jsonl", r.dump() + "\n");
  out.truncations["classify_samples"] = bp.options.samples;
}

// ---------------------------------------------------------------------------
// verify

void verify_cmd(const json& cfg, Outputs& out, const Globals& g, const std::string& suite) {
  std::vector<json> records;
  if (suite == "estimates") {
    SuiteOptions opt;
    opt.workers = g.workers;
    if (!cfg.empty()) {
      Section s(cfg, "verify estimates");
      opt.registry.b = s.nums("b", opt.registry.b);
      opt.registry.gamma = s.nums("gamma", opt.registry.gamma);
      opt.registry.phi = s.nums("phi", opt.registry.phi);
      if (s.has("only")) {
        const json& o = s.raw("only");
        if (!o.is_array()) throw ConfigError("verify estimates: 'only' must be an array of keys");
        const auto known = registry_keys();
        for (const auto& k : o) {
          if (!k.is_string()) throw ConfigError("verify estimates: 'only' must hold strings");
          if (std::find(known.begin(), known.end(), k.get<std::string>()) == known.end())
            throw ConfigError("verify estimates: unknown registry key '" + k.get<std::string>() + "'");
          opt.registry.only.push_back(k.get<std::string>());
        }
      }
      s.finish();
    }
    records = run_estimates_suite(opt);
  } else {
    if (!cfg.empty()) throw ConfigError("verify " + suite + ": takes no configuration");
    if (suite == "identities") records = run_identities_suite(g.workers);
    else if (suite == "maxprinciple") records = run_maxprinciple_suite(g.workers);
    else if (suite == "holder") records = run_holder_suite(g.workers);
    else throw ConfigError("verify: unknown suite '" + suite + "'");
  }
  std::ostringstream jl, csv;
  write_jsonl(jl, records);
  write_summary_csv(csv, records);
  out.add("report.jsonl", jl.str());
  out.add("summary.csv", csv.str());
  std::size_t fails = 0;
  for (const auto& r : records) fails += !r.value("pass", false);
  out.extra["cases"] = records.size();
  out.extra["failures"] = fails;
  if (fails) out.failed = true;
}

json load_config(const Globals& g) {
  if (g.config_path.empty()) return json::object();
  std::ifstream f(g.config_path);
  if (!f) throw ConfigError("cannot open config '" + g.config_path + "'");
  try {
    json j = json::parse(f);
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kimura diffusion kernels, solvers, samplers and verification"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON run configuration");
  auto* seed_opt = app.add_option("--seed", g.seed, "RNG seed (overrides the config)");
  app.add_option("--workers", g.workers, "worker threads (0: hardware concurrency)");
  app.add_option("--out", g.out, "output directory");

  std::string action;
  auto* kernel = app.add_subcommand("kernel", "evaluate kernels or transition measures");
  kernel->add_option("action", action, "eval | measure")->required()->check(CLI::IsMember({"eval", "measure"}));
  auto* solve = app.add_subcommand("solve", "apply a solution operator");
  solve->add_option("action", action, "cauchy | duhamel | resolvent | semigroup | wf")
      ->required()
      ->check(CLI::IsMember({"cauchy", "duhamel", "resolvent", "semigroup", "wf"}));
  auto* sample = app.add_subcommand("sample", "exact sampling and Monte Carlo");
  sample->add_option("action", action, "transition | path | fixation | absorb")
      ->required()
      ->check(CLI::IsMember({"transition", "path", "fixation", "absorb"}));
  auto* holder = app.add_subcommand("holder", "WF distances and Hoelder norms");
  holder->add_option("action", action, "norm | distance")->required()->check(CLI::IsMember({"norm", "distance"}));
  auto* classify = app.add_subcommand("classify", "boundary classification");
  std::string suite;
  auto* verify = app.add_subcommand("verify", "verification suites");
  verify->add_option("--suite", suite, "identities | estimates | maxprinciple | holder")
      ->required()
      ->check(CLI::IsMember({"identities", "estimates", "maxprinciple", "holder"}));
  for (auto* sc : {kernel, solve, sample, holder, classify, verify}) sc->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  g.seed_given = seed_opt->count() > 0;
  default_workers() = g.workers;

  std::string command;
  try {
    const json cfg = load_config(g);
    Outputs out;
    const auto t0 = std::chrono::steady_clock::now();
    if (kernel->parsed()) {
      command = "kernel " + action;
      action == "eval" ? kernel_eval(cfg, out) : kernel_measure(cfg, out);
    } else if (solve->parsed()) {
      command = "solve " + action;
      if (action == "cauchy") solve_cauchy(cfg, out, g);
      else if (action == "duhamel") solve_duhamel(cfg, out, g);
      else if (action == "resolvent") solve_resolvent(cfg, out, g);
      else if (action == "semigroup") solve_semigroup(cfg, out, g);
      else solve_wf(cfg, out, g);
    } else if (sample->parsed()) {
      command = "sample " + action;
      if (action == "transition") sample_transition_cmd(cfg, out, g);
      else if (action == "path") sample_path_cmd(cfg, out, g);
      else sample_mc(cfg, out, g, action == "fixation");
    } else if (holder->parsed()) {
      command = "holder " + action;
      action == "norm" ? holder_norm_cmd(cfg, out, g) : holder_distance_cmd(cfg, out);
    } else if (classify->parsed()) {
      command = "classify";
      classify_cmd(cfg, out);
    } else {
      command = "verify " + suite;
      verify_cmd(cfg, out, g, suite);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    commit(g, command, cfg, out, secs);
    if (out.failed) {
      std::cerr << command << ": numeric failure (see " << g.out << ")\n";
      return 1;
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const SectorError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << (command.empty() ? "error" : command) << ": " << e.what() << '\n';
    return 1;
  }
}
