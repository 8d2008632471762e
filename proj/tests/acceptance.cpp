// Runs the thirteen acceptance criteria and prints one PASS/FAIL line each.
// Exit status is 0 only when every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "kimura/boundary.hpp"
#include "kimura/sampling.hpp"
#include "kimura/verify.hpp"
#include "kimura/verify_checks.hpp"

using namespace kimura;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

Outcome from(const IdentityReport& r, double seconds, double limit = 0.0) {
  Outcome o{r.pass, "max error " + num(r.error) + " (tol " + num(r.tolerance) + ")"};
  if (limit > 0.0 && seconds > limit) {
    o.pass = false;
    o.detail += "; runtime " + num(seconds) + " s over " + num(limit) + " s";
  }
  if (!r.message.empty()) o.detail += "; " + r.message;
  return o;
}

Outcome mc_target(bool fixation, const std::vector<double>& x0s, std::function<double(double)> expect) {
  McOptions opt;
  opt.dt = 5e-4;
  opt.seed = 2024;
  Outcome o{true, ""};
  for (double x0 : x0s) {
    const auto e = fixation ? estimate_fixation(KimuraOp1D::neutral(), x0, 20000, opt)
                            : estimate_absorption_time(KimuraOp1D::neutral(), x0, 20000, opt);
    const double z = (e.mean - expect(x0)) / e.std_error;
    o.pass = o.pass && std::abs(z) <= 3.0 && !e.flagged;
    o.detail += "x0=" + num(x0) + " mean " + num(e.mean) + " target " + num(expect(x0)) + " z " + num(z) +
                (e.flagged ? " (flagged)" : "") + "; ";
  }
  return o;
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  struct Criterion {
    const char* name;
    std::function<Outcome(double&)> run;
  };
  const double pi = std::numbers::pi;
  const std::vector<Criterion> criteria{
      {"mass conservation",
       [](double& s) {
         const auto t0 = clock::now();
         const auto r = check_mass({0.0, 1e-3, 0.1, 0.5, 1.0, 2.5}, {0.01, 0.1, 1.0, 10.0}, {0.0, 0.01, 1.0, 10.0});
         s = std::chrono::duration<double>(clock::now() - t0).count();
         return from(r, s, 10.0);
       }},
      {"Chapman-Kolmogorov",
       [](double& s) {
         const auto t0 = clock::now();
         const std::vector<double> g{0.1, 0.5, 1.0, 2.0, 4.0};
         const auto r = check_chapman_kolmogorov({0.3, 1.0}, {{0.1, 0.2}, {0.5, 0.5}}, g, g);
         s = std::chrono::duration<double>(clock::now() - t0).count();
         return from(r, s, 30.0);
       }},
      {"psi branch agreement", [](double&) { return from(check_psi_branches({0.1, 0.5, 1.0, 2.5}), 0.0); }},
      {"sampler law",
       [](double&) {
         const auto r = check_sampler_law(
             {{0.5, 0.3, 2.0}, {0.0, 1.0, 1.0}, {0.0, 0.5, 0.2}, {1e-3, 0.5, 1.0}, {0.1, 0.01, 0.01}, {2.5, 10.0, 10.0}},
             100000, 7);
         Outcome o = from(r, 0.0);
         for (const auto& a : r.extra["atoms"]) o.detail += "; atom z " + num(a["z"].get<double>());
         return o;
       }},
      {"indicial roots",
       [](double&) {
         Outcome o{true, ""};
         for (double b : {0.3, 0.5, 2.0}) {
           const auto r = check_indicial(b);
           o.pass = o.pass && r.pass;
           o.detail += "b=" + num(b) + " " + num(r.error) + "; ";
         }
         return o;
       }},
      {"absorption time",
       [](double& s) {
         const auto t0 = clock::now();
         auto o = mc_target(false, {0.1, 0.5}, [](double x) { return -(x * std::log(x) + (1 - x) * std::log(1 - x)); });
         s = std::chrono::duration<double>(clock::now() - t0).count();
         if (s > 120.0) {
           o.pass = false;
           o.detail += "runtime " + num(s) + " s over 120 s";
         }
         return o;
       }},
      {"fixation probability", [](double&) { return mc_target(true, {0.3, 0.7}, [](double x) { return x; }); }},
      {"maximum principle",
       [](double&) {
         const auto r = check_max_principle(standard_solve_suite());
         double worst = -INFINITY;
         for (const auto& e : r.entries) worst = std::max(worst, e.excess);
         return Outcome{r.pass, std::to_string(r.entries.size()) + " solves, worst excess " + num(worst) +
                                    (r.message.empty() ? "" : "; " + r.message)};
       }},
      {"resolvent residual",
       [pi](double&) {
         return from(check_resolvent_residual(0.5, {1.0, cplx(1.0, 1.0), std::polar(5.0, 2.0 * pi / 3.0)}), 0.0);
       }},
      {"contour semigroup vs direct", [](double&) { return from(check_contour_vs_direct(0.5, {0.5, 2.0}), 0.0); }},
      {"estimate registry",
       [](double&) {
         const auto reps = run_estimates(estimate_registry());
         std::size_t fails = 0;
         std::string worst;
         double worst_ratio = 0.0;
         for (const auto& r : reps) {
           if (r.pass) continue;
           ++fails;
           if (r.ratio > worst_ratio) {
             worst_ratio = r.ratio;
             worst = r.lemma + " b=" + num(r.b) + " gamma=" + num(r.gamma) + " ratio " + num(r.ratio);
           }
         }
         return Outcome{fails == 0, std::to_string(reps.size() - fails) + "/" + std::to_string(reps.size()) +
                                        " cases stable" + (fails ? "; worst " + worst : "")};
       }},
      {"boundary classification",
       [](double&) {
         const auto a = classify_boundary(DomainSpec::simplex(2), PolyOperator::kimura_simplex(2, {0, 0, 0}));
         const auto b = classify_boundary(DomainSpec::simplex(2), PolyOperator::kimura_simplex(2, {1, 1, 1}));
         const bool ok = a.terminal.size() == 3 && b.terminal.size() == 1 && b.terminal[0].faces.empty() &&
                         b.predicted_null_dim == 1;
         return Outcome{ok, "no drift: " + std::to_string(a.terminal.size()) + " terminal; inward drift: " +
                                std::to_string(b.terminal.size()) + " terminal, null dim " +
                                std::to_string(b.predicted_null_dim)};
       }},
      {"Duhamel residual order",
       [](double&) {
         const auto r = check_duhamel_order(0.5);
         std::string d = "observed order " + num(r.min_order) + " (need " + num(r.required) + ")";
         if (!r.message.empty()) d += "; " + r.message;
         return Outcome{r.pass, d};
       }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = clock::now();
    double timed = 0.0;
    Outcome o;
    try {
      o = criteria[i].run(timed);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    failures += !o.pass;
    std::printf("%s %2zu. %-28s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
