#pragma once

// Acceptance criteria AC1-AC13 with pinned seeds and tolerances. Each
// criterion can also run at a reduced scale, which AC13 uses to compare CSV
// bytes across worker counts.

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "stickymv/experiments.hpp"
#include "stickymv/io.hpp"
#include "stickymv/metric.hpp"
#include "stickymv/mckean.hpp"
#include "stickymv/parallel.hpp"
#include "stickymv/phase.hpp"
#include "stickymv/sticky.hpp"
#include "stickymv/torus.hpp"

namespace stickymv {

struct CriterionResult {
  bool pass = false;
  std::string summary;
  std::map<std::string, std::string> files;
  Json details;
};

struct Criterion {
  std::string id;
  std::string title;
  std::function<CriterionResult(Executor&, bool reduced)> run;
};

inline constexpr std::uint64_t kAcceptanceSeed = 20240611;

namespace ac {

inline std::string fmt(double v) { return format_number(v); }

inline CriterionResult from_report(const ExperimentReport& r, std::string summary) {
  CriterionResult c;
  c.pass = r.passed();
  c.files = r.files;
  c.details = r.manifest;
  for (const auto& a : r.assertions)
    summary += "; " + a.name + (a.pass ? " ok" : " FAILED") + " (" + fmt(a.value) + " vs " + fmt(a.bound) + ")";
  c.summary = std::move(summary);
  return c;
}

inline CriterionResult ac1(Executor& ex, bool) {
  auto cfg = ExperimentConfig::defaults("phase-diagram");
  cfg.seed = kAcceptanceSeed;
  cfg.phase.Lt = {0.5, 1.0, 2.0, 4.0};
  cfg.phase.a_factor = {0.99, 1.01};
  const auto rep = run_experiment(cfg, ex);
  auto c = from_report(rep, "");
  const double th = phase_threshold_linear(1.0);
  const bool th_ok = std::abs(th - 1.1283791671) <= 1e-10;
  c.pass = c.pass && th_ok;
  c.summary = "threshold a/sqrt(Lt) = " + fmt(th) + (th_ok ? "" : " (expected 1.1283791671)") + c.summary;
  return c;
}

inline CriterionResult ac2(Executor&, bool) {
  CriterionResult c;
  Csv csv({"p", "a", "quadrature", "closed_form", "rel_err"});
  double worst = 0.0;
  const auto bt = ScalarDrift::linear(-1.0);
  for (int i = 1; i <= 9; ++i)
    for (double a : {0.3, 0.8, 1.3, 1.8, 2.3}) {
      const double p = 0.1 * i;
      const double q = integral_I(a, p, bt), e = closed_form_I_linear(a, p, 1.0);
      const double rel = std::abs(q - e) / std::abs(e);
      worst = std::max(worst, rel);
      csv.row({p, a, q, e, rel});
    }
  c.files["quadrature.csv"] = csv.str();
  c.pass = worst <= 1e-8;
  c.summary = "max relative error " + fmt(worst) + " over 45 points (tol 1e-8)";
  return c;
}

inline CriterionResult ac3(Executor& ex, bool reduced) {
  CriterionResult c;
  c.pass = true;
  for (const char* scheme : {"indicator", "regularized"}) {
    auto cfg = ExperimentConfig::defaults("sticky-stationarity");
    cfg.seed = kAcceptanceSeed;
    cfg.sticky.slope = -1.0;
    cfg.sticky.a = 1.5;
    cfg.sticky.scheme = scheme;
    cfg.scheme.h = 1e-3;
    cfg.scheme.M = reduced ? 20000 : 100000;
    cfg.scheme.T = reduced ? 0.2 : 20.0;
    cfg.sticky.average_from = reduced ? 0.1 : 10.0;
    const auto rep = run_experiment(cfg, ex);
    const auto& a = rep.assertions.front();
    c.pass = c.pass && rep.passed();
    c.summary += std::string(c.summary.empty() ? "" : "; ") + scheme + ": atom " + fmt(a.value) + " vs 1-p " +
                 fmt(a.bound) + " +- " + fmt(rep.manifest["derived"]["tolerance"]["value"].get<double>()) +
                 (a.pass ? "" : " FAILED");
    c.files[std::string("sticky_") + scheme + ".csv"] = rep.files.at("sticky.csv");
    c.details[scheme] = rep.manifest;
  }
  return c;
}

inline CriterionResult ac4(Executor& ex, bool reduced) {
  auto cfg = ExperimentConfig::defaults("sticky-contraction");
  cfg.seed = kAcceptanceSeed;
  cfg.sticky.slope = -1.0;
  cfg.sticky.a = 0.2;
  cfg.sticky.init_value = 1.0;
  cfg.scheme.h = 1e-3;
  cfg.scheme.M = reduced ? 20000 : 100000;
  cfg.scheme.T = reduced ? 0.2 : 15.0;
  const auto rep = run_experiment(cfg, ex);
  auto c = from_report(rep, "");
  const double cc = rep.manifest["derived"]["c"]["value"].get<double>();
  const double ab = rep.manifest["derived"]["a_bound"]["value"].get<double>();
  const bool ok = std::abs(cc - 0.25) <= 1e-9 && std::abs(ab - 0.25) <= 1e-9;
  c.pass = c.pass && ok;
  c.summary = "c = " + fmt(cc) + ", a_bound = " + fmt(ab) + (ok ? "" : " (expected 1/4)") + c.summary;
  return c;
}

inline CriterionResult ac5(Executor& ex, bool reduced) {
  const std::size_t M = reduced ? 8192 : 10000;
  const double h = 1e-3;
  const std::uint64_t steps = reduced ? 200 : 10000;
  StickyModel lo, hi;
  lo.btilde = ScalarDrift::linear(-2.0);
  lo.interaction = Interaction::constant(0.5);
  hi.btilde = ScalarDrift::linear(-1.0);
  hi.interaction = Interaction::constant(1.0);
  lo.h = hi.h = h;
  lo.M = hi.M = M;
  std::vector<double> a(M), b(M);
  const CounterRng rng(kAcceptanceSeed, "ac5-init");
  for (std::size_t i = 0; i < M; ++i) {
    const auto u = rng.uniforms(i, 0, 0);
    a[i] = u[0] < 0.3 ? 0.0 : 2.0 * u[1];
    b[i] = a[i] + (u[0] < 0.5 ? 0.0 : 0.5 * u[1]);
  }
  const auto rep = coupled_comparison_run(lo, hi, a, b, double(steps) * h, kAcceptanceSeed, ex);
  CriterionResult c;
  Csv csv({"particles", "steps", "violations", "max_gap"});
  csv.row({rep.particles, std::size_t(rep.steps), rep.violations, rep.max_gap});
  c.files["comparison.csv"] = csv.str();
  c.pass = rep.violations == 0 && rep.max_gap == 0.0 && rep.steps == steps;
  c.summary = std::to_string(rep.particles) + " particles x " + std::to_string(rep.steps) + " steps: " +
              std::to_string(rep.violations) + " order violations, max gap " + fmt(rep.max_gap);
  return c;
}

struct ProfileCheck {
  double concavity = 0.0;      // max second difference of f
  double f1 = 0.0;             // |2 f''(0) + a|
  double f2 = 0.0;             // max residual of the differential inequality
  double chain = 0.0;          // max violation of the norm-equivalence chain
  double g_range = 0.0;        // max distance of g outside [1/2, 1]
  double derivative = 0.0;     // max relative mismatch of finite-difference f' vs phi g
};

inline ProfileCheck check_profile(const ContractionProfile& p) {
  ProfileCheck r;
  const auto& x = p.grid;
  const std::size_t n = x.size();
  const double dx = x[1] - x[0];
  r.f1 = std::abs(2.0 * p.fsecond(0.0) + p.a);
  const double f0 = p.fsecond(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && i + 1 < n) {
      r.concavity = std::max(r.concavity, p.f[i + 1] - 2.0 * p.f[i] + p.f[i - 1]);
      const double fd = (p.f[i + 1] - p.f[i - 1]) / (2.0 * dx);
      if (std::abs(x[i] - p.Rt1) > 2.0 * dx && std::abs(x[i] - p.Rt0) > 2.0 * dx)
        r.derivative = std::max(r.derivative, std::abs(fd - p.fprime[i]) / p.fprime[i]);
    }
    if (std::abs(x[i] - p.Rt1) > 2.0 * dx) {
      const double res = 2.0 * p.fsecond(x[i]) - 2.0 * f0 + p.fprime[i] * p.btilde(x[i]) + p.c * p.f[i];
      r.f2 = std::max(r.f2, res);
    }
    const double lo = p.phi_R0() * x[i] / 2.0;
    r.chain = std::max({r.chain, lo - p.Phi[i] / 2.0, p.Phi[i] / 2.0 - p.f[i], p.f[i] - p.Phi[i], p.Phi[i] - x[i]});
    r.g_range = std::max({r.g_range, 0.5 - p.gfun[i], p.gfun[i] - 1.0});
  }
  return r;
}

inline CriterionResult ac6(Executor&, bool) {
  CriterionResult c;
  c.pass = true;
  Csv csv({"family", "c", "concavity", "f1", "f2", "chain", "g_range", "derivative"});
  auto one = [&](const std::string& name, const ContractionProfile& p) {
    const auto r = check_profile(p);
    const bool ok = r.concavity <= 1e-12 && r.f1 <= 1e-12 && r.f2 <= 1e-6 && r.chain <= 1e-12 && r.g_range <= 1e-12 &&
                    r.derivative <= 1e-6;
    c.pass = c.pass && ok;
    csv.row({name, p.c, r.concavity, r.f1, r.f2, r.chain, r.g_range, r.derivative});
    c.summary += (c.summary.empty() ? "" : "; ") + name + ": c = " + fmt(p.c) + ", f2 residual " + fmt(r.f2) +
                 ", d/dr mismatch " + fmt(r.derivative) + (ok ? "" : " FAILED");
  };
  const auto lin = build_profile(ScalarDrift::linear(-1.0), 0.2);
  one("linear", *lin);
  const auto sine = contraction_rates(InteractionSpec(1.0, 1, SineGamma{0.1}));
  one("sine", *sine.profile);
  c.files["profile_checks.csv"] = csv.str();
  return c;
}

// AC7 and AC8 share one run.
class MkvCache {
 public:
  const ExperimentReport& get(Executor& ex, bool reduced) {
    auto& slot = reduced ? small_ : full_;
    if (!slot || slot->threads != ex.threads()) {
      auto cfg = ExperimentConfig::defaults("mkv-contraction");
      cfg.seed = kAcceptanceSeed;
      cfg.drift = {"sine", 1.0, 0.1, 1, {}, {}, {}, {}};
      cfg.scheme.M = reduced ? 10000 : 5000;
      cfg.scheme.T = reduced ? 0.1 : 10.0;
      cfg.scheme.h = 1e-3;
      slot = Entry{ex.threads(), run_experiment(cfg, ex)};
    }
    return slot->rep;
  }

 private:
  struct Entry {
    std::size_t threads;
    ExperimentReport rep;
  };
  std::optional<Entry> full_, small_;
};

inline CriterionResult ac7(Executor& ex, bool reduced, MkvCache& cache) {
  const auto& rep = cache.get(ex, reduced);
  CriterionResult c;
  c.files = rep.files;
  c.details = rep.manifest;
  const auto& w1 = rep.assertions[0];
  const auto& wf = rep.assertions[1];
  c.pass = w1.pass && wf.pass;
  const double ct = rep.manifest["derived"]["ctilde"]["value"].get<double>();
  const bool ct_ok = std::abs(ct - 0.225) <= 1e-9;
  c.pass = c.pass && ct_ok;
  c.summary = "ctilde = " + fmt(ct) + "; W1 rate " + fmt(w1.value) + " >= " + fmt(w1.bound) +
              (w1.pass ? "" : " FAILED") + "; W_f envelope excess " + fmt(wf.value) + (wf.pass ? "" : " FAILED");
  return c;
}

inline CriterionResult ac8(Executor& ex, bool reduced, MkvCache& cache) {
  const auto& rep = cache.get(ex, reduced);
  CriterionResult c;
  const auto& b = rep.assertions[2];
  c.pass = b.pass;
  c.files = rep.files;
  c.summary = "breach fraction " + fmt(b.value) + " (budget " + fmt(b.bound) + ", " + b.detail + ")";
  return c;
}

inline CriterionResult ac9(Executor& ex, bool reduced) {
  auto cfg = ExperimentConfig::defaults("chaos-scaling");
  cfg.seed = kAcceptanceSeed;
  if (reduced) {
    cfg.chaos.N = {8, 32};
    cfg.chaos.M_ref = 2048;
    cfg.scheme.T = 0.2;
  }
  const auto rep = run_experiment(cfg, ex);
  std::string sups;
  for (const auto& p : rep.manifest["config"]["chaos"]["N"]) sups += (sups.empty() ? "N = " : ",") + p.dump();
  return from_report(rep, sups + ", delta = " + fmt(rep.manifest["derived"]["delta"]["value"].get<double>()) +
                              ", slope_fN = " + fmt(rep.manifest["fits"]["slope_fN"].get<double>()));
}

inline CriterionResult ac10(Executor& ex, bool reduced) {
  CriterionResult c;
  const InteractionSpec spec(1.0, 1, ZeroGamma{});
  const auto cc = chaos_constants(spec, 0.0);
  const std::size_t M = reduced ? 10000 : 10000;
  const double T = reduced ? 0.5 : 50.0;
  const auto m2 = run_moment_experiment(spec, std::vector<double>(M, 0.0), T, 1e-2, kAcceptanceSeed, 0.1, ex);
  double sup = 0.0;
  Csv csv({"t", "m2"});
  for (const auto& r : m2) {
    sup = std::max(sup, r.m2);
    csv.row({r.t, r.m2});
  }
  c.files["moments.csv"] = csv.str();
  const double ct_expected = 4.0 * std::sqrt(0.5) + 2.0 * std::sqrt(2.0) * std::sqrt(0.5);
  const bool C_ok = std::abs(cc.C - 0.5) <= 1e-12;
  const bool ct_ok = std::abs(cc.C_tilde - ct_expected) <= 1e-12;
  const bool emp_ok = sup <= 1.1 * cc.C;
  c.pass = C_ok && ct_ok && emp_ok;
  c.details = {{"C", cc.C}, {"C_tilde", cc.C_tilde}, {"C1", cc.C1}, {"C2", cc.C2}, {"sup_m2", sup}};
  c.summary = "C = " + fmt(cc.C) + ", C_tilde = " + fmt(cc.C_tilde) + ", sup m2 = " + fmt(sup) + " <= " +
              fmt(1.1 * cc.C) + (emp_ok ? "" : " FAILED");
  return c;
}

inline CriterionResult ac11(Executor&, bool) {
  CriterionResult c;
  const auto th = kuramoto_thresholds();
  const bool res_ok = th.k_max_residual <= 1e-10 && th.k0_residual <= 1e-10;
  const bool order_ok = 0.0 < th.k_max && th.k_max < th.k0 && th.k0 <= 1.0 / kPi && th.k_max <= 1.0 / (4.0 * kPi);
  const auto lo = solve_kuramoto_fixed_point(0.1);
  const auto hi = solve_kuramoto_fixed_point(2.0);
  c.pass = res_ok && order_ok && !lo.p_hat && hi.p_hat.has_value();
  Csv csv({"quantity", "value", "residual"});
  csv.row({"k_max", th.k_max, th.k_max_residual});
  csv.row({"k0", th.k0, th.k0_residual});
  csv.row({"p_hat(k=2)", hi.p_hat.value_or(0.0), hi.residual});
  c.files["kuramoto_thresholds.csv"] = csv.str();
  c.summary = "k_max = " + fmt(th.k_max) + " (res " + fmt(th.k_max_residual) + "), k0 = " + fmt(th.k0) + " (res " +
              fmt(th.k0_residual) + "); k = 0.1: " + (lo.p_hat ? "root FOUND" : "no root") +
              "; k = 2: " + (hi.p_hat ? "root p = " + fmt(*hi.p_hat) : std::string("no root"));
  return c;
}

inline CriterionResult ac12(Executor& ex, bool reduced) {
  auto cfg = ExperimentConfig::defaults("kuramoto");
  cfg.seed = kAcceptanceSeed;
  cfg.kuramoto.k = 0.05;
  cfg.scheme.M = reduced ? 10000 : 5000;
  cfg.scheme.T = reduced ? 0.5 : 20.0;
  const auto rep = run_experiment(cfg, ex);
  return from_report(rep, "c_T = " + fmt(rep.manifest["constants"]["c_T"].get<double>()));
}

}  // namespace ac

class AcceptanceSuite {
 public:
  AcceptanceSuite() {
    auto cache = cache_;
    list_ = {
        {"AC1", "Phase boundary", ac::ac1},
        {"AC2", "Quadrature oracle", ac::ac2},
        {"AC3", "Stationarity of the atomized measure", ac::ac3},
        {"AC4", "One-dimensional geometric ergodicity", ac::ac4},
        {"AC5", "Pathwise comparison", ac::ac5},
        {"AC6", "f-profile invariant suite", ac::ac6},
        {"AC7", "McKean-Vlasov contraction", [cache](Executor& ex, bool r) { return ac::ac7(ex, r, *cache); }},
        {"AC8", "Domination", [cache](Executor& ex, bool r) { return ac::ac8(ex, r, *cache); }},
        {"AC9", "Propagation of chaos", ac::ac9},
        {"AC10", "Chaos constants", ac::ac10},
        {"AC11", "Kuramoto thresholds", ac::ac11},
        {"AC12", "Kuramoto contraction", ac::ac12},
    };
    list_.push_back({"AC13", "Determinism across worker counts",
                     [this](Executor&, bool) { return determinism(); }});
  }

  AcceptanceSuite(const AcceptanceSuite&) = delete;
  AcceptanceSuite& operator=(const AcceptanceSuite&) = delete;

  const std::vector<Criterion>& criteria() const { return list_; }

  static const std::map<std::string, std::vector<std::string>>& suites() {
    static const std::map<std::string, std::vector<std::string>> s{
        {"phase", {"AC1", "AC2"}},
        {"fast", {"AC1", "AC2", "AC5", "AC6", "AC10", "AC11"}},
        {"mckean", {"AC7", "AC8", "AC9", "AC10"}},
        {"sticky", {"AC3", "AC4", "AC5"}},
        {"torus", {"AC11", "AC12"}},
        {"full",
         {"AC1", "AC2", "AC3", "AC4", "AC5", "AC6", "AC7", "AC8", "AC9", "AC10", "AC11", "AC12", "AC13"}},
    };
    return s;
  }

  const Criterion& find(const std::string& id) const {
    for (const auto& c : list_)
      if (c.id == id) return c;
    fail(ErrorKind::ConfigInvalid, "unknown criterion " + id);
  }

  // Reduced-scale reruns of AC1-AC12 at 1, 4 and 8 workers.
  CriterionResult determinism() const {
    CriterionResult c;
    c.pass = true;
    std::vector<std::string> differing;
    std::map<std::string, std::map<std::string, std::string>> base;
    for (std::size_t threads : {1u, 4u, 8u}) {
      Executor ex(threads);
      for (const auto& cr : list_) {
        if (cr.id == "AC13") continue;
        const auto r = cr.run(ex, true);
        if (threads == 1)
          base[cr.id] = r.files;
        else if (r.files != base[cr.id])
          differing.push_back(cr.id + "@" + std::to_string(threads));
      }
    }
    std::size_t bytes = 0, files = 0;
    for (const auto& [id, fs] : base)
      for (const auto& [n, t] : fs) {
        bytes += t.size();
        ++files;
      }
    c.pass = differing.empty() && files > 0;
    c.summary = std::to_string(files) + " CSV files (" + std::to_string(bytes) + " bytes) compared at 1/4/8 workers: ";
    if (differing.empty())
      c.summary += "identical";
    else
      for (const auto& d : differing) c.summary += d + " differs ";
    return c;
  }

 private:
  std::shared_ptr<ac::MkvCache> cache_ = std::make_shared<ac::MkvCache>();
  std::vector<Criterion> list_;
};

}  // namespace stickymv
