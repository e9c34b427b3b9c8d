#pragma once

// Experiment descriptions, runners and reports shared by the command-line
// tool and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "stickymv/drift.hpp"
#include "stickymv/error.hpp"
#include "stickymv/io.hpp"
#include "stickymv/mckean.hpp"
#include "stickymv/metric.hpp"
#include "stickymv/parallel.hpp"
#include "stickymv/phase.hpp"
#include "stickymv/scalar_drift.hpp"
#include "stickymv/sticky.hpp"
#include "stickymv/torus.hpp"

namespace stickymv {

using Json = nlohmann::ordered_json;

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k{"sticky-stationarity", "sticky-contraction", "phase-diagram", "mkv-contraction",
                                          "chaos-scaling",       "kuramoto",           "constants-only"};
  return k;
}

struct ExperimentConfig {
  std::string experiment = "constants-only";
  std::uint64_t seed = 1;
  bool override_gates = false;
  std::string out_dir = "out";

  struct Drift {
    std::string kind = "zero";
    double L = 1.0;
    double alpha = 0.0;
    int dim = 1;
    std::vector<double> r, psi, kappa_r, kappa;  // tabulated kind
  } drift;

  struct Scheme {
    double h = 1e-3;
    std::size_t M = 100000;
    double T = 20.0;
    double record_every = 0.1;
    double delta = 0.0;  // 0: default band
  } scheme;

  struct Sticky {
    double slope = -1.0;  // btilde(r) = slope r
    double a = 1.5;
    std::string scheme = "indicator";
    int n = 100;
    std::string boundary = "bridge";
    std::string init = "invariant";  // or "constant"
    double init_value = 1.0;
    double average_from = 10.0;
    double allowance = 0.02;
    double envelope_factor = 1.05;
  } sticky;

  struct Phase {
    std::vector<double> Lt{0.5, 1.0, 2.0, 4.0};
    std::vector<double> a_factor{0.9, 0.99, 1.01, 1.1};  // multiples of 2 sqrt(Lt/pi)
  } phase;

  struct Mkv {
    double scale_x = 1.0, scale_y = 3.0;
    double rate_factor = 0.8;
    double bound_factor = 1.1;
    double floor_factor = 3.0;
    double breach_budget = 1e-3;
  } mkv;

  struct Chaos {
    std::vector<std::size_t> N{8, 32, 128, 512};
    std::size_t M_ref = 10000;
    double init_scale = 1.0;
    double slope_lo = -0.65, slope_hi = -0.35;
  } chaos;

  struct Kuramoto {
    double k = 0.05;
    double spread = 0.5;
    double rate_factor = 0.75;
  } kuramoto;

  // Defaults differ per experiment kind.
  static ExperimentConfig defaults(const std::string& kind) {
    ExperimentConfig c;
    c.experiment = kind;
    if (kind == "sticky-contraction") {
      c.sticky.a = 0.2;
      c.sticky.init = "constant";
      c.sticky.init_value = 1.0;
      c.scheme.T = 15.0;
    } else if (kind == "mkv-contraction") {
      c.drift.kind = "sine";
      c.drift.alpha = 0.1;
      c.scheme.M = 5000;
      c.scheme.T = 10.0;
    } else if (kind == "chaos-scaling") {
      c.drift.kind = "sine";
      c.drift.alpha = 0.1;
      c.scheme.h = 5e-3;
      c.scheme.T = 6.0;
      c.scheme.delta = 2.0;
    } else if (kind == "kuramoto") {
      c.scheme.h = 1e-2;
      c.scheme.M = 5000;
      c.scheme.T = 20.0;
    }
    return c;
  }

  Json to_json() const {
    Json j;
    j["experiment"] = experiment;
    j["seed"] = seed;
    j["override_gates"] = override_gates;
    j["out_dir"] = out_dir;
    j["drift"] = {{"kind", drift.kind}, {"L", drift.L}, {"alpha", drift.alpha}, {"dim", drift.dim}};
    if (drift.kind == "tabulated")
      j["drift"]["table"] = {{"r", drift.r}, {"psi", drift.psi}, {"kappa_r", drift.kappa_r}, {"kappa", drift.kappa}};
    j["scheme"] = {{"h", scheme.h},
                   {"M", scheme.M},
                   {"T", scheme.T},
                   {"record_every", scheme.record_every},
                   {"delta", scheme.delta}};
    j["sticky"] = {{"slope", sticky.slope},
                   {"a", sticky.a},
                   {"scheme", sticky.scheme},
                   {"n", sticky.n},
                   {"boundary", sticky.boundary},
                   {"init", sticky.init},
                   {"init_value", sticky.init_value},
                   {"average_from", sticky.average_from},
                   {"allowance", sticky.allowance},
                   {"envelope_factor", sticky.envelope_factor}};
    j["phase"] = {{"Lt", phase.Lt}, {"a_factor", phase.a_factor}};
    j["mkv"] = {{"scale_x", mkv.scale_x},
                {"scale_y", mkv.scale_y},
                {"rate_factor", mkv.rate_factor},
                {"bound_factor", mkv.bound_factor},
                {"floor_factor", mkv.floor_factor},
                {"breach_budget", mkv.breach_budget}};
    j["chaos"] = {{"N", chaos.N},
                  {"M_ref", chaos.M_ref},
                  {"init_scale", chaos.init_scale},
                  {"slope_lo", chaos.slope_lo},
                  {"slope_hi", chaos.slope_hi}};
    j["kuramoto"] = {{"k", kuramoto.k}, {"spread", kuramoto.spread}, {"rate_factor", kuramoto.rate_factor}};
    return j;
  }
};

inline InteractionSpec make_spec(const ExperimentConfig::Drift& d) {
  if (d.kind == "zero") return InteractionSpec(d.L, d.dim, ZeroGamma{});
  if (d.kind == "sine") return InteractionSpec(d.L, d.dim, SineGamma{d.alpha});
  if (d.kind == "rational") return InteractionSpec(d.L, d.dim, RationalGamma{d.alpha});
  if (d.kind == "tabulated") return InteractionSpec(d.L, d.dim, TabulatedGamma{d.r, d.psi, d.kappa_r, d.kappa});
  fail(ErrorKind::ConfigInvalid, "unknown drift kind '" + d.kind + "' (zero, sine, rational, tabulated)");
}

struct Assertion {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double bound = 0.0;
  std::string detail;
};

struct ExperimentReport {
  Json manifest;
  std::map<std::string, std::string> files;  // name -> csv text
  std::vector<Assertion> assertions;

  bool passed() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
  }

  void add(Assertion a) {
    manifest["assertions"].push_back(
        {{"name", a.name}, {"pass", a.pass}, {"value", a.value}, {"bound", a.bound}, {"detail", a.detail}});
    assertions.push_back(std::move(a));
  }

  // Constants consumed by assertions, with how they were obtained.
  void derived(const std::string& name, double v, const std::string& from) {
    manifest["derived"][name] = {{"value", v}, {"from", from}};
  }

  void write(const std::filesystem::path& dir) const {
    for (const auto& [name, text] : files) write_text_file(dir / name, text);
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
  }
};

inline void gate(const ExperimentConfig& cfg, bool ok, const std::string& assumption, const std::string& margin) {
  if (!ok && !cfg.override_gates) fail(ErrorKind::AssumptionGateFailed, assumption + " fails: " + margin);
}

inline Json assumptions_json(const AssumptionReport& a) {
  Json j = {{"b1_pairs", a.b1_pairs},
            {"b1_max_excess", a.b1_max_excess},
            {"b1_pass", a.b1_pass},
            {"antisymmetry_max", a.antisymmetry_max},
            {"antisymmetry_pass", a.antisymmetry_pass},
            {"gamma_sup", a.gamma_sup},
            {"b2_bound", a.b2_bound},
            {"b2_pass", a.b2_pass},
            {"R0", a.radii.R0},
            {"R1", a.radii.R1},
            {"R1_widened", a.radii.R1_widened}};
  if (a.epsilon0)
    j["epsilon0"] = *a.epsilon0;
  else
    j["epsilon0"] = a.epsilon0_note;
  if (a.centering)
    j["centering"] = {{"mean_norm", a.centering->mean_norm},
                      {"tolerance", a.centering->tolerance},
                      {"pass", a.centering->pass}};
  return j;
}

inline void gate_assumptions(const ExperimentConfig& cfg, const AssumptionReport& a) {
  gate(cfg, a.b1_pass, "B1", "max <dz, dgamma> - kappa |dz|^2 = " + format_number(a.b1_max_excess));
  gate(cfg, a.antisymmetry_pass, "B1", "antisymmetry defect " + format_number(a.antisymmetry_max));
  gate(cfg, a.b2_pass, "B2", "|gamma|_inf - bound = " + format_number(a.gamma_sup - a.b2_bound));
  if (a.centering)
    gate(cfg, a.centering->pass, "B3",
         "|mean| - tolerance = " + format_number(a.centering->mean_norm - a.centering->tolerance));
}

inline std::string profile_csv(const ContractionProfile& p, std::size_t stride = 16) {
  Csv csv({"r", "phi", "Phi", "g", "f", "fprime"});
  for (std::size_t i = 0; i < p.grid.size(); i += stride)
    csv.row({p.grid[i], p.phi[i], p.Phi[i], p.gfun[i], p.f[i], p.fprime[i]});
  return csv.str();
}

inline ExperimentReport run_constants_only(const ExperimentConfig& cfg, Executor&) {
  ExperimentReport rep;
  rep.manifest["config"] = cfg.to_json();
  const auto spec = make_spec(cfg.drift);
  const auto a = check_assumptions(spec, {}, cfg.seed);
  rep.manifest["assumptions"] = assumptions_json(a);
  const auto rates = contraction_rates(spec);
  rep.derived("R0", rates.R0, "compute_radii: grid + analytic tail");
  rep.derived("R1", rates.R1, "compute_radii: bisection on the R1 inequality");
  rep.derived("a", rates.a, "2 |gamma|_inf");
  rep.derived("c", rates.c, "profile of bbar: 1 / (2 int_0^R1 Phi/phi)");
  rep.derived("ctilde", rates.ctilde, "nested quadrature of the profile integral");
  rep.derived("M1", rates.M1, "norm equivalence constant of the profile");
  rep.derived("quadrature_check", rates.profile->quadrature_check, "relative change of c at half resolution");
  try {
    const auto cc = chaos_constants(spec, 0.0);
    rep.derived("C", cc.C, "second-moment Gronwall bound from m2(0) = 0");
    rep.derived("C_tilde", cc.C_tilde, "drift error constant assembled from C");
    rep.derived("C1", cc.C1, "N >= 2 constant assembled from C");
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::GronwallInapplicable) throw;
    rep.manifest["chaos_constants"] = e.what();
  }
  rep.files["profile.csv"] = profile_csv(*rates.profile);
  rep.add({"B1", a.b1_pass && a.antisymmetry_pass, a.b1_max_excess, 1e-12, "one-sided Lipschitz spot check"});
  rep.add({"B2", a.b2_pass, a.gamma_sup, a.b2_bound, "|gamma|_inf <= bound"});
  return rep;
}

inline ExperimentReport run_phase_diagram(const ExperimentConfig& cfg, Executor&) {
  ExperimentReport rep;
  rep.manifest["config"] = cfg.to_json();
  Csv csv({"Lt", "a", "a_over_threshold", "threshold", "root", "p_hat", "residual"});
  std::size_t mismatches = 0;
  for (double Lt : cfg.phase.Lt) {
    if (!(Lt > 0.0)) fail(ErrorKind::ConfigInvalid, "phase Lt must be positive");
    const double th = phase_threshold_linear(Lt);
    const auto bt = ScalarDrift::linear(-Lt);
    for (double fct : cfg.phase.a_factor) {
      const double a = fct * th;
      const auto r = solve_fixed_point(a, bt);
      const bool root = r.p_hat.has_value();
      if (root != (a > th)) ++mismatches;
      csv.row({Lt, a, fct, th, root ? 1 : 0, r.p_hat.value_or(0.0), r.residual});
    }
  }
  rep.derived("threshold_over_sqrtLt", 2.0 / std::sqrt(std::numbers::pi), "2 / sqrt(pi)");
  rep.files["phase.csv"] = csv.str();
  rep.add({"root exactly on the supercritical side", mismatches == 0, double(mismatches), 0.0, "rows with root != (a > threshold)"});
  return rep;
}

inline StickyModel sticky_model_of(const ExperimentConfig& cfg) {
  if (!(cfg.sticky.slope <= 0.0)) fail(ErrorKind::ConfigInvalid, "sticky slope must be <= 0");
  StickyModel m;
  m.btilde = ScalarDrift::linear(cfg.sticky.slope);
  m.interaction = Interaction::constant(cfg.sticky.a);
  if (cfg.sticky.scheme == "indicator")
    m.scheme = Scheme::indicator;
  else if (cfg.sticky.scheme == "regularized")
    m.scheme = Scheme::regularized;
  else
    fail(ErrorKind::ConfigInvalid, "sticky scheme must be indicator or regularized");
  if (cfg.sticky.boundary == "bridge")
    m.boundary = ZeroBoundary::bridge;
  else if (cfg.sticky.boundary == "clamp")
    m.boundary = ZeroBoundary::clamp;
  else
    fail(ErrorKind::ConfigInvalid, "sticky boundary must be bridge or clamp");
  m.n = cfg.sticky.n;
  m.h = cfg.scheme.h;
  m.M = cfg.scheme.M;
  if (m.M == 0) fail(ErrorKind::ConfigInvalid, "M must be positive");
  return m;
}

inline std::string sticky_csv(const std::vector<StickyRecord>& recs) {
  Csv csv({"t", "atom_fraction", "mean_r", "mean_f_r", "q10", "q50", "q90"});
  for (const auto& r : recs) csv.row({r.t, r.atom_fraction, r.mean_r, r.mean_f_r, r.q10, r.q50, r.q90});
  return csv.str();
}

inline ExperimentReport run_sticky_stationarity(const ExperimentConfig& cfg, Executor& ex) {
  ExperimentReport rep;
  rep.manifest["config"] = cfg.to_json();
  const auto m = sticky_model_of(cfg);
  const auto fp = solve_fixed_point(cfg.sticky.a, m.btilde);
  const double p = fp.p_hat.value_or(0.0);
  rep.derived("p_hat", p, "solve_fixed_point on the I(a,p) equation; 0 means no root");
  std::vector<double> init(m.M, cfg.sticky.init_value);
  if (cfg.sticky.init == "invariant") {
    if (fp.p_hat)
      init = sample_invariant(build_invariant_measure(cfg.sticky.a, p, m.btilde), m.M, cfg.seed);
    else
      init.assign(m.M, 0.0);
  } else if (cfg.sticky.init != "constant") {
    fail(ErrorKind::ConfigInvalid, "sticky init must be invariant or constant");
  }
  SimulationOptions so;
  so.T = cfg.scheme.T;
  so.record_every = cfg.scheme.record_every;
  so.seed = cfg.seed;
  const auto res = simulate(m, std::move(init), so, ex);
  rep.files["sticky.csv"] = sticky_csv(res.records);
  std::vector<double> w;
  for (const auto& r : res.records)
    if (r.t >= cfg.sticky.average_from - 1e-9) w.push_back(r.atom_fraction);
  const double avg = w.empty() ? std::nan("") : Executor::pairwise_sum(w.data(), w.size()) / double(w.size());
  const double target = 1.0 - p;
  const double tol = 3.0 * std::sqrt(p * (1.0 - p) / double(m.M)) + cfg.sticky.allowance;
  rep.derived("target_atom", target, "1 - p_hat");
  rep.derived("tolerance", tol, "3 sqrt(p(1-p)/M) + scheme allowance");
  rep.add({"time-averaged atom fraction", std::abs(avg - target) <= tol, avg, target,
           "|avg - (1 - p_hat)| <= " + format_number(tol)});
  return rep;
}

inline ExperimentReport run_sticky_contraction(const ExperimentConfig& cfg, Executor& ex) {
  ExperimentReport rep;
  rep.manifest["config"] = cfg.to_json();
  const auto m = sticky_model_of(cfg);
  const auto prof = build_profile(m.btilde, cfg.sticky.a);
  gate(cfg, !prof->a2_violated, "A2", "a - a_bound = " + format_number(cfg.sticky.a - prof->a_bound));
  rep.derived("c", prof->c, "1 / (2 int_0^Rt1 Phi/phi)");
  rep.derived("a_bound", prof->a_bound, "1 / (2 int_0^Rt1 1/phi)");
  const double v = cfg.sticky.init_value;
  if (!(v >= 0.0)) fail(ErrorKind::ConfigInvalid, "init value must be >= 0");
  SimulationOptions so;
  so.T = cfg.scheme.T;
  so.record_every = cfg.scheme.record_every;
  so.seed = cfg.seed;
  so.profile = prof.get();
  const auto res = simulate(m, std::vector<double>(m.M, v), so, ex);
  const double f0 = (*prof)(v);
  rep.derived("f_init", f0, "profile at the initial value");
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& r : res.records) worst = std::max(worst, r.mean_f_r / (std::exp(-prof->c * r.t) * f0));
  rep.files["sticky.csv"] = sticky_csv(res.records);
  rep.add({"E f(r_t) under the exponential envelope", worst <= cfg.sticky.envelope_factor, worst,
           cfg.sticky.envelope_factor, "max over t of E f(r_t) / (exp(-c t) f(r_0))"});
  return rep;
}

inline std::vector<double> sorted_if_1d(std::vector<double> v, int d) {
  if (d == 1) std::sort(v.begin(), v.end());
  return v;
}

inline ExperimentReport run_mkv_contraction(const ExperimentConfig& cfg, Executor& ex) {
  ExperimentReport rep;
  rep.manifest["config"] = cfg.to_json();
  const auto spec = make_spec(cfg.drift);
  const int d = spec.dim();
  auto x = sorted_if_1d(centered_gaussian_cloud(cfg.scheme.M, d, cfg.mkv.scale_x, cfg.seed, "mkv-mu0"), d);
  auto y = sorted_if_1d(centered_gaussian_cloud(cfg.scheme.M, d, cfg.mkv.scale_y, cfg.seed, "mkv-nu0"), d);
  const auto a = check_assumptions(spec, x, cfg.seed);
  rep.manifest["assumptions"] = assumptions_json(a);
  gate_assumptions(cfg, a);
  ContractionOptions o;
  o.T = cfg.scheme.T;
  o.h = cfg.scheme.h;
  o.delta = cfg.scheme.delta;
  o.record_every = cfg.scheme.record_every;
  o.seed = cfg.seed;
  o.floor_factor = cfg.mkv.floor_factor;
  o.breach_budget = cfg.mkv.breach_budget;
  o.override_gates = cfg.override_gates;
  const auto res = run_contraction_experiment(spec, std::move(x), std::move(y), o, ex);
  const double ct = res.rates.ctilde;
  rep.derived("ctilde", ct, "contraction_rates: nested quadrature");
  rep.derived("c", res.rates.c, "contraction_rates: profile");
  rep.derived("delta", res.delta, "scheme.delta or half of min(epsilon0, 10 sqrt(h))");
  const double floor = cfg.mkv.floor_factor * res.mc_floor;
  rep.derived("mc_floor", floor, "floor_factor / sqrt(M)");
  Csv csv({"t", "w1_exact", "wf_upper", "wf_bound", "dom_mean_f", "breach_count"});
  const double wf0 = res.records.front().wf_upper;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& r : res.records) {
    const double bound = std::exp(-ct * r.t) * wf0 * cfg.mkv.bound_factor;
    csv.row({r.t, r.w1_exact, r.wf_upper, bound, r.dom_mean_f, std::size_t(r.breach_count)});
    worst = std::max(worst, r.wf_upper - std::max(bound, floor));
  }
  rep.files["mkv_contraction.csv"] = csv.str();
  rep.manifest["fits"] = {{"w1_rate", res.w1_fit.rate},
                          {"w1_rate_stderr", res.w1_fit.rate_stderr},
                          {"w1_window", {res.w1_fit.t_begin, res.w1_fit.t_end}},
                          {"wf_rate", res.wf_fit.rate},
                          {"wf_rate_stderr", res.wf_fit.rate_stderr},
                          {"dominator_rate", res.dom_fit.rate}};
  if (d == 1)
    rep.add({"W1 decay rate", res.w1_fit.rate >= cfg.mkv.rate_factor * ct, res.w1_fit.rate, cfg.mkv.rate_factor * ct,
             "fitted rate of the exact empirical W1 over " + std::to_string(res.w1_fit.points) + " points"});
  rep.add({"W_f upper bound under the envelope", worst <= 0.0, worst, 0.0,
           "max over t of wf - max(exp(-ctilde t) wf(0) factor, floor)"});
  rep.add({"domination breaches", res.breach_fraction <= cfg.mkv.breach_budget, res.breach_fraction,
           cfg.mkv.breach_budget, std::to_string(res.breaches) + " of " + std::to_string(res.samples) + " samples"});
  return rep;
}

inline ExperimentReport run_chaos_scaling(const ExperimentConfig& cfg, Executor& ex) {
  ExperimentReport rep;
  rep.manifest["config"] = cfg.to_json();
  const auto spec = make_spec(cfg.drift);
  const auto init = centered_gaussian_cloud(cfg.chaos.M_ref, spec.dim(), cfg.chaos.init_scale, cfg.seed, "chaos-init");
  const auto a = check_assumptions(spec, init, cfg.seed);
  rep.manifest["assumptions"] = assumptions_json(a);
  gate_assumptions(cfg, a);
  ChaosOptions o;
  o.Ns = cfg.chaos.N;
  o.M_ref = cfg.chaos.M_ref;
  o.T = cfg.scheme.T;
  o.h = cfg.scheme.h;
  o.delta = cfg.scheme.delta;
  o.record_every = cfg.scheme.record_every;
  o.seed = cfg.seed;
  const auto res = run_chaos_experiment(spec, init, o, ex);
  const double m2_0 = block_sum(init.size(), [&](std::size_t g) { return init[g] * init[g]; }) / double(cfg.chaos.M_ref);
  rep.derived("delta", res.delta, "scheme.delta or half of min(epsilon0, 10 sqrt(h))");
  rep.derived("ctilde", res.rates.ctilde, "contraction_rates: nested quadrature");
  rep.derived("M1", res.rates.M1, "norm equivalence constant of the profile");
  try {
    const auto cc = chaos_constants(spec, m2_0);
    rep.derived("C", cc.C, "max(m2(0), (|gamma| R0 + d) / (2L - kappa+))");
    rep.derived("C_tilde", cc.C_tilde, "drift error constant assembled from C");
    rep.derived("bound_coefficient", res.rates.M1 * cc.C_tilde / res.rates.ctilde, "M1 C_tilde / ctilde");
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::GronwallInapplicable) throw;
    rep.manifest["chaos_constants"] = e.what();
  }
  rep.manifest["ratio_ok"] = res.ratio_ok;
  Csv series({"N", "t", "l1_pi", "fN_pi"});
  Csv summary({"N", "replicas", "sup_l1_pi", "sup_fN_pi"});
  for (const auto& p : res.points) {
    summary.row({p.N, p.replicas, p.sup_l1, p.sup_fN});
    for (const auto& r : p.series) series.row({p.N, r.t, r.l1_pi, r.fN_pi});
  }
  rep.files["chaos_series.csv"] = series.str();
  rep.files["chaos_summary.csv"] = summary.str();
  rep.manifest["fits"] = {{"slope_l1", res.slope_l1.slope},
                          {"slope_l1_stderr", res.slope_l1.slope_stderr},
                          {"slope_fN", res.slope_fN.slope},
                          {"slope_fN_stderr", res.slope_fN.slope_stderr}};
  const double s = res.slope_l1.slope;
  rep.add({"log-log slope of sup_t semimetric", s >= cfg.chaos.slope_lo && s <= cfg.chaos.slope_hi, s,
           cfg.chaos.slope_hi, "expected in [" + format_number(cfg.chaos.slope_lo) + ", " + format_number(cfg.chaos.slope_hi) + "]"});
  return rep;
}

inline Json torus_bundle_json(const TorusRateBundle& b) {
  return {{"k", b.k},
          {"J", b.J},
          {"condition_value", b.condition_value},
          {"condition_holds", b.condition_holds},
          {"c_T", b.c_T},
          {"c_T_display", b.c_T_display},
          {"zeta", b.zeta},
          {"c_T_relaxed", b.c_T_relaxed},
          {"relaxed", b.relaxed},
          {"prefactor", b.prefactor},
          {"k_max", b.k_max},
          {"k_max_residual", b.k_max_residual},
          {"k0", b.k0},
          {"k0_residual", b.k0_residual},
          {"concave", b.concave},
          {"norm_equivalence", b.norm_equivalence},
          {"differential_inequality", b.differential_inequality},
          {"fsecond_zero", b.fsecond_zero}};
}

inline ExperimentReport run_kuramoto(const ExperimentConfig& cfg, Executor& ex) {
  ExperimentReport rep;
  rep.manifest["config"] = cfg.to_json();
  KuramotoModel model{cfg.kuramoto.k, cfg.scheme.h};
  model.validate();
  auto x = centered_gaussian_cloud(cfg.scheme.M, 1, cfg.kuramoto.spread, cfg.seed, "kuramoto-mu0");
  auto y = centered_gaussian_cloud(cfg.scheme.M, 1, cfg.kuramoto.spread, cfg.seed, "kuramoto-nu0");
  for (auto& v : y) v += kPi;
  KuramotoOptions o;
  o.T = cfg.scheme.T;
  o.delta = cfg.scheme.delta;
  o.record_every = cfg.scheme.record_every;
  o.seed = cfg.seed;
  o.floor_factor = cfg.mkv.floor_factor;
  const auto res = run_kuramoto_experiment(model, std::move(x), std::move(y), o, ex);
  rep.manifest["constants"] = torus_bundle_json(res.constants);
  rep.derived("rate", res.constants.rate(), res.constants.relaxed ? "zeta / int Phi/phi" : "1 / (2 int Phi/phi)");
  rep.derived("delta", res.delta, "scheme.delta or half of min(1, 10 sqrt(h))");
  Csv csv({"t", "mean_ftilde_dist", "dominator_mean_f", "dominator_atom_fraction", "order_parameter", "breach_count"});
  for (const auto& r : res.records)
    csv.row({r.t, r.mean_ftilde_dist, r.dominator_mean_f, r.dominator_atom_fraction, r.order_parameter,
             std::size_t(r.breach_count)});
  rep.files["kuramoto.csv"] = csv.str();
  rep.manifest["fits"] = {{"rate", res.fit.rate}, {"rate_stderr", res.fit.rate_stderr}, {"dominator_rate", res.dom_fit.rate}};
  const double need = cfg.kuramoto.rate_factor * res.constants.rate();
  rep.add({"decay rate of E f(d(X,Y))", res.fit.rate >= need, res.fit.rate, need,
           "fit over " + std::to_string(res.fit.points) + " points"});
  rep.add({"domination breaches", res.breach_fraction <= cfg.mkv.breach_budget, res.breach_fraction,
           cfg.mkv.breach_budget, std::to_string(res.breaches) + " breaches"});
  return rep;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg, Executor& ex) {
  const auto& k = cfg.experiment;
  if (k == "constants-only") return run_constants_only(cfg, ex);
  if (k == "phase-diagram") return run_phase_diagram(cfg, ex);
  if (k == "sticky-stationarity") return run_sticky_stationarity(cfg, ex);
  if (k == "sticky-contraction") return run_sticky_contraction(cfg, ex);
  if (k == "mkv-contraction") return run_mkv_contraction(cfg, ex);
  if (k == "chaos-scaling") return run_chaos_scaling(cfg, ex);
  if (k == "kuramoto") return run_kuramoto(cfg, ex);
  fail(ErrorKind::ConfigInvalid, "unknown experiment '" + k + "'");
}

}  // namespace stickymv
