#pragma once

// Kuramoto model on the circle R / 2 pi Z: dX = -k (sin * mu_t)(X) dt + dB,
// its contraction constants, the sticky distance process on [0, pi] and the
// coupled particle experiment.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "stickymv/coupling.hpp"
#include "stickymv/error.hpp"
#include "stickymv/mckean.hpp"
#include "stickymv/parallel.hpp"
#include "stickymv/phase.hpp"
#include "stickymv/quadrature.hpp"
#include "stickymv/rng.hpp"
#include "stickymv/scalar_drift.hpp"
#include "stickymv/stats.hpp"
#include "stickymv/sticky.hpp"

namespace stickymv {

inline constexpr double kPi = std::numbers::pi;

inline double wrap_angle(double x) {
  double w = std::fmod(x, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  return w >= 2.0 * kPi ? 0.0 : w;
}

// Representative of x - y in (-pi, pi].
inline double torus_diff(double x, double y) {
  double z = wrap_angle(x - y);
  if (z > kPi) z -= 2.0 * kPi;
  return z;
}

inline double torus_distance(double x, double y) { return std::abs(torus_diff(x, y)); }

struct KuramotoModel {
  double k = 0.0;
  double h = 1e-3;

  void validate() const {
    if (!(k >= 0.0) || !std::isfinite(k)) fail(ErrorKind::ConfigInvalid, "coupling k must be finite and >= 0");
    if (!(h > 0.0)) fail(ErrorKind::ConfigInvalid, "step h must be positive");
    if (!(h * k < 0.5)) fail(ErrorKind::UnstableStep, "h k >= 1/2");
  }
};

namespace detail {

// int_0^pi exp(2k - 2k cos(r/2)) dr
inline double kuramoto_J(double k) {
  return adaptive_integral([k](double r) { return std::exp(2.0 * k - 2.0 * k * std::cos(0.5 * r)); }, 0.0, kPi, 1e-15);
}

template <class F>
double bisect_increasing(F&& f, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// phi(r) = exp(2k (cos(r/2) - 1)), g(r) = 1 - (c/2) int Phi/phi - k int 1/phi,
// f(r) = int_0^r phi g.
class TorusProfile {
 public:
  TorusProfile(const TorusProfile&) = delete;
  TorusProfile& operator=(const TorusProfile&) = delete;

  double k = 0.0, c = 0.0;

  double phi(double r) const { return std::exp(2.0 * k * (std::cos(0.5 * r) - 1.0)); }
  double Phi(double r) const { return (*Phi_)(clampr(r)); }
  double Q(double r) const { return (*Q_)(clampr(r)); }
  double J(double r) const { return (*J_)(clampr(r)); }
  double g(double r) const { return 1.0 - 0.5 * c * Q(r) - k * J(r); }
  double fprime(double r) const { return phi(r) * g(r); }
  double fsecond(double r) const { return -k * std::sin(0.5 * r) * fprime(r) - 0.5 * c * Phi(r) - k; }
  double operator()(double r) const { return (*f_)(clampr(r)); }

  static std::shared_ptr<const TorusProfile> build(double k, double c, std::size_t cells) {
    std::shared_ptr<TorusProfile> p(new TorusProfile());
    p->k = k;
    p->c = c;
    auto phi = [k](double r) { return std::exp(2.0 * k * (std::cos(0.5 * r) - 1.0)); };
    auto Phi = std::make_shared<CumulativeTable>(phi, kPi, cells);
    auto Q = std::make_shared<CumulativeTable>([Phi, phi](double r) { return (*Phi)(r) / phi(r); }, kPi, cells);
    auto J = std::make_shared<CumulativeTable>([phi](double r) { return 1.0 / phi(r); }, kPi, cells);
    auto f = std::make_shared<CumulativeTable>(
        [=](double r) { return phi(r) * (1.0 - 0.5 * c * (*Q)(r) - k * (*J)(r)); }, kPi, cells);
    p->Phi_ = Phi;
    p->Q_ = Q;
    p->J_ = J;
    p->f_ = f;
    return p;
  }

 private:
  TorusProfile() = default;
  static double clampr(double r) { return std::clamp(r, 0.0, kPi); }
  std::shared_ptr<CumulativeTable> Phi_, Q_, J_, f_;
};

using TorusProfilePtr = std::shared_ptr<const TorusProfile>;

struct TorusRateBundle {
  double k = 0.0;
  double J = 0.0;                // int_0^pi exp(2k - 2k cos(r/2)) dr
  double condition_value = 0.0;  // 4 k J
  bool condition_holds = false;
  double Q = 0.0;                // int_0^pi Phi/phi
  double c_T = 0.0;              // 1 / (2 Q)
  double c_T_display = 0.0;      // nested integral with the exponent sign flipped
  double zeta = 0.0;             // 1 - k J
  double c_T_relaxed = 0.0;      // zeta / Q
  double prefactor = 0.0;        // 2 exp(2k), or 2 exp(2k) / zeta when relaxed
  bool relaxed = false;          // k_max < k < k0: profile uses c_T_relaxed
  double k_max = 0.0, k_max_residual = 0.0;
  double k0 = 0.0, k0_residual = 0.0;
  TorusProfilePtr profile;
  // Grid checks.
  bool concave = false;
  bool norm_equivalence = false;
  bool differential_inequality = false;
  double fsecond_zero = 0.0;
  double max_inequality_excess = 0.0;

  // Rate used by the contraction statement in force for this k.
  double rate() const { return relaxed ? c_T_relaxed : c_T; }
};

struct KuramotoThresholds {
  double k_max = 0.0, k_max_residual = 0.0;
  double k0 = 0.0, k0_residual = 0.0;
};

inline KuramotoThresholds kuramoto_thresholds() {
  KuramotoThresholds t;
  auto cond = [](double k) { return 4.0 * k * detail::kuramoto_J(k) - 1.0; };
  auto crit = [](double k) { return k * detail::kuramoto_J(k) - 1.0; };
  // J >= pi, so 4 k pi <= 1 and k pi <= 1 bracket the roots.
  t.k_max = detail::bisect_increasing(cond, 0.0, 1.0 / (4.0 * kPi));
  t.k_max_residual = std::abs(cond(t.k_max));
  t.k0 = detail::bisect_increasing(crit, 0.0, 1.0 / kPi);
  t.k0_residual = std::abs(crit(t.k0));
  return t;
}

inline TorusRateBundle kuramoto_constants(double k, std::size_t resolution = 4096) {
  if (!(k >= 0.0) || !std::isfinite(k)) fail(ErrorKind::ConfigInvalid, "coupling k must be finite and >= 0");
  TorusRateBundle b;
  b.k = k;
  b.J = detail::kuramoto_J(k);
  b.condition_value = 4.0 * k * b.J;
  b.condition_holds = b.condition_value <= 1.0;
  b.zeta = 1.0 - k * b.J;
  // Q = int_0^pi int_0^r exp(2k (cos(s/2) - cos(r/2))) ds dr
  auto inner = [k](double r, double sign) {
    return adaptive_integral(
        [=](double s) { return std::exp(sign * 2.0 * k * (std::cos(0.5 * s) - std::cos(0.5 * r))); }, 0.0, r, 1e-14);
  };
  b.Q = adaptive_integral([&](double r) { return inner(r, 1.0); }, 0.0, kPi, 1e-13);
  b.c_T = 1.0 / (2.0 * b.Q);
  b.c_T_display = 1.0 / (2.0 * adaptive_integral([&](double r) { return inner(r, -1.0); }, 0.0, kPi, 1e-13));
  b.c_T_relaxed = b.zeta > 0.0 ? b.zeta / b.Q : 0.0;
  b.relaxed = !b.condition_holds && b.zeta > 0.0;
  b.prefactor = b.relaxed ? 2.0 * std::exp(2.0 * k) / b.zeta : 2.0 * std::exp(2.0 * k);
  const auto th = kuramoto_thresholds();
  b.k_max = th.k_max;
  b.k_max_residual = th.k_max_residual;
  b.k0 = th.k0;
  b.k0_residual = th.k0_residual;
  b.profile = TorusProfile::build(k, b.rate(), resolution);
  const auto& f = *b.profile;
  b.fsecond_zero = f.fsecond(0.0);
  b.concave = b.norm_equivalence = b.differential_inequality = true;
  const double lower = b.relaxed ? 0.5 * b.zeta : 0.5;
  double prev = f.fprime(0.0);
  for (std::size_t i = 1; i <= resolution; ++i) {
    const double r = kPi * double(i) / double(resolution);
    const double fp = f.fprime(r), fr = f(r);
    if (fp > prev + 1e-12) b.concave = false;
    prev = fp;
    if (fr > r + 1e-12 || fr < lower * std::exp(-2.0 * k) * r - 1e-12) b.norm_equivalence = false;
    const double excess = 2.0 * (f.fsecond(r) - b.fsecond_zero) + 2.0 * k * std::sin(0.5 * r) * fp + b.rate() * fr;
    b.max_inequality_excess = std::max(b.max_inequality_excess, excess);
  }
  b.differential_inequality = b.max_inequality_excess <= 1e-6;
  return b;
}

// I(k, p) = int_0^pi exp(k p x + 2k - 2k cos(x/2)) dx
inline double kuramoto_I(double k, double p) {
  return adaptive_integral([=](double x) { return std::exp(k * p * x + 2.0 * k - 2.0 * k * std::cos(0.5 * x)); }, 0.0,
                           kPi, 1e-14);
}

// Roots of 1/k = (1 - p) I(k, p) in (0, 1).
inline FixedPointResult solve_kuramoto_fixed_point(double k, const FixedPointOptions& opt = {}) {
  if (!(k > 0.0)) fail(ErrorKind::ConfigInvalid, "k must be positive");
  return solve_fixed_point_h([k](double p) { return k * (1.0 - p) * kuramoto_I(k, p) - 1.0; }, opt);
}

// Atom 1/(k p) at 0 plus density exp(k p x + 2k - 2k cos(x/2)) on (0, pi],
// normalized.
struct TorusInvariantMeasure {
  double k = 0.0, p = 0.0;
  double I = 0.0;
  double atom_weight = 0.0;
  std::shared_ptr<CumulativeTable> cdf;

  double quantile_positive(double u) const {
    const double target = u * cdf->at_node(cdf->cells());
    double lo = 0.0, hi = kPi;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      if ((*cdf)(mid) < target)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }
};

inline TorusInvariantMeasure kuramoto_invariant_measure(double k, double p, std::size_t cells = 4096) {
  if (!(k > 0.0) || !(p > 0.0 && p < 1.0)) fail(ErrorKind::ConfigInvalid, "need k > 0 and p in (0,1)");
  TorusInvariantMeasure m;
  m.k = k;
  m.p = p;
  m.I = kuramoto_I(k, p);
  m.atom_weight = (1.0 / (k * p)) / (1.0 / (k * p) + m.I);
  m.cdf = std::make_shared<CumulativeTable>(
      [=](double x) { return std::exp(k * p * x + 2.0 * k - 2.0 * k * std::cos(0.5 * x)); }, kPi, cells);
  return m;
}

inline std::vector<double> sample_kuramoto_invariant(const TorusInvariantMeasure& m, std::size_t n,
                                                     std::uint64_t seed) {
  const CounterRng rng(seed, "kuramoto-invariant");
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto u = rng.uniforms(i, 0, 0);
    if (u[0] >= m.atom_weight) out[i] = m.quantile_positive(u[1]);
  }
  return out;
}

// dr = (2k sin(r/2) + 2k P(r > 0)) dt + 2 dW on [0, pi], sticky at 0 and
// reflecting at pi.
inline StickyModel kuramoto_sticky_model(double k, double h, std::size_t M) {
  StickyModel m;
  m.btilde = ScalarDrift::custom([k](double r) { return 2.0 * k * std::sin(0.5 * r); }, [k](double) { return k; }, k,
                                 "kuramoto");
  m.btilde.primitive = [k](double x) { return 4.0 * k * (1.0 - std::cos(0.5 * x)); };
  m.interaction = Interaction::constant(2.0 * k);
  m.h = h;
  m.M = M;
  m.upper = kPi;
  return m;
}

// O(M) form of (1/M) sum_j sin(x_i - x_j).
inline void kuramoto_drift(const std::vector<double>& x, double k, std::vector<double>& out, Executor& ex) {
  const std::size_t M = x.size();
  const double C = ex.sum(M, [&](std::size_t i) { return std::cos(x[i]); }) / double(M);
  const double S = ex.sum(M, [&](std::size_t i) { return std::sin(x[i]); }) / double(M);
  out.resize(M);
  ex.parallel_for(M, 4096, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out[i] = -k * (std::sin(x[i]) * C - std::cos(x[i]) * S);
  });
}

inline double order_parameter(const std::vector<double>& x, Executor& ex) {
  const double M = double(x.size());
  const double C = ex.sum(x.size(), [&](std::size_t i) { return std::cos(x[i]); }) / M;
  const double S = ex.sum(x.size(), [&](std::size_t i) { return std::sin(x[i]); }) / M;
  return std::hypot(C, S);
}

struct KuramotoRecord {
  double t = 0.0;
  double mean_ftilde_dist = 0.0;
  double dominator_mean_f = 0.0;
  double dominator_atom_fraction = 0.0;
  double order_parameter = 0.0;
  std::uint64_t breach_count = 0;
};

struct KuramotoOptions {
  double T = 20.0;
  double delta = 0.0;  // 0: half of min(1, 10 sqrt(h))
  double record_every = 0.1;
  std::uint64_t seed = 1;
  double floor_factor = 3.0;
  double breach_tol = 1e-9;
};

struct KuramotoResult {
  std::vector<KuramotoRecord> records;
  TorusRateBundle constants;
  double delta = 0.0;
  double mc_floor = 0.0;
  DecayFit fit, dom_fit;
  std::uint64_t breaches = 0, samples = 0;
  double breach_fraction = 0.0;
};

inline constexpr double kTorusEpsilon0 = 1.0;

inline KuramotoResult run_kuramoto_experiment(const KuramotoModel& model, std::vector<double> x,
                                              std::vector<double> y, const KuramotoOptions& opt, Executor& ex) {
  model.validate();
  if (x.size() != y.size() || x.empty()) fail(ErrorKind::LengthMismatch, "clouds must have equal positive size");
  KuramotoResult res;
  res.constants = kuramoto_constants(model.k);
  const auto& f = *res.constants.profile;
  const double h = model.h, k = model.k, sh = std::sqrt(h);
  res.delta = opt.delta > 0.0 ? opt.delta : 0.5 * std::min(kTorusEpsilon0, 10.0 * sh);
  if (res.delta > kTorusEpsilon0) fail(ErrorKind::DeltaTooLarge, "delta exceeds epsilon0 = 1 on the torus");
  const double delta = res.delta;
  const std::size_t M = x.size();
  res.mc_floor = 1.0 / std::sqrt(double(M));
  for (auto& v : x) v = wrap_angle(v);
  for (auto& v : y) v = wrap_angle(v);
  std::vector<double> dom(M), dir(M, 1.0), dx, dy;
  for (std::size_t i = 0; i < M; ++i) dom[i] = torus_distance(x[i], y[i]);
  EnvelopeParams env;
  env.h = h;
  env.delta = delta;
  env.bbar = [k](double r) { return 2.0 * k * std::sin(0.5 * r); };
  env.lambda = k;
  env.K = k;
  env.cap = kPi;
  const CounterRng rng(opt.seed, "kuramoto");
  std::uint64_t breaches = 0;
  auto record = [&](double t) {
    KuramotoRecord r;
    r.t = t;
    r.mean_ftilde_dist = ex.sum(M, [&](std::size_t i) { return f(torus_distance(x[i], y[i])); }) / double(M);
    r.dominator_mean_f = ex.sum(M, [&](std::size_t i) { return f(dom[i]); }) / double(M);
    r.dominator_atom_fraction = ex.sum(M, [&](std::size_t i) { return dom[i] == 0.0 ? 1.0 : 0.0; }) / double(M);
    r.order_parameter = order_parameter(x, ex);
    r.breach_count = breaches;
    res.records.push_back(r);
  };
  record(0.0);
  const std::uint64_t steps = std::uint64_t(std::llround(opt.T / h));
  const std::uint64_t stride = std::max<std::uint64_t>(1, std::uint64_t(std::llround(opt.record_every / h)));
  const std::size_t grain = 1024;
  std::vector<std::uint64_t> br((M + grain - 1) / grain);
  for (std::uint64_t s = 0; s < steps; ++s) {
    kuramoto_drift(x, k, dx, ex);
    kuramoto_drift(y, k, dy, ex);
    const double A = 2.0 * k * ex.sum(M, [&](std::size_t i) { return rc_profile(dom[i], delta); }) / double(M);
    std::fill(br.begin(), br.end(), 0);
    ex.parallel_for(M, grain, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const double z = torus_diff(x[i], y[i]);
        const double r = std::abs(z);
        if (r > 0.0) dir[i] = z > 0.0 ? 1.0 : -1.0;
        const double rc = rc_profile(r, delta), sc = sc_profile(r, delta);
        const double b1 = sh * component_normal(rng, i, s, 1);
        const double b2 = sh * component_normal(rng, i, s, 2);
        x[i] = wrap_angle(x[i] + h * dx[i] + rc * b1 + sc * b2);
        y[i] = wrap_angle(y[i] + h * dy[i] - rc * b1 + sc * b2);
        double next = envelope_step(dom[i], A, dir[i] * b1, env);
        const double rn = torus_distance(x[i], y[i]);
        if (rn > next + opt.breach_tol) {
          ++br[b / grain];
          next = rn;
        }
        dom[i] = next;
      }
    });
    for (auto v : br) breaches += v;
    res.samples += M;
    if ((s + 1) % stride == 0) record(double(s + 1) * h);
  }
  std::vector<double> t, v, dv;
  for (const auto& r : res.records) {
    t.push_back(r.t);
    v.push_back(r.mean_ftilde_dist);
    dv.push_back(r.dominator_mean_f);
  }
  const double floor = opt.floor_factor * res.mc_floor;
  res.fit = fit_decay_rate(t, v, floor);
  res.dom_fit = fit_decay_rate(t, dv, floor);
  res.breaches = breaches;
  res.breach_fraction = res.samples ? double(breaches) / double(res.samples) : 0.0;
  return res;
}

}  // namespace stickymv
