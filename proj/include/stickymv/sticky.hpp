#pragma once

// One-dimensional sticky SDEs dr = (btilde(r) + P_t(g)) dt + 2 theta(r) dW on
// [0, inf), with P_t the empirical law of an ensemble.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "stickymv/error.hpp"
#include "stickymv/metric.hpp"
#include "stickymv/parallel.hpp"
#include "stickymv/rng.hpp"
#include "stickymv/scalar_drift.hpp"

namespace stickymv {

// g(r) = a 1{r > 0} unless a general g is supplied.
struct Interaction {
  double a = 0.0;
  std::function<double(double)> g;
  double sup = 0.0;

  static Interaction constant(double a) {
    if (!(a >= 0.0) || !std::isfinite(a)) fail(ErrorKind::ConfigInvalid, "interaction a must be finite and >= 0");
    Interaction i;
    i.a = a;
    i.sup = a;
    return i;
  }

  // Checked on a grid: nonnegative, nondecreasing, bounded by sup.
  static Interaction general(std::function<double(double)> g, double sup, double grid_max = 100.0) {
    Interaction i;
    i.g = std::move(g);
    i.sup = sup;
    double prev = i.g(0.0);
    if (prev < 0.0) fail(ErrorKind::ConfigInvalid, "interaction g must be nonnegative");
    for (int k = 1; k <= 10000; ++k) {
      const double v = i.g(grid_max * k / 10000.0);
      if (v < prev || v > sup || !std::isfinite(v))
        fail(ErrorKind::ConfigInvalid, "interaction g must be nondecreasing and bounded by its declared sup");
      prev = v;
    }
    return i;
  }

  bool is_constant() const { return !g; }
  double operator()(double r) const { return g ? g(r) : (r > 0.0 ? a : 0.0); }
};

enum class Scheme { indicator, regularized };

// bridge: Brownian-bridge hit test plus sticky release from 0.
// clamp: literal Euler step followed by max(0, .).
enum class ZeroBoundary { bridge, clamp };

struct StickyModel {
  ScalarDrift btilde = ScalarDrift::linear(-1.0);
  Interaction interaction = Interaction::constant(0.0);
  Scheme scheme = Scheme::indicator;
  int n = 100;
  double h = 1e-3;
  std::size_t M = 100000;
  ZeroBoundary boundary = ZeroBoundary::bridge;
  double upper = std::numeric_limits<double>::infinity();  // reflecting end, if finite

  double theta(double r) const {
    if (scheme == Scheme::indicator) return r > 0.0 ? 1.0 : 0.0;
    return std::min(1.0, double(n) * r);
  }
};

struct EnsembleState {
  std::vector<double> values;
  double time = 0.0;
  std::uint64_t step = 0;

  std::size_t zeros() const { return std::size_t(std::count(values.begin(), values.end(), 0.0)); }
  double atom_fraction() const { return values.empty() ? 0.0 : double(zeros()) / double(values.size()); }
};

namespace detail {

// P(Z > u sqrt(8h)) for the release landing variable: e^{-u^2}/erfc(u) - sqrt(pi) u.
inline double landing_tail(double u) {
  if (u <= 0.0) return 1.0;
  if (u < 25.0) return std::exp(-u * u) / std::erfc(u) - std::sqrt(std::numbers::pi) * u;
  // 1/erfcx(u) = sqrt(pi) u / (1 - e), e from the asymptotic series.
  const double v = 1.0 / (2.0 * u * u);
  const double e = v * (1.0 - v * (3.0 - v * (15.0 - v * (105.0 - 945.0 * v))));
  return std::sqrt(std::numbers::pi) * u * e / (1.0 - e);
}

// Effective probability that a particle at 0 with drift mu leaves within h.
inline double release_probability(double mu, double h) {
  if (mu <= 0.0) return 0.0;
  const double s = mu * std::sqrt(h / 2.0);
  // 1 - e^{s^2} erfc(s), written to avoid overflow.
  const double q = s < 20.0 ? 1.0 - std::exp(s * s) * std::erfc(s)
                            : 1.0 - 1.0 / (s * std::sqrt(std::numbers::pi)) * (1.0 - 0.5 / (s * s));
  // Conditional on the Euler candidate from 0 being positive.
  const double py = 0.5 * std::erfc(-mu * std::sqrt(h) / (2.0 * std::numbers::sqrt2));
  return std::min(1.0, q / py);
}

// Landing point min(Z, y); Z is only resolved when it falls below y.
inline double landing(double U, double y, double h) {
  const double scale = std::sqrt(8.0 * h);
  const double uy = y / scale;
  if (landing_tail(uy) >= U) return y;
  // Safeguarded Newton on tail(u) = U. The bracket depends on U only, so the
  // result is monotone in y even at rounding level.
  double lo = 0.0, hi = 1.0;
  while (landing_tail(hi) >= U) hi *= 2.0;
  double u = 0.5 * hi;
  for (int it = 0; it < 100; ++it) {
    const double F = landing_tail(u) - U;
    if (F > 0.0) lo = u;
    else hi = u;
    const double E = F + U + std::sqrt(std::numbers::pi) * u;  // 1/erfcx(u)
    const double dF = -2.0 * u * E + 2.0 / std::sqrt(std::numbers::pi) * E * E - std::sqrt(std::numbers::pi);
    double next = dF < 0.0 ? u - F / dF : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - u) <= 1e-14 * std::max(u, 1e-300) || hi - lo <= 1e-15 * hi) {
      u = next;
      break;
    }
    u = next;
  }
  return std::min(y, u * scale);
}

}  // namespace detail

// Empirical mean of g over the state, computed in a fixed order.
inline double empirical_interaction(const std::vector<double>& values, const Interaction& g, Executor& ex) {
  if (values.empty()) return 0.0;
  if (g.is_constant()) {
    const double nonzero = ex.sum(values.size(), [&](std::size_t i) { return values[i] > 0.0 ? 1.0 : 0.0; });
    return g.a * nonzero / double(values.size());
  }
  return ex.sum(values.size(), [&](std::size_t i) { return g(values[i]); }) / double(values.size());
}

inline void check_step(const StickyModel& m) {
  if (!(m.h > 0.0)) fail(ErrorKind::ConfigInvalid, "step h must be positive");
  if (!(m.h * m.btilde.lipschitz < 0.5))
    fail(ErrorKind::UnstableStep, "h * Lip(btilde) = " + std::to_string(m.h * m.btilde.lipschitz) + " >= 1/2");
  if (m.scheme == Scheme::regularized && m.n < 1) fail(ErrorKind::ConfigInvalid, "regularization n must be >= 1");
}

// Per-step quantities shared by every particle.
struct StepContext {
  double mu = 0.0;       // empirical interaction on the pre-step state
  double release = 0.0;  // release probability from 0 at drift mu
};

inline StepContext make_context(double mu, double h) { return {mu, detail::release_probability(mu, h)}; }

// Gaussian increment of particle i: one Box-Muller pair per two particles.
inline double particle_normal(const CounterRng& rng, std::uint64_t i, std::uint64_t step) {
  return rng.normals(i >> 1, step, 0)[i & 1];
}

// One step for particle i with standard normal xi. Slot 1 holds the bridge
// and release uniforms, slot 2 the landing uniform.
inline double sticky_particle_step_free(double x, double xi, const StepContext& ctx, const StickyModel& m,
                                        const CounterRng& rng, std::uint64_t i, std::uint64_t step) {
  const double h = m.h, sh = std::sqrt(h), mu = ctx.mu;
  if (m.boundary == ZeroBoundary::clamp) {
    const double y = x + h * ((x > 0.0 ? m.btilde(x) : 0.0) + mu) + 2.0 * m.theta(x) * sh * xi;
    return y > 0.0 ? y : 0.0;
  }
  if (x == 0.0) {
    if (mu <= 0.0) return 0.0;
    const auto vw = rng.uniforms(i, step, 1);
    if (vw[1] >= ctx.release) return 0.0;
    const double y = h * mu + 2.0 * sh * xi;
    if (y <= 0.0) return 0.0;
    return detail::landing(rng.uniform(i, step, 2), y, h);
  }
  const double th = m.theta(x);
  const double y = x + h * (m.btilde(x) + mu) + 2.0 * th * sh * xi;
  if (y <= 0.0) return 0.0;
  const double arg = 2.0 * x * y / (4.0 * th * th * h);
  // Uniforms are at least 2^-54, so exp(-arg) below that never fires.
  if (arg > 37.5) return y;
  const auto vw = rng.uniforms(i, step, 1);
  if (vw[0] >= std::exp(-arg)) return y;
  if (vw[1] >= ctx.release) return 0.0;
  return detail::landing(rng.uniform(i, step, 2), y, h);
}

// Mirror at a finite upper end, then clamp into [0, upper].
inline double sticky_particle_step(double x, double xi, const StepContext& ctx, const StickyModel& m,
                                   const CounterRng& rng, std::uint64_t i, std::uint64_t step) {
  double y = sticky_particle_step_free(x, xi, ctx, m, rng, i, step);
  if (y > m.upper) y = std::clamp(2.0 * m.upper - y, 0.0, m.upper);
  return y;
}

inline void step_ensemble_into(const EnsembleState& in, EnsembleState& out, const StickyModel& m,
                               const CounterRng& rng, Executor& ex) {
  check_step(m);
  const StepContext ctx = make_context(empirical_interaction(in.values, m.interaction, ex), m.h);
  out.values.resize(in.values.size());
  const std::uint64_t step = in.step;
  ex.parallel_for(in.values.size(), 4096, [&](std::size_t b, std::size_t e) {
    std::size_t i = b;
    if (i & 1) {
      out.values[i] = sticky_particle_step(in.values[i], particle_normal(rng, i, step), ctx, m, rng, i, step);
      ++i;
    }
    for (; i + 1 < e; i += 2) {
      const auto z = rng.normals(i >> 1, step, 0);
      out.values[i] = sticky_particle_step(in.values[i], z[0], ctx, m, rng, i, step);
      out.values[i + 1] = sticky_particle_step(in.values[i + 1], z[1], ctx, m, rng, i + 1, step);
    }
    if (i < e) out.values[i] = sticky_particle_step(in.values[i], particle_normal(rng, i, step), ctx, m, rng, i, step);
  });
  out.time = in.time + m.h;
  out.step = in.step + 1;
}

inline EnsembleState step_ensemble(const EnsembleState& in, const StickyModel& m, const CounterRng& rng, Executor& ex) {
  EnsembleState out;
  step_ensemble_into(in, out, m, rng, ex);
  return out;
}

struct StickyRecord {
  double t = 0.0;
  double atom_fraction = 0.0;
  double mean_r = 0.0;
  double mean_f_r = 0.0;
  double q10 = 0.0, q50 = 0.0, q90 = 0.0;
};

struct SimulationOptions {
  double T = 1.0;
  double record_every = 0.1;
  std::uint64_t seed = 1;
  std::string stream = "sticky";
  const ContractionProfile* profile = nullptr;  // for mean f(r)
};

struct SimulationResult {
  std::vector<StickyRecord> records;
  EnsembleState final_state;
};

inline double quantile_inplace(std::vector<double>& v, double q) {
  const std::size_t k = std::size_t(std::llround(q * double(v.size() - 1)));
  std::nth_element(v.begin(), v.begin() + std::ptrdiff_t(k), v.end());
  return v[k];
}

inline StickyRecord record_of(const EnsembleState& s, const ContractionProfile* profile, Executor& ex) {
  StickyRecord r;
  const std::size_t M = s.values.size();
  r.t = s.time;
  r.atom_fraction = ex.sum(M, [&](std::size_t i) { return s.values[i] == 0.0 ? 1.0 : 0.0; }) / double(M);
  r.mean_r = ex.sum(M, [&](std::size_t i) { return s.values[i]; }) / double(M);
  r.mean_f_r = profile ? ex.sum(M, [&](std::size_t i) { return (*profile)(s.values[i]); }) / double(M)
                       : std::numeric_limits<double>::quiet_NaN();
  std::vector<double> tmp(s.values);
  r.q10 = quantile_inplace(tmp, 0.1);
  r.q50 = quantile_inplace(tmp, 0.5);
  r.q90 = quantile_inplace(tmp, 0.9);
  return r;
}

inline std::uint64_t steps_for(double T, double h) { return std::uint64_t(std::llround(T / h)); }

inline SimulationResult simulate(const StickyModel& m, std::vector<double> init, const SimulationOptions& opt,
                                 Executor& ex) {
  check_step(m);
  for (double v : init)
    if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorKind::ConfigInvalid, "initial values must be finite and >= 0");
  const CounterRng rng(opt.seed, opt.stream);
  EnsembleState cur, nxt;
  cur.values = std::move(init);
  const std::uint64_t steps = steps_for(opt.T, m.h);
  const std::uint64_t stride = std::max<std::uint64_t>(1, steps_for(opt.record_every, m.h));
  SimulationResult res;
  res.records.push_back(record_of(cur, opt.profile, ex));
  for (std::uint64_t s = 0; s < steps; ++s) {
    step_ensemble_into(cur, nxt, m, rng, ex);
    std::swap(cur, nxt);
    if (cur.step % stride == 0) res.records.push_back(record_of(cur, opt.profile, ex));
  }
  res.final_state = std::move(cur);
  return res;
}

struct ComparisonReport {
  double max_gap = 0.0;
  std::size_t violations = 0;
  std::uint64_t steps = 0;
  std::size_t particles = 0;
};

inline void check_order(const StickyModel& lo, const StickyModel& hi, const std::vector<double>& init_lo,
                        const std::vector<double>& init_hi, double grid_max = 50.0) {
  if (lo.h != hi.h || lo.scheme != hi.scheme || lo.boundary != hi.boundary || lo.n != hi.n)
    fail(ErrorKind::ConfigInvalid, "compared models must share step, scheme and boundary rule");
  if (lo.scheme != Scheme::indicator) fail(ErrorKind::ConfigInvalid, "pathwise comparison needs the indicator scheme");
  for (int k = 0; k <= 20000; ++k) {
    const double r = grid_max * k / 20000.0;
    if (lo.btilde(r) > hi.btilde(r)) fail(ErrorKind::DriftOrderViolated, "btilde_lo > btilde_hi at r = " + std::to_string(r));
    if (lo.interaction(r) > hi.interaction(r)) fail(ErrorKind::DriftOrderViolated, "g_lo > g_hi at r = " + std::to_string(r));
  }
  if (init_lo.size() != init_hi.size()) fail(ErrorKind::LengthMismatch, "initial ensembles differ in size");
  for (std::size_t i = 0; i < init_lo.size(); ++i)
    if (init_lo[i] > init_hi[i]) fail(ErrorKind::DriftOrderViolated, "initial values not ordered at index " + std::to_string(i));
}

// Both ensembles consume the same counters, i.e. identical noise.
inline ComparisonReport coupled_comparison_run(const StickyModel& lo, const StickyModel& hi, std::vector<double> init_lo,
                                               std::vector<double> init_hi, double T, std::uint64_t seed, Executor& ex) {
  check_order(lo, hi, init_lo, init_hi);
  check_step(lo);
  check_step(hi);
  const CounterRng rng(seed, "comparison");
  EnsembleState a, b, a2, b2;
  a.values = std::move(init_lo);
  b.values = std::move(init_hi);
  ComparisonReport rep;
  rep.particles = a.values.size();
  rep.steps = steps_for(T, lo.h);
  const std::size_t M = a.values.size();
  for (std::uint64_t s = 0; s < rep.steps; ++s) {
    step_ensemble_into(a, a2, lo, rng, ex);
    step_ensemble_into(b, b2, hi, rng, ex);
    std::swap(a, a2);
    std::swap(b, b2);
    const std::size_t blocks = (M + kReduceBlock - 1) / kReduceBlock;
    std::vector<double> gap(blocks, 0.0), cnt(blocks, 0.0);
    ex.parallel_for(blocks, 1, [&](std::size_t b0, std::size_t b1) {
      for (std::size_t k = b0; k < b1; ++k)
        for (std::size_t i = k * kReduceBlock; i < std::min(M, (k + 1) * kReduceBlock); ++i) {
          const double g = a.values[i] - b.values[i];
          if (g > 0.0) {
            gap[k] = std::max(gap[k], g);
            cnt[k] += 1.0;
          }
        }
    });
    for (std::size_t k = 0; k < blocks; ++k) {
      rep.max_gap = std::max(rep.max_gap, gap[k]);
      rep.violations += std::size_t(cnt[k]);
    }
  }
  return rep;
}

}  // namespace stickymv
