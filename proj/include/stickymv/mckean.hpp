#pragma once

// Particle approximation of the nonlinear SDE dX = (b * mu_t)(X) dt + dB, the
// sticky coupling of two such clouds, and the contraction and chaos runs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stickymv/coupling.hpp"
#include "stickymv/drift.hpp"
#include "stickymv/error.hpp"
#include "stickymv/metric.hpp"
#include "stickymv/parallel.hpp"
#include "stickymv/rng.hpp"
#include "stickymv/stats.hpp"

namespace stickymv {

// Same blocks and combination order as Executor::sum, on one thread.
template <class F>
double block_sum(std::size_t n, F&& f) {
  const std::size_t blocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> partial(blocks, 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    double s = 0.0;
    const std::size_t hi = std::min(n, (b + 1) * kReduceBlock);
    for (std::size_t i = b * kReduceBlock; i < hi; ++i) s += f(i);
    partial[b] = s;
  }
  return Executor::pairwise_sum(partial.data(), partial.size());
}

struct CloudState {
  int d = 1;
  std::vector<double> pos;  // M x d, row-major
  double time = 0.0;
  std::uint64_t step = 0;

  std::size_t M() const { return pos.size() / std::size_t(d); }
};

struct DriftOptions {
  std::size_t subsample = 0;  // 0: every partner
  bool noise = true;
};

namespace detail {

// Drift of particles [b, e) of a cloud of M particles given its per-dimension
// means and, for the sine family, mean cos / mean sin.
inline void drift_range(const double* pos, std::size_t M, const InteractionSpec& spec, const double* mean,
                        const double* mcos, const double* msin, double* out, std::size_t b, std::size_t e,
                        const DriftOptions& opt, const CounterRng* rng, std::uint64_t step) {
  const std::size_t d = std::size_t(spec.dim());
  const double L = spec.L();
  const auto& g = spec.gamma();
  if (std::holds_alternative<ZeroGamma>(g) || std::holds_alternative<SineGamma>(g)) {
    const double alpha = std::holds_alternative<SineGamma>(g) ? std::get<SineGamma>(g).alpha : 0.0;
    for (std::size_t i = b; i < e; ++i)
      for (std::size_t k = 0; k < d; ++k) {
        const double x = pos[i * d + k];
        double v = -L * (x - mean[k]);
        // (1/M) sum_j sin(x - x_j) = sin x * mean cos - cos x * mean sin
        if (alpha != 0.0) v += alpha * (std::sin(x) * mcos[k] - std::cos(x) * msin[k]);
        out[i * d + k] = v;
      }
    return;
  }
  std::vector<double> z(d), bz(d);
  for (std::size_t i = b; i < e; ++i) {
    for (std::size_t k = 0; k < d; ++k) out[i * d + k] = 0.0;
    const std::size_t partners = opt.subsample ? opt.subsample : M;
    for (std::size_t q = 0; q < partners; ++q) {
      std::size_t j = q;
      if (opt.subsample) j = std::min(M - 1, std::size_t(rng->uniform(i, step, 16 + std::uint32_t(q)) * double(M)));
      for (std::size_t k = 0; k < d; ++k) z[k] = pos[i * d + k] - pos[j * d + k];
      spec.b_eval(z.data(), bz.data());
      for (std::size_t k = 0; k < d; ++k) out[i * d + k] += bz[k];
    }
    for (std::size_t k = 0; k < d; ++k) out[i * d + k] /= double(partners);
  }
}

struct CloudMoments {
  std::vector<double> mean, mcos, msin;
};

template <class Sum>
CloudMoments cloud_moments(const double* pos, std::size_t M, int dim, bool trig, Sum&& sum) {
  const std::size_t d = std::size_t(dim);
  CloudMoments m;
  m.mean.assign(d, 0.0);
  m.mcos.assign(d, 0.0);
  m.msin.assign(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    m.mean[k] = sum(M, [&](std::size_t i) { return pos[i * d + k]; }) / double(M);
    if (trig) {
      m.mcos[k] = sum(M, [&](std::size_t i) { return std::cos(pos[i * d + k]); }) / double(M);
      m.msin[k] = sum(M, [&](std::size_t i) { return std::sin(pos[i * d + k]); }) / double(M);
    }
  }
  return m;
}

}  // namespace detail

// out_i = (1/M) sum_j b(x_i - x_j).
inline void cloud_drift(const double* pos, std::size_t M, const InteractionSpec& spec, double* out, Executor& ex,
                        const DriftOptions& opt = {}, const CounterRng* rng = nullptr, std::uint64_t step = 0) {
  const bool trig = std::holds_alternative<SineGamma>(spec.gamma());
  const auto m = detail::cloud_moments(pos, M, spec.dim(), trig, [&](std::size_t n, auto&& f) { return ex.sum(n, f); });
  ex.parallel_for(M, opt.subsample || !(trig || spec.pure_linear()) ? 64 : 4096, [&](std::size_t b, std::size_t e) {
    detail::drift_range(pos, M, spec, m.mean.data(), m.mcos.data(), m.msin.data(), out, b, e, opt, rng, step);
  });
}

// Single-threaded variant for small systems; identical arithmetic.
inline void cloud_drift_serial(const double* pos, std::size_t M, const InteractionSpec& spec, double* out,
                               const DriftOptions& opt = {}, const CounterRng* rng = nullptr, std::uint64_t step = 0) {
  const bool trig = std::holds_alternative<SineGamma>(spec.gamma());
  const auto m = detail::cloud_moments(pos, M, spec.dim(), trig, [](std::size_t n, auto&& f) { return block_sum(n, f); });
  detail::drift_range(pos, M, spec, m.mean.data(), m.mcos.data(), m.msin.data(), out, 0, M, opt, rng, step);
}

inline void check_cloud_step(const InteractionSpec& spec, double h) {
  if (!(h > 0.0)) fail(ErrorKind::ConfigInvalid, "step h must be positive");
  if (!(h * (spec.L() + spec.gamma_lip()) < 0.5))
    fail(ErrorKind::UnstableStep, "h (L + Lip) = " + std::to_string(h * (spec.L() + spec.gamma_lip())) + " >= 1/2");
}

// Standard normal for component g = i d + k on a slot; Box-Muller pairs
// cover two consecutive components.
inline double component_normal(const CounterRng& rng, std::uint64_t g, std::uint64_t step, std::uint32_t slot) {
  return rng.normals(g >> 1, step, slot)[g & 1];
}

inline CloudState step_cloud(const CloudState& s, const InteractionSpec& spec, double h, const CounterRng& rng,
                             Executor& ex, const DriftOptions& opt = {}) {
  check_cloud_step(spec, h);
  if (s.d != spec.dim() || s.pos.size() % std::size_t(s.d) != 0) fail(ErrorKind::ShapeMismatch, "cloud shape");
  const std::size_t M = s.M(), d = std::size_t(s.d);
  std::vector<double> drift(s.pos.size());
  cloud_drift(s.pos.data(), M, spec, drift.data(), ex, opt, &rng, s.step);
  CloudState out;
  out.d = s.d;
  out.pos.resize(s.pos.size());
  const double sh = std::sqrt(h);
  ex.parallel_for(M * d, 4096, [&](std::size_t b, std::size_t e) {
    for (std::size_t g = b; g < e; ++g)
      out.pos[g] = s.pos[g] + h * drift[g] + (opt.noise ? sh * component_normal(rng, g, s.step, 0) : 0.0);
  });
  out.time = s.time + h;
  out.step = s.step + 1;
  return out;
}

// Centered Gaussian cloud: N(0, scale^2 I) samples with the empirical mean
// removed exactly.
inline std::vector<double> centered_gaussian_cloud(std::size_t M, int d, double scale, std::uint64_t seed,
                                                   std::string_view stream) {
  const CounterRng rng(seed, stream);
  const std::size_t ud = std::size_t(d);
  std::vector<double> x(M * ud);
  for (std::size_t g = 0; g < x.size(); ++g) x[g] = scale * component_normal(rng, g, 0, 0);
  for (std::size_t k = 0; k < ud; ++k) {
    const double m = block_sum(M, [&](std::size_t i) { return x[i * ud + k]; }) / double(M);
    for (std::size_t i = 0; i < M; ++i) x[i * ud + k] -= m;
  }
  return x;
}

inline double default_delta(const InteractionSpec& spec, double h) {
  const double band = 10.0 * std::sqrt(h);
  const auto e0 = spec.epsilon0();
  return 0.5 * (e0 ? std::min(*e0, band) : band);
}

inline EnvelopeParams mckean_envelope(const InteractionSpec& spec, double h, double delta) {
  EnvelopeParams p;
  p.h = h;
  p.delta = delta;
  p.bbar = [spec](double r) { return evaluate_bbar(spec, r); };
  double lam = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 4096; ++i) {
    const double r = delta * i / 4096.0;
    lam = std::max(lam, spec.kappa(r) - spec.L());
  }
  // kappa is nonincreasing for the shipped families; the grid maximum
  // includes r -> 0 through kappa(0).
  p.lambda = std::max(lam, spec.kappa(0.0) - spec.L());
  p.K = spec.L() + spec.gamma_lip();
  return p;
}

struct CouplingState {
  CloudState x, y;
  std::vector<double> dom;  // dominating distances, one per pair
  std::vector<double> dir;  // last reflection direction per pair
  double delta = 0.0;
  std::uint64_t breaches = 0;
  std::uint64_t samples = 0;
};

inline CouplingState make_coupling(std::vector<double> x0, std::vector<double> y0, int d, double delta) {
  if (x0.size() != y0.size() || x0.empty() || x0.size() % std::size_t(d) != 0)
    fail(ErrorKind::ShapeMismatch, "coupled clouds must both be M x d");
  CouplingState s;
  s.x.d = s.y.d = d;
  s.x.pos = std::move(x0);
  s.y.pos = std::move(y0);
  s.delta = delta;
  const std::size_t M = s.x.M(), ud = std::size_t(d);
  s.dom.assign(M, 0.0);
  s.dir.assign(M * ud, 0.0);
  for (std::size_t i = 0; i < M; ++i) {
    double n2 = 0.0;
    for (std::size_t k = 0; k < ud; ++k) n2 += std::pow(s.x.pos[i * ud + k] - s.y.pos[i * ud + k], 2);
    s.dom[i] = std::sqrt(n2);
    s.dir[i * ud] = 1.0;
  }
  return s;
}

struct CouplingParams {
  double h = 1e-3;
  double breach_tol = 1e-9;
  DriftOptions drift;
};

inline void sticky_coupling_step(CouplingState& s, const InteractionSpec& spec, const CouplingParams& cp,
                                 const CounterRng& rng, Executor& ex) {
  check_cloud_step(spec, cp.h);
  const auto e0 = spec.epsilon0();
  if (!(s.delta > 0.0)) fail(ErrorKind::ConfigInvalid, "delta must be positive");
  if (e0 && s.delta > *e0 * (1.0 + 1e-12))
    fail(ErrorKind::DeltaTooLarge, "delta = " + std::to_string(s.delta) + " > epsilon0 = " + std::to_string(*e0));
  const std::size_t M = s.x.M(), d = std::size_t(s.x.d);
  const double h = cp.h, sh = std::sqrt(h);
  std::vector<double> dx(M * d), dy(M * d);
  cloud_drift(s.x.pos.data(), M, spec, dx.data(), ex, cp.drift, &rng, s.x.step);
  cloud_drift(s.y.pos.data(), M, spec, dy.data(), ex, cp.drift, &rng, s.y.step);
  const auto env = mckean_envelope(spec, h, s.delta);
  const double a = 2.0 * spec.gamma_sup(), lip = spec.gamma_lip();
  // Interaction mass from the dominators plus the finite-M mean mismatch.
  double mm = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double diff = ex.sum(M, [&](std::size_t i) { return s.x.pos[i * d + k] - s.y.pos[i * d + k]; }) / double(M);
    mm += diff * diff;
  }
  const double A = a * ex.sum(M, [&](std::size_t i) { return rc_profile(s.dom[i], s.delta); }) / double(M) +
                   spec.L() * std::sqrt(mm);
  const std::size_t grain = 1024;
  std::vector<std::uint64_t> br((M + grain - 1) / grain, 0);
  const std::uint64_t step = s.x.step;
  ex.parallel_for(M, grain, [&](std::size_t b, std::size_t e) {
    std::vector<double> z(d), b1(d), b2(d);
    for (std::size_t i = b; i < e; ++i) {
      double* xi = &s.x.pos[i * d];
      double* yi = &s.y.pos[i * d];
      double* ei = &s.dir[i * d];
      double r2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        z[k] = xi[k] - yi[k];
        r2 += z[k] * z[k];
      }
      const double r = std::sqrt(r2);
      if (r > 0.0)
        for (std::size_t k = 0; k < d; ++k) ei[k] = z[k] / r;
      const double rc = rc_profile(r, s.delta), sc = sc_profile(r, s.delta);
      double w = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        b1[k] = sh * component_normal(rng, i * d + k, step, 1);
        b2[k] = sh * component_normal(rng, i * d + k, step, 2);
        w += ei[k] * b1[k];
      }
      double rn2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        xi[k] += h * dx[i * d + k] + rc * b1[k] + sc * b2[k];
        yi[k] += h * dy[i * d + k] + rc * (b1[k] - 2.0 * ei[k] * w) + sc * b2[k];
        rn2 += (xi[k] - yi[k]) * (xi[k] - yi[k]);
      }
      const double perp = d > 1 ? lip * s.dom[i] + A : 0.0;
      double next = envelope_step(s.dom[i], A, w, env, perp);
      const double rn = std::sqrt(rn2);
      if (rn > next + cp.breach_tol) {
        ++br[b / grain];
        next = rn;
      }
      s.dom[i] = next;
    }
  });
  for (auto v : br) s.breaches += v;
  s.samples += M;
  s.x.time += h;
  s.y.time += h;
  ++s.x.step;
  ++s.y.step;
}

struct ContractionRecord {
  double t = 0.0;
  double wf_upper = 0.0;
  double w1_exact = std::numeric_limits<double>::quiet_NaN();
  double dom_mean_f = 0.0;
  std::uint64_t breach_count = 0;
};

struct ContractionOptions {
  double T = 10.0;
  double h = 1e-3;
  double delta = 0.0;  // 0: default_delta
  double record_every = 0.1;
  std::uint64_t seed = 1;
  double floor_factor = 3.0;  // fit window ends at floor_factor / sqrt(M)
  double breach_budget = 1e-3;
  bool override_gates = false;
  DriftOptions drift;
};

struct ContractionResult {
  std::vector<ContractionRecord> records;
  RateBundle rates;
  double delta = 0.0;
  double mc_floor = 0.0;
  DecayFit w1_fit, wf_fit, dom_fit;
  std::uint64_t breaches = 0, samples = 0;
  double breach_fraction = 0.0;
  bool breach_budget_ok = true;
  CouplingState final_state;
};

inline ContractionResult run_contraction_experiment(const InteractionSpec& spec, std::vector<double> mu0,
                                                    std::vector<double> nu0, const ContractionOptions& opt,
                                                    Executor& ex) {
  const int d = spec.dim();
  if (!opt.override_gates) {
    for (const auto* s : {&mu0, &nu0}) {
      const auto c = check_centering(*s, d);
      if (!c.pass)
        fail(ErrorKind::AssumptionGateFailed,
             "B3 centering: |mean| = " + std::to_string(c.mean_norm) + " > " + std::to_string(c.tolerance));
    }
  }
  ContractionResult res;
  res.rates = contraction_rates(spec);
  const auto& f = *res.rates.profile;
  res.delta = opt.delta > 0.0 ? opt.delta : default_delta(spec, opt.h);
  auto st = make_coupling(std::move(mu0), std::move(nu0), d, res.delta);
  const std::size_t M = st.x.M(), ud = std::size_t(d);
  res.mc_floor = 1.0 / std::sqrt(double(M));
  const CounterRng rng(opt.seed, "mkv-contraction");
  CouplingParams cp;
  cp.h = opt.h;
  cp.drift = opt.drift;
  auto record = [&] {
    ContractionRecord r;
    r.t = st.x.time;
    r.wf_upper = ex.sum(M, [&](std::size_t i) {
      double n2 = 0.0;
      for (std::size_t k = 0; k < ud; ++k) n2 += std::pow(st.x.pos[i * ud + k] - st.y.pos[i * ud + k], 2);
      return f(std::sqrt(n2));
    }) / double(M);
    if (d == 1) r.w1_exact = empirical_w1_1d(st.x.pos, st.y.pos);
    r.dom_mean_f = ex.sum(M, [&](std::size_t i) { return f(st.dom[i]); }) / double(M);
    r.breach_count = st.breaches;
    res.records.push_back(r);
  };
  record();
  const std::uint64_t steps = std::uint64_t(std::llround(opt.T / opt.h));
  const std::uint64_t stride = std::max<std::uint64_t>(1, std::uint64_t(std::llround(opt.record_every / opt.h)));
  for (std::uint64_t s = 1; s <= steps; ++s) {
    sticky_coupling_step(st, spec, cp, rng, ex);
    if (s % stride == 0) record();
  }
  std::vector<double> t, w1, wf, df;
  for (const auto& r : res.records) {
    t.push_back(r.t);
    w1.push_back(r.w1_exact);
    wf.push_back(r.wf_upper);
    df.push_back(r.dom_mean_f);
  }
  const double floor = opt.floor_factor * res.mc_floor;
  if (d == 1) res.w1_fit = fit_decay_rate(t, w1, floor);
  res.wf_fit = fit_decay_rate(t, wf, floor);
  res.dom_fit = fit_decay_rate(t, df, floor);
  res.breaches = st.breaches;
  res.samples = st.samples;
  res.breach_fraction = st.samples ? double(st.breaches) / double(st.samples) : 0.0;
  res.breach_budget_ok = res.breach_fraction <= opt.breach_budget;
  res.final_state = std::move(st);
  return res;
}

struct ChaosOptions {
  std::vector<std::size_t> Ns{8, 32, 128, 512};
  std::size_t M_ref = 10000;
  double T = 6.0;
  double h = 5e-3;
  double delta = 0.0;  // 0: default_delta
  double record_every = 0.1;
  std::uint64_t seed = 1;
  DriftOptions drift;
};

struct ChaosRecord {
  double t = 0.0;
  double l1_pi = 0.0;
  double fN_pi = 0.0;
};

struct ChaosPoint {
  std::size_t N = 0;
  std::size_t replicas = 0;
  double sup_l1 = 0.0;
  double sup_fN = 0.0;
  std::vector<ChaosRecord> series;
};

struct ChaosResult {
  std::vector<ChaosPoint> points;
  LinearFit slope_l1, slope_fN;
  double delta = 0.0;
  RateBundle rates;
  bool ratio_ok = true;  // every N <= M_ref / 10
};

// Couples N-particle systems to tagged blocks of one reference ensemble,
// using centered differences inside each block.
inline ChaosPoint run_chaos_for_n(const InteractionSpec& spec, const std::vector<double>& init, std::size_t N,
                                  const ChaosOptions& opt, double delta, const ContractionProfile& f, Executor& ex) {
  const std::size_t d = std::size_t(spec.dim());
  const std::size_t M = init.size() / d;
  if (N == 0 || N > M) fail(ErrorKind::ConfigInvalid, "N must lie in [1, M_ref]");
  check_cloud_step(spec, opt.h);
  const std::size_t R = M / N;
  ChaosPoint pt;
  pt.N = N;
  pt.replicas = R;
  std::vector<double> x = init;
  std::vector<double> y(init.begin(), init.begin() + std::ptrdiff_t(R * N * d));
  std::vector<double> dxv(M * d), dyv(R * N * d), dir(R * N * d, 0.0);
  for (std::size_t i = 0; i < R * N; ++i) dir[i * d] = 1.0;
  const CounterRng rng = CounterRng(opt.seed, "chaos").child(N);
  const double h = opt.h, sh = std::sqrt(h);
  auto block_mean = [&](const double* p, std::size_t k) {
    return block_sum(N, [&](std::size_t n) { return p[n * d + k]; }) / double(N);
  };
  auto record = [&](double t) {
    std::vector<double> l1(R), fn(R);
    ex.parallel_for(R, 16, [&](std::size_t b, std::size_t e) {
      for (std::size_t r = b; r < e; ++r) {
        std::span<const double> xs(&x[r * N * d], N * d), ys(&y[r * N * d], N * d);
        l1[r] = semimetric_l1_pi(xs, ys, int(d));
        fn[r] = semimetric_l1_pi(xs, ys, int(d), &f);
      }
    });
    ChaosRecord c;
    c.t = t;
    c.l1_pi = Executor::pairwise_sum(l1.data(), R) / double(R);
    c.fN_pi = Executor::pairwise_sum(fn.data(), R) / double(R);
    pt.series.push_back(c);
    pt.sup_l1 = std::max(pt.sup_l1, c.l1_pi);
    pt.sup_fN = std::max(pt.sup_fN, c.fN_pi);
  };
  record(0.0);
  const std::uint64_t steps = std::uint64_t(std::llround(opt.T / h));
  const std::uint64_t stride = std::max<std::uint64_t>(1, std::uint64_t(std::llround(opt.record_every / h)));
  for (std::uint64_t s = 0; s < steps; ++s) {
    cloud_drift(x.data(), M, spec, dxv.data(), ex, opt.drift, &rng, s);
    ex.parallel_for(R, 8, [&](std::size_t b, std::size_t e) {
      for (std::size_t r = b; r < e; ++r)
        cloud_drift_serial(&y[r * N * d], N, spec, &dyv[r * N * d], opt.drift, &rng, s);
    });
    ex.parallel_for(R, 8, [&](std::size_t b, std::size_t e) {
      std::vector<double> xm(d), ym(d), z(d), b1(d), b2(d);
      for (std::size_t r = b; r < e; ++r) {
        double* xb = &x[r * N * d];
        double* yb = &y[r * N * d];
        for (std::size_t k = 0; k < d; ++k) {
          xm[k] = block_mean(xb, k);
          ym[k] = block_mean(yb, k);
        }
        for (std::size_t n = 0; n < N; ++n) {
          const std::size_t i = r * N + n;
          double r2 = 0.0;
          for (std::size_t k = 0; k < d; ++k) {
            z[k] = (xb[n * d + k] - xm[k]) - (yb[n * d + k] - ym[k]);
            r2 += z[k] * z[k];
          }
          const double rr = std::sqrt(r2);
          double* ei = &dir[i * d];
          if (rr > 0.0)
            for (std::size_t k = 0; k < d; ++k) ei[k] = z[k] / rr;
          const double rc = rc_profile(rr, delta), sc = sc_profile(rr, delta);
          double w = 0.0;
          for (std::size_t k = 0; k < d; ++k) {
            b1[k] = sh * component_normal(rng, i * d + k, s, 1);
            b2[k] = sh * component_normal(rng, i * d + k, s, 2);
            w += ei[k] * b1[k];
          }
          for (std::size_t k = 0; k < d; ++k) {
            xb[n * d + k] += h * dxv[i * d + k] + rc * b1[k] + sc * b2[k];
            yb[n * d + k] += h * dyv[i * d + k] + rc * (b1[k] - 2.0 * ei[k] * w) + sc * b2[k];
          }
        }
      }
    });
    // Untagged reference particles move independently.
    for (std::size_t g = R * N * d; g < M * d; ++g) x[g] += h * dxv[g] + sh * component_normal(rng, g, s, 0);
    if ((s + 1) % stride == 0) record(double(s + 1) * h);
  }
  return pt;
}

inline ChaosResult run_chaos_experiment(const InteractionSpec& spec, const std::vector<double>& init,
                                        const ChaosOptions& opt, Executor& ex) {
  if (init.size() != opt.M_ref * std::size_t(spec.dim())) fail(ErrorKind::ShapeMismatch, "reference init must be M_ref x d");
  ChaosResult res;
  res.rates = contraction_rates(spec);
  res.delta = opt.delta > 0.0 ? opt.delta : default_delta(spec, opt.h);
  const auto e0 = spec.epsilon0();
  if (e0 && res.delta > *e0 * (1.0 + 1e-12)) fail(ErrorKind::DeltaTooLarge, "delta exceeds epsilon0");
  std::vector<double> ns, l1, fn;
  for (std::size_t N : opt.Ns) {
    if (N * 10 > opt.M_ref) res.ratio_ok = false;
    res.points.push_back(run_chaos_for_n(spec, init, N, opt, res.delta, *res.rates.profile, ex));
    ns.push_back(double(N));
    l1.push_back(res.points.back().sup_l1);
    fn.push_back(res.points.back().sup_fN);
  }
  if (ns.size() >= 2) {
    res.slope_l1 = loglog_fit(ns, l1);
    res.slope_fN = loglog_fit(ns, fn);
  }
  return res;
}

struct ChaosConstants {
  double C = 0.0;
  double C1 = 0.0, C2 = 0.0, C_tilde = 0.0;
  double kappa_plus = 0.0;
  bool gronwall_ok = true;
  std::optional<double> empirical_m2_sup;
};

// Second-moment bound from m2' <= -(2L - kappa+) m2 + |gamma| R0 + d and the
// drift-error constants built from it. C1 is stated for N >= 2.
inline ChaosConstants chaos_constants(const InteractionSpec& spec, double m2_0,
                                      std::optional<double> empirical_m2_sup = std::nullopt) {
  const auto radii = compute_radii(spec);
  ChaosConstants c;
  c.kappa_plus = spec.kappa_tail_sup(radii.R0);
  c.empirical_m2_sup = empirical_m2_sup;
  const double L = spec.L(), g = spec.gamma_sup();
  if (c.kappa_plus >= 2.0 * L) {
    c.gronwall_ok = false;
    if (!empirical_m2_sup)
      fail(ErrorKind::GronwallInapplicable, "kappa+ = " + std::to_string(c.kappa_plus) + " >= 2L");
    c.C = *empirical_m2_sup;
  } else {
    c.C = std::max(m2_0, (g * radii.R0 + double(spec.dim())) / (2.0 * L - c.kappa_plus));
  }
  const double sC = std::sqrt(c.C);
  c.C_tilde = 4.0 * L * sC + 8.0 * g + 2.0 * (std::sqrt(2.0) * sC * L + g);
  c.C2 = 0.5 * c.C_tilde;
  c.C1 = 2.0 * (4.0 * L * L * c.C + 16.0 * g * g) + 0.5 * (8.0 * c.C * L * L + 4.0 * g * g);
  return c;
}

struct MomentRecord {
  double t = 0.0;
  double m2 = 0.0;
};

// Tracks m2(t) = mean |X_i|^2 of a cloud.
inline std::vector<MomentRecord> run_moment_experiment(const InteractionSpec& spec, std::vector<double> init, double T,
                                                       double h, std::uint64_t seed, double record_every,
                                                       Executor& ex) {
  CloudState s;
  s.d = spec.dim();
  s.pos = std::move(init);
  const CounterRng rng(seed, "moment");
  std::vector<MomentRecord> out;
  auto rec = [&] {
    out.push_back({s.time, ex.sum(s.pos.size(), [&](std::size_t g) { return s.pos[g] * s.pos[g]; }) / double(s.M())});
  };
  rec();
  const std::uint64_t steps = std::uint64_t(std::llround(T / h));
  const std::uint64_t stride = std::max<std::uint64_t>(1, std::uint64_t(std::llround(record_every / h)));
  for (std::uint64_t k = 1; k <= steps; ++k) {
    s = step_cloud(s, spec, h, rng, ex);
    if (k % stride == 0) rec();
  }
  return out;
}

}  // namespace stickymv
