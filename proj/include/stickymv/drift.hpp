#pragma once

// Interaction drifts b(z) = -L z + gamma(z), the envelope kappa and the
// dissipativity radii.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "stickymv/error.hpp"
#include "stickymv/quadrature.hpp"
#include "stickymv/rng.hpp"

namespace stickymv {

struct ZeroGamma {};

// alpha * sin applied componentwise; kappa == alpha.
struct SineGamma {
  double alpha = 0.0;
};

// alpha * z / (1 + |z|^2).
struct RationalGamma {
  double alpha = 0.0;
};

// Radial field psi(|z|) z/|z| with linear interpolation in r and a
// user-declared kappa table (constant extrapolation on both).
struct TabulatedGamma {
  std::vector<double> r, psi;
  std::vector<double> kappa_r, kappa;
};

using GammaModel = std::variant<ZeroGamma, SineGamma, RationalGamma, TabulatedGamma>;

namespace detail {

inline double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = std::size_t(it - xs.begin()) - 1;
  const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
  return ys[i] + t * (ys[i + 1] - ys[i]);
}

inline void check_table(const std::vector<double>& xs, const std::vector<double>& ys, const char* what) {
  if (xs.size() < 2 || xs.size() != ys.size())
    fail(ErrorKind::ConfigInvalid, std::string(what) + ": need two or more (r, value) pairs of equal length");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]))
      fail(ErrorKind::ConfigInvalid, std::string(what) + ": non-finite entry");
    if (i > 0 && !(xs[i] > xs[i - 1])) fail(ErrorKind::ConfigInvalid, std::string(what) + ": r not increasing");
  }
  if (xs.front() < 0.0) fail(ErrorKind::ConfigInvalid, std::string(what) + ": negative r");
}

}  // namespace detail

class InteractionSpec {
 public:
  InteractionSpec(double L, int dim, GammaModel gamma) : L_(L), dim_(dim), gamma_(std::move(gamma)) {
    if (!(L > 0.0) || !std::isfinite(L)) fail(ErrorKind::ConfigInvalid, "L must be positive and finite");
    if (dim < 1) fail(ErrorKind::ConfigInvalid, "dimension must be >= 1");
    if (auto* s = std::get_if<SineGamma>(&gamma_); s && !(std::isfinite(s->alpha) && s->alpha >= 0.0))
      fail(ErrorKind::ConfigInvalid, "sine alpha must be finite and >= 0");
    if (auto* s = std::get_if<RationalGamma>(&gamma_); s && !(std::isfinite(s->alpha) && s->alpha >= 0.0))
      fail(ErrorKind::ConfigInvalid, "rational alpha must be finite and >= 0");
    if (auto* t = std::get_if<TabulatedGamma>(&gamma_)) {
      detail::check_table(t->r, t->psi, "gamma table");
      detail::check_table(t->kappa_r, t->kappa, "kappa table");
    }
  }

  double L() const { return L_; }
  int dim() const { return dim_; }
  const GammaModel& gamma() const { return gamma_; }

  std::string kind() const {
    return std::visit(
        [](const auto& g) -> std::string {
          using G = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<G, ZeroGamma>) return "zero";
          else if constexpr (std::is_same_v<G, SineGamma>) return "sine";
          else if constexpr (std::is_same_v<G, RationalGamma>) return "rational";
          else return "tabulated";
        },
        gamma_);
  }

  bool pure_linear() const { return gamma_sup() == 0.0; }

  // out = gamma(z), both of length dim.
  void gamma_eval(const double* z, double* out) const {
    std::visit(
        [&](const auto& g) {
          using G = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<G, ZeroGamma>) {
            for (int k = 0; k < dim_; ++k) out[k] = 0.0;
          } else if constexpr (std::is_same_v<G, SineGamma>) {
            for (int k = 0; k < dim_; ++k) out[k] = g.alpha * std::sin(z[k]);
          } else if constexpr (std::is_same_v<G, RationalGamma>) {
            double n2 = 0.0;
            for (int k = 0; k < dim_; ++k) n2 += z[k] * z[k];
            const double s = g.alpha / (1.0 + n2);
            for (int k = 0; k < dim_; ++k) out[k] = s * z[k];
          } else {
            double n2 = 0.0;
            for (int k = 0; k < dim_; ++k) n2 += z[k] * z[k];
            const double r = std::sqrt(n2);
            const double s = r > 0.0 ? detail::interp(g.r, g.psi, r) / r : 0.0;
            for (int k = 0; k < dim_; ++k) out[k] = s * z[k];
          }
        },
        gamma_);
  }

  // out = b(z) = -L z + gamma(z).
  void b_eval(const double* z, double* out) const {
    gamma_eval(z, out);
    for (int k = 0; k < dim_; ++k) out[k] -= L_ * z[k];
  }

  double kappa(double r) const {
    return std::visit(
        [&](const auto& g) -> double {
          using G = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<G, ZeroGamma>) return 0.0;
          else if constexpr (std::is_same_v<G, SineGamma>) return g.alpha;
          // Valid for all pairs: |<x-y, gamma(x)-gamma(y)>| <= alpha |x-y|^2 from the
          // Lipschitz bound, and <= alpha |x-y| from |gamma| <= alpha/2.
          else if constexpr (std::is_same_v<G, RationalGamma>) return r <= 1.0 ? g.alpha : g.alpha / r;
          else return detail::interp(g.kappa_r, g.kappa, r);
        },
        gamma_);
  }

  // Sup of kappa over [H, inf).
  double kappa_tail_sup(double H) const {
    return std::visit(
        [&](const auto& g) -> double {
          using G = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<G, ZeroGamma>) return 0.0;
          else if constexpr (std::is_same_v<G, SineGamma>) return g.alpha;
          else if constexpr (std::is_same_v<G, RationalGamma>) return H <= 1.0 ? g.alpha : g.alpha / H;
          else {
            double m = detail::interp(g.kappa_r, g.kappa, H);
            for (std::size_t i = 0; i < g.kappa_r.size(); ++i)
              if (g.kappa_r[i] >= H) m = std::max(m, g.kappa[i]);
            return m;
          }
        },
        gamma_);
  }

  // sup |gamma| (Euclidean norm).
  double gamma_sup() const {
    return std::visit(
        [&](const auto& g) -> double {
          using G = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<G, ZeroGamma>) return 0.0;
          else if constexpr (std::is_same_v<G, SineGamma>) return g.alpha * std::sqrt(double(dim_));
          else if constexpr (std::is_same_v<G, RationalGamma>) return 0.5 * g.alpha;
          else {
            double m = 0.0;
            for (double p : g.psi) m = std::max(m, std::abs(p));
            return m;
          }
        },
        gamma_);
  }

  double gamma_lip() const {
    return std::visit(
        [&](const auto& g) -> double {
          using G = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<G, ZeroGamma>) return 0.0;
          else if constexpr (std::is_same_v<G, SineGamma>) return g.alpha;
          else if constexpr (std::is_same_v<G, RationalGamma>) return g.alpha;
          else {
            double m = 0.0;
            for (std::size_t i = 0; i + 1 < g.r.size(); ++i) {
              m = std::max(m, std::abs(g.psi[i + 1] - g.psi[i]) / (g.r[i + 1] - g.r[i]));
              if (g.r[i + 1] > 0.0) m = std::max(m, std::abs(g.psi[i + 1]) / g.r[i + 1]);
            }
            if (g.r.front() > 0.0) m = std::max(m, std::abs(g.psi.front()) / g.r.front());
            return m;
          }
        },
        gamma_);
  }

  // 2 |gamma|_inf / |gamma|_Lip; empty for gamma == 0.
  std::optional<double> epsilon0() const {
    const double lip = gamma_lip();
    if (gamma_sup() == 0.0 || lip == 0.0) return std::nullopt;
    return 2.0 * gamma_sup() / lip;
  }

 private:
  double L_;
  int dim_;
  GammaModel gamma_;
};

inline double evaluate_bbar(const InteractionSpec& spec, double r) { return (spec.kappa(r) - spec.L()) * r; }

struct RadiiGrid {
  std::size_t points = 4096;
  double extent = 0.0;          // 0: 4 max(R0 guess, 1)
  double horizon_factor = 10.0;
  double tol = 1e-12;
};

struct DissipativityProfile {
  double R0 = 0.0;
  double R1 = 0.0;
  std::optional<double> epsilon0;
  double b2_bound = 0.0;
  double gamma_sup = 0.0;
  bool b2_satisfied = false;
  double grid_step = 0.0;
  double horizon = 0.0;
  bool R1_widened = false;
};

// Radii for a scalar drift beta(r) on a grid to `horizon`, with
// tail_ratio(H) >= sup_{r >= H} beta(r)/r certifying the rest.
struct ScalarRadii {
  double R0 = 0.0, R1 = 0.0, step = 0.0, horizon = 0.0;
  bool widened = false;
};

template <class Beta, class TailRatio>
ScalarRadii scalar_radii(Beta&& beta, TailRatio&& tail_ratio, double extent, std::size_t points,
                         double horizon_factor) {
  ScalarRadii out;
  out.step = extent / double(points - 1);
  out.horizon = extent * horizon_factor;
  const std::size_t n = std::size_t(std::llround(out.horizon / out.step)) + 1;
  const double tail = tail_ratio(out.horizon);
  if (!(tail < 0.0)) fail(ErrorKind::NoDissipativity, "drift tail ratio " + std::to_string(tail) + " is not negative");

  std::vector<double> ratio(n);
  std::size_t last_bad = 0;
  bool any_bad = false;
  for (std::size_t i = 1; i < n; ++i) {
    const double r = out.step * double(i);
    const double v = beta(r);
    ratio[i] = v / r;
    if (!(v < 0.0)) {
      last_bad = i;
      any_bad = true;
    }
  }
  if (any_bad && last_bad + 1 >= n) fail(ErrorKind::NoDissipativity, "drift nonnegative up to the horizon");
  out.R0 = any_bad ? out.step * double(last_bad + 1) : 0.0;

  // Suffix supremum of beta(r)/r including the analytic tail.
  std::vector<double> suffix(n + 1, tail);
  for (std::size_t i = n; i-- > 1;) suffix[i] = std::max(suffix[i + 1], ratio[i]);
  auto sup_from = [&](double s) {
    std::size_t i = std::size_t(std::ceil(s / out.step - 1e-12));
    i = std::max<std::size_t>(i, 1);
    double m = i <= n ? suffix[std::min(i, n)] : tail;
    if (s > 0.0) m = std::max(m, beta(s) / s);
    return m;
  };
  auto ok = [&](double s) { return sup_from(s) <= -4.0 / (s * (s - out.R0)); };

  double lo = out.R0, hi = std::max(out.R0 + out.step, 1e-6);
  while (!ok(hi)) {
    lo = hi;
    hi = out.R0 + 2.0 * (hi - out.R0);
    if (hi > out.horizon) fail(ErrorKind::BisectionFailure, "no R1 within the horizon");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ok(mid)) hi = mid;
    else lo = mid;
  }
  out.R1 = hi;
  if (out.R1 <= out.R0 + out.step) {
    out.R1 = out.R0 + out.step;
    out.widened = true;
  }
  return out;
}

inline DissipativityProfile compute_radii(const InteractionSpec& spec, const RadiiGrid& grid = {}) {
  double extent = grid.extent;
  if (extent <= 0.0) {
    double guess = 0.0;
    for (int i = 1; i <= 1000; ++i) {
      const double r = 0.1 * i;
      if (spec.kappa(r) >= spec.L()) guess = r;
    }
    extent = 4.0 * std::max(guess, 1.0);
  }
  const auto radii = scalar_radii([&](double r) { return evaluate_bbar(spec, r); },
                                  [&](double H) { return spec.kappa_tail_sup(H) - spec.L(); }, extent, grid.points,
                                  grid.horizon_factor);
  DissipativityProfile p;
  p.R0 = radii.R0;
  p.R1 = radii.R1;
  p.grid_step = radii.step;
  p.horizon = radii.horizon;
  p.R1_widened = radii.widened;
  p.epsilon0 = spec.epsilon0();
  p.gamma_sup = spec.gamma_sup();
  const CumulativeTable B([&](double r) { return std::max(0.0, evaluate_bbar(spec, r)); }, std::max(p.R0, 1e-300),
                          4096);
  const double integral = adaptive_integral([&](double s) { return std::exp(0.5 * B(std::min(s, p.R0))); }, 0.0, p.R1);
  p.b2_bound = 1.0 / (4.0 * integral);
  p.b2_satisfied = p.gamma_sup <= p.b2_bound;
  return p;
}

struct CenteringCheck {
  std::vector<double> mean;
  double mean_norm = 0.0;
  double tolerance = 0.0;
  double fourth_moment = 0.0;
  bool pass = false;
};

struct AssumptionReport {
  std::size_t b1_pairs = 0;
  double b1_max_excess = 0.0;  // max of <dz, dgamma> - kappa |dz|^2
  bool b1_pass = false;
  double antisymmetry_max = 0.0;
  bool antisymmetry_pass = false;
  double gamma_sup = 0.0;
  double b2_bound = 0.0;
  bool b2_pass = false;
  std::optional<double> epsilon0;
  std::string epsilon0_note;
  std::optional<CenteringCheck> centering;
  DissipativityProfile radii;
  bool all_pass() const {
    return b1_pass && antisymmetry_pass && b2_pass && (!centering || centering->pass);
  }
};

// Samples are row-major n x dim. The centering tolerance scales with the
// Monte Carlo error of the sample mean.
inline CenteringCheck check_centering(std::span<const double> samples, int dim, double sigmas = 4.0) {
  const std::size_t n = samples.size() / std::size_t(dim);
  if (n == 0 || samples.size() % std::size_t(dim) != 0) fail(ErrorKind::ShapeMismatch, "samples not n x dim");
  CenteringCheck c;
  c.mean.assign(std::size_t(dim), 0.0);
  double m2 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double n2 = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double v = samples[i * std::size_t(dim) + std::size_t(k)];
      c.mean[std::size_t(k)] += v;
      n2 += v * v;
    }
    m2 += n2;
    m4 += n2 * n2;
  }
  double mn2 = 0.0;
  for (auto& m : c.mean) {
    m /= double(n);
    mn2 += m * m;
  }
  c.mean_norm = std::sqrt(mn2);
  c.fourth_moment = m4 / double(n);
  c.tolerance = sigmas * std::sqrt(m2 / double(n) / double(n)) + 1e-12;
  c.pass = c.mean_norm <= c.tolerance && std::isfinite(c.fourth_moment);
  return c;
}

inline AssumptionReport check_assumptions(const InteractionSpec& spec,
                                          std::span<const double> initial_samples = {}, std::uint64_t seed = 1,
                                          std::size_t pairs = 4096) {
  AssumptionReport rep;
  rep.radii = compute_radii(spec);
  const std::size_t d = std::size_t(spec.dim());
  const CounterRng rng(seed, "b1-spot-check");
  const double box = 2.0 * std::max(rep.radii.R1, 1.0);
  std::vector<double> x(d), y(d), gx(d), gy(d), gm(d), mz(d);
  rep.b1_max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < pairs; ++p) {
    // Half the pairs are close, half span the box.
    const double scale = (p % 2 == 0) ? box : 0.05 * box;
    for (std::size_t k = 0; k < d; ++k) {
      const auto u = rng.uniforms(p, 0, std::uint32_t(k));
      x[k] = box * (2.0 * u[0] - 1.0);
      y[k] = x[k] + scale * (2.0 * u[1] - 1.0);
    }
    spec.gamma_eval(x.data(), gx.data());
    spec.gamma_eval(y.data(), gy.data());
    double ip = 0.0, n2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double dz = x[k] - y[k];
      ip += dz * (gx[k] - gy[k]);
      n2 += dz * dz;
    }
    rep.b1_max_excess = std::max(rep.b1_max_excess, ip - spec.kappa(std::sqrt(n2)) * n2);
    for (std::size_t k = 0; k < d; ++k) mz[k] = -x[k];
    spec.gamma_eval(mz.data(), gm.data());
    for (std::size_t k = 0; k < d; ++k) rep.antisymmetry_max = std::max(rep.antisymmetry_max, std::abs(gm[k] + gx[k]));
  }
  rep.b1_pairs = pairs;
  rep.b1_pass = rep.b1_max_excess <= 1e-12;
  rep.antisymmetry_pass = rep.antisymmetry_max <= 1e-12;
  rep.gamma_sup = rep.radii.gamma_sup;
  rep.b2_bound = rep.radii.b2_bound;
  rep.b2_pass = rep.radii.b2_satisfied;
  rep.epsilon0 = rep.radii.epsilon0;
  if (!rep.epsilon0) rep.epsilon0_note = "pure-linear: coupling interpolation band unconstrained";
  if (!initial_samples.empty()) rep.centering = check_centering(initial_samples, spec.dim());
  return rep;
}

}  // namespace stickymv
