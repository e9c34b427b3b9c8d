#pragma once

// Invariant measures of the sticky nonlinear equation: I(a,p), the
// fixed-point equation for p and the atom-plus-density measure.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stickymv/error.hpp"
#include "stickymv/quadrature.hpp"
#include "stickymv/rng.hpp"
#include "stickymv/scalar_drift.hpp"

namespace stickymv {

namespace detail {

// Exponent x -> a p x / 2 + B(x) / 2 with a certified truncation point.
struct PhaseExponent {
  double ap = 0.0;
  const ScalarDrift* bt = nullptr;
  double cut = 0.0;   // integrand below exp(peak - 46) beyond cut
  double peak = 0.0;  // approximate max of the exponent

  double operator()(double x) const { return 0.5 * ap * x + 0.5 * bt->integral(x); }
};

inline PhaseExponent make_exponent(double a, double p, const ScalarDrift& bt) {
  PhaseExponent e;
  e.ap = a * p;
  e.bt = &bt;
  if (!bt.tail_ratio) fail(ErrorKind::DivergentIntegral, "drift has no tail certificate");
  double H = 1.0, lambda = 0.0;
  for (; H < 1e6; H *= 2.0) {
    lambda = -bt.tail_ratio(H);
    if (lambda > 0.0) break;
  }
  if (!(lambda > 0.0)) fail(ErrorKind::DivergentIntegral, "no negative linear tail for the drift");
  // Beyond H: exponent(x) <= exponent(H) + ap (x-H)/2 - lambda (x^2-H^2)/4.
  // The bound's maximum sits at x* = max(H, ap/lambda).
  const double xs = std::max(H, e.ap / lambda);
  const double eH = e(H);
  auto bound = [&](double x) { return eH + 0.5 * e.ap * (x - H) - 0.25 * lambda * (x * x - H * H); };
  double peak = std::max(bound(xs), 0.0);
  for (int i = 1; i <= 256; ++i) peak = std::max(peak, e(xs * i / 256.0));
  e.peak = peak;
  // Solve bound(x) = peak - 46 for x > xs.
  const double target = peak - 46.0;
  double hi = 2.0 * xs + 1.0;
  while (bound(hi) > target) hi *= 2.0;
  e.cut = hi;
  return e;
}

}  // namespace detail

// int_0^inf exp(a p x / 2 + B(x) / 2) dx with B the primitive of btilde.
inline double integral_I(double a, double p, const ScalarDrift& btilde) {
  const auto e = detail::make_exponent(a, p, btilde);
  // Pieces keep the adaptive rule away from long flat tails.
  const int pieces = 8;
  double total = 0.0;
  for (int k = 0; k < pieces; ++k) {
    const double lo = e.cut * k / pieces, hi = e.cut * (k + 1) / pieces;
    total += adaptive_integral([&](double x) { return std::exp(e(x) - e.peak); }, lo, hi, 1e-14);
  }
  return total * std::exp(e.peak);
}

inline double closed_form_I_linear(double a, double p, double Lt) {
  if (!(Lt > 0.0)) fail(ErrorKind::ConfigInvalid, "Ltilde must be positive");
  const double z = a * p / std::sqrt(2.0 * Lt);
  const double s = std::sqrt(std::numbers::pi / 2.0);
  return (s + s * std::erf(z / std::numbers::sqrt2)) * std::sqrt(2.0 / Lt) * std::exp(a * a * p * p / (4.0 * Lt));
}

// Supercritical iff a > threshold for btilde = -Lt r.
inline double phase_threshold_linear(double Lt) { return 2.0 * std::sqrt(Lt / std::numbers::pi); }

struct FixedPointOptions {
  int scan = 1024;
  double tol = 1e-10;
  double trivial = 1e-8;  // roots at or below this are the p = 0 solution
};

struct FixedPointResult {
  std::optional<double> p_hat;
  double residual = 0.0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  std::vector<double> roots;
  bool multiple = false;
  std::optional<bool> unique;  // linear drifts only
  double h_at_zero = 0.0;
};

template <class H>
FixedPointResult solve_fixed_point_h(H&& h, const FixedPointOptions& opt) {
  FixedPointResult res;
  std::vector<double> ps(std::size_t(opt.scan) + 1), hs(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ps[i] = double(i) / opt.scan;
    hs[i] = h(ps[i]);
  }
  res.h_at_zero = hs[0];
  for (std::size_t i = 0; i + 1 < ps.size(); ++i) {
    double lo = ps[i], hi = ps[i + 1];
    if (hs[i] == 0.0) {
      if (i > 0) res.roots.push_back(lo);
      continue;
    }
    if ((hs[i] > 0.0) == (hs[i + 1] > 0.0) || hs[i + 1] == 0.0) continue;
    double flo = hs[i];
    // Bisect well below tol so the residual lands under it too.
    while (hi - lo > 1e-3 * opt.tol) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double fm = h(mid);
      if (fm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    const double root = 0.5 * (lo + hi);
    if (root <= opt.trivial) continue;
    if (!res.p_hat) {
      res.bracket_lo = lo;
      res.bracket_hi = hi;
    }
    res.roots.push_back(root);
    if (!res.p_hat) res.p_hat = root;
  }
  res.multiple = res.roots.size() > 1;
  if (res.p_hat) res.residual = std::abs(h(*res.p_hat));
  return res;
}

inline FixedPointResult solve_fixed_point(double a, const ScalarDrift& btilde, const FixedPointOptions& opt = {}) {
  if (!(a > 0.0)) fail(ErrorKind::ConfigInvalid, "a must be positive");
  auto res = solve_fixed_point_h([&](double p) { return (1.0 - p) * integral_I(a, p, btilde) - 2.0 / a; }, opt);
  if (btilde.slope && *btilde.slope < 0.0) {
    const double Lt = -*btilde.slope;
    // Derivative of (1-p) I at any root is -2/(a(1-p)) + a/Lt; a strictly
    // negative value at the smallest root rules out a second one.
    if (res.p_hat) res.unique = (-2.0 / (a * (1.0 - *res.p_hat)) + a / Lt) < 0.0 && !res.multiple;
    else res.unique = true;
  }
  return res;
}

class InvariantMeasure {
 public:
  double a = 0.0, p = 0.0;
  double atom_weight = 1.0;
  double I = 0.0;
  double normalization = 1.0;  // 2/(ap) + I
  double r_max = 0.0;
  std::vector<double> x, density;

  double density_at(double r) const {
    if (r <= 0.0 || r > r_max) return 0.0;
    return std::exp(expo_(r)) / normalization;
  }
  double mass_below(double r) const { return std::exp(expo_.peak) * cdf_(std::min(r, r_max)) / normalization; }
  double positive_mass() const { return mass_below(r_max); }

  // Inverse of the continuous part's CDF, v in (0,1).
  double quantile_positive(double v) const {
    const double target = v * cdf_.at_node(cdf_.cells());
    std::size_t lo = 0, hi = cdf_.cells();
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (cdf_.at_node(mid) < target) lo = mid;
      else hi = mid;
    }
    double xl = cdf_.node(lo), xh = cdf_.node(hi);
    double x0 = 0.5 * (xl + xh);
    for (int it = 0; it < 60; ++it) {
      const double F = cdf_(x0) - target;
      if (F > 0.0) xh = x0;
      else xl = x0;
      const double dens = cdf_.integrand(x0);
      double next = dens > 0.0 ? x0 - F / dens : 0.5 * (xl + xh);
      if (!(next > xl && next < xh)) next = 0.5 * (xl + xh);
      if (std::abs(next - x0) <= 1e-15 * std::max(1.0, x0)) {
        x0 = next;
        break;
      }
      x0 = next;
    }
    return x0;
  }

 private:
  friend InvariantMeasure build_invariant_measure(double, double, const ScalarDrift&, std::size_t);
  detail::PhaseExponent expo_;
  std::shared_ptr<ScalarDrift> drift_;
  CumulativeTable cdf_;
};

inline InvariantMeasure build_invariant_measure(double a, double p_hat, const ScalarDrift& btilde,
                                                std::size_t points = 16385) {
  if (!(p_hat > 0.0 && p_hat < 1.0)) fail(ErrorKind::ConfigInvalid, "p_hat must lie in (0,1)");
  InvariantMeasure m;
  m.a = a;
  m.p = p_hat;
  m.drift_ = std::make_shared<ScalarDrift>(btilde);
  m.expo_ = detail::make_exponent(a, p_hat, *m.drift_);
  const auto& e = m.expo_;
  m.I = integral_I(a, p_hat, *m.drift_);
  m.normalization = 2.0 / (a * p_hat) + m.I;
  m.atom_weight = (2.0 / (a * p_hat)) / m.normalization;
  // Smallest point past the peak where the exponent drops 14 decades.
  const double floor = e.peak + std::log(1e-14);
  double xm = 0.0;
  for (int i = 0; i <= 4096; ++i) {
    const double xi = e.cut * i / 4096.0;
    if (e(xi) > e(xm)) xm = xi;
  }
  double r_max = e.cut;
  for (int i = 0; i <= 65536; ++i) {
    const double xi = xm + (e.cut - xm) * i / 65536.0;
    if (e(xi) <= floor) {
      r_max = xi;
      break;
    }
  }
  m.r_max = r_max;
  m.cdf_ = CumulativeTable([e](double t) { return std::exp(e(t) - e.peak); }, r_max, points - 1);
  m.x.resize(points);
  m.density.resize(points);
  for (std::size_t i = 0; i < points; ++i) {
    m.x[i] = m.cdf_.node(i);
    m.density[i] = m.density_at(m.x[i]);
  }
  return m;
}

// Exact zeros with probability atom_weight, inverse CDF otherwise.
inline std::vector<double> sample_invariant(const InvariantMeasure& m, std::size_t n, std::uint64_t seed) {
  const CounterRng rng(seed, "invariant-sample");
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto u = rng.uniforms(i, 0, 0);
    if (u[0] >= m.atom_weight) out[i] = m.quantile_positive(u[1]);
  }
  return out;
}

}  // namespace stickymv
