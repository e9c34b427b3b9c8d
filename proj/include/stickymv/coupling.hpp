#pragma once

// Interpolated reflection/synchronous coupling profiles and the envelope
// step that advances a dominating process.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace stickymv {

// rc(r) = sin(pi r / (2 delta)) below delta, 1 beyond; sc = sqrt(1 - rc^2).
inline double rc_profile(double r, double delta) {
  return r < delta ? std::sin(std::numbers::pi * r / (2.0 * delta)) : 1.0;
}
inline double sc_profile(double r, double delta) {
  return r < delta ? std::cos(std::numbers::pi * r / (2.0 * delta)) : 0.0;
}

// The coupled distance obeys, along the reflection direction,
//   r' <= r + h (bbar(r) + A) + 2 rc(r) w,   r' >= r (1 - h K) - h A + 2 rc(r) w,
// with w the reflected Brownian increment. The step returns a value above
// both bounds for every r in [0, dom], so domination propagates exactly.
struct EnvelopeParams {
  double h = 1e-3;
  double delta = 0.1;
  std::function<double(double)> bbar;
  double lambda = 0.0;  // sup of bbar(r)/r on (0, delta]
  double K = 0.0;
  double cap = std::numeric_limits<double>::infinity();
};

inline double envelope_step(double dom, double A, double w, const EnvelopeParams& p, double perp = 0.0) {
  const double h = p.h, d = p.delta;
  auto g = [&](double r) { return r + h * (p.bbar(r) + A) + 2.0 * rc_profile(r, d) * w; };
  // Linear majorant of g on [0, delta]; convex in r when w < 0.
  auto ghat = [&](double r) { return (1.0 + h * p.lambda) * r + h * A + 2.0 * rc_profile(r, d) * w; };
  const double s = std::min(dom, d);
  double up = std::max({h * A, ghat(s), g(dom)});
  // Minimum of the lower bound over [0, dom].
  double low = -h * A;
  if (w < 0.0) {
    const double slope = 1.0 - h * p.K;
    const double arg = slope * d / (std::numbers::pi * -w);
    double rstar = arg <= 1.0 ? 2.0 * d / std::numbers::pi * std::acos(arg) : 0.0;
    rstar = std::min(rstar, dom);
    low = std::min(low, rstar * slope - h * A + 2.0 * rc_profile(rstar, d) * w);
    low = std::min(low, s * slope - h * A + 2.0 * rc_profile(s, d) * w);
  }
  double next = std::max({up, -low, 0.0});
  if (perp > 0.0) next = std::hypot(next, h * perp);
  return std::min(next, p.cap);
}

}  // namespace stickymv
