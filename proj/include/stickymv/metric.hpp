#pragma once

// Concave distance profile f, contraction constants and the distance
// estimators used by the experiments.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "stickymv/drift.hpp"
#include "stickymv/error.hpp"
#include "stickymv/quadrature.hpp"
#include "stickymv/scalar_drift.hpp"

namespace stickymv {

struct ProfileOptions {
  std::size_t points = 8192;
  double r_max_hint = 0.0;
  std::size_t radii_points = 4096;
};

class ContractionProfile;
using ProfilePtr = std::shared_ptr<const ContractionProfile>;

// Tables reference the object itself, so profiles stay put behind a
// shared_ptr.
class ContractionProfile {
 public:
  ContractionProfile() = default;
  ContractionProfile(const ContractionProfile&) = delete;
  ContractionProfile& operator=(const ContractionProfile&) = delete;

  double a = 0.0;
  double c = 0.0;
  double a_bound = 0.0;
  double Rt0 = 0.0, Rt1 = 0.0;
  bool a2_violated = false;
  double quadrature_check = 0.0;  // relative change of c under halved resolution
  ScalarDrift btilde;
  std::vector<double> grid, phi, Phi, gfun, f, fprime;

  double r_max() const { return grid.back(); }
  double phi_R0() const { return phi_at(Rt0); }
  double tail_slope() const { return fprime.back(); }

  double bplus(double r) const { return std::max(0.0, btilde(r)); }
  double B(double r) const { return B_(r); }
  double phi_at(double r) const { return std::exp(-0.5 * B_(std::min(r, Rt0))); }
  double Phi_at(double r) const { return Phi_(r); }
  double g_at(double r) const {
    const double s = std::min(r, Rt1);
    return 1.0 - 0.5 * c * J1_(s) - 0.5 * a * J2_(s);
  }
  double fprime_at(double r) const { return phi_at(r) * g_at(r); }
  double f_exact(double r) const { return F_(r); }

  // Closed-form second derivative from the construction (r != Rt1).
  double fsecond(double r) const {
    double v = -0.5 * bplus(r) * fprime_at(r);
    if (r < Rt1) v -= 0.5 * c * Phi_at(r) + 0.5 * a;
    return v;
  }

  // Piecewise-linear in the table, affine beyond it.
  double operator()(double r) const {
    if (r <= 0.0) return 0.0;
    const double dx = grid[1] - grid[0];
    const double x = r / dx;
    const std::size_t i = std::size_t(x);
    if (i + 1 >= grid.size()) return f.back() + tail_slope() * (r - grid.back());
    const double t = x - double(i);
    return f[i] + t * (f[i + 1] - f[i]);
  }

  void require_a2() const {
    if (a2_violated)
      fail(ErrorKind::A2Violation, "a = " + std::to_string(a) + " exceeds a_bound = " + std::to_string(a_bound));
  }

 private:
  friend ProfilePtr build_profile(const ScalarDrift&, double, const ProfileOptions&);
  CumulativeTable B_, Phi_, J1_, J2_, F_;
};

inline ProfilePtr build_profile(const ScalarDrift& btilde, double a, const ProfileOptions& opt = {}) {
  if (!(a >= 0.0)) fail(ErrorKind::ConfigInvalid, "a must be nonnegative");
  if (std::abs(btilde(0.0)) > 1e-12) fail(ErrorKind::ConfigInvalid, "btilde(0) must vanish");
  auto holder = std::make_shared<ContractionProfile>();
  ContractionProfile& p = *holder;
  p.a = a;
  p.btilde = btilde;

  double guess = 0.0;
  for (int i = 1; i <= 1000; ++i)
    if (btilde(0.1 * i) >= 0.0) guess = 0.1 * i;
  const auto radii = scalar_radii([&](double r) { return btilde(r); }, btilde.tail_ratio, 4.0 * std::max(guess, 1.0),
                                  opt.radii_points, 10.0);
  p.Rt0 = radii.R0;
  p.Rt1 = radii.R1;
  const double r_max = std::max(2.0 * p.Rt1, opt.r_max_hint);
  const std::size_t cells = opt.points - 1;
  const ContractionProfile* self = &p;

  p.B_ = CumulativeTable([bt = btilde](double x) { return std::max(0.0, bt(x)); }, r_max, cells);
  auto phi = [self](double x) { return self->phi_at(x); };
  p.Phi_ = CumulativeTable(phi, r_max, cells);
  auto j1 = [self](double x) { return self->Phi_at(x) / self->phi_at(x); };
  auto j2 = [self](double x) { return 1.0 / self->phi_at(x); };
  p.J1_ = CumulativeTable(j1, p.Rt1, cells);
  p.J2_ = CumulativeTable(j2, p.Rt1, cells);
  p.c = 1.0 / (2.0 * p.J1_(p.Rt1));
  p.a_bound = 1.0 / (2.0 * p.J2_(p.Rt1));
  p.a2_violated = a > p.a_bound;
  {
    const CumulativeTable coarse(j1, p.Rt1, cells / 2);
    const double c2 = 1.0 / (2.0 * coarse(p.Rt1));
    p.quadrature_check = std::abs(c2 - p.c) / p.c;
  }
  p.F_ = CumulativeTable([self](double x) { return self->fprime_at(x); }, r_max, cells);

  p.grid.resize(opt.points);
  p.phi.resize(opt.points);
  p.Phi.resize(opt.points);
  p.gfun.resize(opt.points);
  p.f.resize(opt.points);
  p.fprime.resize(opt.points);
  for (std::size_t i = 0; i < opt.points; ++i) {
    const double r = p.F_.node(i);
    p.grid[i] = r;
    p.phi[i] = p.phi_at(r);
    p.Phi[i] = p.Phi_(r);
    p.gfun[i] = p.g_at(r);
    p.f[i] = p.F_.at_node(i);
    p.fprime[i] = p.phi[i] * p.gfun[i];
  }
  return holder;
}

struct RateBundle {
  double c = 0.0;
  double ctilde = 0.0;
  double M1 = 0.0;
  double R0 = 0.0, R1 = 0.0;
  double a = 0.0;
  ProfilePtr profile;
};

inline RateBundle contraction_rates(const InteractionSpec& spec, const ProfileOptions& opt = {}) {
  const auto radii = compute_radii(spec);
  RateBundle rb;
  rb.R0 = radii.R0;
  rb.R1 = radii.R1;
  const CumulativeTable B([&](double u) { return std::max(0.0, evaluate_bbar(spec, u)); }, std::max(rb.R0, 1e-300),
                          4096);
  auto Bint = [&](double x) { return B(std::min(x, rb.R0)); };
  const double outer = adaptive_integral(
      [&](double s) {
        const double Bs = Bint(s);
        return adaptive_integral([&](double r) { return std::exp(0.5 * (Bs - Bint(r))); }, 0.0, s, 1e-13);
      },
      0.0, rb.R1, 1e-12);
  rb.ctilde = 1.0 / (2.0 * outer);
  rb.M1 = 2.0 * std::exp(0.5 * Bint(rb.R0));
  rb.a = 2.0 * spec.gamma_sup();
  rb.profile = build_profile(ScalarDrift::envelope(spec), rb.a, opt);
  rb.c = rb.profile->c;
  return rb;
}

inline double empirical_w1_1d(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty())
    fail(ErrorKind::LengthMismatch, "sample counts " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
  return s / double(x.size());
}

// Row-major N x d configurations. Means are removed before comparing; with a
// profile the per-particle distance goes through f.
inline double semimetric_l1_pi(std::span<const double> x, std::span<const double> y, int d,
                               const ContractionProfile* profile = nullptr) {
  if (d < 1 || x.size() != y.size() || x.empty() || x.size() % std::size_t(d) != 0)
    fail(ErrorKind::ShapeMismatch, "configurations must both be N x d");
  const std::size_t N = x.size() / std::size_t(d);
  std::vector<double> shift(std::size_t(d), 0.0);
  for (std::size_t i = 0; i < N; ++i)
    for (int k = 0; k < d; ++k) shift[std::size_t(k)] += x[i * std::size_t(d) + std::size_t(k)] - y[i * std::size_t(d) + std::size_t(k)];
  for (auto& s : shift) s /= double(N);
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double n2 = 0.0;
    for (int k = 0; k < d; ++k) {
      const double z = x[i * std::size_t(d) + std::size_t(k)] - y[i * std::size_t(d) + std::size_t(k)] - shift[std::size_t(k)];
      n2 += z * z;
    }
    const double r = std::sqrt(n2);
    total += profile ? (*profile)(r) : r;
  }
  return total / double(N);
}

}  // namespace stickymv
