#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "stickymv/error.hpp"

namespace stickymv {

template <class F>
double gauss7(F&& f, double a, double b) {
  if (b == a) return 0.0;
  return boost::math::quadrature::gauss<double, 7>::integrate(f, a, b);
}

template <class F>
double adaptive_integral(F&& f, double a, double b, double tol = 1e-13, double* err = nullptr, unsigned depth = 12) {
  if (b == a) return 0.0;
  double e = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, depth, tol, &e);
  if (err) *err = e;
  return v;
}

// x -> int_0^x f on a uniform grid of Gauss-Legendre cells. Evaluation at an
// arbitrary x adds one partial cell.
class CumulativeTable {
 public:
  CumulativeTable() = default;
  CumulativeTable(std::function<double(double)> f, double x_max, std::size_t cells)
      : f_(std::move(f)), dx_(x_max / double(cells)), cum_(cells + 1, 0.0) {
    for (std::size_t i = 0; i < cells; ++i)
      cum_[i + 1] = cum_[i] + gauss7(f_, dx_ * double(i), dx_ * double(i + 1));
  }

  double operator()(double x) const {
    if (x <= 0.0) return 0.0;
    const std::size_t cells = cum_.size() - 1;
    std::size_t i = std::size_t(x / dx_);
    if (i > cells) i = cells;
    return cum_[i] + gauss7(f_, dx_ * double(i), x);
  }

  double integrand(double x) const { return f_(x); }
  double node(std::size_t i) const { return dx_ * double(i); }
  double at_node(std::size_t i) const { return cum_[i]; }
  std::size_t cells() const { return cum_.size() - 1; }
  double step() const { return dx_; }

 private:
  std::function<double(double)> f_;
  double dx_ = 1.0;
  std::vector<double> cum_{0.0};
};

// Bisection on a sign-changing bracket until the width is below tol.
template <class F>
double bisect(F&& f, double lo, double hi, double tol, int max_iter = 400) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0))
    fail(ErrorKind::BisectionFailure, "no sign change on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  if (hi - lo > tol) fail(ErrorKind::BisectionFailure, "iteration budget exhausted");
  return 0.5 * (lo + hi);
}

}  // namespace stickymv
