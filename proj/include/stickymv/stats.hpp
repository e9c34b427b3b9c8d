#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace stickymv {

struct LinearFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double slope_stderr = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
};

inline LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit f;
  f.n = x.size();
  if (x.size() < 2 || x.size() != y.size()) return f;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(x.size());
  my /= double(y.size());
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double sse = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - f.intercept - f.slope * x[i];
      sse += e * e;
    }
    f.slope_stderr = std::sqrt(sse / double(x.size() - 2) / sxx);
  }
  return f;
}

struct DecayFit {
  double rate = std::numeric_limits<double>::quiet_NaN();
  double rate_stderr = std::numeric_limits<double>::quiet_NaN();
  double t_begin = 0.0, t_end = 0.0;
  std::size_t points = 0;
};

// Fits log v = c - rate t over the leading stretch of samples with v above
// `floor` (stops at the first sample at or below it).
inline DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& v, double floor,
                               double t_begin = 0.0) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_begin) continue;
    if (!(v[i] > floor)) break;
    xs.push_back(t[i]);
    ys.push_back(std::log(v[i]));
  }
  DecayFit d;
  d.points = xs.size();
  if (xs.size() < 3) return d;
  const auto f = least_squares(xs, ys);
  d.rate = -f.slope;
  d.rate_stderr = f.slope_stderr;
  d.t_begin = xs.front();
  d.t_end = xs.back();
  return d;
}

inline LinearFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return least_squares(lx, ly);
}

}  // namespace stickymv
