#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "stickymv/drift.hpp"

namespace stickymv {

// One-dimensional drift r -> btilde(r) on [0, inf).
struct ScalarDrift {
  std::function<double(double)> value;
  // H -> an upper bound of btilde(r)/r over r >= H.
  std::function<double(double)> tail_ratio;
  // Optional closed form of int_0^x btilde.
  std::function<double(double)> primitive;
  double lipschitz = 0.0;
  std::optional<double> slope;  // set when btilde(r) = slope * r
  std::string name;

  double operator()(double r) const { return slope ? *slope * r : value(r); }

  double integral(double x) const {
    if (primitive) return primitive(x);
    if (slope) return 0.5 * *slope * x * x;
    return adaptive_integral(value, 0.0, x, 1e-14);
  }

  static ScalarDrift linear(double s) {
    ScalarDrift d;
    d.value = [s](double r) { return s * r; };
    d.tail_ratio = [s](double) { return s; };
    d.primitive = [s](double x) { return 0.5 * s * x * x; };
    d.lipschitz = std::abs(s);
    d.slope = s;
    d.name = "linear";
    return d;
  }

  static ScalarDrift custom(std::function<double(double)> f, std::function<double(double)> tail, double lip,
                            std::string name = "custom") {
    ScalarDrift d;
    d.value = std::move(f);
    d.tail_ratio = std::move(tail);
    d.lipschitz = lip;
    d.name = std::move(name);
    return d;
  }

  // bbar(r) = (kappa(r) - L) r.
  static ScalarDrift envelope(const InteractionSpec& spec) {
    ScalarDrift d;
    d.value = [spec](double r) { return evaluate_bbar(spec, r); };
    d.tail_ratio = [spec](double H) { return spec.kappa_tail_sup(H) - spec.L(); };
    d.lipschitz = spec.L() + spec.gamma_lip();
    if (std::holds_alternative<ZeroGamma>(spec.gamma())) d.slope = -spec.L();
    if (auto* s = std::get_if<SineGamma>(&spec.gamma())) d.slope = s->alpha - spec.L();
    if (d.slope) {
      const double sl = *d.slope;
      d.primitive = [sl](double x) { return 0.5 * sl * x * x; };
    }
    d.name = "envelope:" + spec.kind();
    return d;
  }
};

}  // namespace stickymv
