#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "stickymv/torus.hpp"

using namespace stickymv;

namespace {

// int_0^pi exp(2k - 2k cos(r/2)) dr by composite Simpson.
double simpson_J(double k) {
  const int n = 20000;
  const double hstep = kPi / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * std::exp(2.0 * k - 2.0 * k * std::cos(0.5 * i * hstep));
  }
  return s * hstep / 3.0;
}

}  // namespace

TEST(TorusDistance, Examples) {
  EXPECT_DOUBLE_EQ(torus_distance(0.0, kPi), kPi);
  EXPECT_NEAR(torus_distance(0.1, 2.0 * kPi - 0.1), 0.2, 1e-14);
  EXPECT_NEAR(torus_distance(7.0, 7.0 + 4.0 * kPi), 0.0, 1e-12);
  EXPECT_NEAR(torus_diff(0.1, 2.0 * kPi - 0.1), 0.2, 1e-14);
}

TEST(TorusDistance, MetricAxiomsAndRotationInvariance) {
  const CounterRng rng(3, "torus");
  for (std::uint64_t i = 0; i < 5000; ++i) {
    const auto u = rng.uniforms(i, 0, 0);
    const auto v = rng.uniforms(i, 0, 1);
    const double x = 20.0 * (u[0] - 0.5), y = 20.0 * (u[1] - 0.5), z = 20.0 * (v[0] - 0.5), s = 9.0 * v[1];
    const double dxy = torus_distance(x, y);
    EXPECT_GE(dxy, 0.0);
    EXPECT_LE(dxy, kPi);
    EXPECT_NEAR(dxy, torus_distance(y, x), 1e-12);
    EXPECT_LE(torus_distance(x, z), dxy + torus_distance(y, z) + 1e-12);
    EXPECT_NEAR(torus_distance(x + s, y + s), dxy, 1e-12);
  }
}

TEST(KuramotoConstants, DecoupledCase) {
  const auto b = kuramoto_constants(0.0);
  EXPECT_EQ(b.condition_value, 0.0);
  EXPECT_NEAR(b.c_T, 1.0 / (kPi * kPi), 1e-13);
  EXPECT_FALSE(b.relaxed);
}

TEST(KuramotoConstants, Thresholds) {
  const auto t = kuramoto_thresholds();
  EXPECT_GT(t.k_max, 0.0);
  EXPECT_LE(t.k_max, 1.0 / (4.0 * kPi));
  EXPECT_GT(t.k0, t.k_max);
  EXPECT_LT(t.k0, 1.0 / kPi);
  EXPECT_NEAR(4.0 * t.k_max * simpson_J(t.k_max), 1.0, 1e-9);
  EXPECT_NEAR(t.k0 * simpson_J(t.k0), 1.0, 1e-9);
}

TEST(KuramotoConstants, BundleInvariants) {
  for (double k : {0.0, 0.02, 0.05, 0.07}) {
    const auto b = kuramoto_constants(k);
    EXPECT_TRUE(b.condition_holds) << k;
    EXPECT_NEAR(b.J, simpson_J(k), 1e-10);
    EXPECT_TRUE(b.concave) << k;
    EXPECT_TRUE(b.norm_equivalence) << k;
    EXPECT_TRUE(b.differential_inequality) << k << " " << b.max_inequality_excess;
    EXPECT_NEAR(b.fsecond_zero, -k, 1e-12);
    EXPECT_GT(b.c_T, 0.0);
    const auto& f = *b.profile;
    for (int i = 1; i <= 64; ++i) {
      const double r = kPi * i / 64.0;
      EXPECT_LE(f(r), r + 1e-12);
      EXPECT_GE(f(r), std::exp(-2.0 * k) * r / 2.0 - 1e-12);
    }
  }
}

TEST(KuramotoConstants, RateDecreasesInK) {
  double prev = 1e9;
  for (double k : {0.0, 0.02, 0.04, 0.06}) {
    const double c = kuramoto_constants(k).c_T;
    EXPECT_LT(c, prev);
    prev = c;
  }
}

TEST(KuramotoConstants, RelaxedBetweenThresholds) {
  const auto b = kuramoto_constants(0.1);
  EXPECT_FALSE(b.condition_holds);
  EXPECT_TRUE(b.relaxed);
  EXPECT_NEAR(b.zeta, 1.0 - 0.1 * simpson_J(0.1), 1e-10);
  EXPECT_NEAR(b.rate(), b.zeta / b.Q, 1e-15);
  EXPECT_TRUE(b.concave);
  EXPECT_TRUE(b.differential_inequality);
}

TEST(KuramotoFixedPoint, NoRootForSmallK) {
  EXPECT_FALSE(solve_kuramoto_fixed_point(0.1).p_hat.has_value());
}

TEST(KuramotoFixedPoint, RootForLargeK) {
  const double k = 2.0;
  EXPECT_LT(1.0 / k, kuramoto_I(k, 0.0));
  const auto r = solve_kuramoto_fixed_point(k);
  ASSERT_TRUE(r.p_hat.has_value());
  const double p = *r.p_hat;
  // Independent check of the defining equation with Simpson quadrature.
  const int n = 20000;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = kPi * i / n, w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * std::exp(k * p * x + 2.0 * k - 2.0 * k * std::cos(0.5 * x));
  }
  s *= kPi / n / 3.0;
  EXPECT_NEAR((1.0 - p) * s, 1.0 / k, 1e-9);
}

TEST(KuramotoInvariant, AtomWeightAndSampling) {
  const double k = 2.0, p = *solve_kuramoto_fixed_point(k).p_hat;
  const auto m = kuramoto_invariant_measure(k, p);
  // At the fixed point the atom carries 1 - p.
  EXPECT_NEAR(m.atom_weight, 1.0 - p, 1e-8);
  const std::size_t n = 200000;
  const auto s = sample_kuramoto_invariant(m, n, 1);
  double zeros = 0;
  for (double v : s) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, kPi);
    zeros += v == 0.0;
  }
  const double w = m.atom_weight;
  EXPECT_NEAR(zeros / double(n), w, 4.0 * std::sqrt(w * (1.0 - w) / double(n)));
}

TEST(KuramotoDrift, MatchesDirectSum) {
  Executor ex(2);
  std::vector<double> x(200), out;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.37 * double(i) - 5.0;
  kuramoto_drift(x, 0.8, out, ex);
  for (std::size_t i = 0; i < x.size(); i += 13) {
    double s = 0.0;
    for (double xj : x) s += std::sin(xj - x[i]);
    EXPECT_NEAR(out[i], 0.8 * s / double(x.size()), 1e-13);
  }
  EXPECT_NEAR(order_parameter(std::vector<double>(10, 1.3), ex), 1.0, 1e-15);
}

TEST(KuramotoCoupling, IdenticalInputsStayZero) {
  Executor ex(2);
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::fmod(1.7 * double(i), 2.0 * kPi);
  KuramotoModel m{0.05, 1e-3};
  KuramotoOptions opt;
  opt.T = 0.5;
  const auto res = run_kuramoto_experiment(m, x, x, opt, ex);
  for (const auto& r : res.records) {
    EXPECT_EQ(r.mean_ftilde_dist, 0.0);
    EXPECT_EQ(r.dominator_mean_f, 0.0);
  }
  EXPECT_EQ(res.breaches, 0u);
}

TEST(KuramotoCoupling, DistanceDecaysAndIsDominated) {
  Executor ex(2);
  const std::size_t M = 4000;
  std::vector<double> x(M), y(M);
  for (std::size_t i = 0; i < M; ++i) {
    x[i] = 2.0 * kPi * (double(i) + 0.5) / double(M);
    y[i] = x[i] + kPi;
  }
  KuramotoModel m{0.05, 1e-3};
  KuramotoOptions opt;
  opt.T = 3.0;
  const auto res = run_kuramoto_experiment(m, x, y, opt, ex);
  EXPECT_LE(res.breach_fraction, 1e-3);
  EXPECT_LT(res.records.back().mean_ftilde_dist, 0.5 * res.records.front().mean_ftilde_dist);
  for (const auto& r : res.records) EXPECT_LE(r.mean_ftilde_dist, r.dominator_mean_f + 1e-9);
}

TEST(KuramotoCoupling, Validation) {
  Executor ex(1);
  KuramotoModel bad{-1.0, 1e-3};
  EXPECT_THROW(bad.validate(), Error);
  KuramotoOptions opt;
  opt.delta = 1.5;
  try {
    run_kuramoto_experiment(KuramotoModel{0.05, 1e-3}, {0.0}, {1.0}, opt, ex);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DeltaTooLarge);
  }
}
