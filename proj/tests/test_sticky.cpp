#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "stickymv/sticky.hpp"

using namespace stickymv;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::ConfigInvalid;
}

StickyModel small_model(double a, double h = 1e-3, std::size_t M = 4000) {
  StickyModel m;
  m.btilde = ScalarDrift::linear(-1.0);
  m.interaction = Interaction::constant(a);
  m.h = h;
  m.M = M;
  return m;
}

}  // namespace

TEST(Interaction, ConstantAndGeneral) {
  const auto c = Interaction::constant(1.5);
  EXPECT_EQ(c(0.0), 0.0);
  EXPECT_EQ(c(1e-300), 1.5);
  const auto g = Interaction::general([](double r) { return std::min(r, 1.0); }, 1.0);
  EXPECT_EQ(g(0.5), 0.5);
  EXPECT_EQ(kind_of([] { Interaction::general([](double r) { return -r; }, 1.0); }), ErrorKind::ConfigInvalid);
  EXPECT_EQ(kind_of([] { Interaction::constant(-1.0); }), ErrorKind::ConfigInvalid);
}

TEST(Landing, TailIsASurvivalFunction) {
  EXPECT_EQ(detail::landing_tail(0.0), 1.0);
  double prev = 1.0;
  for (int i = 1; i <= 4000; ++i) {
    const double v = detail::landing_tail(0.01 * i);
    EXPECT_LT(v, prev);
    EXPECT_GT(v, 0.0);
    prev = v;
  }
  // Reference values of e^{-u^2}/erfc(u) - sqrt(pi) u at 50 digits.
  EXPECT_NEAR(detail::landing_tail(5.0), 0.17077597715641826, 1e-13);
  EXPECT_NEAR(detail::landing_tail(25.0), 0.035392584036036914, 1e-12);
  EXPECT_NEAR(detail::landing_tail(25.0 - 1e-9), detail::landing_tail(25.0), 1e-10);
}

TEST(Landing, MonotoneInCandidate) {
  const double h = 1e-3;
  for (double U : {0.9, 0.5, 0.1, 1e-3}) {
    double prev = 0.0;
    for (int i = 1; i <= 400; ++i) {
      const double z = detail::landing(U, 1e-3 * i, h);
      EXPECT_GE(z, prev);
      EXPECT_LE(z, 1e-3 * i);
      prev = z;
    }
  }
}

TEST(Release, ProbabilityRange) {
  EXPECT_EQ(detail::release_probability(0.0, 1e-3), 0.0);
  double prev = 0.0;
  for (double mu : {0.1, 0.5, 1.0, 5.0, 50.0}) {
    const double q = detail::release_probability(mu, 1e-3);
    EXPECT_GT(q, prev);
    EXPECT_LE(q, 1.0);
    prev = q;
  }
}

TEST(Step, UnstableStepRejected) {
  EXPECT_EQ(kind_of([] { check_step(small_model(1.0, 0.5)); }), ErrorKind::UnstableStep);
  EXPECT_NO_THROW(check_step(small_model(1.0, 0.49)));
}

TEST(Step, NegativeInitRejected) {
  Executor ex(1);
  EXPECT_EQ(kind_of([&] { simulate(small_model(1.0), {1.0, -0.5}, {}, ex); }), ErrorKind::ConfigInvalid);
}

TEST(Step, ZeroIsAbsorbingWithoutInteraction) {
  Executor ex(1);
  auto m = small_model(0.0);
  SimulationOptions opt;
  opt.T = 0.5;
  const auto res = simulate(m, std::vector<double>(2000, 0.0), opt, ex);
  EXPECT_EQ(res.final_state.atom_fraction(), 1.0);
}

TEST(Step, BrownianAbsorptionProbability) {
  // btilde == 0, g == 0: 2W started at 1 and absorbed at 0 survives to T with
  // probability erf(1 / (2 sqrt(2T))).
  Executor ex(2);
  StickyModel m = small_model(0.0);
  m.btilde = ScalarDrift::linear(0.0);
  const std::size_t M = 20000;
  SimulationOptions opt;
  opt.T = 1.0;
  opt.record_every = 1.0;
  const auto res = simulate(m, std::vector<double>(M, 1.0), opt, ex);
  const double surv = std::erf(1.0 / (2.0 * std::sqrt(2.0)));
  const double tol = 4.0 * std::sqrt(surv * (1.0 - surv) / double(M)) + 0.01;
  EXPECT_NEAR(1.0 - res.final_state.atom_fraction(), surv, tol);
}

TEST(Step, ClampStaysNonnegative) {
  Executor ex(1);
  auto m = small_model(1.5);
  m.boundary = ZeroBoundary::clamp;
  SimulationOptions opt;
  opt.T = 0.3;
  const auto res = simulate(m, std::vector<double>(1000, 0.05), opt, ex);
  for (double v : res.final_state.values) EXPECT_GE(v, 0.0);
}

TEST(Step, UpperEndFolds) {
  Executor ex(1);
  auto m = small_model(0.5);
  m.btilde = ScalarDrift::linear(0.0);
  m.upper = std::numbers::pi;
  SimulationOptions opt;
  opt.T = 2.0;
  opt.record_every = 0.5;
  const auto res = simulate(m, std::vector<double>(2000, 3.0), opt, ex);
  std::size_t top = 0;
  for (double v : res.final_state.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, std::numbers::pi);
    top += v > 2.0;
  }
  EXPECT_GT(top, 0u);
}

TEST(Step, RegularizedSchemeRuns) {
  Executor ex(1);
  auto m = small_model(1.5);
  m.scheme = Scheme::regularized;
  m.n = 50;
  SimulationOptions opt;
  opt.T = 0.5;
  const auto res = simulate(m, std::vector<double>(2000, 0.5), opt, ex);
  for (double v : res.final_state.values) EXPECT_GE(v, 0.0);
  m.n = 0;
  EXPECT_EQ(kind_of([&] { check_step(m); }), ErrorKind::ConfigInvalid);
}

TEST(Simulate, IdenticalAcrossThreadCounts) {
  auto m = small_model(1.5, 1e-3, 10000);
  SimulationOptions opt;
  opt.T = 0.2;
  opt.record_every = 0.05;
  opt.seed = 77;
  Executor e1(1), e4(4);
  std::vector<double> init(10000);
  for (std::size_t i = 0; i < init.size(); ++i) init[i] = (i % 3) * 0.4;
  const auto a = simulate(m, init, opt, e1), b = simulate(m, init, opt, e4);
  ASSERT_EQ(a.records.size(), b.records.size());
  EXPECT_EQ(a.final_state.values, b.final_state.values);
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].atom_fraction, b.records[k].atom_fraction);
    EXPECT_EQ(a.records[k].mean_r, b.records[k].mean_r);
  }
}

TEST(Comparison, OrderViolationsRejected) {
  Executor ex(1);
  auto lo = small_model(1.0), hi = small_model(0.5);
  EXPECT_EQ(kind_of([&] { check_order(lo, hi, {0.0}, {0.0}); }), ErrorKind::DriftOrderViolated);
  hi = small_model(1.0);
  EXPECT_EQ(kind_of([&] { check_order(lo, hi, {1.0}, {0.5}); }), ErrorKind::DriftOrderViolated);
  lo.scheme = hi.scheme = Scheme::regularized;
  EXPECT_EQ(kind_of([&] { check_order(lo, hi, {0.0}, {0.0}); }), ErrorKind::ConfigInvalid);
}

TEST(Comparison, OrderPreservedUnderSharedNoise) {
  Executor ex(2);
  auto lo = small_model(0.5), hi = small_model(1.5);
  lo.btilde = ScalarDrift::linear(-2.0);
  std::vector<double> a(3000), b(3000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = 0.001 * double(i % 100);
    b[i] = a[i] + 0.01 * double(i % 7);
  }
  const auto rep = coupled_comparison_run(lo, hi, a, b, 0.5, 3, ex);
  EXPECT_EQ(rep.violations, 0u);
  EXPECT_EQ(rep.steps, 500u);
}
