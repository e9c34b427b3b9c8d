#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "stickymv/mckean.hpp"

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

// (1/M) sum_j b(x_i - x_j) by direct summation.
std::vector<double> direct_drift(const std::vector<double>& x, const InteractionSpec& spec) {
  const std::size_t d = std::size_t(spec.dim()), M = x.size() / d;
  std::vector<double> out(x.size(), 0.0), z(d), b(d);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) {
      for (std::size_t k = 0; k < d; ++k) z[k] = x[i * d + k] - x[j * d + k];
      spec.b_eval(z.data(), b.data());
      for (std::size_t k = 0; k < d; ++k) out[i * d + k] += b[k] / double(M);
    }
  return out;
}

}  // namespace

TEST(CloudDrift, SingleParticleHasNoDrift) {
  Executor ex(1);
  const InteractionSpec s(1.0, 2, SineGamma{0.4});
  std::vector<double> x{0.7, -2.0}, out(2);
  cloud_drift(x.data(), 1, s, out.data(), ex);
  EXPECT_EQ(out[0], 0.0);
  EXPECT_EQ(out[1], 0.0);
}

TEST(CloudDrift, LinearPair) {
  Executor ex(1);
  const InteractionSpec s(1.0, 1, ZeroGamma{});
  std::vector<double> x{1.0, -1.0}, out(2);
  cloud_drift(x.data(), 2, s, out.data(), ex);
  EXPECT_DOUBLE_EQ(out[0], -1.0);
  EXPECT_DOUBLE_EQ(out[1], 1.0);
}

TEST(CloudDrift, FastPathsMatchDirectSum) {
  Executor ex(3);
  for (const auto& s : {InteractionSpec(1.0, 1, SineGamma{0.3}), InteractionSpec(0.7, 2, SineGamma{0.2}),
                        InteractionSpec(1.2, 2, ZeroGamma{}), InteractionSpec(1.0, 2, RationalGamma{0.8})}) {
    const auto x = centered_gaussian_cloud(300, s.dim(), 1.5, 2, "drift-test");
    const auto ref = direct_drift(x, s);
    std::vector<double> out(x.size()), ser(x.size());
    cloud_drift(x.data(), x.size() / std::size_t(s.dim()), s, out.data(), ex);
    cloud_drift_serial(x.data(), x.size() / std::size_t(s.dim()), s, ser.data());
    for (std::size_t g = 0; g < x.size(); ++g) {
      EXPECT_NEAR(out[g], ref[g], 1e-12) << s.kind() << " " << g;
      EXPECT_EQ(out[g], ser[g]);
    }
  }
}

TEST(CloudStep, UnstableStepRejected) {
  const InteractionSpec s(4.0, 1, SineGamma{1.0});
  EXPECT_EQ(kind_of([&] { check_cloud_step(s, 0.1); }), ErrorKind::UnstableStep);
  EXPECT_NO_THROW(check_cloud_step(s, 0.09));
}

TEST(CloudStep, CenteredInitHasZeroMean) {
  const auto x = centered_gaussian_cloud(1001, 3, 2.0, 1, "c");
  for (int k = 0; k < 3; ++k) {
    double m = 0.0;
    for (std::size_t i = 0; i < 1001; ++i) m += x[i * 3 + std::size_t(k)];
    EXPECT_NEAR(m / 1001.0, 0.0, 1e-14);
  }
}

TEST(Coupling, IdenticalCloudsStayTogether) {
  Executor ex(2);
  const InteractionSpec s(1.0, 1, SineGamma{0.1});
  const auto x = centered_gaussian_cloud(2000, 1, 1.0, 3, "same");
  ContractionOptions opt;
  opt.T = 0.5;
  opt.h = 1e-2;
  const auto res = run_contraction_experiment(s, x, x, opt, ex);
  for (const auto& r : res.records) {
    EXPECT_EQ(r.wf_upper, 0.0);
    EXPECT_EQ(r.w1_exact, 0.0);
    EXPECT_EQ(r.dom_mean_f, 0.0);
  }
  EXPECT_EQ(res.breaches, 0u);
}

TEST(Coupling, DeltaAboveEpsilon0Rejected) {
  Executor ex(1);
  const InteractionSpec s(1.0, 1, SineGamma{0.1});
  auto st = make_coupling({0.5, -0.5}, {-0.5, 0.5}, 1, 3.0);
  CouplingParams cp;
  const CounterRng rng(1, "x");
  EXPECT_EQ(kind_of([&] { sticky_coupling_step(st, s, cp, rng, ex); }), ErrorKind::DeltaTooLarge);
}

TEST(Coupling, UncenteredInitFailsGate) {
  Executor ex(1);
  const InteractionSpec s(1.0, 1, ZeroGamma{});
  auto x = centered_gaussian_cloud(500, 1, 1.0, 3, "a");
  auto y = x;
  for (double& v : y) v += 1.0;
  ContractionOptions opt;
  opt.T = 0.1;
  EXPECT_EQ(kind_of([&] { run_contraction_experiment(s, x, y, opt, ex); }), ErrorKind::AssumptionGateFailed);
  opt.override_gates = true;
  EXPECT_NO_THROW(run_contraction_experiment(s, x, y, opt, ex));
}

TEST(Coupling, DominatorBoundsDistanceAndShrinks) {
  Executor ex(2);
  const InteractionSpec s(1.0, 1, ZeroGamma{});
  const auto x = centered_gaussian_cloud(4000, 1, 1.0, 5, "mu");
  const auto y = centered_gaussian_cloud(4000, 1, 3.0, 6, "nu");
  ContractionOptions opt;
  opt.T = 2.0;
  opt.h = 1e-3;
  const auto res = run_contraction_experiment(s, x, y, opt, ex);
  EXPECT_TRUE(res.breach_budget_ok);
  EXPECT_LE(res.breach_fraction, 1e-3);
  EXPECT_LT(res.records.back().wf_upper, res.records.front().wf_upper);
  for (const auto& r : res.records) EXPECT_LE(r.wf_upper, r.dom_mean_f + 1e-9);
}

TEST(Coupling, IdenticalAcrossThreadCounts) {
  const InteractionSpec s(1.0, 2, SineGamma{0.1});
  const auto x = centered_gaussian_cloud(3000, 2, 1.0, 5, "mu");
  const auto y = centered_gaussian_cloud(3000, 2, 2.0, 6, "nu");
  ContractionOptions opt;
  opt.T = 0.2;
  opt.h = 1e-2;
  Executor e1(1), e4(4);
  const auto a = run_contraction_experiment(s, x, y, opt, e1), b = run_contraction_experiment(s, x, y, opt, e4);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].wf_upper, b.records[k].wf_upper);
    EXPECT_EQ(a.records[k].dom_mean_f, b.records[k].dom_mean_f);
  }
  EXPECT_EQ(a.final_state.x.pos, b.final_state.x.pos);
}

TEST(Chaos, FullSizeSystemMatchesReference) {
  const InteractionSpec s(1.0, 1, SineGamma{0.1});
  ChaosOptions opt;
  opt.M_ref = 256;
  opt.Ns = {256};
  opt.T = 0.5;
  opt.h = 1e-2;
  const auto init = centered_gaussian_cloud(256, 1, 1.0, 2, "init");
  for (unsigned t : {1u, 4u}) {
    Executor ex(t);
    const auto res = run_chaos_experiment(s, init, opt, ex);
    ASSERT_EQ(res.points.size(), 1u);
    EXPECT_EQ(res.points[0].sup_l1, 0.0);
    EXPECT_EQ(res.points[0].sup_fN, 0.0);
    EXPECT_FALSE(res.ratio_ok);
  }
}

TEST(Chaos, ErrorShrinksWithN) {
  Executor ex(2);
  const InteractionSpec s(1.0, 1, SineGamma{0.1});
  ChaosOptions opt;
  opt.M_ref = 2048;
  opt.Ns = {4, 64};
  opt.T = 1.0;
  opt.h = 1e-2;
  opt.delta = 2.0;
  const auto init = centered_gaussian_cloud(2048, 1, 1.0, 2, "init");
  const auto res = run_chaos_experiment(s, init, opt, ex);
  EXPECT_GT(res.points[0].sup_l1, res.points[1].sup_l1);
  EXPECT_LT(res.slope_l1.slope, 0.0);
  for (const auto& p : res.points) EXPECT_LE(p.sup_fN, p.sup_l1 + 1e-15);
  opt.Ns = {0};
  EXPECT_EQ(kind_of([&] { run_chaos_experiment(s, init, opt, ex); }), ErrorKind::ConfigInvalid);
}

TEST(ChaosConstants, PureLinearValues) {
  // m2' <= -2L m2 + d with m2(0) = 0 gives C = d/(2L).
  const auto c = chaos_constants(InteractionSpec(1.0, 1, ZeroGamma{}), 0.0);
  EXPECT_NEAR(c.C, 0.5, 1e-15);
  EXPECT_NEAR(c.C_tilde, 2.0 * std::sqrt(2.0) + 2.0, 1e-12);
  EXPECT_TRUE(c.gronwall_ok);
  EXPECT_EQ(chaos_constants(InteractionSpec(1.0, 1, ZeroGamma{}), 2.0).C, 2.0);
}

TEST(Moments, SecondMomentStaysBelowBound) {
  Executor ex(2);
  const InteractionSpec s(1.0, 1, ZeroGamma{});
  const auto rec = run_moment_experiment(s, std::vector<double>(5000, 0.0), 3.0, 1e-2, 4, 0.1, ex);
  // Exact m2(t) = (1 - e^{-2t})/2 for the centered OU cloud (up to 1/M).
  const double bound = chaos_constants(s, 0.0).C;
  for (const auto& r : rec) {
    EXPECT_LE(r.m2, bound * 1.1);
    EXPECT_NEAR(r.m2, 0.5 * (1.0 - std::exp(-2.0 * r.t)), 0.05);
  }
}
