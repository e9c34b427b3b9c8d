#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "stickymv/drift.hpp"
#include "stickymv/rng.hpp"

using namespace stickymv;

namespace {

InteractionSpec tanh_spec(double amp) {
  // Radial psi(r) = -amp tanh(r): gradient of a concave potential, so kappa == 0.
  TabulatedGamma t;
  for (int i = 0; i <= 400; ++i) {
    t.r.push_back(0.05 * i);
    t.psi.push_back(-amp * std::tanh(0.05 * i));
  }
  t.kappa_r = {0.0, 1.0};
  t.kappa = {0.0, 0.0};
  return InteractionSpec(1.0, 2, t);
}

}  // namespace

TEST(Bbar, LinearCase) {
  const InteractionSpec s(1.0, 1, ZeroGamma{});
  EXPECT_EQ(evaluate_bbar(s, 2.0), -2.0);
  EXPECT_EQ(evaluate_bbar(InteractionSpec(3.7, 1, ZeroGamma{}), 0.0), 0.0);
}

TEST(Bbar, SineEnvelope) {
  const InteractionSpec s(1.0, 1, SineGamma{0.1});
  EXPECT_NEAR(evaluate_bbar(s, 3.0), -2.7, 1e-15);
}

TEST(Bbar, CompositionalIdentity) {
  const InteractionSpec s(1.3, 1, RationalGamma{0.8});
  for (int i = 0; i <= 100; ++i) {
    const double r = 0.07 * i;
    EXPECT_DOUBLE_EQ(evaluate_bbar(s, r), s.kappa(r) * r - s.L() * r);
  }
}

TEST(Radii, LinearL1) {
  const auto p = compute_radii(InteractionSpec(1.0, 1, ZeroGamma{}));
  EXPECT_EQ(p.R0, 0.0);
  EXPECT_NEAR(p.R1, 2.0, 1e-9);
}

TEST(Radii, SineAlpha) {
  const auto p = compute_radii(InteractionSpec(1.0, 1, SineGamma{0.1}));
  EXPECT_EQ(p.R0, 0.0);
  EXPECT_NEAR(p.R1, 2.0 / std::sqrt(0.9), 1e-9);
}

TEST(Radii, LinearL4AndB2Bound) {
  const auto p = compute_radii(InteractionSpec(4.0, 1, ZeroGamma{}));
  EXPECT_NEAR(p.R1, 1.0, 1e-9);
  EXPECT_NEAR(p.b2_bound, std::sqrt(4.0) / 8.0, 1e-9);
}

TEST(Radii, DefiningInequalitiesOnFinerGrid) {
  for (const auto& s : {InteractionSpec(1.0, 1, RationalGamma{3.0}), InteractionSpec(0.5, 1, SineGamma{0.2}),
                        InteractionSpec(1.0, 3, RationalGamma{1.5})}) {
    const auto p = compute_radii(s);
    ASSERT_GT(p.R1, p.R0);
    const double top = 2.0 * p.horizon;
    for (int i = 1; i <= 2 * 8192; ++i) {
      const double r = top * i / (2 * 8192.0);
      if (r > p.R0) {
        EXPECT_LE(evaluate_bbar(s, r), 1e-12) << r;
      }
      if (r >= p.R1) {
        EXPECT_LE(evaluate_bbar(s, r) / r, -4.0 / (p.R1 * (p.R1 - p.R0)) + 1e-12) << r;
      }
    }
  }
}

TEST(Radii, RationalHasPositiveR0) {
  // kappa(r) = alpha on [0,1]; with alpha > L the envelope is positive near 0.
  const InteractionSpec s(1.0, 1, RationalGamma{3.0});
  const auto p = compute_radii(s);
  EXPECT_GT(p.R0, 1.0);
  EXPECT_LE(p.R0, 3.0 + 1e-3);  // kappa = 3/r drops below L at r = 3
}

TEST(Radii, B2BoundNonincreasingInR1) {
  double prev_r1 = 1e9, prev_b2 = 0.0;
  for (double L : {0.5, 1.0, 2.0, 4.0}) {
    const auto p = compute_radii(InteractionSpec(L, 1, SineGamma{0.1}));
    EXPECT_LT(p.R1, prev_r1);
    EXPECT_GT(p.b2_bound, prev_b2);
    prev_r1 = p.R1;
    prev_b2 = p.b2_bound;
  }
}

TEST(Radii, NoDissipativityWhenKappaBeatsL) {
  TabulatedGamma t{{0.0, 1.0}, {0.0, 0.0}, {0.0, 1.0}, {2.0, 2.0}};
  EXPECT_THROW(
      {
        try {
          compute_radii(InteractionSpec(1.0, 1, t));
        } catch (const Error& e) {
          EXPECT_EQ(e.kind(), ErrorKind::NoDissipativity);
          throw;
        }
      },
      Error);
}

TEST(Spec, RejectsNonpositiveL) {
  try {
    InteractionSpec(-1.0, 1, ZeroGamma{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigInvalid);
  }
}

TEST(Spec, RejectsUnsortedTable) {
  TabulatedGamma t{{0.0, 2.0, 1.0}, {0.0, 0.1, 0.2}, {0.0}, {0.0}};
  EXPECT_THROW(InteractionSpec(1.0, 1, t), Error);
}

TEST(Spec, AntisymmetryAndOneSidedBoundOnRandomPairs) {
  const CounterRng rng(11, "pairs");
  for (const auto& s : {InteractionSpec(1.0, 2, SineGamma{0.3}), InteractionSpec(1.0, 3, RationalGamma{0.7}),
                        tanh_spec(0.1)}) {
    const int d = s.dim();
    std::vector<double> x(d), y(d), mx(d), gx(d), gy(d), gm(d);
    for (std::uint64_t p = 0; p < 2000; ++p) {
      double n2 = 0.0, ip = 0.0;
      for (int k = 0; k < d; ++k) {
        x[k] = 6.0 * (rng.uniform(p, 0, k) - 0.5);
        y[k] = 6.0 * (rng.uniform(p, 1, k) - 0.5);
        mx[k] = -x[k];
      }
      s.gamma_eval(x.data(), gx.data());
      s.gamma_eval(y.data(), gy.data());
      s.gamma_eval(mx.data(), gm.data());
      for (int k = 0; k < d; ++k) {
        EXPECT_NEAR(gm[k], -gx[k], 1e-15);
        n2 += (x[k] - y[k]) * (x[k] - y[k]);
        ip += (x[k] - y[k]) * (gx[k] - gy[k]);
      }
      EXPECT_LE(ip, s.kappa(std::sqrt(n2)) * n2 + 1e-12);
    }
  }
}

TEST(Assumptions, TanhPerturbationPassesB2) {
  const auto rep = check_assumptions(tanh_spec(0.1));
  // bbar_+ == 0 and R1 = 2, so the bound is 1/(4 R1).
  EXPECT_NEAR(rep.b2_bound, 0.125, 1e-9);
  EXPECT_TRUE(rep.b2_pass);
  EXPECT_TRUE(rep.b1_pass);
  EXPECT_TRUE(rep.antisymmetry_pass);
}

TEST(Assumptions, TanhPerturbationFailsB2AtDoubleAmplitude) {
  const auto rep = check_assumptions(tanh_spec(0.2));
  EXPECT_FALSE(rep.b2_pass);
  EXPECT_FALSE(rep.all_pass());
}

TEST(Assumptions, SineB2BoundUsesShiftedR1) {
  const auto rep = check_assumptions(InteractionSpec(1.0, 1, SineGamma{0.1}));
  EXPECT_NEAR(rep.b2_bound, std::sqrt(0.9) / 8.0, 1e-9);
  EXPECT_TRUE(rep.b2_pass);
  ASSERT_TRUE(rep.epsilon0.has_value());
  EXPECT_NEAR(*rep.epsilon0, 2.0, 1e-15);
}

TEST(Assumptions, PureLinearHasNoEpsilon0) {
  const auto rep = check_assumptions(InteractionSpec(1.0, 1, ZeroGamma{}));
  EXPECT_FALSE(rep.epsilon0.has_value());
  EXPECT_EQ(rep.epsilon0_note, "pure-linear: coupling interpolation band unconstrained");
}

TEST(Assumptions, Deterministic) {
  const InteractionSpec s(1.0, 2, RationalGamma{0.4});
  const auto a = check_assumptions(s, {}, 5), b = check_assumptions(s, {}, 5);
  EXPECT_EQ(a.b1_max_excess, b.b1_max_excess);
  EXPECT_EQ(a.b2_bound, b.b2_bound);
  EXPECT_EQ(a.radii.R1, b.radii.R1);
}

TEST(Centering, DetectsOffset) {
  std::vector<double> s;
  const CounterRng rng(2, "c");
  for (std::uint64_t i = 0; i < 4000; ++i) s.push_back(rng.normal(i, 0, 0));
  double m = 0;
  for (double v : s) m += v;
  m /= double(s.size());
  for (double& v : s) v -= m;
  EXPECT_TRUE(check_centering(s, 1).pass);
  for (double& v : s) v += 0.5;
  EXPECT_FALSE(check_centering(s, 1).pass);
}
