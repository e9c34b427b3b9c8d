#include <gtest/gtest.h>

#include <string>

#include "stickymv/config.hpp"
#include "stickymv/experiments.hpp"

using namespace stickymv;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::AssumptionGateFailed;
}

double derived(const ExperimentReport& r, const char* name) { return r.manifest["derived"][name]["value"].get<double>(); }

}  // namespace

TEST(Config, ParsesSections) {
  const auto c = load_config_text(R"(
experiment: mkv-contraction
seed: 9
drift: {kind: rational, L: 2.0, alpha: 0.5, dim: 3}
scheme: {h: 0.002, M: 300, T: 1.5}
mkv: {scale_y: 4.0}
)");
  EXPECT_EQ(c.experiment, "mkv-contraction");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.drift.kind, "rational");
  EXPECT_EQ(c.drift.dim, 3);
  EXPECT_EQ(c.scheme.M, 300u);
  EXPECT_EQ(c.scheme.h, 0.002);
  EXPECT_EQ(c.mkv.scale_y, 4.0);
  EXPECT_EQ(c.mkv.scale_x, 1.0);
}

TEST(Config, DefaultsDependOnKind) {
  const auto c = load_config_text("experiment: chaos-scaling\n");
  EXPECT_EQ(c.drift.kind, "sine");
  EXPECT_EQ(c.scheme.h, 5e-3);
  EXPECT_EQ(c.scheme.delta, 2.0);
  const auto j = c.to_json();
  EXPECT_EQ(j["scheme"]["T"].get<double>(), 6.0);
  EXPECT_EQ(j["chaos"]["M_ref"].get<std::size_t>(), 10000u);
}

TEST(Config, RejectsBadInput) {
  EXPECT_EQ(kind_of([] { load_config_text("experiment: constants-only\nbogus: 1\n"); }), ErrorKind::ConfigInvalid);
  EXPECT_EQ(kind_of([] { load_config_text("experiment: constants-only\ndrift: {Lx: 1}\n"); }), ErrorKind::ConfigInvalid);
  EXPECT_EQ(kind_of([] { load_config_text("experiment: constants-only\ndrift: {L: -1}\n"); }), ErrorKind::ConfigInvalid);
  EXPECT_EQ(kind_of([] { load_config_text("experiment: nope\n"); }), ErrorKind::ConfigInvalid);
  EXPECT_EQ(kind_of([] { load_config_text("seed: 3\n"); }), ErrorKind::ConfigInvalid);
  EXPECT_EQ(kind_of([] { load_config_text("experiment: [unclosed\n"); }), ErrorKind::ConfigInvalid);
  EXPECT_EQ(kind_of([] { load_config_text("experiment: constants-only\nscheme: {h: 0}\n"); }), ErrorKind::ConfigInvalid);
}

TEST(Experiments, ConstantsOnlyPureLinear) {
  Executor ex(1);
  const auto rep = run_experiment(load_config_text("experiment: constants-only\n"), ex);
  EXPECT_TRUE(rep.passed());
  EXPECT_NEAR(derived(rep, "ctilde"), 0.25, 1e-9);
  EXPECT_NEAR(derived(rep, "M1"), 2.0, 1e-12);
  EXPECT_NEAR(derived(rep, "R1"), 2.0, 1e-9);
  EXPECT_NEAR(derived(rep, "C"), 0.5, 1e-12);
  EXPECT_TRUE(rep.files.count("profile.csv"));
  EXPECT_EQ(rep.manifest["config"]["drift"]["kind"], "zero");
}

TEST(Experiments, ConstantsOnlyB2FailureIsReported) {
  Executor ex(1);
  const auto rep = run_experiment(load_config_text("experiment: constants-only\ndrift: {kind: sine, alpha: 0.2}\n"), ex);
  EXPECT_FALSE(rep.passed());
}

TEST(Experiments, PhaseDiagramFlipsAtThreshold) {
  Executor ex(1);
  const auto rep = run_experiment(load_config_text("experiment: phase-diagram\nphase: {Lt: [1.0], a_factor: [0.9, 1.1]}\n"), ex);
  EXPECT_TRUE(rep.passed());
  const std::string csv = rep.files.at("phase.csv");
  EXPECT_NE(csv.find(",0.9,"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Experiments, RunsAreReproducible) {
  const auto cfg = load_config_text(R"(
experiment: mkv-contraction
seed: 4
scheme: {M: 400, T: 0.3, h: 0.01}
)");
  Executor e1(1), e3(3);
  const auto a = run_experiment(cfg, e1), b = run_experiment(cfg, e3);
  EXPECT_EQ(a.files, b.files);
  EXPECT_EQ(a.manifest.dump(), b.manifest.dump());
}

TEST(Experiments, GateStopsUnlessOverridden) {
  Executor ex(1);
  const char* base = "experiment: mkv-contraction\ndrift: {kind: sine, alpha: 0.3}\nscheme: {M: 200, T: 0.1, h: 0.01}\n";
  EXPECT_EQ(kind_of([&] { run_experiment(load_config_text(base), ex); }), ErrorKind::AssumptionGateFailed);
  auto cfg = load_config_text(base);
  cfg.override_gates = true;
  EXPECT_NO_THROW(run_experiment(cfg, ex));
}
