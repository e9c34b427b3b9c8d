// Command-line runner: run <config>, verify <suite>, constants <drift args>.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "stickymv/acceptance.hpp"
#include "stickymv/config.hpp"
#include "stickymv/experiments.hpp"
#include "stickymv/parallel.hpp"

namespace fs = std::filesystem;
using namespace stickymv;

namespace {

constexpr int kPass = 0, kAssertFail = 1, kConfigFail = 2;

std::size_t default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, std::size_t threads,
            const std::string& out_dir, bool override_gates) {
  auto cfg = load_config_file(path);
  if (seed) cfg.seed = *seed;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (override_gates) cfg.override_gates = true;
  Executor ex(threads);
  const auto rep = run_experiment(cfg, ex);
  const fs::path dir = fs::path(cfg.out_dir) / cfg.experiment;
  rep.write(dir);
  for (const auto& a : rep.assertions)
    std::printf("%-4s %s: %s (value %s, bound %s)\n", a.pass ? "PASS" : "FAIL", a.name.c_str(), a.detail.c_str(),
                format_number(a.value).c_str(), format_number(a.bound).c_str());
  std::printf("report: %s\n", (dir / "manifest.json").string().c_str());
  return rep.passed() ? kPass : kAssertFail;
}

int cmd_verify(const std::string& suite, std::size_t threads, const std::string& out_dir) {
  AcceptanceSuite s;
  std::vector<std::string> ids;
  const auto& suites = AcceptanceSuite::suites();
  if (auto it = suites.find(suite); it != suites.end()) {
    ids = it->second;
  } else {
    bool single = false;
    for (const auto& c : s.criteria()) single = single || c.id == suite;
    if (!single) {
      std::string list;
      for (const auto& [name, _] : suites) list += " " + name;
      std::fprintf(stderr, "unknown suite '%s'; available:%s (or a single criterion AC1..AC13)\n", suite.c_str(),
                   list.c_str());
      return kConfigFail;
    }
    ids = {suite};
  }
  Executor ex(threads);
  Json summary;
  summary["suite"] = suite;
  bool all = true;
  for (const auto& id : ids) {
    const auto& c = s.find(id);
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = c.run(ex, false);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all = all && r.pass;
    std::printf("%-5s %s  %s: %s [%.1fs]\n", id.c_str(), r.pass ? "PASS" : "FAIL", c.title.c_str(), r.summary.c_str(),
                secs);
    std::fflush(stdout);
    summary["criteria"].push_back({{"id", id}, {"title", c.title}, {"pass", r.pass}, {"summary", r.summary}});
    if (!out_dir.empty())
      for (const auto& [name, text] : r.files) write_text_file(fs::path(out_dir) / id / name, text);
  }
  summary["pass"] = all;
  if (!out_dir.empty()) write_text_file(fs::path(out_dir) / ("verify_" + suite + ".json"), summary.dump(2) + "\n");
  return all ? kPass : kAssertFail;
}

int cmd_constants(const ExperimentConfig::Drift& d, std::optional<double> k) {
  Json out;
  if (k) {
    out["kuramoto"] = torus_bundle_json(kuramoto_constants(*k));
  } else {
    ExperimentConfig cfg = ExperimentConfig::defaults("constants-only");
    cfg.drift = d;
    Executor ex(1);
    const auto rep = run_experiment(cfg, ex);
    out = rep.manifest;
  }
  std::printf("%s\n", out.dump(2).c_str());
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sticky-coupling experiments for McKean-Vlasov SDEs"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  std::size_t threads = default_threads();
  std::string out_dir;
  bool override_gates = false;
  app.add_option("--seed", seed, "seed override");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_flag("--override-gates", override_gates, "run even if assumption gates fail (diagnostic)");

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "YAML experiment file")->required();

  std::string suite;
  auto* verify = app.add_subcommand("verify", "run an acceptance suite");
  verify->add_option("suite", suite, "suite name")->required();

  ExperimentConfig::Drift drift;
  std::optional<double> k;
  auto* constants = app.add_subcommand("constants", "print derived constants");
  constants->add_option("--drift", drift.kind, "zero | sine | rational");
  constants->add_option("--L", drift.L);
  constants->add_option("--alpha", drift.alpha);
  constants->add_option("--dim", drift.dim);
  constants->add_option("--kuramoto-k", k, "torus constants for coupling k instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigFail;
  }
  try {
    if (*run) return cmd_run(config_path, seed, threads, out_dir, override_gates);
    if (*verify) return cmd_verify(suite, threads, out_dir);
    if (*constants) return cmd_constants(drift, k);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfigFail;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfigFail;
  }
  return kConfigFail;
}
