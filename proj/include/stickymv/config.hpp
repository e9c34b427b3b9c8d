#pragma once

// YAML experiment files. Every mapping is checked against its known keys.

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "stickymv/error.hpp"
#include "stickymv/experiments.hpp"

namespace stickymv {

namespace detail {

inline void check_keys(const YAML::Node& n, const std::string& where, const std::set<std::string>& allowed) {
  if (!n.IsMap()) fail(ErrorKind::ConfigInvalid, where + " must be a mapping");
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      fail(ErrorKind::ConfigInvalid, "unknown key '" + key + "' in " + where + " (allowed: " + list + ")");
    }
  }
}

template <class T>
void read(const YAML::Node& n, const char* key, T& out, const std::string& where) {
  if (!n[key]) return;
  try {
    out = n[key].as<T>();
  } catch (const YAML::Exception&) {
    fail(ErrorKind::ConfigInvalid, where + "." + key + " has the wrong type");
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const YAML::Node& root) {
  using detail::check_keys;
  using detail::read;
  check_keys(root, "config",
             {"experiment", "seed", "override_gates", "out_dir", "drift", "scheme", "sticky", "phase", "mkv", "chaos",
              "kuramoto"});
  if (!root["experiment"]) fail(ErrorKind::ConfigInvalid, "config needs an 'experiment' key");
  const auto kind = root["experiment"].as<std::string>();
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
    fail(ErrorKind::ConfigInvalid, "unknown experiment '" + kind + "'");
  auto c = ExperimentConfig::defaults(kind);
  read(root, "seed", c.seed, "config");
  read(root, "override_gates", c.override_gates, "config");
  read(root, "out_dir", c.out_dir, "config");
  if (const auto n = root["drift"]) {
    check_keys(n, "drift", {"kind", "L", "alpha", "dim", "r", "psi", "kappa_r", "kappa"});
    read(n, "kind", c.drift.kind, "drift");
    read(n, "L", c.drift.L, "drift");
    read(n, "alpha", c.drift.alpha, "drift");
    read(n, "dim", c.drift.dim, "drift");
    read(n, "r", c.drift.r, "drift");
    read(n, "psi", c.drift.psi, "drift");
    read(n, "kappa_r", c.drift.kappa_r, "drift");
    read(n, "kappa", c.drift.kappa, "drift");
  }
  if (const auto n = root["scheme"]) {
    check_keys(n, "scheme", {"h", "M", "T", "record_every", "delta"});
    read(n, "h", c.scheme.h, "scheme");
    read(n, "M", c.scheme.M, "scheme");
    read(n, "T", c.scheme.T, "scheme");
    read(n, "record_every", c.scheme.record_every, "scheme");
    read(n, "delta", c.scheme.delta, "scheme");
  }
  if (const auto n = root["sticky"]) {
    check_keys(n, "sticky",
               {"slope", "a", "scheme", "n", "boundary", "init", "init_value", "average_from", "allowance",
                "envelope_factor"});
    read(n, "slope", c.sticky.slope, "sticky");
    read(n, "a", c.sticky.a, "sticky");
    read(n, "scheme", c.sticky.scheme, "sticky");
    read(n, "n", c.sticky.n, "sticky");
    read(n, "boundary", c.sticky.boundary, "sticky");
    read(n, "init", c.sticky.init, "sticky");
    read(n, "init_value", c.sticky.init_value, "sticky");
    read(n, "average_from", c.sticky.average_from, "sticky");
    read(n, "allowance", c.sticky.allowance, "sticky");
    read(n, "envelope_factor", c.sticky.envelope_factor, "sticky");
  }
  if (const auto n = root["phase"]) {
    check_keys(n, "phase", {"Lt", "a_factor"});
    read(n, "Lt", c.phase.Lt, "phase");
    read(n, "a_factor", c.phase.a_factor, "phase");
  }
  if (const auto n = root["mkv"]) {
    check_keys(n, "mkv", {"scale_x", "scale_y", "rate_factor", "bound_factor", "floor_factor", "breach_budget"});
    read(n, "scale_x", c.mkv.scale_x, "mkv");
    read(n, "scale_y", c.mkv.scale_y, "mkv");
    read(n, "rate_factor", c.mkv.rate_factor, "mkv");
    read(n, "bound_factor", c.mkv.bound_factor, "mkv");
    read(n, "floor_factor", c.mkv.floor_factor, "mkv");
    read(n, "breach_budget", c.mkv.breach_budget, "mkv");
  }
  if (const auto n = root["chaos"]) {
    check_keys(n, "chaos", {"N", "M_ref", "init_scale", "slope_lo", "slope_hi"});
    read(n, "N", c.chaos.N, "chaos");
    read(n, "M_ref", c.chaos.M_ref, "chaos");
    read(n, "init_scale", c.chaos.init_scale, "chaos");
    read(n, "slope_lo", c.chaos.slope_lo, "chaos");
    read(n, "slope_hi", c.chaos.slope_hi, "chaos");
  }
  if (const auto n = root["kuramoto"]) {
    check_keys(n, "kuramoto", {"k", "spread", "rate_factor"});
    read(n, "k", c.kuramoto.k, "kuramoto");
    read(n, "spread", c.kuramoto.spread, "kuramoto");
    read(n, "rate_factor", c.kuramoto.rate_factor, "kuramoto");
  }
  // Catch malformed physics early.
  make_spec(c.drift);
  if (!(c.scheme.h > 0.0) || !(c.scheme.T >= 0.0) || !(c.scheme.record_every > 0.0) || c.scheme.M == 0)
    fail(ErrorKind::ConfigInvalid, "scheme needs h > 0, T >= 0, record_every > 0, M > 0");
  return c;
}

inline ExperimentConfig load_config_text(const std::string& text) {
  try {
    return parse_config(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    fail(ErrorKind::ConfigInvalid, std::string("yaml: ") + e.what());
  }
}

inline ExperimentConfig load_config_file(const std::string& path) {
  try {
    return parse_config(YAML::LoadFile(path));
  } catch (const YAML::Exception& e) {
    fail(ErrorKind::ConfigInvalid, std::string("yaml: ") + e.what());
  }
}

}  // namespace stickymv
