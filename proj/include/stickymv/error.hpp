#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stickymv {

enum class ErrorKind {
  NoDissipativity,
  BisectionFailure,
  A2Violation,
  LengthMismatch,
  ShapeMismatch,
  UnstableStep,
  DriftOrderViolated,
  DivergentIntegral,
  DeltaTooLarge,
  GronwallInapplicable,
  ConfigInvalid,
  AssumptionGateFailed,
  DominationBreach,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::NoDissipativity: return "NoDissipativity";
    case ErrorKind::BisectionFailure: return "BisectionFailure";
    case ErrorKind::A2Violation: return "A2Violation";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::UnstableStep: return "UnstableStep";
    case ErrorKind::DriftOrderViolated: return "DriftOrderViolated";
    case ErrorKind::DivergentIntegral: return "DivergentIntegral";
    case ErrorKind::DeltaTooLarge: return "DeltaTooLarge";
    case ErrorKind::GronwallInapplicable: return "GronwallInapplicable";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::AssumptionGateFailed: return "AssumptionGateFailed";
    case ErrorKind::DominationBreach: return "DominationBreach";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace stickymv
