#pragma once

#include <stdexcept>
#include <string>

namespace relurec {

enum class ErrorKind {
  ZeroMatrix,
  NumericalFailure,
  InvalidShape,
  ShapeMismatch,
  RankDeficientBasis,
  RankDeficientA,
  RankDeficientHidden,
  NoRealization,
  BudgetExceeded,
  WhiteningFailed,
  NoConvergence,
  AmbiguousSign,
  NoFeasibleSign,
  NoSolution,
  TooFewClusters,
  DegenerateSum,
};

inline const char* error_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::ZeroMatrix: return "ZeroMatrix";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::InvalidShape: return "InvalidShape";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::RankDeficientBasis: return "RankDeficientBasis";
    case ErrorKind::RankDeficientA: return "RankDeficientA";
    case ErrorKind::RankDeficientHidden: return "RankDeficientHidden";
    case ErrorKind::NoRealization: return "NoRealization";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::WhiteningFailed: return "WhiteningFailed";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::AmbiguousSign: return "AmbiguousSign";
    case ErrorKind::NoFeasibleSign: return "NoFeasibleSign";
    case ErrorKind::NoSolution: return "NoSolution";
    case ErrorKind::TooFewClusters: return "TooFewClusters";
    case ErrorKind::DegenerateSum: return "DegenerateSum";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_name(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// exit-code class for the command line: 2 input, 3 algorithm, 4 numerical
inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidShape:
    case ErrorKind::ShapeMismatch:
      return 2;
    case ErrorKind::ZeroMatrix:
    case ErrorKind::NumericalFailure:
    case ErrorKind::NoConvergence:
    case ErrorKind::WhiteningFailed:
      return 4;
    default:
      return 3;
  }
}

}  // namespace relurec
