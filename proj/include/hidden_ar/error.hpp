#ifndef HIDDEN_AR_ERROR_HPP
#define HIDDEN_AR_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace hidden_ar {

enum class Errc {
  condition_a0_violated,
  forbidden_pair,
  unsupported_set,
  unsupported_coordinate,
  zero_horizon,
  horizon_too_short,
  series_too_short,
  mismatched_lengths,
  invalid_config,
  invalid_prior,
  fisher_singular,
  degenerate_posterior,
  io_error,
};

constexpr std::string_view to_string(Errc c) noexcept {
  switch (c) {
    case Errc::condition_a0_violated: return "ConditionA0Violated";
    case Errc::forbidden_pair: return "ForbiddenPair";
    case Errc::unsupported_set: return "UnsupportedSet";
    case Errc::unsupported_coordinate: return "UnsupportedCoordinate";
    case Errc::zero_horizon: return "ZeroHorizon";
    case Errc::horizon_too_short: return "HorizonTooShort";
    case Errc::series_too_short: return "SeriesTooShort";
    case Errc::mismatched_lengths: return "MismatchedLengths";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::invalid_prior: return "InvalidPrior";
    case Errc::fisher_singular: return "FisherSingular";
    case Errc::degenerate_posterior: return "DegeneratePosterior";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

/// Input and contract violations; the CLI maps these to exit code 2.
constexpr bool is_validation(Errc c) noexcept {
  switch (c) {
    case Errc::fisher_singular:
    case Errc::degenerate_posterior:
    case Errc::io_error:
      return false;
    default:
      return true;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }
  bool validation() const noexcept { return is_validation(code_); }

 private:
  Errc code_;
};

}  // namespace hidden_ar

#endif  // HIDDEN_AR_ERROR_HPP
