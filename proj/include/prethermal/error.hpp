#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prethermal {

/// Failure categories surfaced by the library. The CLI reports these by name.
enum class ErrorKind {
    invalid_input,
    degenerate_pair,
    density_too_high,
    capacity,
    no_solution,
    unbounded_beta,
    krylov_failure,
    invalid_plan,
    insufficient_data,
    fit_failure,
    undefined_amplitude,
    calibration_ambiguous,
    unsupported,
    config,
    io,
    campaign_aborted,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace prethermal
