#include "prethermal/error.hpp"

namespace prethermal {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_input: return "invalid_input";
        case ErrorKind::degenerate_pair: return "degenerate_pair";
        case ErrorKind::density_too_high: return "density_too_high";
        case ErrorKind::capacity: return "capacity";
        case ErrorKind::no_solution: return "no_solution";
        case ErrorKind::unbounded_beta: return "unbounded_beta";
        case ErrorKind::krylov_failure: return "krylov_failure";
        case ErrorKind::invalid_plan: return "invalid_plan";
        case ErrorKind::insufficient_data: return "insufficient_data";
        case ErrorKind::fit_failure: return "fit_failure";
        case ErrorKind::undefined_amplitude: return "undefined_amplitude";
        case ErrorKind::calibration_ambiguous: return "calibration_ambiguous";
        case ErrorKind::unsupported: return "unsupported";
        case ErrorKind::config: return "config";
        case ErrorKind::io: return "io";
        case ErrorKind::campaign_aborted: return "campaign_aborted";
    }
    return "unknown";
}

}  // namespace prethermal
