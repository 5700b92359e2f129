#include "lvef/errors.hpp"

namespace lvef {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::empty_input: return "empty-input";
    case ErrorCode::domain: return "domain";
    case ErrorCode::initialization: return "initialization";
    case ErrorCode::degenerate_data: return "degenerate-data";
    case ErrorCode::separation: return "separation";
    case ErrorCode::non_convergence: return "non-convergence";
    case ErrorCode::invalid_state: return "invalid-state";
    case ErrorCode::propagation: return "propagation";
    case ErrorCode::schema: return "schema";
    case ErrorCode::row: return "row";
    case ErrorCode::duplicate: return "duplicate";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_parameter:
    case ErrorCode::empty_input:
    case ErrorCode::domain:
    case ErrorCode::schema:
    case ErrorCode::row:
    case ErrorCode::duplicate:
    case ErrorCode::io:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> index)
    : std::runtime_error(message), code_(code), index_(index) {}

NonConvergenceError::NonConvergenceError(const std::string& message, double last_beta,
                                         int iterations)
    : Error(ErrorCode::non_convergence, message), last_beta_(last_beta), iterations_(iterations) {}

}  // namespace lvef
