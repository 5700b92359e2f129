#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace lvef {

enum class ErrorCode {
  invalid_parameter,
  empty_input,
  domain,
  initialization,
  degenerate_data,
  separation,
  non_convergence,
  invalid_state,
  propagation,
  schema,
  row,
  duplicate,
  io,
};

const char* to_string(ErrorCode code) noexcept;

// True for failures caused by bad input data or parameters (CLI exit status 2);
// false for numerical failures (exit status 3).
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> index = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  // Record or row index the failure refers to, when there is one.
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& message, double last_beta, int iterations);

  double last_beta() const noexcept { return last_beta_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double last_beta_;
  int iterations_;
};

}  // namespace lvef
