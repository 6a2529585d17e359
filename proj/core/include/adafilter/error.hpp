#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adafilter {

enum class ErrorCode {
  dimension,
  empty_input,
  missing_label,
  invalid_measure,
  invalid_kernel,
  invalid_model,
  non_ergodic,
  invalid_prior,
  index_out_of_range,
  invalid_size,
  not_applicable,
  identifiability,
  precondition,
  config,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace adafilter
