#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "adafilter/model.hpp"

namespace adafilter {

struct ValidationIssue {
  std::string pointer;  // JSON pointer to the offending field
  std::string message;
};

struct ModelLoadResult {
  std::optional<AugmentedModel> model;
  std::vector<ValidationIssue> issues;
  // Optional "true_param_index" from the file.
  std::optional<std::size_t> true_param_index;

  bool ok() const noexcept { return model.has_value() && issues.empty(); }
};

// Parses a model spec and reports every violation, not just the first.
ModelLoadResult parse_model(const std::string& json_text);
ModelLoadResult validate_model(const std::filesystem::path& path);

}  // namespace adafilter
