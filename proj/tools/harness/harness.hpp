#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace adafilter::harness {

enum class Scenario { simulate, filter, posterior, stability, bounds, metrics, identifiability };

std::optional<Scenario> parse_scenario(const std::string& name);
std::string to_string(Scenario scenario);

struct ExperimentConfig {
  Scenario scenario = Scenario::simulate;
  std::filesystem::path model_path;
  std::size_t n = 100;
  std::vector<std::uint64_t> seeds{1};
  double eta = 0.1;
  std::filesystem::path out_dir = "out";
  std::size_t particles = 0;  // 0: no particle filter
  double fd_step = 1e-5;
  double ess_frac = 0.5;
  double rate_window = 0.5;
  // Grid index of the data-generating parameter; falls back to the
  // model file's "true_param_index".
  std::optional<std::size_t> alpha;
  // Initial laws for the stability scenario; default to the model's.
  std::vector<double> mu;
  std::vector<double> mu_prime;
  double identifiability_tol = 1e-6;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIdentifiability = 3;
inline constexpr int kExitNotApplicable = 4;

struct RunResult {
  int exit_code = kExitOk;
  std::string error_json;  // machine-readable error, empty on success
  std::vector<std::filesystem::path> files;  // relative to out_dir, sorted
};

// Canonical JSON echo of the config; hashed into the manifest.
std::string config_json(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);

RunResult run(const ExperimentConfig& config);

// Shortest decimal string that parses back to the same double.
std::string format_real(double value);

}  // namespace adafilter::harness
