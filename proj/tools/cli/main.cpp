#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "harness.hpp"

namespace {

std::vector<double> parse_weights(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    out.push_back(std::stod(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace adafilter::harness;
  CLI::App app{"Adaptive HMM filtering experiments"};
  app.set_version_flag("--version", ADAFILTER_VERSION);

  std::string scenario_name;
  ExperimentConfig config;
  std::string mu_text, mu_prime_text;
  std::size_t alpha = 0;

  app.add_option("scenario", scenario_name,
                 "simulate | filter | posterior | stability | bounds | metrics | identifiability")
      ->required();
  app.add_option("--model", config.model_path, "model spec (JSON)")->required();
  app.add_option("--n", config.n, "horizon");
  app.add_option("--seeds", config.seeds, "comma-separated seeds")->delimiter(',');
  app.add_option("--eta", config.eta, "neighbourhood radius around alpha");
  app.add_option("--out", config.out_dir, "output directory");
  app.add_option("--particles", config.particles, "particle count for the filter scenario (0: off)");
  app.add_option("--fd-step", config.fd_step, "finite-difference step for kernel derivatives");
  app.add_option("--ess-frac", config.ess_frac, "resample when ESS < frac * N");
  app.add_option("--rate-window", config.rate_window, "tail fraction used for the rate fit");
  app.add_option("--tol", config.identifiability_tol, "identifiability tolerance (tv)");
  auto* alpha_opt = app.add_option("--alpha", alpha, "grid index of the true parameter");
  app.add_option("--mu", mu_text, "initial law of the u-filter, comma-separated");
  app.add_option("--mu-prime", mu_prime_text, "initial law of the alpha-filter and the truth");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << R"({"error":"config","message":")" << e.what() << "\",\"issues\":[]}\n";
    return kExitConfig;
  }

  const auto scenario = parse_scenario(scenario_name);
  if (!scenario) {
    std::cerr << R"({"error":"config","message":"unknown scenario )" << scenario_name << "\",\"issues\":[]}\n";
    return kExitConfig;
  }
  config.scenario = *scenario;
  if (alpha_opt->count() > 0) config.alpha = alpha;
  try {
    if (!mu_text.empty()) config.mu = parse_weights(mu_text);
    if (!mu_prime_text.empty()) config.mu_prime = parse_weights(mu_prime_text);
  } catch (const std::exception&) {
    std::cerr << R"({"error":"config","message":"--mu/--mu-prime must be comma-separated reals","issues":[]})" << "\n";
    return kExitConfig;
  }

  const RunResult result = run(config);
  if (result.exit_code != kExitOk) {
    std::cerr << result.error_json << "\n";
    return result.exit_code;
  }
  for (const auto& f : result.files) std::cout << (config.out_dir / f).string() << "\n";
  return kExitOk;
}
