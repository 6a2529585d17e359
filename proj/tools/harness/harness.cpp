#include "harness.hpp"

#include <algorithm>
#include <charconv>
#include <concepts>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "adafilter/diagnostics.hpp"
#include "adafilter/error.hpp"
#include "adafilter/exact_filter.hpp"
#include "adafilter/measures.hpp"
#include "adafilter/model_io.hpp"
#include "adafilter/parallel.hpp"
#include "adafilter/particle_filter.hpp"

#ifndef ADAFILTER_VERSION
#define ADAFILTER_VERSION "unknown"
#endif

namespace adafilter::harness {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// JSON has no infinity; non-finite reals go out as strings.
json real(double v) {
  if (std::isfinite(v)) return v;
  return format_real(v);
}

json reals(std::span<const double> values) {
  json arr = json::array();
  for (double v : values) arr.push_back(real(v));
  return arr;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::initializer_list<std::string_view> header) {
    bool first = true;
    for (auto h : header) {
      if (!first) buffer_ << ',';
      buffer_ << h;
      first = false;
    }
    buffer_ << '\n';
  }

  template <typename... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((write_cell(cells, first)), ...);
    buffer_ << '\n';
  }

  std::string str() const { return buffer_.str(); }

 private:
  void write_cell(double v, bool& first) { sep(first) << format_real(v); }
  template <std::unsigned_integral T>
  void write_cell(T v, bool& first) {
    sep(first) << v;
  }
  void write_cell(const std::string& v, bool& first) { sep(first) << v; }

  std::ostream& sep(bool& first) {
    if (!first) buffer_ << ',';
    first = false;
    return buffer_;
  }

  std::ostringstream buffer_;
};

class Output {
 public:
  explicit Output(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::config, "cannot write " + (dir_ / name).string());
    out << content;
    files_.push_back(name);
  }

  std::vector<fs::path> files() const {
    std::vector<fs::path> sorted(files_.begin(), files_.end());
    std::sort(sorted.begin(), sorted.end());
    return sorted;
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

struct Context {
  const ExperimentConfig& config;
  const AugmentedModel& model;
  std::optional<std::size_t> file_alpha;
  Output& out;
  json& report;
};

std::size_t require_alpha(const Context& ctx) {
  const auto alpha = ctx.config.alpha ? ctx.config.alpha : ctx.file_alpha;
  if (!alpha) {
    throw Error(ErrorCode::config, "scenario needs --alpha or \"true_param_index\" in the model file");
  }
  if (*alpha >= ctx.model.params()) {
    throw Error(ErrorCode::config, "alpha index " + std::to_string(*alpha) + " outside the grid");
  }
  return *alpha;
}

DiscreteMeasure initial_or(const std::vector<double>& weights, const AugmentedModel& model,
                           const char* flag) {
  if (weights.empty()) return model.initial();
  if (weights.size() != model.states()) {
    throw Error(ErrorCode::config, std::string(flag) + " needs one weight per state");
  }
  try {
    return DiscreteMeasure::probability(weights);
  } catch (const Error& e) {
    throw Error(ErrorCode::config, std::string(flag) + ": " + e.what());
  }
}

void require_identifiable(const Context& ctx) {
  const auto pairs = identifiability_scan(ctx.model.family(), ctx.model.obs(), ctx.config.identifiability_tol);
  if (!pairs.empty()) {
    throw Error(ErrorCode::identifiability,
                "grid points " + std::to_string(pairs.front().first) + " and " +
                    std::to_string(pairs.front().second) + " induce the same observation law");
  }
}

std::string seed_file(const char* stem, std::uint64_t seed) {
  return std::string(stem) + "_seed" + std::to_string(seed) + ".csv";
}

void run_simulate(Context& ctx) {
  const std::size_t alpha = require_alpha(ctx);
  const auto& seeds = ctx.config.seeds;
  std::vector<Trajectory> trajs(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t k) {
    trajs[k] = simulate(ctx.model, alpha, ctx.config.n, seeds[k]);
  });
  CsvWriter csv({"seed", "step", "state", "observation"});
  for (const auto& t : trajs) {
    for (std::size_t s = 0; s < t.states.size(); ++s) {
      csv.row(t.seed, s + 1, t.states[s], t.observations[s]);
    }
  }
  ctx.out.write("trajectory.csv", csv.str());
  ctx.report["alpha_index"] = alpha;
}

void run_filter(Context& ctx) {
  const std::size_t alpha = require_alpha(ctx);
  const auto& seeds = ctx.config.seeds;
  const std::size_t n_particles = ctx.config.particles;
  ParticleOptions pf_options;
  pf_options.ess_fraction = ctx.config.ess_frac;

  struct SeedResult {
    std::string filter_csv;
    std::string particle_csv;
    std::vector<double> posterior;
    std::vector<double> pf_gap;
    std::size_t resamples = 0;
  };
  std::vector<SeedResult> results(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t k) {
    const Trajectory traj = simulate(ctx.model, alpha, ctx.config.n, seeds[k]);
    AugmentedFilter filter(ctx.model);
    CsvWriter csv({"step", "param_index", "state_index", "weight", "param_posterior", "log_normalizer"});
    std::optional<ParticleEnsemble> ens;
    std::optional<CsvWriter> pcsv;
    if (n_particles > 0) {
      ens = pf_init(ctx.model, n_particles, seeds[k]);
      pcsv.emplace(CsvWriter{"step", "particle_id", "state", "param_index", "weight"});
    }
    for (std::size_t step = 0; step < traj.observations.size(); ++step) {
      filter.step(traj.observations[step]);
      const auto& st = filter.state();
      const DiscreteMeasure z = param_posterior(st);
      for (std::size_t i = 0; i < ctx.model.params(); ++i) {
        for (std::size_t x = 0; x < ctx.model.states(); ++x) {
          csv.row(step + 1, i, x, st.per_param[i].dist[x], z[i], st.per_param[i].log_normalizer);
        }
      }
      if (ens) {
        *ens = pf_step(ctx.model, *ens, traj.observations[step], pf_options);
        if (ens->resampled) ++results[k].resamples;
        const auto w = ens->normalized_weights();
        for (std::size_t p = 0; p < ens->size(); ++p) {
          pcsv->row(step + 1, p, std::size_t{ens->particles[p].state},
                    std::size_t{ens->particles[p].param}, w[p]);
        }
        const auto est = pf_estimates(ctx.model, *ens);
        results[k].pf_gap.push_back(tv_norm(est.state_marginal, state_marginal(st)));
      }
    }
    results[k].filter_csv = csv.str();
    if (pcsv) results[k].particle_csv = pcsv->str();
    const DiscreteMeasure z = param_posterior(filter.state());
    results[k].posterior.assign(z.weights().begin(), z.weights().end());
  });

  json per_seed = json::array();
  double mean_terminal_gap = 0.0;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    ctx.out.write(seed_file("filter", seeds[k]), results[k].filter_csv);
    json entry{{"seed", seeds[k]}, {"terminal_param_posterior", reals(results[k].posterior)}};
    if (n_particles > 0) {
      ctx.out.write(seed_file("particles", seeds[k]), results[k].particle_csv);
      entry["pf_state_tv_gap"] = reals(results[k].pf_gap);
      entry["pf_resample_steps"] = results[k].resamples;
      mean_terminal_gap += results[k].pf_gap.back();
    }
    per_seed.push_back(std::move(entry));
  }
  ctx.report["alpha_index"] = alpha;
  ctx.report["seeds"] = per_seed;
  if (n_particles > 0) {
    ctx.report["particles"] = n_particles;
    ctx.report["mean_terminal_pf_state_tv_gap"] = real(mean_terminal_gap / static_cast<double>(seeds.size()));
  }
}

void run_posterior(Context& ctx) {
  const std::size_t alpha = require_alpha(ctx);
  if (!(ctx.config.eta > 0.0)) throw Error(ErrorCode::config, "--eta must be positive");
  ConsistencyOptions options;
  options.rate_window = ctx.config.rate_window;
  options.identifiability_tol = ctx.config.identifiability_tol;
  const ConsistencyReport r =
      posterior_concentration(ctx.model, alpha, ctx.config.eta, ctx.config.n, ctx.config.seeds, options);
  CsvWriter csv({"step", "mass_outside", "log_mass_outside", "mass_at_alpha", "mass_at_alpha_se"});
  for (std::size_t t = 0; t < r.mass_outside.size(); ++t) {
    csv.row(t + 1, r.mass_outside[t], r.log_mass_outside[t], r.mass_at_alpha[t], r.mass_at_alpha_se[t]);
  }
  ctx.out.write("posterior.csv", csv.str());
  ctx.report["alpha_index"] = alpha;
  ctx.report["eta"] = ctx.config.eta;
  ctx.report["log_rate"] = real(r.log_rate);
  ctx.report["terminal_mass_outside"] = reals(r.terminal_mass_outside);
  ctx.report["mean_terminal_mass_outside"] = real(r.mass_outside.back());
  ctx.report["mean_terminal_mass_at_alpha"] = real(r.mass_at_alpha.back());
}

void run_stability(Context& ctx) {
  const std::size_t alpha = require_alpha(ctx);
  require_identifiable(ctx);
  const DiscreteMeasure mu = initial_or(ctx.config.mu, ctx.model, "--mu");
  const DiscreteMeasure mu_prime = initial_or(ctx.config.mu_prime, ctx.model, "--mu-prime");
  const StabilityReport r = stability_experiment(ctx.model, alpha, mu, mu_prime, ctx.config.n, ctx.config.seeds);
  CsvWriter csv({"step", "mean_gap"});
  for (std::size_t t = 0; t < r.mean_gap.size(); ++t) csv.row(t + 1, r.mean_gap[t]);
  ctx.out.write("stability.csv", csv.str());
  ctx.report["alpha_index"] = alpha;
  ctx.report["mu"] = reals(mu.weights());
  ctx.report["mu_prime"] = reals(mu_prime.weights());
  ctx.report["terminal_gap"] = reals(r.terminal_gap);
  ctx.report["mean_gap_first"] = real(r.mean_gap.front());
  ctx.report["mean_gap_last"] = real(r.mean_gap.back());
}

void run_bounds(Context& ctx) {
  const std::size_t alpha = require_alpha(ctx);
  std::vector<std::size_t> thetas(ctx.model.params());
  for (std::size_t i = 0; i < thetas.size(); ++i) thetas[i] = i;
  const BoundSweep sweep = bound_sweep(ctx.model, alpha, thetas, ctx.config.n, ctx.config.seeds);
  CsvWriter csv({"seed", "theta_index", "sup_total_error", "sup_step_h", "sup_step_tv", "bound_h",
                 "bound_tv", "violations", "cross_bound_violations"});
  for (const auto& row : sweep.rows) {
    csv.row(row.seed, row.theta_index, row.report.sup_total_error, row.report.sup_step_h,
            row.report.sup_step_tv, row.report.bound_h, row.report.bound_tv, row.report.violations,
            row.cross_bound_violations);
  }
  ctx.out.write("bounds.csv", csv.str());
  ctx.report["alpha_index"] = alpha;
  ctx.report["epsilon"] = real(sweep.epsilon);
  ctx.report["total_violations"] = sweep.total_violations;

  // Derivative machinery needs a generator or grid neighbours.
  KernelDerivative derivative;
  try {
    derivative = kernel_derivative(ctx.model.family(), alpha, ctx.config.fd_step);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::not_applicable) throw;
    ctx.report["derivative"] = {{"available", false}, {"reason", e.what()}};
    return;
  }
  const auto lambda = lambda_bound(derivative, ctx.model.family().kernel(alpha));
  if (std::any_of(lambda.begin(), lambda.end(), [](double v) { return std::isinf(v); })) {
    throw Error(ErrorCode::not_applicable, "Lambda is infinite at alpha");
  }
  std::vector<std::size_t> horizons;
  for (std::size_t h : {std::size_t{1}, std::size_t{10}, std::size_t{100}, ctx.config.n}) {
    if (h <= ctx.config.n && (horizons.empty() || horizons.back() < h)) horizons.push_back(h);
  }
  const MomentProbeReport probe =
      moment_condition_probe(ctx.model, alpha, ctx.config.eta, horizons, ctx.config.fd_step);
  ctx.report["derivative"] = {
      {"available", true},
      {"one_sided", derivative.one_sided},
      {"lambda_at_alpha", reals(lambda)},
      {"moment_probe",
       {{"radius", ctx.config.eta},
        {"horizons", probe.horizons},
        {"sup_by_horizon", reals(probe.sup_by_horizon)},
        {"analytic_ceiling", real(probe.analytic_ceiling)}}}};
}

void run_metrics(Context& ctx) {
  const KernelFamily& family = ctx.model.family();
  const std::size_t s = family.states();
  std::vector<std::string> names;
  for (std::size_t j = 0; j < s; ++j) names.push_back("lambda_" + std::to_string(j));
  for (std::size_t j = 0; j < s; ++j) names.push_back("stationary_" + std::to_string(j));
  std::ostringstream csv;
  csv << "param_index,epsilon,tau,is_mixing";
  for (const auto& name : names) csv << ',' << name;
  csv << '\n';
  json rows = json::array();
  for (std::size_t i = 0; i < family.size(); ++i) {
    const FiniteKernel& k = family.kernel(i);
    const MixingCertificate cert = mixing_constant(k);
    const double tau = birkhoff_tau(k);
    std::vector<double> pi(s, std::numeric_limits<double>::quiet_NaN());
    if (cert.is_mixing) {
      const DiscreteMeasure stationary = stationary_dist(k);
      pi.assign(stationary.weights().begin(), stationary.weights().end());
    }
    csv << i << ',' << format_real(cert.epsilon) << ',' << format_real(tau) << ','
        << (cert.is_mixing ? 1 : 0);
    for (std::size_t j = 0; j < s; ++j) csv << ',' << format_real(cert.lambda[j]);
    for (std::size_t j = 0; j < s; ++j) csv << ',' << format_real(pi[j]);
    csv << '\n';
    rows.push_back({{"param_index", i},
                    {"epsilon", real(cert.epsilon)},
                    {"tau", real(tau)},
                    {"is_mixing", cert.is_mixing},
                    {"lambda", reals(cert.lambda.weights())},
                    {"stationary", cert.is_mixing ? reals(pi) : json(nullptr)}});
  }
  ctx.out.write("metrics.csv", csv.str());
  ctx.report["kernels"] = rows;
}

void run_identifiability(Context& ctx) {
  const KernelFamily& family = ctx.model.family();
  const auto pairs = identifiability_scan(family, ctx.model.obs(), ctx.config.identifiability_tol);
  CsvWriter csv({"i", "j", "tv"});
  json arr = json::array();
  for (const auto& [i, j] : pairs) {
    const double tv = tv_norm(pushforward(family.kernel(i), ctx.model.obs()),
                              pushforward(family.kernel(j), ctx.model.obs()));
    csv.row(i, j, tv);
    arr.push_back({{"i", i}, {"j", j}, {"tv", real(tv)}});
  }
  ctx.out.write("identifiability.csv", csv.str());
  ctx.report["tolerance"] = ctx.config.identifiability_tol;
  ctx.report["pairs"] = arr;
  ctx.report["identifiable"] = pairs.empty();
}

void validate_config(const ExperimentConfig& c) {
  if (c.n < 1) throw Error(ErrorCode::config, "--n must be >= 1");
  if (c.seeds.empty()) throw Error(ErrorCode::config, "--seeds must list at least one seed");
  if (!(c.fd_step > 0.0)) throw Error(ErrorCode::config, "--fd-step must be positive");
  if (!(c.ess_frac > 0.0 && c.ess_frac <= 1.0)) throw Error(ErrorCode::config, "--ess-frac must be in (0, 1]");
  if (!(c.rate_window > 0.0 && c.rate_window <= 1.0)) {
    throw Error(ErrorCode::config, "--rate-window must be in (0, 1]");
  }
  if (!(c.identifiability_tol > 0.0)) throw Error(ErrorCode::config, "--tol must be positive");
  if ((c.scenario == Scenario::posterior || c.scenario == Scenario::bounds) && !(c.eta > 0.0)) {
    throw Error(ErrorCode::config, "--eta must be positive");
  }
}

json error_json(const std::string& code, const std::string& message, const json& issues = json::array()) {
  return {{"error", code}, {"message", message}, {"issues", issues}};
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::identifiability: return kExitIdentifiability;
    case ErrorCode::not_applicable:
    case ErrorCode::non_ergodic: return kExitNotApplicable;
    default: return kExitConfig;
  }
}

}  // namespace

std::optional<Scenario> parse_scenario(const std::string& name) {
  for (Scenario s : {Scenario::simulate, Scenario::filter, Scenario::posterior, Scenario::stability,
                     Scenario::bounds, Scenario::metrics, Scenario::identifiability}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

std::string to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::simulate: return "simulate";
    case Scenario::filter: return "filter";
    case Scenario::posterior: return "posterior";
    case Scenario::stability: return "stability";
    case Scenario::bounds: return "bounds";
    case Scenario::metrics: return "metrics";
    case Scenario::identifiability: return "identifiability";
  }
  return "unknown";
}

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string config_json(const ExperimentConfig& c) {
  json j{{"scenario", to_string(c.scenario)},
         {"model", c.model_path.string()},
         {"n", c.n},
         {"seeds", c.seeds},
         {"eta", c.eta},
         {"particles", c.particles},
         {"fd_step", c.fd_step},
         {"ess_frac", c.ess_frac},
         {"rate_window", c.rate_window},
         {"identifiability_tol", c.identifiability_tol},
         {"alpha", c.alpha ? json(*c.alpha) : json(nullptr)},
         {"mu", c.mu},
         {"mu_prime", c.mu_prime}};
  return j.dump();
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::uint64_t h = fnv1a(config_json(config));
  // The model file's bytes are part of the experiment identity.
  std::ifstream in(config.model_path, std::ios::binary);
  if (in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    h = fnv1a(buf.str(), h);
  }
  return h;
}

RunResult run(const ExperimentConfig& config) {
  RunResult result;
  try {
    validate_config(config);
    const ModelLoadResult loaded = validate_model(config.model_path);
    if (!loaded.ok()) {
      json issues = json::array();
      for (const auto& issue : loaded.issues) {
        issues.push_back({{"pointer", issue.pointer}, {"message", issue.message}});
      }
      result.exit_code = kExitConfig;
      result.error_json = error_json("invalid_model", "model file failed validation", issues).dump();
      return result;
    }
    Output out(config.out_dir);
    json report{{"scenario", to_string(config.scenario)}, {"config", json::parse(config_json(config))}};
    json& body = report["result"] = json::object();
    Context ctx{config, *loaded.model, loaded.true_param_index, out, body};
    switch (config.scenario) {
      case Scenario::simulate: run_simulate(ctx); break;
      case Scenario::filter: run_filter(ctx); break;
      case Scenario::posterior: run_posterior(ctx); break;
      case Scenario::stability: run_stability(ctx); break;
      case Scenario::bounds: run_bounds(ctx); break;
      case Scenario::metrics: run_metrics(ctx); break;
      case Scenario::identifiability: run_identifiability(ctx); break;
    }
    out.write("report.json", report.dump(2) + "\n");
    std::vector<std::string> listed;
    for (const auto& f : out.files()) listed.push_back(f.string());
    listed.push_back("manifest.json");
    std::sort(listed.begin(), listed.end());
    const json manifest{{"version", ADAFILTER_VERSION},
                        {"config_hash", hex64(config_hash(config))},
                        {"config", json::parse(config_json(config))},
                        {"seeds", config.seeds},
                        {"files", listed}};
    out.write("manifest.json", manifest.dump(2) + "\n");
    result.files = out.files();
  } catch (const Error& e) {
    result.exit_code = exit_code_for(e.code());
    result.error_json = error_json(std::string(adafilter::to_string(e.code())), e.what()).dump();
  } catch (const std::filesystem::filesystem_error& e) {
    result.exit_code = kExitConfig;
    result.error_json = error_json("config", e.what()).dump();
  }
  return result;
}

}  // namespace adafilter::harness
