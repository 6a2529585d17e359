#include "adafilter/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "adafilter/error.hpp"
#include "adafilter/rng.hpp"

namespace adafilter {

namespace {

void normalize_log_weights(std::vector<double>& log_weights) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : log_weights) m = std::max(m, v);
  double s = 0.0;
  for (double v : log_weights) s += std::exp(v - m);
  const double lse = m + std::log(s);
  for (double& v : log_weights) v -= lse;
}

}  // namespace

std::vector<double> ParticleEnsemble::normalized_weights() const {
  std::vector<double> w(log_weights.size());
  double m = -std::numeric_limits<double>::infinity();
  for (double v : log_weights) m = std::max(m, v);
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(log_weights[i] - m);
    s += w[i];
  }
  for (double& v : w) v /= s;
  return w;
}

double ParticleEnsemble::effective_sample_size() const {
  double s2 = 0.0;
  for (double w : normalized_weights()) s2 += w * w;
  return 1.0 / s2;
}

std::vector<std::size_t> systematic_resample(std::span<const double> weights, double u) {
  const std::size_t n = weights.size();
  std::vector<std::size_t> offspring(n);
  const double step = 1.0 / static_cast<double>(n);
  double cumulative = weights.empty() ? 0.0 : weights[0];
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double point = (static_cast<double>(i) + u) * step;
    while (point >= cumulative && j + 1 < n) cumulative += weights[++j];
    offspring[i] = j;
  }
  return offspring;
}

ParticleEnsemble pf_init(const AugmentedModel& model, std::size_t n_particles, std::uint64_t seed) {
  if (n_particles == 0) throw Error(ErrorCode::invalid_size, "particle count must be >= 1");
  const CounterRng rng(seed);
  ParticleEnsemble ens;
  ens.seed = seed;
  ens.particles.resize(n_particles);
  ens.log_weights.assign(n_particles, -std::log(static_cast<double>(n_particles)));
  for (std::size_t i = 0; i < n_particles; ++i) {
    const auto [u_state, u_param] = rng.uniforms(kParticleInitStream, 0, static_cast<std::uint32_t>(i));
    ens.particles[i].state =
        static_cast<std::uint32_t>(sample_categorical(model.initial().weights(), u_state));
    ens.particles[i].param =
        static_cast<std::uint32_t>(sample_categorical(model.prior().weights(), u_param));
  }
  return ens;
}

ParticleEnsemble pf_step(const AugmentedModel& model, const ParticleEnsemble& ensemble, double y,
                         const ParticleOptions& options) {
  const CounterRng rng(ensemble.seed);
  const auto step = static_cast<std::uint32_t>(ensemble.step + 1);
  const std::vector<double> log_g = model.obs().log_likelihoods(y);

  ParticleEnsemble next;
  next.seed = ensemble.seed;
  next.step = ensemble.step + 1;
  next.particles = ensemble.particles;
  next.log_weights = ensemble.log_weights;
  for (std::size_t i = 0; i < next.particles.size(); ++i) {
    Particle& p = next.particles[i];
    const FiniteKernel& kernel = model.family().kernel(p.param);
    const double u = rng.uniform(kParticleMoveStream, step, static_cast<std::uint32_t>(i));
    p.state = static_cast<std::uint32_t>(sample_categorical(kernel.row(p.state), u));
    next.log_weights[i] += log_g[p.state];
  }
  normalize_log_weights(next.log_weights);

  const double n = static_cast<double>(next.size());
  if (next.effective_sample_size() < options.ess_fraction * n) {
    const std::vector<double> w = next.normalized_weights();
    const auto offspring = systematic_resample(w, rng.uniform(kParticleResampleStream, step, 0));
    std::vector<Particle> resampled(next.size());
    for (std::size_t i = 0; i < offspring.size(); ++i) resampled[i] = next.particles[offspring[i]];
    next.particles = std::move(resampled);
    next.log_weights.assign(next.size(), -std::log(n));
    next.resampled = true;
  }
  return next;
}

ParticleEstimates pf_estimates(const AugmentedModel& model, const ParticleEnsemble& ensemble) {
  std::vector<double> states(model.states(), 0.0);
  std::vector<double> params(model.params(), 0.0);
  const std::vector<double> w = ensemble.normalized_weights();
  for (std::size_t i = 0; i < w.size(); ++i) {
    states[ensemble.particles[i].state] += w[i];
    params[ensemble.particles[i].param] += w[i];
  }
  return {DiscreteMeasure(std::move(states)), DiscreteMeasure(std::move(params))};
}

}  // namespace adafilter
