#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "adafilter/measures.hpp"
#include "adafilter/model.hpp"

namespace adafilter {

struct Particle {
  std::uint32_t state = 0;
  std::uint32_t param = 0;

  friend bool operator==(const Particle&, const Particle&) = default;
};

/// Bootstrap particle approximation of the augmented filter. Parameter
/// components never move; log weights are kept with log-sum-exp = 0.
struct ParticleEnsemble {
  std::vector<Particle> particles;
  std::vector<double> log_weights;
  std::size_t step = 0;
  std::uint64_t seed = 0;
  bool resampled = false;  // whether the last pf_step resampled

  std::size_t size() const noexcept { return particles.size(); }
  std::vector<double> normalized_weights() const;
  double effective_sample_size() const;
};

struct ParticleOptions {
  // Resample when ESS < ess_fraction * N.
  double ess_fraction = 0.5;
};

struct ParticleEstimates {
  DiscreteMeasure state_marginal;
  DiscreteMeasure param_posterior;
};

ParticleEnsemble pf_init(const AugmentedModel& model, std::size_t n_particles, std::uint64_t seed);
ParticleEnsemble pf_step(const AugmentedModel& model, const ParticleEnsemble& ensemble, double y,
                         const ParticleOptions& options = {});
ParticleEstimates pf_estimates(const AugmentedModel& model, const ParticleEnsemble& ensemble);

// Systematic resampling: offspring indices for one uniform u in [0, 1).
std::vector<std::size_t> systematic_resample(std::span<const double> weights, double u);

}  // namespace adafilter
