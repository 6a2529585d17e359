#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "adafilter/measures.hpp"
#include "adafilter/model.hpp"

namespace adafilter {

struct FilterState {
  DiscreteMeasure dist;
  // Accumulated sum of log integral g(y_k - h(x)) (predicted_k)(dx).
  double log_normalizer = 0.0;
};

// Bank of per-parameter filters. Normalizing exp(param_log_weights) gives the
// parameter posterior Z_n; per_param[i].dist is the state law given theta_i.
struct AugmentedFilterState {
  std::vector<FilterState> per_param;
  std::vector<double> param_log_weights;
};

// One prediction/correction step: dist K, reweighted by g(y - h(.)).
FilterState filter_step(const FiniteKernel& kernel, const ObservationModel& obs,
                        const FilterState& state, double y);

// Psi_1 .. Psi_n started from (initial, 0).
std::vector<FilterState> run_filter(const FiniteKernel& kernel, const ObservationModel& obs,
                                    const DiscreteMeasure& initial, std::span<const double> y);

/// Streaming form of the augmented filter; keeps only the current state.
class AugmentedFilter {
 public:
  explicit AugmentedFilter(const AugmentedModel& model);

  void step(double y);
  const AugmentedFilterState& state() const noexcept { return state_; }
  std::size_t steps() const noexcept { return steps_; }

 private:
  const AugmentedModel* model_;
  AugmentedFilterState state_;
  std::size_t steps_ = 0;
};

std::vector<AugmentedFilterState> run_augmented_filter(const AugmentedModel& model,
                                                       std::span<const double> y);

// Z_n: softmax of the parameter log weights.
DiscreteMeasure param_posterior(const AugmentedFilterState& state);

// log Z_n(S) for the grid indices flagged in `inside`; stays finite where
// the probability itself would underflow.
double log_param_mass(const AugmentedFilterState& state, std::span<const bool> inside);

// Psi_n^u = sum_i Z_n(i) per_param[i].dist.
DiscreteMeasure state_marginal(const AugmentedFilterState& state);

// Phi_n over (state, parameter) pairs, flattened as param * states + state.
DiscreteMeasure joint_measure(const AugmentedFilterState& state);

// log dQ^n_a / dQ^n_b at the shared observations.
double log_likelihood_ratio(const FilterState& a, const FilterState& b);

}  // namespace adafilter
