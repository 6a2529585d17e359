#include "adafilter/exact_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "adafilter/error.hpp"

namespace adafilter {

namespace {

constexpr double kUnderflowGuard = 1e-300;

double log_sum_exp(std::span<const double> values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

FilterState correct(const DiscreteMeasure& predicted, std::span<const double> log_g,
                    double log_normalizer) {
  const std::size_t n = predicted.size();
  std::vector<double> weighted(n);
  double max_weight = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    weighted[j] = predicted[j] * std::exp(log_g[j]);
    max_weight = std::max(max_weight, weighted[j]);
  }
  if (max_weight >= kUnderflowGuard) {
    double total = 0.0;
    for (double w : weighted) total += w;
    for (double& w : weighted) w /= total;
    return {DiscreteMeasure(std::move(weighted)), log_normalizer + std::log(total)};
  }
  // Far-tail observation: redo the weighting in log space.
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    weighted[j] = predicted[j] > 0.0 ? std::log(predicted[j]) + log_g[j]
                                     : -std::numeric_limits<double>::infinity();
    m = std::max(m, weighted[j]);
  }
  double total = 0.0;
  for (double& w : weighted) {
    w = std::exp(w - m);
    total += w;
  }
  for (double& w : weighted) w /= total;
  return {DiscreteMeasure(std::move(weighted)), log_normalizer + m + std::log(total)};
}

}  // namespace

FilterState filter_step(const FiniteKernel& kernel, const ObservationModel& obs,
                        const FilterState& state, double y) {
  if (state.dist.size() != kernel.size() || obs.states() != kernel.size()) {
    throw Error(ErrorCode::dimension, "filter state, kernel and observation model disagree");
  }
  const std::vector<double> log_g = obs.log_likelihoods(y);
  return correct(kernel.propagate(state.dist), log_g, state.log_normalizer);
}

std::vector<FilterState> run_filter(const FiniteKernel& kernel, const ObservationModel& obs,
                                    const DiscreteMeasure& initial, std::span<const double> y) {
  if (y.empty()) throw Error(ErrorCode::empty_input, "observation sequence is empty");
  std::vector<FilterState> out;
  out.reserve(y.size());
  FilterState state{initial, 0.0};
  for (double obs_value : y) {
    state = filter_step(kernel, obs, state, obs_value);
    out.push_back(state);
  }
  return out;
}

AugmentedFilter::AugmentedFilter(const AugmentedModel& model) : model_(&model) {
  const std::size_t p = model.params();
  state_.per_param.assign(p, FilterState{model.initial(), 0.0});
  state_.param_log_weights.resize(p);
  for (std::size_t i = 0; i < p; ++i) {
    const double u = model.prior()[i];
    state_.param_log_weights[i] = u > 0.0 ? std::log(u) : -std::numeric_limits<double>::infinity();
  }
}

void AugmentedFilter::step(double y) {
  const std::vector<double> log_g = model_->obs().log_likelihoods(y);
  const auto& family = model_->family();
  for (std::size_t i = 0; i < state_.per_param.size(); ++i) {
    FilterState& s = state_.per_param[i];
    s = correct(family.kernel(i).propagate(s.dist), log_g, s.log_normalizer);
    state_.param_log_weights[i] = model_->prior()[i] > 0.0
                                      ? std::log(model_->prior()[i]) + s.log_normalizer
                                      : -std::numeric_limits<double>::infinity();
  }
  ++steps_;
}

std::vector<AugmentedFilterState> run_augmented_filter(const AugmentedModel& model,
                                                       std::span<const double> y) {
  if (y.empty()) throw Error(ErrorCode::empty_input, "observation sequence is empty");
  AugmentedFilter filter(model);
  std::vector<AugmentedFilterState> out;
  out.reserve(y.size());
  for (double v : y) {
    filter.step(v);
    out.push_back(filter.state());
  }
  return out;
}

DiscreteMeasure param_posterior(const AugmentedFilterState& state) {
  const double lse = log_sum_exp(state.param_log_weights);
  std::vector<double> z(state.param_log_weights.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::exp(state.param_log_weights[i] - lse);
  return DiscreteMeasure(std::move(z));
}

double log_param_mass(const AugmentedFilterState& state, std::span<const bool> inside) {
  if (inside.size() != state.param_log_weights.size()) {
    throw Error(ErrorCode::dimension, "mask size differs from grid size");
  }
  std::vector<double> selected;
  for (std::size_t i = 0; i < inside.size(); ++i) {
    if (inside[i]) selected.push_back(state.param_log_weights[i]);
  }
  if (selected.empty()) return -std::numeric_limits<double>::infinity();
  return log_sum_exp(selected) - log_sum_exp(state.param_log_weights);
}

DiscreteMeasure state_marginal(const AugmentedFilterState& state) {
  const DiscreteMeasure z = param_posterior(state);
  const std::size_t states = state.per_param.front().dist.size();
  std::vector<double> out(states, 0.0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] == 0.0) continue;
    const auto& d = state.per_param[i].dist;
    for (std::size_t x = 0; x < states; ++x) out[x] += z[i] * d[x];
  }
  return DiscreteMeasure(std::move(out));
}

DiscreteMeasure joint_measure(const AugmentedFilterState& state) {
  const DiscreteMeasure z = param_posterior(state);
  const std::size_t states = state.per_param.front().dist.size();
  std::vector<double> out(states * z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    for (std::size_t x = 0; x < states; ++x) out[i * states + x] = z[i] * state.per_param[i].dist[x];
  }
  return DiscreteMeasure(std::move(out));
}

double log_likelihood_ratio(const FilterState& a, const FilterState& b) {
  return a.log_normalizer - b.log_normalizer;
}

}  // namespace adafilter
