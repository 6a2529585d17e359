#include "adafilter/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "adafilter/error.hpp"
#include "adafilter/rng.hpp"

namespace adafilter {

namespace {

constexpr double kMergeTol = 1e-12;

std::vector<FiniteKernel> evaluate_grid(const std::vector<Param>& grid,
                                        const KernelFamily::Generator& generator) {
  if (!generator) throw Error(ErrorCode::invalid_model, "kernel family generator is empty");
  std::vector<FiniteKernel> kernels;
  kernels.reserve(grid.size());
  for (const Param& p : grid) kernels.push_back(generator(p));
  return kernels;
}

}  // namespace

KernelFamily::KernelFamily(std::vector<Param> grid, std::vector<FiniteKernel> kernels)
    : grid_(std::move(grid)), kernels_(std::move(kernels)) {
  validate();
}

KernelFamily::KernelFamily(std::vector<Param> grid, Generator generator, Derivative derivative)
    : grid_(std::move(grid)),
      kernels_(evaluate_grid(grid_, generator)),
      generator_(std::move(generator)),
      derivative_(std::move(derivative)) {
  validate();
}

KernelFamily KernelFamily::affine(std::vector<Param> grid, Matrix base, std::vector<Matrix> slopes) {
  for (const Matrix& s : slopes) {
    if (s.rows() != base.rows() || s.cols() != base.cols()) {
      throw Error(ErrorCode::dimension, "affine family slope shape differs from base");
    }
  }
  auto generator = [base, slopes](std::span<const double> theta) {
    if (theta.size() != slopes.size()) {
      throw Error(ErrorCode::dimension, "parameter dimension differs from slope count");
    }
    Matrix m = base;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) {
        for (std::size_t d = 0; d < slopes.size(); ++d) m(i, j) += theta[d] * slopes[d](i, j);
        // Rounding can leave -1e-17 where an entry is exactly zero.
        if (m(i, j) < 0.0 && m(i, j) > -1e-14) m(i, j) = 0.0;
      }
    }
    return FiniteKernel(std::move(m));
  };
  auto derivative = [slopes](std::span<const double>) { return slopes; };
  return KernelFamily(std::move(grid), std::move(generator), std::move(derivative));
}

void KernelFamily::validate() const {
  if (grid_.empty()) throw Error(ErrorCode::invalid_model, "parameter grid is empty");
  if (grid_.size() != kernels_.size()) {
    throw Error(ErrorCode::invalid_model, "one kernel per grid point required");
  }
  const std::size_t d = grid_.front().size();
  if (d == 0) throw Error(ErrorCode::invalid_model, "parameter points must have dimension >= 1");
  for (const Param& p : grid_) {
    if (p.size() != d) throw Error(ErrorCode::invalid_model, "grid points differ in dimension");
  }
  for (const FiniteKernel& k : kernels_) {
    if (k.size() != kernels_.front().size()) {
      throw Error(ErrorCode::invalid_model, "kernels differ in support size");
    }
  }
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    for (std::size_t j = i + 1; j < grid_.size(); ++j) {
      if (grid_[i] == grid_[j]) {
        throw Error(ErrorCode::invalid_model, "duplicate grid points " + std::to_string(i) +
                                                  " and " + std::to_string(j));
      }
    }
  }
}

double KernelFamily::distance(std::size_t i, std::size_t j) const {
  const Param& a = param(i);
  const Param& b = param(j);
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return std::sqrt(s);
}

FiniteKernel KernelFamily::evaluate(std::span<const double> theta) const {
  if (!generator_) throw Error(ErrorCode::not_applicable, "kernel family has no generator");
  return generator_(theta);
}

std::vector<Matrix> KernelFamily::analytic_derivative(std::span<const double> theta) const {
  if (!derivative_) throw Error(ErrorCode::not_applicable, "kernel family has no analytic derivative");
  return derivative_(theta);
}

KernelFamily KernelFamily::subset(std::span<const std::size_t> indices) const {
  std::vector<Param> grid;
  std::vector<FiniteKernel> kernels;
  for (std::size_t i : indices) {
    grid.push_back(param(i));
    kernels.push_back(kernel(i));
  }
  KernelFamily out(std::move(grid), std::move(kernels));
  out.generator_ = generator_;
  out.derivative_ = derivative_;
  return out;
}

ObservationModel::ObservationModel(std::vector<double> h, double sigma)
    : h_(std::move(h)), sigma_(sigma) {
  if (h_.empty()) throw Error(ErrorCode::invalid_model, "observation map needs one value per state");
  for (double v : h_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::invalid_model, "observation map must be finite");
  }
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) {
    throw Error(ErrorCode::invalid_model, "noise standard deviation must be positive");
  }
}

double ObservationModel::log_density(double y, std::size_t x) const {
  const double z = (y - h(x)) / sigma_;
  return -0.5 * z * z - std::log(sigma_) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double ObservationModel::density(double y, std::size_t x) const { return std::exp(log_density(y, x)); }

std::vector<double> ObservationModel::log_likelihoods(double y) const {
  std::vector<double> out(h_.size());
  for (std::size_t x = 0; x < h_.size(); ++x) out[x] = log_density(y, x);
  return out;
}

double obs_density(const ObservationModel& obs, double y, std::size_t x) {
  return obs.density(y, x);
}

double log_obs_density(const ObservationModel& obs, double y, std::size_t x) {
  return obs.log_density(y, x);
}

AugmentedModel::AugmentedModel(KernelFamily family, DiscreteMeasure prior, ObservationModel obs,
                               DiscreteMeasure initial)
    : family_(std::move(family)),
      prior_(std::move(prior)),
      obs_(std::move(obs)),
      initial_(std::move(initial)) {
  if (prior_.size() != family_.size()) {
    throw Error(ErrorCode::dimension, "prior must have one weight per grid point");
  }
  if (prior_.is_zero()) throw Error(ErrorCode::invalid_prior, "prior has zero mass everywhere");
  if (!prior_.is_probability(1e-9)) {
    throw Error(ErrorCode::invalid_prior, "prior is not a probability measure");
  }
  if (initial_.size() != family_.states() || obs_.states() != family_.states()) {
    throw Error(ErrorCode::dimension, "initial law, h and kernels disagree on the state count");
  }
  if (!initial_.is_probability(1e-9)) {
    throw Error(ErrorCode::invalid_measure, "initial law is not a probability measure");
  }
}

AugmentedModel AugmentedModel::with_prior(DiscreteMeasure prior) const {
  return AugmentedModel(family_, std::move(prior), obs_, initial_);
}

AugmentedModel AugmentedModel::with_initial(DiscreteMeasure initial) const {
  return AugmentedModel(family_, prior_, obs_, std::move(initial));
}

double GaussianMixture::density(double y) const {
  double s = 0.0;
  for (std::size_t c = 0; c < means.size(); ++c) {
    const double z = (y - means[c]) / sigma;
    s += weights[c] * std::exp(-0.5 * z * z);
  }
  return s / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

DiscreteMeasure stationary_dist(const FiniteKernel& kernel, const StationaryOptions& options) {
  if (!options.allow_non_ergodic && !mixing_constant(kernel).is_mixing) {
    throw Error(ErrorCode::non_ergodic,
                "kernel is not mixing; stationary law may not be unique");
  }
  DiscreteMeasure pi = DiscreteMeasure::uniform(kernel.size());
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    DiscreteMeasure next = kernel.propagate(pi).normalized();
    const double residual = tv_norm(next, pi);
    pi = std::move(next);
    if (residual < options.tolerance) return pi;
  }
  throw Error(ErrorCode::non_ergodic, "power iteration did not converge");
}

DiscreteMeasure pushforward(const FiniteKernel& kernel, const ObservationModel& obs,
                            const StationaryOptions& options) {
  const DiscreteMeasure pi = stationary_dist(kernel, options);
  std::vector<std::size_t> order(obs.states());
  for (std::size_t x = 0; x < order.size(); ++x) order[x] = x;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return obs.h(a) < obs.h(b); });
  std::vector<double> labels;
  std::vector<double> weights;
  for (std::size_t x : order) {
    if (!labels.empty() && std::abs(obs.h(x) - labels.back()) <= kMergeTol) {
      weights.back() += pi[x];
    } else {
      labels.push_back(obs.h(x));
      weights.push_back(pi[x]);
    }
  }
  return DiscreteMeasure(std::move(weights), std::move(labels));
}

GaussianMixture nu_theta(const FiniteKernel& kernel, const ObservationModel& obs,
                         const StationaryOptions& options) {
  const DiscreteMeasure push = pushforward(kernel, obs, options);
  GaussianMixture mix;
  mix.means.assign(push.labels().begin(), push.labels().end());
  mix.weights.assign(push.weights().begin(), push.weights().end());
  mix.sigma = obs.sigma();
  return mix;
}

std::vector<std::pair<std::size_t, std::size_t>> identifiability_scan(const KernelFamily& family,
                                                                      const ObservationModel& obs,
                                                                      double tol) {
  // Pushforwards share the label set (the distinct h values), so tv_norm
  // compares them atom by atom.
  std::vector<DiscreteMeasure> push;
  push.reserve(family.size());
  for (std::size_t i = 0; i < family.size(); ++i) push.push_back(pushforward(family.kernel(i), obs));
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < family.size(); ++i) {
    for (std::size_t j = i + 1; j < family.size(); ++j) {
      if (tv_norm(push[i], push[j]) < tol) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

std::size_t sample_categorical(std::span<const double> probabilities, double u) {
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] <= 0.0) continue;
    cumulative += probabilities[i];
    last_positive = i;
    if (u < cumulative) return i;
  }
  // u falls in the rounding gap above the cumulative sum.
  return last_positive;
}

Trajectory simulate(const AugmentedModel& model, std::size_t true_param_index, std::size_t n,
                    std::uint64_t seed, std::uint64_t trajectory) {
  if (true_param_index >= model.params()) {
    throw Error(ErrorCode::index_out_of_range, "true parameter index out of range");
  }
  if (n == 0) throw Error(ErrorCode::invalid_size, "trajectory length must be >= 1");
  const CounterRng rng(seed);
  const std::uint64_t stream = kTrajectoryStreamBase + trajectory;
  const FiniteKernel& kernel = model.family().kernel(true_param_index);
  const ObservationModel& obs = model.obs();

  Trajectory out;
  out.true_param_index = true_param_index;
  out.seed = seed;
  out.states.reserve(n);
  out.observations.reserve(n);
  std::size_t x = sample_categorical(model.initial().weights(), rng.uniform(stream, 0, 0));
  for (std::size_t k = 1; k <= n; ++k) {
    const auto step = static_cast<std::uint32_t>(k);
    x = sample_categorical(kernel.row(x), rng.uniform(stream, step, 0));
    const double noise = rng.standard_normal(stream, step, 1);
    out.states.push_back(x);
    out.observations.push_back(obs.h(x) + obs.sigma() * noise);
  }
  return out;
}

}  // namespace adafilter
