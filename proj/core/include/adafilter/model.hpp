#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "adafilter/measures.hpp"

namespace adafilter {

using Param = std::vector<double>;

/// theta -> K_theta over a finite parameter grid, with Euclidean d_Theta.
///
/// A family may carry a generator (evaluate K at any theta, used for
/// finite differences with a chosen step) and an analytic derivative
/// (one dK/dtheta_i matrix per coordinate).
class KernelFamily {
 public:
  using Generator = std::function<FiniteKernel(std::span<const double>)>;
  using Derivative = std::function<std::vector<Matrix>(std::span<const double>)>;

  KernelFamily(std::vector<Param> grid, std::vector<FiniteKernel> kernels);
  KernelFamily(std::vector<Param> grid, Generator generator, Derivative derivative = {});

  // K(theta) = base + sum_i theta_i * slopes[i]; derivative is the slopes.
  static KernelFamily affine(std::vector<Param> grid, Matrix base, std::vector<Matrix> slopes);

  std::size_t size() const noexcept { return grid_.size(); }
  std::size_t dimension() const noexcept { return grid_.front().size(); }
  std::size_t states() const noexcept { return kernels_.front().size(); }

  const Param& param(std::size_t i) const { return grid_.at(i); }
  const std::vector<Param>& grid() const noexcept { return grid_; }
  const FiniteKernel& kernel(std::size_t i) const { return kernels_.at(i); }
  double distance(std::size_t i, std::size_t j) const;

  bool has_generator() const noexcept { return static_cast<bool>(generator_); }
  bool has_derivative() const noexcept { return static_cast<bool>(derivative_); }
  FiniteKernel evaluate(std::span<const double> theta) const;
  std::vector<Matrix> analytic_derivative(std::span<const double> theta) const;

  // Restriction to a subset of grid indices (keeps generator/derivative).
  KernelFamily subset(std::span<const std::size_t> indices) const;

 private:
  void validate() const;

  std::vector<Param> grid_;
  std::vector<FiniteKernel> kernels_;
  Generator generator_;
  Derivative derivative_;
};

/// Y = h(X) + sigma * Z with Z standard normal.
class ObservationModel {
 public:
  ObservationModel(std::vector<double> h, double sigma);

  std::size_t states() const noexcept { return h_.size(); }
  std::span<const double> h() const noexcept { return h_; }
  double h(std::size_t x) const { return h_.at(x); }
  double sigma() const noexcept { return sigma_; }

  double density(double y, std::size_t x) const;
  double log_density(double y, std::size_t x) const;
  // log g(y - h(x)) for every state.
  std::vector<double> log_likelihoods(double y) const;

 private:
  std::vector<double> h_;
  double sigma_;
};

double obs_density(const ObservationModel& obs, double y, std::size_t x);
double log_obs_density(const ObservationModel& obs, double y, std::size_t x);

/// The parameter-augmented system: state chain with frozen parameter,
/// prior u over the grid and initial law mu over states.
class AugmentedModel {
 public:
  AugmentedModel(KernelFamily family, DiscreteMeasure prior, ObservationModel obs,
                 DiscreteMeasure initial);

  const KernelFamily& family() const noexcept { return family_; }
  const DiscreteMeasure& prior() const noexcept { return prior_; }
  const ObservationModel& obs() const noexcept { return obs_; }
  const DiscreteMeasure& initial() const noexcept { return initial_; }
  std::size_t states() const noexcept { return family_.states(); }
  std::size_t params() const noexcept { return family_.size(); }

  AugmentedModel with_prior(DiscreteMeasure prior) const;
  AugmentedModel with_initial(DiscreteMeasure initial) const;

 private:
  KernelFamily family_;
  DiscreteMeasure prior_;
  ObservationModel obs_;
  DiscreteMeasure initial_;
};

struct Trajectory {
  std::vector<std::size_t> states;
  std::vector<double> observations;
  std::size_t true_param_index = 0;
  std::uint64_t seed = 0;
};

struct GaussianMixture {
  std::vector<double> means;
  std::vector<double> weights;
  double sigma = 1.0;

  double density(double y) const;
};

struct StationaryOptions {
  bool allow_non_ergodic = false;
  double tolerance = 1e-13;
  std::size_t max_iterations = 10'000'000;
};

DiscreteMeasure stationary_dist(const FiniteKernel& kernel, const StationaryOptions& options = {});

// mu_theta o h^{-1}: stationary law pushed to the distinct h values
// (merge tolerance 1e-12), labelled by those values in ascending order.
DiscreteMeasure pushforward(const FiniteKernel& kernel, const ObservationModel& obs,
                            const StationaryOptions& options = {});

// nu_theta = (mu_theta o h^{-1}) * g as a finite Gaussian mixture.
GaussianMixture nu_theta(const FiniteKernel& kernel, const ObservationModel& obs,
                         const StationaryOptions& options = {});

// Grid pairs (i < j) whose pushforwards are within tol in tv_norm.
std::vector<std::pair<std::size_t, std::size_t>> identifiability_scan(
    const KernelFamily& family, const ObservationModel& obs, double tol);

// Smallest index whose cumulative probability exceeds u.
std::size_t sample_categorical(std::span<const double> probabilities, double u);

// Stream layout per step k (k = 0 is the initial draw): lane 0 picks the
// state, lane 1 drives Box-Muller for the noise.
Trajectory simulate(const AugmentedModel& model, std::size_t true_param_index, std::size_t n,
                    std::uint64_t seed, std::uint64_t trajectory = 0);

}  // namespace adafilter
