#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "adafilter/measures.hpp"
#include "adafilter/model.hpp"

namespace adafilter {

// ---------------------------------------------------------------------------
// Step errors and total-error bounds
// ---------------------------------------------------------------------------

/// Per-step discrepancy between Psi_n^theta and the alpha optimal kernel
/// applied to Psi_{n-1}^theta, in Hilbert and total-variation distance.
struct StepErrorSeries {
  std::vector<double> hilbert;
  std::vector<double> tv;
  std::size_t theta_index = 0;
  std::size_t alpha_index = 0;
  double epsilon = 0.0;  // mixing constant of K_alpha
  bool bounds_applicable = false;
};

struct BoundReport {
  double sup_total_error = 0.0;
  double sup_step_h = 0.0;
  double sup_step_tv = 0.0;
  double bound_h = 0.0;   // 2 / (eps^2 log 3) * sup_step_h
  double bound_tv = 0.0;  // (1 + 2 / (eps^4 log 3)) * sup_step_tv
  std::size_t violations = 0;
};

StepErrorSeries step_errors(const KernelFamily& family, const ObservationModel& obs,
                            const DiscreteMeasure& mu, std::size_t theta_index,
                            std::size_t alpha_index, std::span<const double> y);

// ||Psi_n^theta(mu) - Psi_n^alpha(mu)||_tv for n = 1..len(y).
std::vector<double> total_errors(const KernelFamily& family, const ObservationModel& obs,
                                 const DiscreteMeasure& mu, std::size_t theta_index,
                                 std::size_t alpha_index, std::span<const double> y);

// Throws not_applicable when epsilon == 0.
BoundReport bound_check(const StepErrorSeries& series, std::span<const double> total_errors,
                        double slack = 1e-9);

// ---------------------------------------------------------------------------
// Kernel derivatives and the Lambda machinery
// ---------------------------------------------------------------------------

enum class DerivativeMethod {
  automatic,          // analytic if available, else generator FD, else grid
  analytic,
  finite_difference,  // central differences of the generator with step h_fd
  grid,               // differences of neighbouring grid kernels
};

struct KernelDerivative {
  std::vector<Matrix> matrices;  // dK/dtheta_i, one per coordinate
  DerivativeMethod method = DerivativeMethod::analytic;
  bool one_sided = false;  // grid boundary: one-sided difference used
};

KernelDerivative kernel_derivative(const KernelFamily& family, std::size_t theta_index,
                                   double h_fd, DerivativeMethod method = DerivativeMethod::automatic);

// Derivative along a unit direction; for one-dimensional grids the
// direction may be empty.
Matrix directional_derivative(const KernelDerivative& derivative,
                              std::span<const double> direction = {});

// Lambda(x) = max_x' |L(x', x)| / K(x', x), 0/0 read as 0, +inf when
// L(x', x) != 0 where K(x', x) == 0.
std::vector<double> lambda_bound(const Matrix& derivative, const FiniteKernel& kernel);
std::vector<double> lambda_bound(const KernelDerivative& derivative, const FiniteKernel& kernel);

/// Per-step factors bounding the one-step filter sensitivity. With
/// g_n(x) = g(y_n - h(x)) and Psi = Psi_{n-1}^theta:
///   lambda_form    = E[Lambda_{theta'}(X_n) | Y] under the hybrid filter,
///                    i.e. Psi(K(Lambda g_n)) / Psi(K g_n);
///   ratio_form     = Psi(|L g_n|) / Psi(K g_n), the absolute value taken
///                    after L acts on g_n;
///   abs_ratio_form = Psi(|L| g_n) / Psi(K g_n), with |L| the entrywise
///                    absolute kernel.
/// abs_ratio_form <= lambda_form always; ratio_form <= abs_ratio_form.
struct DerivativeBoundSeries {
  std::vector<double> lambda_form;
  std::vector<double> ratio_form;
  std::vector<double> abs_ratio_form;
  double sup_lambda_form = 0.0;
  double sup_ratio_form = 0.0;
  double sup_abs_ratio_form = 0.0;
};

DerivativeBoundSeries derivative_bound_series(const AugmentedModel& model, std::size_t theta_index,
                                              std::size_t thetaprime_index,
                                              std::span<const double> y, double h_fd = 1e-5,
                                              std::span<const double> direction = {});

// Grid indices on the closed segment [a, b] in parameter space.
std::vector<std::size_t> segment_indices(const KernelFamily& family, std::size_t a, std::size_t b);

enum class RatioForm { literal, absolute_kernel, lambda };

struct WeakStepReport {
  std::size_t checks = 0;
  std::size_t violations = 0;
  double max_excess = 0.0;  // max of lhs - rhs over all checks
  std::size_t first_violation_step = 0;  // 1-based; 0 when none
};

/// Checks |Psi_n^theta(f) - K_n^alpha(Psi_{n-1}^theta)(f)|
///        <= 2 ||f||_inf ||theta - alpha|| sup_{theta' in [alpha, theta]} factor_n(theta')
/// for every step and test function, with factor_n from the chosen form.
WeakStepReport weak_step_check(const AugmentedModel& model, std::size_t theta_index,
                               std::size_t alpha_index, std::span<const double> y,
                               std::span<const std::vector<double>> test_functions,
                               RatioForm form, double h_fd = 1e-5, double slack = 1e-12);

struct MomentProbeReport {
  std::vector<std::size_t> neighborhood;
  std::vector<std::size_t> horizons;
  std::vector<double> sup_by_horizon;  // sup over theta, theta' per horizon
  double sup_value = 0.0;
  double analytic_ceiling = 0.0;  // max Lambda over the neighbourhood
};

// (E_{mu,theta} K_{theta'}(Lambda_{theta'}^{n+1})(X_{n-1}))^{1/(n+1)} with
// X_{n-1} ~ mu K_theta^{n-1}, evaluated exactly.
double moment_condition_value(const AugmentedModel& model, std::size_t theta_index,
                              std::size_t thetaprime_index, std::size_t n, double h_fd = 1e-5);

MomentProbeReport moment_condition_probe(const AugmentedModel& model, std::size_t alpha_index,
                                         double radius, std::span<const std::size_t> horizons,
                                         double h_fd = 1e-5);

// ---------------------------------------------------------------------------
// Posterior consistency, prior condition, stability
// ---------------------------------------------------------------------------

struct ConsistencyOptions {
  double rate_window = 0.5;  // fraction of the series (tail) used for the slope fit
  bool require_identifiable = true;
  double identifiability_tol = 1e-6;
};

struct ConsistencyReport {
  double eta = 0.0;
  std::size_t alpha_index = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> mass_outside;      // seed mean of Z_n(N_eta(alpha)^c), n = 1..N
  std::vector<double> log_mass_outside;  // log of the seed mean, computed in log space
  std::vector<double> mass_at_alpha;     // seed mean of Z_n({alpha})
  std::vector<double> mass_at_alpha_se;  // standard error across seeds
  std::vector<double> terminal_mass_outside;  // per seed
  double log_rate = 0.0;  // least-squares slope of log_mass_outside over the tail window
};

// Least-squares slope of values against their 1-based index over
// [first, values.size()); non-finite points are skipped. NaN if < 2 points.
double fit_log_slope(std::span<const double> log_values, std::size_t first);

ConsistencyReport posterior_concentration(const AugmentedModel& model, std::size_t alpha_index,
                                          double eta, std::size_t n,
                                          std::span<const std::uint64_t> seeds,
                                          const ConsistencyOptions& options = {});

struct PriorProbeReport {
  std::vector<std::size_t> horizons;
  std::vector<double> statistic;  // seed mean of (sup ratio / u(N_eps_n))^(1/p(n))
};

// Probe of the prior condition along user-supplied eps_n and p(n); the
// neighbourhood is the closed ball of radius eps_n around alpha.
PriorProbeReport prior_condition_probe(const AugmentedModel& model, std::size_t alpha_index,
                                       const DiscreteMeasure& mu_prime,
                                       std::span<const std::size_t> horizons,
                                       std::span<const double> eps_n,
                                       std::span<const double> p_n,
                                       std::span<const std::uint64_t> seeds);

// ||Psi_n^u(mu) - Psi_n^alpha(mu')||_tv per step n = 1..len(y).
std::vector<double> stability_gap(const AugmentedModel& model_u,
                                  const AugmentedModel& model_delta_alpha,
                                  const DiscreteMeasure& mu, const DiscreteMeasure& mu_prime,
                                  std::span<const double> y);

// Same, but with the observation sequences each filter consumes given
// separately; they must be identical.
std::vector<double> stability_gap(const AugmentedModel& model_u,
                                  const AugmentedModel& model_delta_alpha,
                                  const DiscreteMeasure& mu, const DiscreteMeasure& mu_prime,
                                  std::span<const double> y_u, std::span<const double> y_alpha);

struct StabilityReport {
  std::size_t alpha_index = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> mean_gap;  // seed mean per step
  std::vector<double> terminal_gap;  // per seed
};

// Simulates under alpha from mu' for each seed and averages the gap between
// the u-prior augmented filter (from mu) and the alpha filter (from mu').
StabilityReport stability_experiment(const AugmentedModel& model, std::size_t alpha_index,
                                     const DiscreteMeasure& mu, const DiscreteMeasure& mu_prime,
                                     std::size_t n, std::span<const std::uint64_t> seeds);

struct BoundSweepRow {
  std::uint64_t seed = 0;
  std::size_t theta_index = 0;
  BoundReport report;
  std::size_t cross_bound_violations = 0;  // steps with tv_n > (2/log 3) h_n
};

struct BoundSweep {
  std::size_t alpha_index = 0;
  double epsilon = 0.0;
  std::vector<BoundSweepRow> rows;  // ordered by (seed, theta)
  std::size_t total_violations = 0;
};

// Step errors and both total-error bounds for each seed and theta, on
// trajectories simulated under alpha from the model's initial law.
BoundSweep bound_sweep(const AugmentedModel& model, std::size_t alpha_index,
                       std::span<const std::size_t> theta_indices, std::size_t n,
                       std::span<const std::uint64_t> seeds);

}  // namespace adafilter
