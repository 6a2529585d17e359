#include "adafilter/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "adafilter/error.hpp"
#include "adafilter/exact_filter.hpp"
#include "adafilter/parallel.hpp"

namespace adafilter {

namespace {

const double kLog3 = std::log(3.0);
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_index(const KernelFamily& family, std::size_t index, const char* what) {
  if (index >= family.size()) {
    throw Error(ErrorCode::index_out_of_range, std::string(what) + " index out of range");
  }
}

double log_sum_exp(std::span<const double> values) {
  double m = -kInf;
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

// g_n up to a positive factor; every form below is a ratio in g_n.
std::vector<double> scaled_likelihood(const ObservationModel& obs, double y) {
  std::vector<double> g = obs.log_likelihoods(y);
  const double m = *std::max_element(g.begin(), g.end());
  for (double& v : g) v = std::exp(v - m);
  return g;
}

double sup_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, x);
  return s;
}

struct SensitivityFactors {
  Matrix derivative;
  std::vector<double> lambda;
};

SensitivityFactors sensitivity_at(const KernelFamily& family, std::size_t index, double h_fd,
                                  std::span<const double> direction) {
  SensitivityFactors s;
  s.derivative = directional_derivative(kernel_derivative(family, index, h_fd), direction);
  s.lambda = lambda_bound(s.derivative, family.kernel(index));
  return s;
}

// Factor of one form at theta' for predicted-from law psi and weights g.
double form_factor(RatioForm form, const FiniteKernel& kernel, const SensitivityFactors& sens,
                   const DiscreteMeasure& psi, std::span<const double> g) {
  const std::size_t n = kernel.size();
  double denominator = 0.0;
  double numerator = 0.0;
  for (std::size_t from = 0; from < n; ++from) {
    const double w = psi[from];
    if (w == 0.0) continue;
    double kg = 0.0;
    double lg = 0.0;
    double abs_lg = 0.0;
    double klg = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      const double k = kernel(from, x);
      const double l = sens.derivative(from, x);
      kg += k * g[x];
      lg += l * g[x];
      abs_lg += std::abs(l) * g[x];
      if (k > 0.0) klg += k * sens.lambda[x] * g[x];
    }
    denominator += w * kg;
    switch (form) {
      case RatioForm::literal: numerator += w * std::abs(lg); break;
      case RatioForm::absolute_kernel: numerator += w * abs_lg; break;
      case RatioForm::lambda: numerator += w * klg; break;
    }
  }
  return numerator / denominator;
}

std::vector<std::size_t> outside_mask_indices(const KernelFamily& family, std::size_t alpha, double eta) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (family.distance(i, alpha) >= eta) out.push_back(i);
  }
  return out;
}

}  // namespace

StepErrorSeries step_errors(const KernelFamily& family, const ObservationModel& obs,
                            const DiscreteMeasure& mu, std::size_t theta_index,
                            std::size_t alpha_index, std::span<const double> y) {
  check_index(family, theta_index, "theta");
  check_index(family, alpha_index, "alpha");
  StepErrorSeries series;
  series.theta_index = theta_index;
  series.alpha_index = alpha_index;
  const MixingCertificate cert = mixing_constant(family.kernel(alpha_index));
  series.epsilon = cert.epsilon;
  series.bounds_applicable = cert.is_mixing;
  series.hilbert.reserve(y.size());
  series.tv.reserve(y.size());

  const FiniteKernel& k_theta = family.kernel(theta_index);
  const FiniteKernel& k_alpha = family.kernel(alpha_index);
  FilterState psi{mu, 0.0};
  for (double obs_value : y) {
    FilterState next = filter_step(k_theta, obs, psi, obs_value);
    const FilterState alpha_step = filter_step(k_alpha, obs, psi, obs_value);
    series.hilbert.push_back(hilbert_metric(next.dist, alpha_step.dist));
    series.tv.push_back(tv_norm(next.dist, alpha_step.dist));
    psi = std::move(next);
  }
  return series;
}

std::vector<double> total_errors(const KernelFamily& family, const ObservationModel& obs,
                                 const DiscreteMeasure& mu, std::size_t theta_index,
                                 std::size_t alpha_index, std::span<const double> y) {
  check_index(family, theta_index, "theta");
  check_index(family, alpha_index, "alpha");
  FilterState a{mu, 0.0};
  FilterState b{mu, 0.0};
  std::vector<double> out;
  out.reserve(y.size());
  for (double v : y) {
    a = filter_step(family.kernel(theta_index), obs, a, v);
    b = filter_step(family.kernel(alpha_index), obs, b, v);
    out.push_back(tv_norm(a.dist, b.dist));
  }
  return out;
}

BoundReport bound_check(const StepErrorSeries& series, std::span<const double> total_errors,
                        double slack) {
  if (!(series.epsilon > 0.0)) {
    throw Error(ErrorCode::not_applicable, "K_alpha is not mixing (epsilon = 0); bounds do not apply");
  }
  BoundReport r;
  r.sup_total_error = sup_of(total_errors);
  r.sup_step_h = sup_of(series.hilbert);
  r.sup_step_tv = sup_of(series.tv);
  const double eps2 = series.epsilon * series.epsilon;
  r.bound_h = 2.0 / (eps2 * kLog3) * r.sup_step_h;
  r.bound_tv = (1.0 + 2.0 / (eps2 * eps2 * kLog3)) * r.sup_step_tv;
  if (r.sup_total_error > r.bound_h + slack) ++r.violations;
  if (r.sup_total_error > r.bound_tv + slack) ++r.violations;
  return r;
}

DerivativeBoundSeries derivative_bound_series(const AugmentedModel& model, std::size_t theta_index,
                                              std::size_t thetaprime_index,
                                              std::span<const double> y, double h_fd,
                                              std::span<const double> direction) {
  const KernelFamily& family = model.family();
  check_index(family, theta_index, "theta");
  check_index(family, thetaprime_index, "theta'");
  const SensitivityFactors sens = sensitivity_at(family, thetaprime_index, h_fd, direction);
  if (std::any_of(sens.lambda.begin(), sens.lambda.end(), [](double v) { return std::isinf(v); })) {
    throw Error(ErrorCode::not_applicable, "Lambda is infinite: L not absolutely continuous w.r.t. K");
  }
  const FiniteKernel& k_prime = family.kernel(thetaprime_index);
  const FiniteKernel& k_theta = family.kernel(theta_index);

  DerivativeBoundSeries out;
  FilterState psi{model.initial(), 0.0};
  for (double v : y) {
    const std::vector<double> g = scaled_likelihood(model.obs(), v);
    out.lambda_form.push_back(form_factor(RatioForm::lambda, k_prime, sens, psi.dist, g));
    out.ratio_form.push_back(form_factor(RatioForm::literal, k_prime, sens, psi.dist, g));
    out.abs_ratio_form.push_back(form_factor(RatioForm::absolute_kernel, k_prime, sens, psi.dist, g));
    psi = filter_step(k_theta, model.obs(), psi, v);
  }
  out.sup_lambda_form = sup_of(out.lambda_form);
  out.sup_ratio_form = sup_of(out.ratio_form);
  out.sup_abs_ratio_form = sup_of(out.abs_ratio_form);
  return out;
}

std::vector<std::size_t> segment_indices(const KernelFamily& family, std::size_t a, std::size_t b) {
  check_index(family, a, "segment start");
  check_index(family, b, "segment end");
  const Param& pa = family.param(a);
  const Param& pb = family.param(b);
  const double length = family.distance(a, b);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (i == a || i == b) {
      out.push_back(i);
      continue;
    }
    if (length == 0.0) continue;
    // On the segment iff d(a, i) + d(i, b) == d(a, b).
    const double detour = family.distance(a, i) + family.distance(i, b) - length;
    if (detour <= 1e-12 * std::max(1.0, length)) out.push_back(i);
  }
  (void)pa;
  (void)pb;
  return out;
}

WeakStepReport weak_step_check(const AugmentedModel& model, std::size_t theta_index,
                               std::size_t alpha_index, std::span<const double> y,
                               std::span<const std::vector<double>> test_functions, RatioForm form,
                               double h_fd, double slack) {
  const KernelFamily& family = model.family();
  check_index(family, theta_index, "theta");
  check_index(family, alpha_index, "alpha");
  const double distance = family.distance(theta_index, alpha_index);

  std::vector<double> direction;
  if (distance > 0.0 && family.dimension() > 1) {
    for (std::size_t d = 0; d < family.dimension(); ++d) {
      direction.push_back((family.param(theta_index)[d] - family.param(alpha_index)[d]) / distance);
    }
  }
  const auto segment = segment_indices(family, alpha_index, theta_index);
  std::vector<SensitivityFactors> sens;
  if (distance > 0.0) {
    for (std::size_t i : segment) sens.push_back(sensitivity_at(family, i, h_fd, direction));
  }

  std::vector<double> sup_norms;
  for (const auto& f : test_functions) {
    if (f.size() != model.states()) throw Error(ErrorCode::dimension, "test function size mismatch");
    double s = 0.0;
    for (double v : f) s = std::max(s, std::abs(v));
    sup_norms.push_back(s);
  }

  WeakStepReport report;
  report.max_excess = -kInf;
  FilterState psi{model.initial(), 0.0};
  for (std::size_t n = 0; n < y.size(); ++n) {
    const FilterState next = filter_step(family.kernel(theta_index), model.obs(), psi, y[n]);
    const FilterState alpha_step = filter_step(family.kernel(alpha_index), model.obs(), psi, y[n]);
    double factor = 0.0;
    if (distance > 0.0) {
      const std::vector<double> g = scaled_likelihood(model.obs(), y[n]);
      for (std::size_t s = 0; s < segment.size(); ++s) {
        factor = std::max(factor, form_factor(form, family.kernel(segment[s]), sens[s], psi.dist, g));
      }
    }
    for (std::size_t t = 0; t < test_functions.size(); ++t) {
      const double lhs = std::abs(next.dist.integrate(test_functions[t]) -
                                  alpha_step.dist.integrate(test_functions[t]));
      const double rhs = 2.0 * sup_norms[t] * distance * factor;
      ++report.checks;
      report.max_excess = std::max(report.max_excess, lhs - rhs);
      if (lhs > rhs + slack) {
        ++report.violations;
        if (report.first_violation_step == 0) report.first_violation_step = n + 1;
      }
    }
    psi = next;
  }
  return report;
}

double moment_condition_value(const AugmentedModel& model, std::size_t theta_index,
                              std::size_t thetaprime_index, std::size_t n, double h_fd) {
  const KernelFamily& family = model.family();
  check_index(family, theta_index, "theta");
  check_index(family, thetaprime_index, "theta'");
  if (n == 0) throw Error(ErrorCode::precondition, "horizon must be >= 1");
  const FiniteKernel& k_prime = family.kernel(thetaprime_index);
  const std::vector<double> lambda = lambda_bound(kernel_derivative(family, thetaprime_index, h_fd), k_prime);
  if (std::any_of(lambda.begin(), lambda.end(), [](double v) { return std::isinf(v); })) {
    throw Error(ErrorCode::not_applicable, "Lambda is infinite");
  }
  // Law of X_{n-1}: mu K_theta^{n-1}.
  DiscreteMeasure law = model.initial();
  for (std::size_t k = 1; k < n; ++k) law = family.kernel(theta_index).propagate(law);

  // log sum_{x', x} law(x') K'(x', x) Lambda(x)^{n+1}; Lambda^{n+1} overflows for large n.
  const double power = static_cast<double>(n + 1);
  std::vector<double> terms;
  for (std::size_t from = 0; from < law.size(); ++from) {
    if (law[from] == 0.0) continue;
    for (std::size_t x = 0; x < law.size(); ++x) {
      if (k_prime(from, x) == 0.0 || lambda[x] == 0.0) continue;
      terms.push_back(std::log(law[from]) + std::log(k_prime(from, x)) + power * std::log(lambda[x]));
    }
  }
  if (terms.empty()) return 0.0;
  return std::exp(log_sum_exp(terms) / power);
}

MomentProbeReport moment_condition_probe(const AugmentedModel& model, std::size_t alpha_index,
                                         double radius, std::span<const std::size_t> horizons,
                                         double h_fd) {
  const KernelFamily& family = model.family();
  check_index(family, alpha_index, "alpha");
  MomentProbeReport report;
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (family.distance(i, alpha_index) <= radius) report.neighborhood.push_back(i);
  }
  report.horizons.assign(horizons.begin(), horizons.end());
  for (std::size_t tp : report.neighborhood) {
    const auto lambda = lambda_bound(kernel_derivative(family, tp, h_fd), family.kernel(tp));
    report.analytic_ceiling = std::max(report.analytic_ceiling, sup_of(lambda));
  }
  if (std::isinf(report.analytic_ceiling)) {
    throw Error(ErrorCode::not_applicable, "Lambda is infinite on the neighbourhood");
  }
  for (std::size_t n : horizons) {
    double sup = 0.0;
    for (std::size_t t : report.neighborhood) {
      for (std::size_t tp : report.neighborhood) {
        sup = std::max(sup, moment_condition_value(model, t, tp, n, h_fd));
      }
    }
    report.sup_by_horizon.push_back(sup);
    report.sup_value = std::max(report.sup_value, sup);
  }
  return report;
}

double fit_log_slope(std::span<const double> log_values, std::size_t first) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t count = 0;
  for (std::size_t i = first; i < log_values.size(); ++i) {
    if (!std::isfinite(log_values[i])) continue;
    const double x = static_cast<double>(i + 1);
    sx += x;
    sy += log_values[i];
    sxx += x * x;
    sxy += x * log_values[i];
    ++count;
  }
  if (count < 2) return std::numeric_limits<double>::quiet_NaN();
  const double c = static_cast<double>(count);
  const double denom = c * sxx - sx * sx;
  return (c * sxy - sx * sy) / denom;
}

ConsistencyReport posterior_concentration(const AugmentedModel& model, std::size_t alpha_index,
                                          double eta, std::size_t n,
                                          std::span<const std::uint64_t> seeds,
                                          const ConsistencyOptions& options) {
  const KernelFamily& family = model.family();
  check_index(family, alpha_index, "alpha");
  if (!(eta > 0.0)) throw Error(ErrorCode::precondition, "eta must be positive");
  if (seeds.empty()) throw Error(ErrorCode::empty_input, "seed list is empty");
  if (n == 0) throw Error(ErrorCode::invalid_size, "horizon must be >= 1");
  if (options.require_identifiable) {
    const auto pairs = identifiability_scan(family, model.obs(), options.identifiability_tol);
    if (!pairs.empty()) {
      throw Error(ErrorCode::identifiability,
                  "grid points " + std::to_string(pairs.front().first) + " and " +
                      std::to_string(pairs.front().second) + " induce the same observation law");
    }
  }
  std::vector<bool> outside(family.size(), false);
  for (std::size_t i : outside_mask_indices(family, alpha_index, eta)) outside[i] = true;
  std::vector<bool> at_alpha(family.size(), false);
  at_alpha[alpha_index] = true;
  // std::vector<bool> has no contiguous storage; copy into plain arrays.
  const std::unique_ptr<bool[]> outside_flags(new bool[family.size()]);
  const std::unique_ptr<bool[]> alpha_flags(new bool[family.size()]);
  for (std::size_t i = 0; i < family.size(); ++i) {
    outside_flags[i] = outside[i];
    alpha_flags[i] = at_alpha[i];
  }
  const std::span<const bool> outside_span(outside_flags.get(), family.size());
  const std::span<const bool> alpha_span(alpha_flags.get(), family.size());

  const std::size_t s = seeds.size();
  std::vector<std::vector<double>> log_out(s), z_alpha(s);
  parallel_for(s, [&](std::size_t k) {
    const Trajectory traj = simulate(model, alpha_index, n, seeds[k]);
    AugmentedFilter filter(model);
    log_out[k].reserve(n);
    z_alpha[k].reserve(n);
    for (double v : traj.observations) {
      filter.step(v);
      log_out[k].push_back(log_param_mass(filter.state(), outside_span));
      z_alpha[k].push_back(std::exp(log_param_mass(filter.state(), alpha_span)));
    }
  });

  ConsistencyReport report;
  report.eta = eta;
  report.alpha_index = alpha_index;
  report.seeds.assign(seeds.begin(), seeds.end());
  const double log_s = std::log(static_cast<double>(s));
  std::vector<double> column(s);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < s; ++k) column[k] = log_out[k][t];
    const double log_mean = log_sum_exp(column) - log_s;
    report.log_mass_outside.push_back(log_mean);
    report.mass_outside.push_back(std::exp(log_mean));

    double mean = 0.0;
    for (std::size_t k = 0; k < s; ++k) mean += z_alpha[k][t];
    mean /= static_cast<double>(s);
    double var = 0.0;
    for (std::size_t k = 0; k < s; ++k) var += (z_alpha[k][t] - mean) * (z_alpha[k][t] - mean);
    const double se = s > 1 ? std::sqrt(var / static_cast<double>(s - 1) / static_cast<double>(s)) : 0.0;
    report.mass_at_alpha.push_back(mean);
    report.mass_at_alpha_se.push_back(se);
  }
  for (std::size_t k = 0; k < s; ++k) report.terminal_mass_outside.push_back(std::exp(log_out[k].back()));
  const auto first = static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - options.rate_window)));
  report.log_rate = fit_log_slope(report.log_mass_outside, first);
  return report;
}

PriorProbeReport prior_condition_probe(const AugmentedModel& model, std::size_t alpha_index,
                                       const DiscreteMeasure& mu_prime,
                                       std::span<const std::size_t> horizons,
                                       std::span<const double> eps_n, std::span<const double> p_n,
                                       std::span<const std::uint64_t> seeds) {
  const KernelFamily& family = model.family();
  check_index(family, alpha_index, "alpha");
  if (horizons.size() != eps_n.size() || horizons.size() != p_n.size()) {
    throw Error(ErrorCode::dimension, "horizons, eps_n and p_n must have equal length");
  }
  if (seeds.empty()) throw Error(ErrorCode::empty_input, "seed list is empty");
  for (double p : p_n) {
    if (!(p >= 1.0)) throw Error(ErrorCode::precondition, "p(n) must be >= 1");
  }
  std::size_t horizon = 0;
  for (std::size_t h : horizons) horizon = std::max(horizon, h);
  if (horizon == 0) throw Error(ErrorCode::invalid_size, "horizons must be >= 1");

  const AugmentedModel from_mu_prime = model.with_initial(mu_prime);
  std::vector<std::vector<double>> per_seed(seeds.size(), std::vector<double>(horizons.size()));
  parallel_for(seeds.size(), [&](std::size_t k) {
    const Trajectory traj = simulate(model, alpha_index, horizon, seeds[k]);
    FilterState truth{model.initial(), 0.0};
    AugmentedFilter bank(from_mu_prime);
    for (std::size_t t = 0; t < horizon; ++t) {
      truth = filter_step(family.kernel(alpha_index), model.obs(), truth, traj.observations[t]);
      bank.step(traj.observations[t]);
      for (std::size_t h = 0; h < horizons.size(); ++h) {
        if (horizons[h] != t + 1) continue;
        double sup_log_ratio = -kInf;
        double ball_mass = 0.0;
        for (std::size_t i = 0; i < family.size(); ++i) {
          if (family.distance(i, alpha_index) > eps_n[h]) continue;
          ball_mass += model.prior()[i];
          sup_log_ratio = std::max(sup_log_ratio,
                                   log_likelihood_ratio(truth, bank.state().per_param[i]));
        }
        per_seed[k][h] = std::exp((sup_log_ratio - std::log(ball_mass)) / p_n[h]);
      }
    }
  });

  PriorProbeReport report;
  report.horizons.assign(horizons.begin(), horizons.end());
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    double mean = 0.0;
    for (const auto& row : per_seed) mean += row[h];
    report.statistic.push_back(mean / static_cast<double>(seeds.size()));
  }
  return report;
}

std::vector<double> stability_gap(const AugmentedModel& model_u,
                                  const AugmentedModel& model_delta_alpha,
                                  const DiscreteMeasure& mu, const DiscreteMeasure& mu_prime,
                                  std::span<const double> y) {
  if (model_u.states() != model_delta_alpha.states()) {
    throw Error(ErrorCode::dimension, "models disagree on the state count");
  }
  const AugmentedModel left = model_u.with_initial(mu);
  const AugmentedModel right = model_delta_alpha.with_initial(mu_prime);
  AugmentedFilter a(left);
  AugmentedFilter b(right);
  std::vector<double> gap;
  gap.reserve(y.size());
  for (double v : y) {
    a.step(v);
    b.step(v);
    gap.push_back(tv_norm(state_marginal(a.state()), state_marginal(b.state())));
  }
  return gap;
}

std::vector<double> stability_gap(const AugmentedModel& model_u,
                                  const AugmentedModel& model_delta_alpha,
                                  const DiscreteMeasure& mu, const DiscreteMeasure& mu_prime,
                                  std::span<const double> y_u, std::span<const double> y_alpha) {
  if (!std::equal(y_u.begin(), y_u.end(), y_alpha.begin(), y_alpha.end())) {
    throw Error(ErrorCode::precondition, "stability gap needs one shared observation sequence");
  }
  return stability_gap(model_u, model_delta_alpha, mu, mu_prime, y_u);
}

StabilityReport stability_experiment(const AugmentedModel& model, std::size_t alpha_index,
                                     const DiscreteMeasure& mu, const DiscreteMeasure& mu_prime,
                                     std::size_t n, std::span<const std::uint64_t> seeds) {
  check_index(model.family(), alpha_index, "alpha");
  if (seeds.empty()) throw Error(ErrorCode::empty_input, "seed list is empty");
  const AugmentedModel delta = model.with_prior(DiscreteMeasure::point_mass(model.params(), alpha_index));
  const AugmentedModel truth = model.with_initial(mu_prime);
  std::vector<std::vector<double>> gaps(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t k) {
    const Trajectory traj = simulate(truth, alpha_index, n, seeds[k]);
    gaps[k] = stability_gap(model, delta, mu, mu_prime, traj.observations);
  });
  StabilityReport report;
  report.alpha_index = alpha_index;
  report.seeds.assign(seeds.begin(), seeds.end());
  report.mean_gap.assign(n, 0.0);
  for (const auto& g : gaps) {
    for (std::size_t t = 0; t < n; ++t) report.mean_gap[t] += g[t];
    report.terminal_gap.push_back(g.back());
  }
  for (double& v : report.mean_gap) v /= static_cast<double>(seeds.size());
  return report;
}

BoundSweep bound_sweep(const AugmentedModel& model, std::size_t alpha_index,
                       std::span<const std::size_t> theta_indices, std::size_t n,
                       std::span<const std::uint64_t> seeds) {
  const KernelFamily& family = model.family();
  check_index(family, alpha_index, "alpha");
  const MixingCertificate cert = mixing_constant(family.kernel(alpha_index));
  if (!cert.is_mixing) {
    throw Error(ErrorCode::not_applicable, "K_alpha is not mixing (epsilon = 0); bounds do not apply");
  }
  BoundSweep sweep;
  sweep.alpha_index = alpha_index;
  sweep.epsilon = cert.epsilon;
  sweep.rows.resize(seeds.size() * theta_indices.size());
  parallel_for(seeds.size(), [&](std::size_t k) {
    const Trajectory traj = simulate(model, alpha_index, n, seeds[k]);
    for (std::size_t t = 0; t < theta_indices.size(); ++t) {
      BoundSweepRow& row = sweep.rows[k * theta_indices.size() + t];
      row.seed = seeds[k];
      row.theta_index = theta_indices[t];
      const StepErrorSeries series = step_errors(family, model.obs(), model.initial(),
                                                 theta_indices[t], alpha_index, traj.observations);
      const auto totals = total_errors(family, model.obs(), model.initial(), theta_indices[t],
                                       alpha_index, traj.observations);
      row.report = bound_check(series, totals);
      for (std::size_t i = 0; i < series.tv.size(); ++i) {
        if (std::isfinite(series.hilbert[i]) && series.tv[i] > 2.0 / kLog3 * series.hilbert[i] + 1e-12) {
          ++row.cross_bound_violations;
        }
      }
    }
  });
  for (const auto& row : sweep.rows) sweep.total_violations += row.report.violations + row.cross_bound_violations;
  return sweep;
}

}  // namespace adafilter
