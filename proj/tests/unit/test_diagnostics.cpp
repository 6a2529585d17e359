#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "adafilter/diagnostics.hpp"
#include "adafilter/error.hpp"
#include "adafilter/exact_filter.hpp"
#include "oracles.hpp"

using namespace adafilter;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no adafilter::Error thrown";
  return ErrorCode::config;
}

KernelFamily constant_family() {
  const auto k = FiniteKernel::from_rows({{0.6, 0.4}, {0.2, 0.8}});
  return KernelFamily({{0.0}, {0.5}, {1.0}}, {k, k, k});
}

AugmentedModel with_family(KernelFamily f, double sigma = 0.5) {
  const std::size_t p = f.size();
  return AugmentedModel(std::move(f), DiscreteMeasure::uniform(p), ObservationModel({0.0, 1.0}, sigma),
                        DiscreteMeasure::probability({0.5, 0.5}));
}

// K_n^alpha(psi) from the defining sum, for an oracle psi.
std::vector<double> one_step(const std::vector<double>& psi, const std::vector<std::vector<double>>& k, double y) {
  std::vector<double> w(2, 0.0);
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t b = 0; b < 2; ++b) w[b] += psi[a] * k[a][b];
  }
  for (std::size_t b = 0; b < 2; ++b) w[b] *= oracle::gauss(y, static_cast<double>(b), 0.5);
  return oracle::normalize(w);
}

}  // namespace

TEST(StepErrors, ZeroWhenThetaIsAlpha) {
  const auto model = oracle::headline_model();
  const auto y = simulate(model, 10, 50, 1).observations;
  const auto s = step_errors(model.family(), model.obs(), model.initial(), 10, 10, y);
  for (std::size_t i = 0; i < y.size(); ++i) {
    EXPECT_EQ(s.hilbert[i], 0.0);
    EXPECT_EQ(s.tv[i], 0.0);
  }
  const auto b = bound_check(s, total_errors(model.family(), model.obs(), model.initial(), 10, 10, y));
  EXPECT_EQ(b.sup_total_error, 0.0);
  EXPECT_EQ(b.bound_h, 0.0);
  EXPECT_EQ(b.violations, 0u);
}

TEST(StepErrors, ConstantObservationMapIsLinearPropagation) {
  const auto model = oracle::headline_model();
  const ObservationModel flat({0.7, 0.7}, 0.5);
  const std::vector<double> y{0.1, 1.5, -0.3, 0.9};
  const auto s = step_errors(model.family(), flat, model.initial(), 3, 10, y);
  DiscreteMeasure prev = model.initial();
  for (std::size_t n = 0; n < y.size(); ++n) {
    const auto theta_next = model.family().kernel(3).propagate(prev);
    const auto alpha_next = model.family().kernel(10).propagate(prev);
    EXPECT_NEAR(s.tv[n], tv_norm(theta_next, alpha_next), 1e-14);
    prev = theta_next;
  }
}

TEST(StepErrors, MatchesEnumeration) {
  const auto model = oracle::headline_model();
  const std::vector<double> y{0.2, 0.9, 1.1, -0.1};
  const auto s = step_errors(model.family(), model.obs(), model.initial(), 4, 10, y);
  const auto kt = oracle::to_rows(model.family().kernel(4));
  const auto ka = oracle::to_rows(model.family().kernel(10));
  std::vector<double> psi{0.5, 0.5};
  for (std::size_t n = 1; n <= y.size(); ++n) {
    const std::vector<double> prefix(y.begin(), y.begin() + static_cast<long>(n));
    const auto theta_n = oracle::normalize(oracle::path_sum({0.5, 0.5}, kt, {0.0, 1.0}, 0.5, prefix));
    const auto alpha_n = one_step(psi, ka, y[n - 1]);
    EXPECT_NEAR(s.tv[n - 1], oracle::tv(theta_n, alpha_n), 1e-10);
    EXPECT_NEAR(s.hilbert[n - 1], oracle::hilbert_by_subsets(theta_n, alpha_n), 1e-10);
    psi = theta_n;
  }
}

TEST(BoundCheck, EpsilonOneAndNotApplicable) {
  StepErrorSeries s;
  s.hilbert = {0.1, 0.3};
  s.tv = {0.05, 0.1};
  s.epsilon = 1.0;
  const std::vector<double> totals{0.05, 0.2};
  const auto r = bound_check(s, totals);
  EXPECT_DOUBLE_EQ(r.bound_h, 2.0 / std::log(3.0) * 0.3);
  EXPECT_DOUBLE_EQ(r.bound_tv, (1.0 + 2.0 / std::log(3.0)) * 0.1);
  EXPECT_EQ(r.violations, 0u);
  s.epsilon = 0.0;
  EXPECT_EQ(code_of([&] { bound_check(s, totals); }), ErrorCode::not_applicable);
}

TEST(BoundCheck, CountsViolations) {
  StepErrorSeries s;
  s.hilbert = {0.01};
  s.tv = {0.01};
  s.epsilon = 1.0;
  const std::vector<double> totals{1.0};
  EXPECT_EQ(bound_check(s, totals).violations, 2u);
}

TEST(BoundSweep, HeadlineHasNoViolations) {
  const auto model = oracle::headline_model();
  const std::vector<std::size_t> thetas{0, 5, 10, 15, 20};
  const std::vector<std::uint64_t> seeds{1, 2};
  const auto sweep = bound_sweep(model, 10, thetas, 200, seeds);
  EXPECT_EQ(sweep.rows.size(), 10u);
  EXPECT_EQ(sweep.total_violations, 0u);
  EXPECT_NEAR(sweep.epsilon, std::sqrt(0.3 / 0.5) * 1.0, 1e-12);
}

TEST(KernelDerivative, LinearFamilyAnalytic) {
  const auto model = oracle::headline_model();
  const auto d = kernel_derivative(model.family(), 10, 1e-5);
  EXPECT_EQ(d.method, DerivativeMethod::analytic);
  ASSERT_EQ(d.matrices.size(), 1u);
  EXPECT_EQ(d.matrices[0], Matrix::from_rows({{-1, 1}, {0, 0}}));
}

TEST(KernelDerivative, FiniteDifferenceIsSecondOrderOnCurvedFamily) {
  auto gen = [](std::span<const double> t) {
    const double s = 0.5 * (1.0 - std::cos(std::numbers::pi * t[0]));
    return FiniteKernel::from_rows({{1.0 - s, s}, {0.3, 0.7}});
  };
  auto der = [](std::span<const double> t) {
    const double d = 0.5 * std::numbers::pi * std::sin(std::numbers::pi * t[0]);
    return std::vector<Matrix>{Matrix::from_rows({{-d, d}, {0.0, 0.0}})};
  };
  const KernelFamily f({{0.3}}, gen, der);
  auto err = [&](double h) {
    const auto fd = kernel_derivative(f, 0, h, DerivativeMethod::finite_difference).matrices[0];
    const auto an = kernel_derivative(f, 0, h, DerivativeMethod::analytic).matrices[0];
    return std::abs(fd(0, 1) - an(0, 1));
  };
  EXPECT_GT(err(1e-2) / err(1e-3), 50.0);
  const auto fd = kernel_derivative(f, 0, 1e-4, DerivativeMethod::finite_difference).matrices[0];
  for (std::size_t r = 0; r < 2; ++r) EXPECT_NEAR(fd(r, 0) + fd(r, 1), 0.0, 1e-8);
}

TEST(KernelDerivative, ConstantFamilyAndGridDifferences) {
  const auto f = constant_family();
  const auto d = kernel_derivative(f, 1, 1e-5);
  EXPECT_EQ(d.method, DerivativeMethod::grid);
  EXPECT_FALSE(d.one_sided);
  EXPECT_EQ(d.matrices[0], Matrix(2, 2, 0.0));
  EXPECT_TRUE(kernel_derivative(f, 0, 1e-5).one_sided);
  EXPECT_TRUE(kernel_derivative(f, 2, 1e-5).one_sided);

  // Grid differences on a kernel list sampled from an affine family are exact.
  std::vector<FiniteKernel> ks;
  for (double t : {0.1, 0.25, 0.5}) ks.push_back(FiniteKernel::from_rows({{1 - t, t}, {0.3, 0.7}}));
  const KernelFamily listed({{0.1}, {0.25}, {0.5}}, ks);
  const auto g = kernel_derivative(listed, 1, 1e-5).matrices[0];
  EXPECT_NEAR(g(0, 0), -1.0, 1e-12);
  EXPECT_NEAR(g(0, 1), 1.0, 1e-12);

  const KernelFamily lone({{0.1}}, {ks[0]});
  EXPECT_EQ(code_of([&] { kernel_derivative(lone, 0, 1e-5); }), ErrorCode::not_applicable);
}

TEST(LambdaBound, Examples) {
  const auto model = oracle::headline_model();
  const auto lam = lambda_bound(kernel_derivative(model.family(), 10, 1e-5), model.family().kernel(10));
  EXPECT_EQ(lam, (std::vector<double>{2.0, 2.0}));

  const auto f = constant_family();
  EXPECT_EQ(lambda_bound(kernel_derivative(f, 1, 1e-5), f.kernel(1)), (std::vector<double>{0.0, 0.0}));

  const auto k = FiniteKernel::from_rows({{1.0, 0.0}, {0.3, 0.7}});
  const auto inf = lambda_bound(Matrix::from_rows({{-1, 1}, {0, 0}}), k);
  EXPECT_EQ(inf[1], std::numeric_limits<double>::infinity());
  EXPECT_EQ(inf[0], 1.0);
}

TEST(DerivativeBoundSeries, ConstantFamilyIsZero) {
  const auto model = with_family(constant_family());
  const std::vector<double> y{0.1, 0.8, 0.5};
  const auto s = derivative_bound_series(model, 0, 1, y);
  for (std::size_t n = 0; n < y.size(); ++n) {
    EXPECT_EQ(s.lambda_form[n], 0.0);
    EXPECT_EQ(s.ratio_form[n], 0.0);
  }
}

TEST(DerivativeBoundSeries, OrderedAndBoundedByLambda) {
  const auto model = oracle::headline_model();
  const auto y = simulate(model, 10, 200, 4).observations;
  const auto s = derivative_bound_series(model, 6, 10, y);
  for (std::size_t n = 0; n < y.size(); ++n) {
    EXPECT_LE(s.ratio_form[n], s.abs_ratio_form[n] + 1e-15);
    EXPECT_LE(s.abs_ratio_form[n], s.lambda_form[n] + 1e-15);
    EXPECT_LE(s.lambda_form[n], 2.0 + 1e-12);
  }
  EXPECT_LE(s.sup_lambda_form, 2.0 + 1e-12);
}

TEST(DerivativeBoundSeries, MatchesDirectSums) {
  const auto model = oracle::headline_model();
  const std::vector<double> y{0.3, 1.2, 0.6, -0.4};
  const auto s = derivative_bound_series(model, 4, 10, y);
  const auto kt = oracle::to_rows(model.family().kernel(4));
  const std::vector<std::vector<double>> kp{{0.5, 0.5}, {0.3, 0.7}};
  const std::vector<std::vector<double>> l{{-1, 1}, {0, 0}};
  const std::vector<double> lam{2.0, 2.0};
  std::vector<double> psi{0.5, 0.5};
  for (std::size_t n = 0; n < y.size(); ++n) {
    const double g[2] = {oracle::gauss(y[n], 0, 0.5), oracle::gauss(y[n], 1, 0.5)};
    double den = 0, ratio = 0, lambda_num = 0;
    for (std::size_t a = 0; a < 2; ++a) {
      const double kg = kp[a][0] * g[0] + kp[a][1] * g[1];
      const double lg = l[a][0] * g[0] + l[a][1] * g[1];
      den += psi[a] * kg;
      ratio += psi[a] * std::abs(lg);
      lambda_num += psi[a] * (kp[a][0] * lam[0] * g[0] + kp[a][1] * lam[1] * g[1]);
    }
    EXPECT_NEAR(s.ratio_form[n], ratio / den, 1e-10);
    EXPECT_NEAR(s.lambda_form[n], lambda_num / den, 1e-10);
    const std::vector<double> prefix(y.begin(), y.begin() + static_cast<long>(n + 1));
    psi = oracle::normalize(oracle::path_sum({0.5, 0.5}, kt, {0.0, 1.0}, 0.5, prefix));
  }
}

TEST(DerivativeBoundSeries, InfiniteLambdaRejected) {
  std::vector<Param> grid{{0.0}, {0.5}};
  const auto f = KernelFamily::affine(grid, Matrix::from_rows({{1, 0}, {0.3, 0.7}}),
                                      {Matrix::from_rows({{-1, 1}, {0, 0}})});
  const auto model = with_family(f);
  const std::vector<double> y{0.5};
  EXPECT_EQ(code_of([&] { derivative_bound_series(model, 1, 0, y); }), ErrorCode::not_applicable);
}

TEST(SegmentIndices, OneDimensionalGrid) {
  const auto model = oracle::headline_model();
  EXPECT_EQ(segment_indices(model.family(), 10, 13), (std::vector<std::size_t>{10, 11, 12, 13}));
  EXPECT_EQ(segment_indices(model.family(), 13, 10), (std::vector<std::size_t>{10, 11, 12, 13}));
  EXPECT_EQ(segment_indices(model.family(), 4, 4), (std::vector<std::size_t>{4}));
}

TEST(WeakStepCheck, AbsoluteKernelFormHolds) {
  const auto model = oracle::headline_model();
  const auto y = simulate(model, 10, 100, 2).observations;
  const std::vector<std::vector<double>> tests{{1.0, -1.0}, {1.0, 0.3}, {-0.2, 1.0}};
  for (std::size_t theta : {0u, 7u, 14u, 20u}) {
    EXPECT_EQ(weak_step_check(model, theta, 10, y, tests, RatioForm::absolute_kernel).violations, 0u);
    EXPECT_EQ(weak_step_check(model, theta, 10, y, tests, RatioForm::lambda).violations, 0u);
  }
}

TEST(WeakStepCheck, LiteralRatioFormFailsWhenLikelihoodsTie) {
  // At y = 0.5 both states are equally likely, so L g = 0 and the literal
  // factor vanishes while the one-step discrepancy does not.
  const auto model = oracle::headline_model();
  const std::vector<double> y{0.5};
  const std::vector<std::vector<double>> tests{{1.0, -1.0}};
  const auto r = weak_step_check(model, 14, 10, y, tests, RatioForm::literal);
  EXPECT_EQ(r.violations, 1u);
  EXPECT_EQ(r.first_violation_step, 1u);
  EXPECT_EQ(weak_step_check(model, 14, 10, y, tests, RatioForm::absolute_kernel).violations, 0u);
}

TEST(MomentProbe, ConstantFamilyIsZero) {
  const auto model = with_family(constant_family());
  const std::vector<std::size_t> horizons{1, 5};
  const auto r = moment_condition_probe(model, 1, 0.6, horizons);
  EXPECT_EQ(r.sup_value, 0.0);
  EXPECT_EQ(r.analytic_ceiling, 0.0);
}

TEST(MomentProbe, BelowCeiling) {
  const auto model = oracle::headline_model();
  const std::vector<std::size_t> horizons{1, 2, 5, 20, 200};
  const auto r = moment_condition_probe(model, 10, 0.1, horizons);
  EXPECT_EQ(r.neighborhood.size(), 5u);
  for (double v : r.sup_by_horizon) EXPECT_LE(v, r.analytic_ceiling + 1e-12);
}

TEST(MomentProbe, MatchesMatrixAlgebra) {
  // n = 3: (sum_x (mu K_theta^2)(x) (K' Lambda^4)(x))^(1/4).
  const auto model = oracle::headline_model();
  const std::size_t t = 8, tp = 12;
  const auto kt = oracle::to_rows(model.family().kernel(t));
  const auto kp = oracle::to_rows(model.family().kernel(tp));
  const double theta_p = model.family().param(tp)[0];
  const std::vector<double> lam{1.0 / (1.0 - theta_p), 1.0 / theta_p};
  std::vector<double> law{0.5, 0.5};
  for (int step = 0; step < 2; ++step) {
    law = {law[0] * kt[0][0] + law[1] * kt[1][0], law[0] * kt[0][1] + law[1] * kt[1][1]};
  }
  double e = 0.0;
  for (std::size_t x = 0; x < 2; ++x) {
    e += law[x] * (kp[x][0] * std::pow(lam[0], 4) + kp[x][1] * std::pow(lam[1], 4));
  }
  EXPECT_NEAR(moment_condition_value(model, t, tp, 3), std::pow(e, 0.25), 1e-12);
}

TEST(FitLogSlope, ExactLineAndDegenerateInput) {
  std::vector<double> v;
  for (int i = 1; i <= 10; ++i) v.push_back(2.0 - 0.3 * i);
  EXPECT_NEAR(fit_log_slope(v, 5), -0.3, 1e-12);
  v[7] = -std::numeric_limits<double>::infinity();
  EXPECT_NEAR(fit_log_slope(v, 0), -0.3, 1e-12);
  EXPECT_TRUE(std::isnan(fit_log_slope(v, 9)));
}

TEST(PosteriorConcentration, SingletonGrid) {
  const auto model = oracle::headline_model();
  const std::vector<std::size_t> only{10};
  const AugmentedModel single(model.family().subset(only), DiscreteMeasure::uniform(1), model.obs(), model.initial());
  const std::vector<std::uint64_t> seeds{1, 2};
  const auto r = posterior_concentration(single, 0, 0.1, 50, seeds);
  for (double m : r.mass_outside) EXPECT_EQ(m, 0.0);
  for (double m : r.mass_at_alpha) EXPECT_EQ(m, 1.0);
}

TEST(PosteriorConcentration, IdenticalKernels) {
  const auto k = FiniteKernel::from_rows({{0.8, 0.2}, {0.3, 0.7}});
  const AugmentedModel m(KernelFamily({{0.0}, {1.0}}, {k, k}), DiscreteMeasure::probability({0.3, 0.7}),
                         ObservationModel({0.0, 1.0}, 0.5), DiscreteMeasure::uniform(2));
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  EXPECT_EQ(code_of([&] { posterior_concentration(m, 0, 0.5, 20, seeds); }), ErrorCode::identifiability);
  ConsistencyOptions opt;
  opt.require_identifiable = false;
  const auto r = posterior_concentration(m, 0, 0.5, 20, seeds, opt);
  for (double v : r.mass_outside) EXPECT_NEAR(v, 0.7, 1e-12);
}

TEST(PosteriorConcentration, Errors) {
  const auto model = oracle::headline_model();
  const std::vector<std::uint64_t> seeds{1};
  EXPECT_EQ(code_of([&] { posterior_concentration(model, 21, 0.1, 10, seeds); }), ErrorCode::index_out_of_range);
  EXPECT_EQ(code_of([&] { posterior_concentration(model, 10, 0.1, 10, {}); }), ErrorCode::empty_input);
}

TEST(PosteriorConcentration, MassAtTruthGrowsOnAverage) {
  const auto model = oracle::headline_model();
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 20; ++s) seeds.push_back(s);
  const auto r = posterior_concentration(model, 10, 0.1, 2000, seeds);
  // Checkpoints along the run: each later mean is not below the earlier one
  // by more than three standard errors.
  const std::size_t checkpoints[] = {10, 100, 500, 1000, 2000};
  for (std::size_t i = 1; i < std::size(checkpoints); ++i) {
    const std::size_t a = checkpoints[i - 1] - 1, b = checkpoints[i] - 1;
    const double band = 3.0 * std::hypot(r.mass_at_alpha_se[a], r.mass_at_alpha_se[b]);
    EXPECT_GE(r.mass_at_alpha[b], r.mass_at_alpha[a] - band) << "between n=" << a + 1 << " and n=" << b + 1;
  }
  EXPECT_GT(r.mass_at_alpha.back(), r.mass_at_alpha.front());
}

TEST(StabilityGap, Examples) {
  const auto model = oracle::headline_model();
  const auto mu = DiscreteMeasure::probability({0.9, 0.1});
  const auto mu_p = DiscreteMeasure::probability({0.1, 0.9});
  const auto delta = model.with_prior(DiscreteMeasure::point_mass(21, 10));
  const auto y = simulate(model, 10, 100, 3).observations;
  for (double g : stability_gap(delta, delta, mu, mu, y)) EXPECT_EQ(g, 0.0);

  const auto at3 = model.with_prior(DiscreteMeasure::point_mass(21, 3));
  const auto gap = stability_gap(at3, delta, mu, mu_p, y);
  const auto a = run_filter(model.family().kernel(3), model.obs(), mu, y);
  const auto b = run_filter(model.family().kernel(10), model.obs(), mu_p, y);
  for (std::size_t n = 0; n < y.size(); ++n) EXPECT_NEAR(gap[n], tv_norm(a[n].dist, b[n].dist), 1e-14);

  auto other = y;
  other[5] += 1.0;
  EXPECT_EQ(code_of([&] { stability_gap(at3, delta, mu, mu_p, y, other); }), ErrorCode::precondition);
}

TEST(PriorProbe, AtomPrior) {
  const auto model = oracle::headline_model();
  const std::vector<std::size_t> horizons{10, 100};
  const std::vector<double> eps{0.0, 0.0};
  const std::vector<double> p{10.0, 100.0};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto r = prior_condition_probe(model, 10, model.initial(), horizons, eps, p, seeds);
  ASSERT_EQ(r.statistic.size(), 2u);
  for (double v : r.statistic) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 0.0);
  }
  // Same start and atom at alpha: the ratio is 1, leaving u(alpha)^(-1/p).
  EXPECT_NEAR(r.statistic[0], std::pow(21.0, 1.0 / 10.0), 1e-12);
}
