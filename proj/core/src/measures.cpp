#include "adafilter/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "adafilter/error.hpp"

namespace adafilter {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::empty_input: return "empty_input";
    case ErrorCode::missing_label: return "missing_label";
    case ErrorCode::invalid_measure: return "invalid_measure";
    case ErrorCode::invalid_kernel: return "invalid_kernel";
    case ErrorCode::invalid_model: return "invalid_model";
    case ErrorCode::non_ergodic: return "non_ergodic";
    case ErrorCode::invalid_prior: return "invalid_prior";
    case ErrorCode::index_out_of_range: return "index_out_of_range";
    case ErrorCode::invalid_size: return "invalid_size";
    case ErrorCode::not_applicable: return "not_applicable";
    case ErrorCode::identifiability: return "identifiability";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::config: return "config";
  }
  return "unknown";
}

namespace {

constexpr double kStochasticTol = 1e-12;

void check_same_size(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.size() != nu.size()) {
    throw Error(ErrorCode::dimension, "measures have different support sizes: " +
                                          std::to_string(mu.size()) + " vs " +
                                          std::to_string(nu.size()));
  }
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw Error(ErrorCode::invalid_measure, "measure support must be non-empty");
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    if (!(weights_[j] >= 0.0) || !std::isfinite(weights_[j])) {
      throw Error(ErrorCode::invalid_measure,
                  "weight " + std::to_string(j) + " is negative or not finite");
    }
  }
}

DiscreteMeasure::DiscreteMeasure(std::vector<double> weights, std::vector<double> labels)
    : DiscreteMeasure(std::move(weights)) {
  if (labels.size() != weights_.size()) {
    throw Error(ErrorCode::dimension, "labels and weights differ in length");
  }
  labels_ = std::move(labels);
}

DiscreteMeasure DiscreteMeasure::probability(std::vector<double> weights) {
  DiscreteMeasure m(std::move(weights));
  if (!m.is_probability()) {
    throw Error(ErrorCode::invalid_measure, "weights do not sum to 1 within 1e-12");
  }
  return m;
}

DiscreteMeasure DiscreteMeasure::point_mass(std::size_t size, std::size_t index) {
  if (index >= size) throw Error(ErrorCode::index_out_of_range, "point mass index out of range");
  std::vector<double> w(size, 0.0);
  w[index] = 1.0;
  return DiscreteMeasure(std::move(w));
}

DiscreteMeasure DiscreteMeasure::uniform(std::size_t size) {
  if (size == 0) throw Error(ErrorCode::invalid_measure, "measure support must be non-empty");
  return DiscreteMeasure(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

std::span<const double> DiscreteMeasure::labels() const {
  if (!labels_) throw Error(ErrorCode::missing_label, "measure has no labels");
  return *labels_;
}

double DiscreteMeasure::total_mass() const noexcept {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

bool DiscreteMeasure::is_probability(double tol) const noexcept {
  return !weights_.empty() && std::abs(total_mass() - 1.0) <= tol;
}

bool DiscreteMeasure::is_zero() const noexcept {
  return std::all_of(weights_.begin(), weights_.end(), [](double w) { return w == 0.0; });
}

DiscreteMeasure DiscreteMeasure::normalized() const {
  const double mass = total_mass();
  if (!(mass > 0.0)) throw Error(ErrorCode::invalid_measure, "cannot normalize a zero measure");
  DiscreteMeasure out = *this;
  for (double& w : out.weights_) w /= mass;
  return out;
}

DiscreteMeasure DiscreteMeasure::scaled(double factor) const {
  if (!(factor >= 0.0)) throw Error(ErrorCode::invalid_measure, "scale factor must be nonnegative");
  DiscreteMeasure out = *this;
  for (double& w : out.weights_) w *= factor;
  return out;
}

double DiscreteMeasure::integrate(std::span<const double> f) const {
  if (f.size() != weights_.size()) throw Error(ErrorCode::dimension, "function/measure size mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) s += weights_[j] * f[j];
  return s;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) throw Error(ErrorCode::dimension, "ragged matrix rows");
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

FiniteKernel::FiniteKernel(Matrix matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() == 0 || matrix_.rows() != matrix_.cols()) {
    throw Error(ErrorCode::invalid_kernel, "kernel must be a non-empty square matrix");
  }
  for (std::size_t i = 0; i < matrix_.rows(); ++i) {
    double sum = 0.0;
    for (double v : matrix_.row(i)) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw Error(ErrorCode::invalid_kernel,
                    "kernel row " + std::to_string(i) + " has a negative or non-finite entry");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kStochasticTol) {
      throw Error(ErrorCode::invalid_kernel, "kernel row " + std::to_string(i) +
                                                 " sums to " + std::to_string(sum) + ", not 1");
    }
  }
}

FiniteKernel FiniteKernel::from_rows(const std::vector<std::vector<double>>& rows) {
  return FiniteKernel(Matrix::from_rows(rows));
}

DiscreteMeasure FiniteKernel::propagate(const DiscreteMeasure& mu) const {
  if (mu.size() != size()) throw Error(ErrorCode::dimension, "measure/kernel size mismatch");
  std::vector<double> out(size(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    const double w = mu[i];
    if (w == 0.0) continue;
    const auto r = row(i);
    for (std::size_t j = 0; j < size(); ++j) out[j] += w * r[j];
  }
  return DiscreteMeasure(std::move(out));
}

std::vector<double> FiniteKernel::apply(std::span<const double> f) const {
  if (f.size() != size()) throw Error(ErrorCode::dimension, "function/kernel size mismatch");
  std::vector<double> out(size(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    const auto r = row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < size(); ++j) s += r[j] * f[j];
    out[i] = s;
  }
  return out;
}

double tv_norm(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  check_same_size(mu, nu);
  double s = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) s += std::abs(mu[j] - nu[j]);
  return s;
}

double hilbert_metric(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  check_same_size(mu, nu);
  const bool mu_zero = mu.is_zero();
  const bool nu_zero = nu.is_zero();
  if (mu_zero && nu_zero) return 0.0;
  if (mu_zero || nu_zero) return std::numeric_limits<double>::infinity();

  // On a finite space the set-wise sup/inf of mu(A)/nu(A) are attained on atoms.
  double log_max = -std::numeric_limits<double>::infinity();
  double log_min = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const bool a = mu[j] > 0.0;
    const bool b = nu[j] > 0.0;
    if (a != b) return std::numeric_limits<double>::infinity();
    if (!a) continue;
    const double r = std::log(mu[j]) - std::log(nu[j]);
    log_max = std::max(log_max, r);
    log_min = std::min(log_min, r);
  }
  return log_max - log_min;
}

double birkhoff_tau(const FiniteKernel& kernel) {
  const std::size_t n = kernel.size();
  // phi = min over rows i, j and columns k, l of K(i,k) K(j,l) / (K(j,k) K(i,l)).
  double log_phi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
          if (k == l) continue;
          const double num = kernel(i, k) * kernel(j, l);
          const double den = kernel(j, k) * kernel(i, l);
          if (num == 0.0 && den == 0.0) continue;
          if (num == 0.0 || den == 0.0) return 1.0;
          log_phi = std::min(log_phi, std::log(kernel(i, k)) + std::log(kernel(j, l)) -
                                          std::log(kernel(j, k)) - std::log(kernel(i, l)));
        }
      }
    }
  }
  // (1 - sqrt(phi)) / (1 + sqrt(phi)) = tanh(-log(phi) / 4)
  return std::tanh(-log_phi / 4.0);
}

MixingCertificate mixing_constant(const FiniteKernel& kernel) {
  const std::size_t n = kernel.size();
  MixingCertificate cert;
  std::vector<double> lambda(n, 0.0);
  double epsilon = 1.0;
  bool mixing = true;
  for (std::size_t j = 0; j < n; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      lo = std::min(lo, kernel(x, j));
      hi = std::max(hi, kernel(x, j));
    }
    if (hi == 0.0) continue;  // column never reached; lambda_j = 0 works
    if (lo == 0.0) {
      mixing = false;
      continue;
    }
    lambda[j] = std::sqrt(lo * hi);
    epsilon = std::min(epsilon, std::sqrt(lo / hi));
  }
  cert.is_mixing = mixing;
  cert.epsilon = mixing ? epsilon : 0.0;
  cert.lambda = DiscreteMeasure(std::move(lambda));
  return cert;
}

DiscreteMeasure empirical_measure(std::span<const double> observations) {
  if (observations.empty()) throw Error(ErrorCode::empty_input, "empirical measure of an empty sequence");
  std::map<double, std::size_t> counts;
  for (double y : observations) ++counts[y];
  std::vector<double> weights;
  std::vector<double> labels;
  weights.reserve(counts.size());
  labels.reserve(counts.size());
  const double n = static_cast<double>(observations.size());
  for (const auto& [value, count] : counts) {
    labels.push_back(value);
    weights.push_back(static_cast<double>(count) / n);
  }
  return DiscreteMeasure(std::move(weights), std::move(labels));
}

}  // namespace adafilter
