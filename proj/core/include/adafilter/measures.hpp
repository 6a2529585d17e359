#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace adafilter {

/// Nonnegative weights on an indexed finite support, optionally labelled by
/// real points (used for measures on the observation line).
///
/// Zero-weight atoms are kept; comparability tests depend on the zero set.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  explicit DiscreteMeasure(std::vector<double> weights);
  DiscreteMeasure(std::vector<double> weights, std::vector<double> labels);

  // Validating constructor for probability vectors (sum 1 within 1e-12).
  static DiscreteMeasure probability(std::vector<double> weights);
  static DiscreteMeasure point_mass(std::size_t size, std::size_t index);
  static DiscreteMeasure uniform(std::size_t size);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const noexcept { return weights_; }
  bool has_labels() const noexcept { return labels_.has_value(); }
  std::span<const double> labels() const;

  double total_mass() const noexcept;
  bool is_probability(double tol = 1e-12) const noexcept;
  bool is_zero() const noexcept;

  DiscreteMeasure normalized() const;
  DiscreteMeasure scaled(double factor) const;

  // Integral of a bounded function given by its values on the support.
  double integrate(std::span<const double> f) const;

  friend bool operator==(const DiscreteMeasure&, const DiscreteMeasure&) = default;

 private:
  std::vector<double> weights_;
  std::optional<std::vector<double>> labels_;
};

/// Dense row-major real matrix. Used for kernel derivatives, which are signed.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Square row-stochastic matrix (rows sum to 1 within 1e-12).
class FiniteKernel {
 public:
  explicit FiniteKernel(Matrix matrix);
  static FiniteKernel from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t size() const noexcept { return matrix_.rows(); }
  double operator()(std::size_t from, std::size_t to) const { return matrix_(from, to); }
  std::span<const double> row(std::size_t from) const { return matrix_.row(from); }
  const Matrix& matrix() const noexcept { return matrix_; }

  // mu K, i.e. the law of the next state when the current one has law mu.
  DiscreteMeasure propagate(const DiscreteMeasure& mu) const;
  // (K f)(x) = sum_j K(x, j) f(j).
  std::vector<double> apply(std::span<const double> f) const;

 private:
  Matrix matrix_;
};

struct MixingCertificate {
  double epsilon = 0.0;
  DiscreteMeasure lambda;
  bool is_mixing = false;
};

// Full-variation convention: sum_j |mu(j) - nu(j)|, in [0, 2] for probabilities.
double tv_norm(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// Hilbert projective metric; +infinity for measures with different zero sets.
double hilbert_metric(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// Birkhoff contraction coefficient via the cross-ratio formula.
double birkhoff_tau(const FiniteKernel& kernel);

// Largest epsilon with epsilon*lambda <= K(x, .) <= lambda/epsilon for some lambda.
MixingCertificate mixing_constant(const FiniteKernel& kernel);

// Levy-Prokhorov distance between labelled probability measures on the line.
double prokhorov_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                          double tolerance = 1e-6);

// Feasibility of mu(A) <= nu(A^radius) + slack for every A, decided by max-flow.
bool prokhorov_feasible(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                        double radius, double slack);

// L_n = (1/n) sum_k delta_{y_k}; duplicates merged, labels sorted ascending.
DiscreteMeasure empirical_measure(std::span<const double> observations);

}  // namespace adafilter
