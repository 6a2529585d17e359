#include <cmath>
#include <limits>
#include <optional>

#include "adafilter/diagnostics.hpp"
#include "adafilter/error.hpp"

namespace adafilter {

namespace {

Matrix difference(const Matrix& upper, const Matrix& lower, double spacing) {
  Matrix out(upper.rows(), upper.cols());
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = (upper(i, j) - lower(i, j)) / spacing;
  }
  return out;
}

std::optional<FiniteKernel> try_evaluate(const KernelFamily& family, const Param& theta) {
  try {
    return family.evaluate(theta);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::invalid_kernel) throw;
    return std::nullopt;  // stepped outside the family's valid region
  }
}

KernelDerivative generator_differences(const KernelFamily& family, std::size_t index, double h_fd) {
  if (!(h_fd > 0.0)) throw Error(ErrorCode::precondition, "finite-difference step must be positive");
  KernelDerivative out;
  out.method = DerivativeMethod::finite_difference;
  const Param& theta = family.param(index);
  for (std::size_t d = 0; d < theta.size(); ++d) {
    Param up = theta;
    Param down = theta;
    up[d] += h_fd;
    down[d] -= h_fd;
    const auto k_up = try_evaluate(family, up);
    const auto k_down = try_evaluate(family, down);
    if (k_up && k_down) {
      out.matrices.push_back(difference(k_up->matrix(), k_down->matrix(), 2.0 * h_fd));
    } else if (k_up) {
      out.matrices.push_back(difference(k_up->matrix(), family.kernel(index).matrix(), h_fd));
      out.one_sided = true;
    } else if (k_down) {
      out.matrices.push_back(difference(family.kernel(index).matrix(), k_down->matrix(), h_fd));
      out.one_sided = true;
    } else {
      throw Error(ErrorCode::not_applicable, "family undefined on both sides of the grid point");
    }
  }
  return out;
}

KernelDerivative grid_differences(const KernelFamily& family, std::size_t index) {
  KernelDerivative out;
  out.method = DerivativeMethod::grid;
  const Param& theta = family.param(index);
  for (std::size_t d = 0; d < theta.size(); ++d) {
    std::optional<std::size_t> below;
    std::optional<std::size_t> above;
    for (std::size_t j = 0; j < family.size(); ++j) {
      const Param& other = family.param(j);
      bool aligned = true;
      for (std::size_t c = 0; c < theta.size() && aligned; ++c) {
        if (c != d && std::abs(other[c] - theta[c]) > 1e-12) aligned = false;
      }
      if (!aligned || j == index) continue;
      if (other[d] > theta[d] && (!above || other[d] < family.param(*above)[d])) above = j;
      if (other[d] < theta[d] && (!below || other[d] > family.param(*below)[d])) below = j;
    }
    const std::size_t hi = above.value_or(index);
    const std::size_t lo = below.value_or(index);
    if (hi == lo) {
      throw Error(ErrorCode::not_applicable,
                  "no grid neighbour along coordinate " + std::to_string(d));
    }
    out.one_sided = out.one_sided || !above || !below;
    out.matrices.push_back(difference(family.kernel(hi).matrix(), family.kernel(lo).matrix(),
                                      family.param(hi)[d] - family.param(lo)[d]));
  }
  return out;
}

}  // namespace

KernelDerivative kernel_derivative(const KernelFamily& family, std::size_t theta_index, double h_fd,
                                   DerivativeMethod method) {
  if (theta_index >= family.size()) throw Error(ErrorCode::index_out_of_range, "theta index out of range");
  if (method == DerivativeMethod::automatic) {
    method = family.has_derivative()  ? DerivativeMethod::analytic
             : family.has_generator() ? DerivativeMethod::finite_difference
                                      : DerivativeMethod::grid;
  }
  switch (method) {
    case DerivativeMethod::analytic: {
      KernelDerivative out;
      out.method = DerivativeMethod::analytic;
      out.matrices = family.analytic_derivative(family.param(theta_index));
      return out;
    }
    case DerivativeMethod::finite_difference:
      return generator_differences(family, theta_index, h_fd);
    case DerivativeMethod::grid:
      return grid_differences(family, theta_index);
    case DerivativeMethod::automatic:
      break;
  }
  throw Error(ErrorCode::precondition, "unknown derivative method");
}

Matrix directional_derivative(const KernelDerivative& derivative, std::span<const double> direction) {
  if (derivative.matrices.empty()) throw Error(ErrorCode::precondition, "empty kernel derivative");
  if (direction.empty()) {
    if (derivative.matrices.size() != 1) {
      throw Error(ErrorCode::precondition, "direction required for multi-dimensional parameters");
    }
    return derivative.matrices.front();
  }
  if (direction.size() != derivative.matrices.size()) {
    throw Error(ErrorCode::dimension, "direction and parameter dimension differ");
  }
  const Matrix& first = derivative.matrices.front();
  Matrix out(first.rows(), first.cols());
  for (std::size_t d = 0; d < direction.size(); ++d) {
    for (std::size_t i = 0; i < out.rows(); ++i) {
      for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += direction[d] * derivative.matrices[d](i, j);
    }
  }
  return out;
}

std::vector<double> lambda_bound(const Matrix& derivative, const FiniteKernel& kernel) {
  if (derivative.rows() != kernel.size() || derivative.cols() != kernel.size()) {
    throw Error(ErrorCode::dimension, "derivative and kernel shapes differ");
  }
  const std::size_t n = kernel.size();
  std::vector<double> lambda(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t from = 0; from < n; ++from) {
      const double l = std::abs(derivative(from, x));
      if (l == 0.0) continue;
      const double k = kernel(from, x);
      if (k == 0.0) {
        lambda[x] = std::numeric_limits<double>::infinity();
        break;
      }
      lambda[x] = std::max(lambda[x], l / k);
    }
  }
  return lambda;
}

std::vector<double> lambda_bound(const KernelDerivative& derivative, const FiniteKernel& kernel) {
  return lambda_bound(directional_derivative(derivative), kernel);
}

}  // namespace adafilter
