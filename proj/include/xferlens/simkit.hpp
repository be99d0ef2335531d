#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "xferlens/errors.hpp"

namespace xferlens {

/// Examples as rows, features as columns.
template <typename Scalar>
using FeatureMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Symmetric n x n Gram matrix.
template <typename Scalar>
using KernelMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class KernelKind { linear, rbf };

inline const char* kernel_name(KernelKind k) { return k == KernelKind::linear ? "linear" : "rbf"; }

struct CkaConfig {
  KernelKind kernel = KernelKind::rbf;
  /// RBF bandwidth as a multiple of the median pairwise distance.
  double bandwidth_fraction = 1.0;
};

namespace detail {

// Above this size, squared distances use the expanded |x|^2 - 2x.y + |y|^2
// form; below it they are summed from explicit differences.
inline constexpr Eigen::Index kDirectDistanceLimit = 4096;

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& x) {
  if (!x.allFinite()) throw NumericError("feature matrix contains non-finite values");
}

template <typename Derived>
Eigen::MatrixXd pairwise_squared_distances(const Eigen::MatrixBase<Derived>& x_in) {
  const Eigen::MatrixXd x = x_in.template cast<double>();
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(n, n);
  if (n <= kDirectDistanceLimit) {
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = j + 1; i < n; ++i) {
        const double v = (x.row(i) - x.row(j)).squaredNorm();
        d2(i, j) = v;
        d2(j, i) = v;
      }
  } else {
    const Eigen::VectorXd sq = x.rowwise().squaredNorm();
    const Eigen::MatrixXd g = x * x.transpose();
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = j + 1; i < n; ++i) {
        const double v = std::max(0.0, sq(i) + sq(j) - 2.0 * g(i, j));
        d2(i, j) = v;
        d2(j, i) = v;
      }
  }
  return d2;
}

inline double median_distance(const Eigen::MatrixXd& d2) {
  const Eigen::Index n = d2.rows();
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) d.push_back(std::sqrt(d2(i, j)));
  if (d.empty()) return 0.0;
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  if (d.size() % 2 == 1) return *mid;
  return 0.5 * (*std::max_element(d.begin(), mid) + *mid);
}

}  // namespace detail

/// K = X X^T, each pair evaluated once so the result is exactly symmetric.
template <typename Derived>
KernelMatrix<double> gram_linear(const Eigen::MatrixBase<Derived>& x_in) {
  detail::require_finite(x_in);
  const Eigen::MatrixXd x = x_in.template cast<double>();
  const Eigen::Index n = x.rows();
  KernelMatrix<double> k(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j; i < n; ++i) {
      const double v = x.row(i).dot(x.row(j));
      k(i, j) = v;
      k(j, i) = v;
    }
  return k;
}

/// Median of the n(n-1)/2 pairwise Euclidean distances.
template <typename Derived>
double median_pairwise_distance(const Eigen::MatrixBase<Derived>& x) {
  return detail::median_distance(detail::pairwise_squared_distances(x));
}

/// Gaussian kernel with sigma = bandwidth_fraction * median pairwise
/// distance. The diagonal is exactly one.
template <typename Derived>
KernelMatrix<double> gram_rbf(const Eigen::MatrixBase<Derived>& x, double bandwidth_fraction) {
  detail::require_finite(x);
  if (!(bandwidth_fraction > 0.0)) throw RangeError("bandwidth_fraction must be positive");
  if (x.rows() < 2) throw DegenerateInputError("rbf kernel needs at least two examples");
  const Eigen::MatrixXd d2 = detail::pairwise_squared_distances(x);
  const Eigen::Index n = d2.rows();

  const double median = detail::median_distance(d2);
  if (!(median > 0.0)) throw DegenerateInputError("median pairwise distance is zero (rows are identical)");

  const double sigma = bandwidth_fraction * median;
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  KernelMatrix<double> k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = std::exp(-d2(i, j) * inv_two_sigma2);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

template <typename Derived>
KernelMatrix<double> gram(const Eigen::MatrixBase<Derived>& x, const CkaConfig& cfg) {
  return cfg.kernel == KernelKind::linear ? gram_linear(x) : gram_rbf(x, cfg.bandwidth_fraction);
}

/// H K H with H = I - 11^T/n, formed by subtracting row, column and grand
/// means rather than multiplying by H.
template <typename Derived>
KernelMatrix<double> center_kernel(const Eigen::MatrixBase<Derived>& k_in) {
  const Eigen::MatrixXd k = k_in.template cast<double>();
  const Eigen::VectorXd col_mean = k.colwise().mean().transpose();
  const Eigen::VectorXd row_mean = k.rowwise().mean();
  const double grand = k.mean();
  Eigen::MatrixXd c = k;
  c.colwise() -= row_mean;
  c.rowwise() -= col_mean.transpose();
  c.array() += grand;
  return c;
}

/// Biased HSIC estimator tr(K H L H) / (n - 1)^2.
template <typename DerivedK, typename DerivedL>
double hsic(const Eigen::MatrixBase<DerivedK>& k, const Eigen::MatrixBase<DerivedL>& l) {
  if (k.rows() != k.cols() || l.rows() != l.cols()) throw ShapeError("kernel matrices must be square");
  if (k.rows() != l.rows()) throw ShapeError("kernel matrices differ in size");
  const Eigen::Index n = k.rows();
  if (n < 2) throw ShapeError("hsic needs at least two examples");
  // tr(HKH L) = sum_ij (HKH)_ij L_ji
  const Eigen::MatrixXd kc = center_kernel(k);
  const double trace = kc.cwiseProduct(l.template cast<double>().transpose()).sum();
  const double denom = static_cast<double>(n - 1);
  return trace / (denom * denom);
}

/// Centered kernel alignment between two representations of the same
/// examples, in [0, 1].
template <typename DerivedX, typename DerivedY>
double cka(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y, const CkaConfig& cfg = {}) {
  if (x.rows() != y.rows()) throw ShapeError("representations have different example counts");
  if (x.rows() < 2) throw ShapeError("cka needs at least two examples");
  const KernelMatrix<double> k = gram(x, cfg);
  const KernelMatrix<double> l = gram(y, cfg);
  const double kl = hsic(k, l);
  const double kk = hsic(k, k);
  const double ll = hsic(l, l);
  if (kk <= 1e-15 || ll <= 1e-15) throw DegenerateInputError("representation has zero centered self-similarity");
  const double value = kl / std::sqrt(kk * ll);
  if (value < -1e-9) throw NumericError("cka fell below zero on positive semi-definite kernels");
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace xferlens
