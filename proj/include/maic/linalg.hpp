#pragma once

// Dense helpers shared by the theory, optimizer and strategy code.
// Everything here is a free function over Eigen expressions.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

namespace maic {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Kronecker product X ⊗ Y.
template <typename DerivedX, typename DerivedY>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, Eigen::Dynamic>
kron(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  const Eigen::Index xr = x.rows(), xc = x.cols(), yr = y.rows(), yc = y.cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(xr * yr, xc * yc);
  for (Eigen::Index j = 0; j < xc; ++j)
    for (Eigen::Index i = 0; i < xr; ++i)
      out.block(i * yr, j * yc, yr, yc) = x(i, j) * y;
  return out;
}

/// X ⊗ I_M: block (l,k) equals X(l,k)·I_M.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
kron_expand(const Eigen::MatrixBase<Derived>& x, Eigen::Index block_dim) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = x.rows(), m = x.cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n * block_dim, m * block_dim);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      const Scalar v = x(i, j);
      if (v == Scalar(0)) continue;
      for (Eigen::Index d = 0; d < block_dim; ++d) out(i * block_dim + d, j * block_dim + d) = v;
    }
  return out;
}

/// Column-major vectorization.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> vec(const Eigen::MatrixBase<Derived>& x) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> tmp = x;
  return Eigen::Map<const Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>>(tmp.data(), tmp.size());
}

/// Inverse of vec for a square n×n result.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
unvec_square(const Eigen::MatrixBase<Derived>& v) {
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> tmp = v;
  return Eigen::Map<const Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>>(tmp.data(), n, n);
}

/// Matrices up to this many rows use a dense eigensolve for the spectral radius.
inline constexpr Eigen::Index kDenseSpectralLimit = 1024;

/// Largest eigenvalue magnitude. Dense eigensolve for moderate sizes,
/// normalized power iteration (growth-rate estimate) above the limit.
template <typename Derived>
double spectral_radius(const Eigen::MatrixBase<Derived>& x) {
  using Dense = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
  const Dense m = x.template cast<double>();
  if (m.rows() == 0) return 0.0;
  if (m.rows() <= kDenseSpectralLimit) {
    Eigen::EigenSolver<Dense> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  // Growth rate of ||X^k v|| over a long horizon; tolerates complex dominant pairs.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m.rows()).normalized();
  const int burn_in = 200, horizon = 400;
  for (int k = 0; k < burn_in; ++k) {
    v = m * v;
    const double n = v.norm();
    if (n == 0.0) return 0.0;
    v /= n;
  }
  double log_growth = 0.0;
  for (int k = 0; k < horizon; ++k) {
    v = m * v;
    const double n = v.norm();
    if (n == 0.0) return 0.0;
    log_growth += std::log(n);
    v /= n;
  }
  return std::exp(log_growth / horizon);
}

/// Block maximum norm bound max_k Σ_l ||X_{kl}||_2 over M×M blocks. This is
/// the induced block-maximum norm for block-diagonal matrices and for X = C ⊗ I_M.
template <typename Derived>
double block_max_norm(const Eigen::MatrixBase<Derived>& x, Eigen::Index block_dim) {
  const Eigen::Index nb = x.rows() / block_dim;
  double best = 0.0;
  for (Eigen::Index k = 0; k < nb; ++k) {
    double row = 0.0;
    for (Eigen::Index l = 0; l < nb; ++l) {
      Eigen::MatrixXd blk = x.block(k * block_dim, l * block_dim, block_dim, block_dim).template cast<double>();
      if (blk.isZero(0.0)) continue;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(blk);
      row += svd.singularValues()(0);
    }
    best = std::max(best, row);
  }
  return best;
}

/// n×n matrix whose (l,k) entry is the trace of the (l,k) M×M block.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
block_traces(const Eigen::MatrixBase<Derived>& x, Eigen::Index block_dim) {
  const Eigen::Index nr = x.rows() / block_dim, nc = x.cols() / block_dim;
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(nr, nc);
  for (Eigen::Index j = 0; j < nc; ++j)
    for (Eigen::Index i = 0; i < nr; ++i)
      out(i, j) = x.block(i * block_dim, j * block_dim, block_dim, block_dim).trace();
  return out;
}

/// Euclidean projection onto the probability simplex {q >= 0, 1^T q = 1}
/// (sort-and-threshold).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> project_simplex(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = v.size();
  std::vector<Scalar> sorted(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) sorted[static_cast<std::size_t>(i)] = v(i);
  std::sort(sorted.begin(), sorted.end(), std::greater<Scalar>());
  Scalar cumulative = 0, theta = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    cumulative += sorted[static_cast<std::size_t>(i)];
    const Scalar t = (cumulative - Scalar(1)) / Scalar(i + 1);
    if (sorted[static_cast<std::size_t>(i)] - t > Scalar(0)) theta = t;
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = std::max(v(i) - theta, Scalar(0));
  return out;
}

/// Magnitude-in-dB of a nonnegative quantity.
inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace maic
