#pragma once

#include "maic/linalg.hpp"

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace maic {

/// Raised for inconsistent statistical inputs (non-PSD covariance, bad sizes).
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Rng = std::mt19937_64;

/// First and second moments of the per-cluster parameter vectors.
/// `cluster_mean` is M×P (column p = mean of cluster p); `cluster_cov` is the
/// PM×PM covariance of the stacked cluster parameters.
struct ParameterMoments {
  Matrix cluster_mean;
  Matrix cluster_cov;
};

/// Assembles the cluster-level moments from correlation coefficients:
/// Cov(w_p, w_q) = s_v·gamma(p,q)·sigma_w(p)·sigma_w(q)·I_M. `sigma_w` holds one
/// standard deviation per cluster. Rejects a non-PSD result, reporting the most
/// negative eigenvalue.
ParameterMoments moments_from_correlation(const Matrix& cluster_mean, const Vector& sigma_w, double s_v,
                                          const Matrix& gamma);

/// Statistics of the linear data model d = u^T w + v at every node. Immutable
/// once built; shared read-only across Monte-Carlo runs.
class SignalModel {
 public:
  SignalModel(int dim, std::vector<int> cluster_of, std::vector<Matrix> regressor_cov, Vector noise_var,
              Vector step_sizes, ParameterMoments moments);

  int dim() const { return dim_; }
  int node_count() const { return static_cast<int>(cluster_of_.size()); }
  int cluster_count() const { return static_cast<int>(moments_.cluster_mean.cols()); }
  int cluster_of(int k) const { return cluster_of_[static_cast<std::size_t>(k)]; }
  const std::vector<int>& cluster_assignment() const { return cluster_of_; }

  const Matrix& regressor_cov(int k) const { return ru_[static_cast<std::size_t>(k)]; }
  const Matrix& regressor_factor(int k) const { return ru_factor_[static_cast<std::size_t>(k)]; }
  const Vector& noise_var() const { return noise_var_; }
  const Vector& step_sizes() const { return mu_; }
  const ParameterMoments& moments() const { return moments_; }

  /// True when every node uses the same step size.
  bool uniform_step() const;

  /// NM stack of per-node means.
  Vector mean_stack() const;
  /// NM×NM covariance of the per-node parameter stack.
  Matrix parameter_cov() const;
  /// NM×NM second moment R_w = Cov + mean·mean^T.
  Matrix second_moment() const;
  /// M×M block R_{w,lk} = E w_l w_k^T.
  Matrix second_moment_block(int l, int k) const;
  /// N×N matrix of block traces Tr(R_{w,lk}).
  Matrix second_moment_traces() const;

  /// Returns a copy with the parameter moments replaced (non-stationary segments).
  SignalModel with_moments(ParameterMoments moments) const;

 private:
  int dim_;
  std::vector<int> cluster_of_;
  std::vector<Matrix> ru_;
  std::vector<Matrix> ru_factor_;  // lower Cholesky factor of R_{u,k}
  Vector noise_var_;
  Vector mu_;
  ParameterMoments moments_;
};

/// Draws cluster parameter realizations with the model's first/second moments
/// (jointly Gaussian, symmetric PSD square root of the covariance).
class ParameterSampler {
 public:
  explicit ParameterSampler(const SignalModel& model);
  /// M×N matrix, column k = w°_k; identical columns within a cluster.
  Matrix draw(Rng& rng) const;

 private:
  Matrix mean_;      // M×P
  Matrix sqrt_cov_;  // PM×PM
  std::vector<int> cluster_of_;
  int dim_;
};

struct Observation {
  double d;
  Vector u;
};

/// One synchronized round of observations: column k of `u` and entry k of `d`.
struct Observations {
  Vector d;
  Matrix u;
};

/// Single-node observation d = u^T w°_k + v with fresh Gaussian u and v.
Observation observe(const Matrix& realization, const SignalModel& model, int k, Rng& rng);

/// Observations for all nodes in node order.
Observations observe_all(const Matrix& realization, const SignalModel& model, Rng& rng);

/// Noise variances 10^(x/10) with x uniform on [low_db, high_db].
Vector noise_profile_uniform_db(int node_count, double low_db, double high_db, Rng& rng);

/// splitmix64-style mixing of (master seed, stream index) into a substream seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace maic
