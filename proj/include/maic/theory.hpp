#pragma once

#include "maic/signal_model.hpp"

#include <stdexcept>
#include <vector>

namespace maic {

/// Raised when a configuration is outside the region where the steady-state
/// expressions exist (mean or mean-square unstable, or too large).
class TheoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Largest NM for which the (NM)²-sized objects are formed.
inline constexpr int kDefaultMomentCap = 64;

/// Block-diagonal moment matrices of the data model.
struct MomentMatrices {
  Matrix ru;    // diag(R_{u,k})
  Matrix mcal;  // diag(mu_k I_M)
  Matrix s;     // diag(σ²_{v,k} R_{u,k})
};

MomentMatrices build_moments(const SignalModel& model);

/// B = 𝒜^T 𝒢^T (I - 𝓜 R_u).
Matrix build_b(const Matrix& a, const Matrix& g, const SignalModel& model);

struct MeanStabilityBound {
  Vector bound;              // 2 / λ_max(R_{u,k})
  std::vector<bool> stable;  // mu_k < bound_k
  bool all_stable() const;
};

MeanStabilityBound mean_stability_bound(const SignalModel& model);

/// r = 𝒜^T (I - 𝒢)^T E w°.
Vector mean_drive(const Matrix& a, const Matrix& g, const SignalModel& model);

/// Iterates E w̃_i = B E w̃_{i-1} + r for `steps` steps; element 0 is the start.
std::vector<Vector> mean_error_trajectory(const Matrix& b, const Vector& r, const Vector& start, int steps);

/// F = B^T ⊗ B^T; rejects NM above `cap`.
Matrix build_f(const Matrix& b, int cap = kDefaultMomentCap);

/// Monte-Carlo estimate of E[B_i^T ⊗ B_i^T] over Gaussian regressor draws.
struct EEstimate {
  Matrix e_hat;
  double rho = 0.0;
  double rho_spread = 0.0;  // bootstrap standard deviation of rho over sample batches
};

EEstimate estimate_e(const Matrix& a, const Matrix& g, const SignalModel& model, int sample_count, Rng& rng,
                     int cap = kDefaultMomentCap);

struct MsdTerms {
  Vector f_a;
  Vector f_b;
  Vector f_c;  // steady-state cross term 2[B(I-B)^{-1} ⊗ I] f_b
};

/// Throws TheoryError("mean-unstable configuration") if ρ(B) >= 1.
MsdTerms msd_terms(const Matrix& a, const Matrix& g, const SignalModel& model, int cap = kDefaultMomentCap);

struct TheoryReport {
  double rho_b = 0.0;
  double rho_f = 0.0;
  bool mean_stable = false;
  double zeta = 0.0;      // with the cross term
  double zeta_hat = 0.0;  // cross term dropped
  std::vector<double> cluster_zeta;
  std::vector<double> cluster_zeta_hat;
  MsdTerms terms;
};

/// Steady-state network MSD and its proxy. The linear system (I - F) x = vec(I)
/// is solved by LU with a relative residual check of 1e-10. Throws TheoryError
/// ("mean-square-unstable configuration") if ρ(F) >= 1.
TheoryReport steady_state_msd(const Matrix& a, const Matrix& g, const SignalModel& model,
                              int cap = kDefaultMomentCap);

}  // namespace maic
