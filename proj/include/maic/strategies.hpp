#pragma once

#include "maic/signal_model.hpp"
#include "maic/topology.hpp"
#include "maic/weight_optimizer.hpp"

#include <memory>
#include <string>

namespace maic {

// Estimate stacks are M×N matrices: column k holds node k's M-vector, so the
// NM stack of the analysis is the column-major vectorization. With this
// layout φ = Ψ·G and w = Φ·A.

/// ψ_k = w_k + μ_k u_k (d_k - u_k^T w_k) for every node.
Matrix adapt(const Matrix& w_prev, const Observations& obs, const Vector& step_sizes);

/// φ_k = Σ_l g(l,k) ψ_l.
inline Matrix inter_cluster_combine(const Matrix& psi, const Matrix& g) { return psi * g; }

/// w_k = Σ_l a(l,k) φ_l.
inline Matrix intra_cluster_combine(const Matrix& phi, const Matrix& a) { return phi * a; }

/// Validating overloads: reject weights that violate the support/stochasticity rules.
Matrix inter_cluster_combine(const ClusteredTopology& topo, const Matrix& psi, const Matrix& g);
Matrix intra_cluster_combine(const ClusteredTopology& topo, const Matrix& phi, const Matrix& a);

/// One ATC iteration: adapt, then intra-cluster combine.
Matrix atc_step(const Matrix& w_prev, const Observations& obs, const Matrix& a, const Vector& step_sizes);

/// One multitask diffusion LMS iteration with l2 coupling η·ρ between clusters
/// inside the adaptation step.
Matrix mdlms_step(const Matrix& w_prev, const Observations& obs, const Matrix& a, const Matrix& rho, double eta,
                  const Vector& step_sizes);

/// One MAIC iteration with fixed cooperation weights: adapt, inter-cluster
/// cooperate, intra-cluster combine.
Matrix maic_step(const Matrix& w_prev, const Observations& obs, const Matrix& a, const Matrix& g,
                 const Vector& step_sizes);

/// Running state of the adaptive weight selection.
struct AdaptiveState {
  Matrix w;      // M×N current estimates
  Matrix x_hat;  // N×N, x_hat(l,k) = node k's moving average for neighbor l
  Matrix g_hat;  // N×N current cooperation weights
  long qp_failures = 0;

  static AdaptiveState initial(int dim, int node_count);
};

/// One iteration of MAIC with adaptively selected cooperation weights. The
/// moving averages are maintained for every l in N_{C,k} ∪ N_{I,k}^+; the
/// N_{I,k}^+ entries feed Omega_a. Nodes whose local solve is not certified
/// use e_k for this iteration.
void maic_adaptive_step(AdaptiveState& state, const ClusteredTopology& topo, const Observations& obs,
                        const Matrix& a, double alpha, double step, const QpOptions& qp_opts = {});

/// Stateful wrapper used by the experiment harness.
class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual void reset() = 0;
  virtual void step(const Observations& obs) = 0;
  virtual const Matrix& estimates() const = 0;
  /// Inter-cluster weights currently in use (identity for ATC, mapped weights for MDLMS).
  virtual Matrix cooperation_weights() const = 0;
  /// Replaces fixed cooperation weights without touching the estimates. Only
  /// fixed-weight MAIC supports this.
  virtual void set_cooperation_weights(const Matrix& g);
  virtual long diagnostics_count() const { return 0; }
};

std::unique_ptr<Strategy> make_atc(const ClusteredTopology& topo, int dim, Matrix a, Vector step_sizes);
std::unique_ptr<Strategy> make_mdlms(const ClusteredTopology& topo, int dim, Matrix a, Matrix rho, double eta,
                                     Vector step_sizes);
std::unique_ptr<Strategy> make_maic(const ClusteredTopology& topo, int dim, Matrix a, Matrix g, Vector step_sizes);
std::unique_ptr<Strategy> make_maic_adaptive(const ClusteredTopology& topo, int dim, Matrix a, double alpha,
                                             Vector step_sizes, QpOptions qp_opts = {});

}  // namespace maic
