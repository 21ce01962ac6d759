#pragma once

#include "maic/signal_model.hpp"
#include "maic/topology.hpp"

#include <optional>
#include <string>
#include <vector>

namespace maic {

/// min q^T Q q - 2 h^T q over the probability simplex. `support` maps each
/// coordinate to the node id it weights.
struct SimplexQP {
  Matrix q;
  Vector h;
  std::vector<int> support;

  int dim() const { return static_cast<int>(h.size()); }
  double objective(const Vector& x) const { return x.dot(q * x) - 2.0 * h.dot(x); }
};

struct QpOptions {
  double tol = 1e-8;
  int max_iters = 10000;
  double ridge = 1e-12;
};

struct QpResult {
  Vector q;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool certified = false;
};

/// KKT residual of a simplex point for gradient `grad`: the spread of the
/// gradient over the support plus any amount by which an off-support
/// coordinate undercuts the support minimum.
double simplex_kkt_residual(const Vector& x, const Vector& grad);

/// Accelerated projected gradient with adaptive restart. The step is 1/L with L
/// the Lipschitz constant of the gradient restricted to the simplex's tangent
/// space {1^T d = 0}. `warm_start` is projected onto the simplex first.
QpResult solve_simplex_qp(const SimplexQP& qp, const QpOptions& opts = {},
                          const std::optional<Vector>& warm_start = std::nullopt);

/// Local problem of node k from exact moments: Omega_a = diag(mu²σ²_v Tr R_u),
/// Omega_b(l,m) = Tr R_{w,lm}, h(l) = Tr R_{w,lk} over l in N_{I,k}^+.
SimplexQP build_local_qp(int k, const SignalModel& model, const ClusteredTopology& topo);

/// Local problem of node k from running estimates: columns of `w_prev` are the
/// current estimates, `x_hat(l,k)` the moving averages of squared innovations.
SimplexQP build_adaptive_qp(int k, const ClusteredTopology& topo, const Matrix& w_prev, const Matrix& x_hat);

/// Outcome of a weight optimization over all columns of G.
struct WeightSolution {
  Matrix g;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool certified = true;
  std::vector<int> fallback_nodes;  // columns replaced by e_k after a failed solve
};

/// Throws ModelError if step sizes are not uniform.
void require_uniform_step(const SignalModel& model);

/// Solves every node's local problem; non-certified columns fall back to e_k.
WeightSolution solve_p2_all_nodes(const SignalModel& model, const ClusteredTopology& topo, const QpOptions& opts = {});

/// Trace-compressed centralized objective f(G) = Tr(G^T Qbar G C) - 2 Tr(G^T Rbar C)
/// with C = A A^T, Qbar = mu² diag(σ²_v Tr R_u) + Rbar, Rbar the block traces of R_w.
struct CentralizedQP {
  Matrix qbar;
  Matrix rbar;
  Matrix c;
  double objective(const Matrix& g) const;
  Matrix gradient(const Matrix& g) const;
};

CentralizedQP build_centralized_qp(const SignalModel& model, const Matrix& a);

/// Full (NM)²-dimensional objective vec(𝒢)^T 𝒦 vec(𝒢) - κ^T vec(𝒢); used to
/// cross-check the trace-compressed form.
double centralized_objective_expanded(const SignalModel& model, const Matrix& a, const Matrix& g);

/// Projected-gradient solve of the centralized problem over the product of
/// per-column simplices supported on N_{I,k}^+.
WeightSolution solve_p1(const SignalModel& model, const ClusteredTopology& topo, const Matrix& a,
                        const QpOptions& opts = {});

}  // namespace maic
