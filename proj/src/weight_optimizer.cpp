#include "maic/weight_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace maic {

namespace {

// Largest eigenvalue of P X P with P the centering projector, i.e. the
// curvature of x -> x^T X x along directions with zero coordinate sum.
double tangent_curvature(const Matrix& x) {
  const Eigen::Index n = x.rows();
  if (n <= 1) return 0.0;
  Matrix centered = x;
  centered.rowwise() -= centered.colwise().mean();
  centered.colwise() -= centered.rowwise().mean();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (centered + centered.transpose()), Eigen::EigenvaluesOnly);
  return std::max(es.eigenvalues().maxCoeff(), 0.0);
}

double largest_eigenvalue(const Matrix& x) {
  if (x.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (x + x.transpose()), Eigen::EigenvaluesOnly);
  return std::max(es.eigenvalues().maxCoeff(), 0.0);
}

Vector second_moment_diag_factor(const SignalModel& model) {
  const int n = model.node_count();
  Vector out(n);
  for (int k = 0; k < n; ++k) out(k) = model.noise_var()(k) * model.regressor_cov(k).trace();
  return out;
}

}  // namespace

double simplex_kkt_residual(const Vector& x, const Vector& grad) {
  double support_min = std::numeric_limits<double>::infinity();
  double support_max = -std::numeric_limits<double>::infinity();
  double off_min = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) > 0.0) {
      support_min = std::min(support_min, grad(i));
      support_max = std::max(support_max, grad(i));
    } else {
      off_min = std::min(off_min, grad(i));
    }
  }
  if (!std::isfinite(support_min)) return std::numeric_limits<double>::infinity();
  double residual = support_max - support_min;
  if (std::isfinite(off_min)) residual = std::max(residual, support_min - off_min);
  return residual;
}

QpResult solve_simplex_qp(const SimplexQP& qp, const QpOptions& opts, const std::optional<Vector>& warm_start) {
  const int n = qp.dim();
  QpResult res;
  if (n == 1) {
    res.q = Vector::Ones(1);
    res.objective = qp.objective(res.q);
    res.certified = true;
    return res;
  }
  Matrix q = qp.q;
  q.diagonal().array() += opts.ridge;
  const double lipschitz = std::max(2.0 * tangent_curvature(q), std::numeric_limits<double>::min());
  const double step = 1.0 / lipschitz;

  Vector x = warm_start && warm_start->size() == n ? project_simplex(*warm_start)
                                                    : Vector(Vector::Constant(n, 1.0 / n));
  Vector y = x;
  Vector grad = 2.0 * (q * x - qp.h);
  double t = 1.0;
  res.kkt_residual = simplex_kkt_residual(x, grad);
  int it = 0;
  while (res.kkt_residual > opts.tol && it < opts.max_iters) {
    ++it;
    const Vector grad_y = 2.0 * (q * y - qp.h);
    Vector x_next = project_simplex(y - step * grad_y);
    const Vector delta = x_next - x;
    if (grad_y.dot(delta) > 0.0) {
      // momentum points uphill: restart from the plain projected step at x
      t = 1.0;
      x_next = project_simplex(x - step * grad);
      y = x_next;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = x_next + ((t - 1.0) / t_next) * delta;
      t = t_next;
    }
    x = std::move(x_next);
    grad = 2.0 * (q * x - qp.h);
    res.kkt_residual = simplex_kkt_residual(x, grad);
  }
  res.q = std::move(x);
  res.iterations = it;
  res.certified = res.kkt_residual <= opts.tol;
  res.objective = qp.objective(res.q);
  return res;
}

SimplexQP build_local_qp(int k, const SignalModel& model, const ClusteredTopology& topo) {
  const auto& support = topo.neighborhood(k).inter_plus;
  const int n = static_cast<int>(support.size());
  const double mu = model.step_sizes()(k);
  SimplexQP qp{Matrix(n, n), Vector(n), support};
  for (int a = 0; a < n; ++a) {
    const int l = support[static_cast<std::size_t>(a)];
    qp.h(a) = model.second_moment_block(l, k).trace();
    for (int b = 0; b < n; ++b) qp.q(a, b) = model.second_moment_block(l, support[static_cast<std::size_t>(b)]).trace();
    qp.q(a, a) += mu * mu * model.noise_var()(l) * model.regressor_cov(l).trace();
  }
  return qp;
}

SimplexQP build_adaptive_qp(int k, const ClusteredTopology& topo, const Matrix& w_prev, const Matrix& x_hat) {
  const auto& support = topo.neighborhood(k).inter_plus;
  const int n = static_cast<int>(support.size());
  Matrix w_hat(w_prev.rows(), n);
  Vector omega_a(n);
  for (int a = 0; a < n; ++a) {
    const int l = support[static_cast<std::size_t>(a)];
    w_hat.col(a) = w_prev.col(l);
    omega_a(a) = x_hat(l, k);
  }
  SimplexQP qp{w_hat.transpose() * w_hat, w_hat.transpose() * w_prev.col(k), support};
  qp.q.diagonal() += omega_a;
  return qp;
}

void require_uniform_step(const SignalModel& model) {
  if (!model.uniform_step()) throw ModelError("weight optimization assumes a uniform step size across nodes");
}

WeightSolution solve_p2_all_nodes(const SignalModel& model, const ClusteredTopology& topo, const QpOptions& opts) {
  require_uniform_step(model);
  const int n = topo.node_count();
  WeightSolution sol;
  sol.g = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const SimplexQP qp = build_local_qp(k, model, topo);
    QpResult r = solve_simplex_qp(qp, opts);
    sol.iterations = std::max(sol.iterations, r.iterations);
    if (!r.certified) {
      sol.certified = false;
      sol.fallback_nodes.push_back(k);
      sol.g(k, k) = 1.0;
      r.q = Vector::Zero(qp.dim());
      r.q(std::find(qp.support.begin(), qp.support.end(), k) - qp.support.begin()) = 1.0;
      r.objective = qp.objective(r.q);
    } else {
      for (int a = 0; a < qp.dim(); ++a) sol.g(qp.support[static_cast<std::size_t>(a)], k) = r.q(a);
      sol.kkt_residual = std::max(sol.kkt_residual, r.kkt_residual);
    }
    sol.objective += r.objective;
  }
  return sol;
}

double CentralizedQP::objective(const Matrix& g) const {
  return (g.transpose() * qbar * g * c).trace() - 2.0 * (g.transpose() * rbar * c).trace();
}

Matrix CentralizedQP::gradient(const Matrix& g) const { return 2.0 * (qbar * g * c - rbar * c); }

CentralizedQP build_centralized_qp(const SignalModel& model, const Matrix& a) {
  require_uniform_step(model);
  const double mu = model.step_sizes()(0);
  CentralizedQP qp;
  qp.rbar = model.second_moment_traces();
  qp.qbar = qp.rbar;
  qp.qbar.diagonal() += mu * mu * second_moment_diag_factor(model);
  qp.c = a * a.transpose();
  return qp;
}

double centralized_objective_expanded(const SignalModel& model, const Matrix& a, const Matrix& g) {
  require_uniform_step(model);
  const int m = model.dim(), n = model.node_count();
  const double mu = model.step_sizes()(0);
  const Matrix big_a = kron_expand(a, m);
  const Matrix big_g = kron_expand(g, m);
  Matrix s = Matrix::Zero(n * m, n * m);
  for (int k = 0; k < n; ++k) s.block(k * m, k * m, m, m) = model.noise_var()(k) * model.regressor_cov(k);
  const Matrix rw = model.second_moment();
  const Matrix aat = big_a * big_a.transpose();
  const Matrix kmat = kron(aat, Matrix(mu * mu * s + rw));
  const Vector kappa = 2.0 * vec(rw * aat);
  const Vector y = vec(big_g);
  return y.dot(kmat * y) - kappa.dot(y);
}

WeightSolution solve_p1(const SignalModel& model, const ClusteredTopology& topo, const Matrix& a, const QpOptions& opts) {
  check_intra_weights(topo, a);
  CentralizedQP qp = build_centralized_qp(model, a);
  const int n = topo.node_count();
  // ridge·||G||_F² keeps the problem strictly convex when A A^T is singular
  auto gradient = [&](const Matrix& g) -> Matrix { return qp.gradient(g) + 2.0 * opts.ridge * g; };
  const double lipschitz = std::max(2.0 * tangent_curvature(qp.qbar) * largest_eigenvalue(qp.c) + 2.0 * opts.ridge,
                                    std::numeric_limits<double>::min());
  const double step = 1.0 / lipschitz;

  auto project = [&](const Matrix& z) {
    Matrix out = Matrix::Zero(n, n);
    for (int k = 0; k < n; ++k) {
      const auto& support = topo.neighborhood(k).inter_plus;
      Vector col(static_cast<Eigen::Index>(support.size()));
      for (std::size_t i = 0; i < support.size(); ++i) col(static_cast<Eigen::Index>(i)) = z(support[i], k);
      const Vector p = project_simplex(col);
      for (std::size_t i = 0; i < support.size(); ++i) out(support[i], k) = p(static_cast<Eigen::Index>(i));
    }
    return out;
  };
  auto residual = [&](const Matrix& g, const Matrix& grad) {
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      const auto& support = topo.neighborhood(k).inter_plus;
      Vector x(static_cast<Eigen::Index>(support.size())), gr(static_cast<Eigen::Index>(support.size()));
      for (std::size_t i = 0; i < support.size(); ++i) {
        x(static_cast<Eigen::Index>(i)) = g(support[i], k);
        gr(static_cast<Eigen::Index>(i)) = grad(support[i], k);
      }
      if (support.size() > 1) worst = std::max(worst, simplex_kkt_residual(x, gr));
    }
    return worst;
  };

  Matrix x = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const auto& support = topo.neighborhood(k).inter_plus;
    for (int l : support) x(l, k) = 1.0 / static_cast<double>(support.size());
  }
  Matrix y = x;
  Matrix grad = gradient(x);
  double t = 1.0;
  WeightSolution sol;
  sol.kkt_residual = residual(x, grad);
  int it = 0;
  while (sol.kkt_residual > opts.tol && it < opts.max_iters) {
    ++it;
    const Matrix grad_y = gradient(y);
    Matrix x_next = project(y - step * grad_y);
    const Matrix delta = x_next - x;
    if ((grad_y.array() * delta.array()).sum() > 0.0) {
      t = 1.0;
      x_next = project(x - step * grad);
      y = x_next;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = x_next + ((t - 1.0) / t_next) * delta;
      t = t_next;
    }
    x = std::move(x_next);
    grad = gradient(x);
    sol.kkt_residual = residual(x, grad);
  }
  sol.g = std::move(x);
  sol.iterations = it;
  sol.certified = sol.kkt_residual <= opts.tol;
  sol.objective = qp.objective(sol.g);
  return sol;
}

}  // namespace maic
