#include "maic/strategies.hpp"

#include <algorithm>
#include <stdexcept>

namespace maic {

Matrix adapt(const Matrix& w_prev, const Observations& obs, const Vector& step_sizes) {
  Matrix psi = w_prev;
  for (Eigen::Index k = 0; k < w_prev.cols(); ++k) {
    const double err = obs.d(k) - obs.u.col(k).dot(w_prev.col(k));
    psi.col(k) += (step_sizes(k) * err) * obs.u.col(k);
  }
  return psi;
}

Matrix inter_cluster_combine(const ClusteredTopology& topo, const Matrix& psi, const Matrix& g) {
  check_inter_weights(topo, g);
  return inter_cluster_combine(psi, g);
}

Matrix intra_cluster_combine(const ClusteredTopology& topo, const Matrix& phi, const Matrix& a) {
  check_intra_weights(topo, a);
  return intra_cluster_combine(phi, a);
}

Matrix atc_step(const Matrix& w_prev, const Observations& obs, const Matrix& a, const Vector& step_sizes) {
  return intra_cluster_combine(adapt(w_prev, obs, step_sizes), a);
}

Matrix mdlms_step(const Matrix& w_prev, const Observations& obs, const Matrix& a, const Matrix& rho, double eta,
                  const Vector& step_sizes) {
  Matrix psi = adapt(w_prev, obs, step_sizes);
  // column k of W·rho - W·diag(1^T rho) is Σ_l rho(l,k)(w_l - w_k)
  const Matrix pull = w_prev * rho - w_prev * rho.colwise().sum().asDiagonal();
  for (Eigen::Index k = 0; k < psi.cols(); ++k) psi.col(k) += (step_sizes(k) * eta) * pull.col(k);
  return intra_cluster_combine(psi, a);
}

Matrix maic_step(const Matrix& w_prev, const Observations& obs, const Matrix& a, const Matrix& g,
                 const Vector& step_sizes) {
  return intra_cluster_combine(inter_cluster_combine(adapt(w_prev, obs, step_sizes), g), a);
}

AdaptiveState AdaptiveState::initial(int dim, int node_count) {
  return {Matrix::Zero(dim, node_count), Matrix::Zero(node_count, node_count), Matrix::Zero(node_count, node_count), 0};
}

void maic_adaptive_step(AdaptiveState& state, const ClusteredTopology& topo, const Observations& obs,
                        const Matrix& a, double alpha, double step, const QpOptions& qp_opts) {
  const int n = topo.node_count();
  const Vector mu = Vector::Constant(n, step);
  const Matrix& w_prev = state.w;
  const Matrix psi = adapt(w_prev, obs, mu);

  for (int k = 0; k < n; ++k) {
    const auto& hood = topo.neighborhood(k);
    auto update = [&](int l) {
      state.x_hat(l, k) = alpha * state.x_hat(l, k) + (1.0 - alpha) * (psi.col(l) - w_prev.col(k)).squaredNorm();
    };
    for (int l : hood.intra) update(l);
    for (int l : hood.inter) update(l);
  }

  Matrix g = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const SimplexQP qp = build_adaptive_qp(k, topo, w_prev, state.x_hat);
    Vector warm(qp.dim());
    for (int i = 0; i < qp.dim(); ++i) warm(i) = state.g_hat(qp.support[static_cast<std::size_t>(i)], k);
    const QpResult r = solve_simplex_qp(qp, qp_opts, warm);
    if (r.certified) {
      for (int i = 0; i < qp.dim(); ++i) g(qp.support[static_cast<std::size_t>(i)], k) = r.q(i);
    } else {
      g(k, k) = 1.0;
      ++state.qp_failures;
    }
  }
  state.g_hat = std::move(g);
  state.w = intra_cluster_combine(inter_cluster_combine(psi, state.g_hat), a);
}

void Strategy::set_cooperation_weights(const Matrix&) {
  throw std::logic_error("this strategy does not take fixed cooperation weights");
}

namespace {

class AtcStrategy final : public Strategy {
 public:
  AtcStrategy(int dim, Matrix a, Vector mu) : a_(std::move(a)), mu_(std::move(mu)), w_(Matrix::Zero(dim, a_.cols())) {}
  void reset() override { w_.setZero(); }
  void step(const Observations& obs) override { w_ = atc_step(w_, obs, a_, mu_); }
  const Matrix& estimates() const override { return w_; }
  Matrix cooperation_weights() const override { return Matrix::Identity(a_.rows(), a_.cols()); }

 private:
  Matrix a_;
  Vector mu_;
  Matrix w_;
};

class MdlmsStrategy final : public Strategy {
 public:
  MdlmsStrategy(int dim, Matrix a, Matrix rho, double eta, Vector mu)
      : a_(std::move(a)), rho_(std::move(rho)), eta_(eta), mu_(std::move(mu)), w_(Matrix::Zero(dim, a_.cols())) {}
  void reset() override { w_.setZero(); }
  void step(const Observations& obs) override { w_ = mdlms_step(w_, obs, a_, rho_, eta_, mu_); }
  const Matrix& estimates() const override { return w_; }
  Matrix cooperation_weights() const override {
    Matrix g = (rho_ * eta_) * mu_.asDiagonal();
    g.diagonal() = Vector::Ones(g.cols()) - g.colwise().sum().transpose();
    return g;
  }

 private:
  Matrix a_;
  Matrix rho_;
  double eta_;
  Vector mu_;
  Matrix w_;
};

class MaicStrategy final : public Strategy {
 public:
  MaicStrategy(ClusteredTopology topo, int dim, Matrix a, Matrix g, Vector mu)
      : topo_(std::move(topo)), a_(std::move(a)), g_(std::move(g)), mu_(std::move(mu)),
        w_(Matrix::Zero(dim, a_.cols())) {}
  void reset() override { w_.setZero(); }
  void step(const Observations& obs) override { w_ = maic_step(w_, obs, a_, g_, mu_); }
  const Matrix& estimates() const override { return w_; }
  Matrix cooperation_weights() const override { return g_; }
  void set_cooperation_weights(const Matrix& g) override {
    check_inter_weights(topo_, g);
    g_ = g;
  }

 private:
  ClusteredTopology topo_;
  Matrix a_;
  Matrix g_;
  Vector mu_;
  Matrix w_;
};

class AdaptiveMaicStrategy final : public Strategy {
 public:
  AdaptiveMaicStrategy(ClusteredTopology topo, int dim, Matrix a, double alpha, double mu, QpOptions opts)
      : topo_(std::move(topo)), dim_(dim), a_(std::move(a)), alpha_(alpha), mu_(mu), opts_(opts),
        state_(AdaptiveState::initial(dim, topo_.node_count())) {}
  void reset() override { state_ = AdaptiveState::initial(dim_, topo_.node_count()); }
  void step(const Observations& obs) override { maic_adaptive_step(state_, topo_, obs, a_, alpha_, mu_, opts_); }
  const Matrix& estimates() const override { return state_.w; }
  Matrix cooperation_weights() const override { return state_.g_hat; }
  long diagnostics_count() const override { return state_.qp_failures; }

 private:
  ClusteredTopology topo_;
  int dim_;
  Matrix a_;
  double alpha_;
  double mu_;
  QpOptions opts_;
  AdaptiveState state_;
};

void check_steps(const Vector& mu, const ClusteredTopology& topo) {
  if (mu.size() != topo.node_count()) throw TopologyError("step-size vector length does not match the node count");
  if ((mu.array() < 0.0).any()) throw TopologyError("step sizes must be nonnegative");
}

}  // namespace

std::unique_ptr<Strategy> make_atc(const ClusteredTopology& topo, int dim, Matrix a, Vector step_sizes) {
  check_intra_weights(topo, a);
  check_steps(step_sizes, topo);
  return std::make_unique<AtcStrategy>(dim, std::move(a), std::move(step_sizes));
}

std::unique_ptr<Strategy> make_mdlms(const ClusteredTopology& topo, int dim, Matrix a, Matrix rho, double eta,
                                     Vector step_sizes) {
  check_intra_weights(topo, a);
  check_regularization_weights(topo, rho);
  check_steps(step_sizes, topo);
  if (eta < 0.0) throw TopologyError("regularization strength eta must be nonnegative");
  return std::make_unique<MdlmsStrategy>(dim, std::move(a), std::move(rho), eta, std::move(step_sizes));
}

std::unique_ptr<Strategy> make_maic(const ClusteredTopology& topo, int dim, Matrix a, Matrix g, Vector step_sizes) {
  check_intra_weights(topo, a);
  check_inter_weights(topo, g);
  check_steps(step_sizes, topo);
  return std::make_unique<MaicStrategy>(topo, dim, std::move(a), std::move(g), std::move(step_sizes));
}

std::unique_ptr<Strategy> make_maic_adaptive(const ClusteredTopology& topo, int dim, Matrix a, double alpha,
                                             Vector step_sizes, QpOptions qp_opts) {
  check_intra_weights(topo, a);
  check_steps(step_sizes, topo);
  if (alpha < 0.0 || alpha > 1.0) throw TopologyError("moving-average coefficient alpha must lie in [0,1]");
  if (step_sizes.size() > 0 && !(step_sizes.array() == step_sizes(0)).all())
    throw TopologyError("adaptive weight selection assumes a uniform step size");
  const double mu = step_sizes.size() > 0 ? step_sizes(0) : 0.0;
  return std::make_unique<AdaptiveMaicStrategy>(topo, dim, std::move(a), alpha, mu, qp_opts);
}

}  // namespace maic
