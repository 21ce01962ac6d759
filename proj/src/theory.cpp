#include "maic/theory.hpp"

#include <cmath>
#include <sstream>

namespace maic {

namespace {

void require_cap(const SignalModel& model, int cap) {
  const int nm = model.node_count() * model.dim();
  if (nm > cap) {
    std::ostringstream os;
    os << "NM = " << nm << " exceeds the moment-matrix cap of " << cap
       << "; reduce N·M or raise the cap (only rho(B)-based checks are available)";
    throw TheoryError(os.str());
  }
}

void accumulate_kron_transpose(Matrix& acc, const Matrix& b) {
  const Eigen::Index n = b.rows();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = b(j, i);  // (B^T)(i,j)
      if (s == 0.0) continue;
      acc.block(i * n, j * n, n, n).noalias() += s * b.transpose();
    }
}

}  // namespace

MomentMatrices build_moments(const SignalModel& model) {
  const int n = model.node_count(), m = model.dim();
  MomentMatrices mm{Matrix::Zero(n * m, n * m), Matrix::Zero(n * m, n * m), Matrix::Zero(n * m, n * m)};
  for (int k = 0; k < n; ++k) {
    mm.ru.block(k * m, k * m, m, m) = model.regressor_cov(k);
    mm.mcal.block(k * m, k * m, m, m).diagonal().setConstant(model.step_sizes()(k));
    mm.s.block(k * m, k * m, m, m) = model.noise_var()(k) * model.regressor_cov(k);
  }
  return mm;
}

Matrix build_b(const Matrix& a, const Matrix& g, const SignalModel& model) {
  const int n = model.node_count(), m = model.dim();
  if (a.rows() != n || a.cols() != n || g.rows() != n || g.cols() != n)
    throw TheoryError("weight matrices must be N×N for the signal model's node count");
  const MomentMatrices mm = build_moments(model);
  const Matrix ag = kron_expand(Matrix(g * a), m);  // (𝒢𝒜), so 𝒜^T𝒢^T = ag^T
  return ag.transpose() * (Matrix::Identity(n * m, n * m) - mm.mcal * mm.ru);
}

bool MeanStabilityBound::all_stable() const {
  for (bool s : stable)
    if (!s) return false;
  return true;
}

MeanStabilityBound mean_stability_bound(const SignalModel& model) {
  const int n = model.node_count();
  MeanStabilityBound out{Vector(n), std::vector<bool>(static_cast<std::size_t>(n))};
  for (int k = 0; k < n; ++k) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(model.regressor_cov(k), Eigen::EigenvaluesOnly);
    out.bound(k) = 2.0 / es.eigenvalues().maxCoeff();
    out.stable[static_cast<std::size_t>(k)] = model.step_sizes()(k) < out.bound(k);
  }
  return out;
}

Vector mean_drive(const Matrix& a, const Matrix& g, const SignalModel& model) {
  const int n = model.node_count(), m = model.dim();
  const Matrix big_a = kron_expand(a, m);
  const Matrix i_minus_g = Matrix::Identity(n * m, n * m) - kron_expand(g, m);
  return big_a.transpose() * i_minus_g.transpose() * model.mean_stack();
}

std::vector<Vector> mean_error_trajectory(const Matrix& b, const Vector& r, const Vector& start, int steps) {
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  out.push_back(start);
  for (int i = 0; i < steps; ++i) out.push_back(b * out.back() + r);
  return out;
}

Matrix build_f(const Matrix& b, int cap) {
  if (b.rows() > cap) {
    std::ostringstream os;
    os << "NM = " << b.rows() << " exceeds the moment-matrix cap of " << cap << "; reduce N·M";
    throw TheoryError(os.str());
  }
  const Matrix bt = b.transpose();
  return kron(bt, bt);
}

EEstimate estimate_e(const Matrix& a, const Matrix& g, const SignalModel& model, int sample_count, Rng& rng, int cap) {
  require_cap(model, cap);
  if (sample_count < 1) throw TheoryError("need at least one sample to estimate E");
  const int n = model.node_count(), m = model.dim(), nm = n * m;
  const Matrix agt = kron_expand(Matrix(g * a), m).transpose();
  const Vector& mu = model.step_sizes();
  std::normal_distribution<double> normal(0.0, 1.0);

  // batch sums cost (NM)^4 doubles each; keep memory bounded for larger NM
  const int batches = nm <= 20 ? std::min(sample_count, 20) : 1;
  std::vector<Matrix> batch_sum(static_cast<std::size_t>(batches), Matrix::Zero(nm * nm, nm * nm));
  std::vector<int> batch_count(static_cast<std::size_t>(batches), 0);
  Matrix ru_i = Matrix::Zero(nm, nm);
  Vector z(m);
  for (int s = 0; s < sample_count; ++s) {
    for (int k = 0; k < n; ++k) {
      for (int j = 0; j < m; ++j) z(j) = normal(rng);
      const Vector u = model.regressor_factor(k) * z;
      ru_i.block(k * m, k * m, m, m) = mu(k) * u * u.transpose();
    }
    const Matrix bi = agt * (Matrix::Identity(nm, nm) - ru_i);
    const int slot = s % batches;
    accumulate_kron_transpose(batch_sum[static_cast<std::size_t>(slot)], bi);
    ++batch_count[static_cast<std::size_t>(slot)];
  }

  EEstimate out;
  out.e_hat = Matrix::Zero(nm * nm, nm * nm);
  for (const auto& bs : batch_sum) out.e_hat += bs;
  out.e_hat /= static_cast<double>(sample_count);
  out.rho = spectral_radius(out.e_hat);

  if (batches > 1) {
    std::vector<Matrix> means;
    for (int b = 0; b < batches; ++b)
      means.push_back(batch_sum[static_cast<std::size_t>(b)] / static_cast<double>(batch_count[static_cast<std::size_t>(b)]));
    std::uniform_int_distribution<int> pick(0, batches - 1);
    const int replicates = 16;
    double sum = 0.0, sum_sq = 0.0;
    for (int r = 0; r < replicates; ++r) {
      Matrix resampled = Matrix::Zero(nm * nm, nm * nm);
      for (int b = 0; b < batches; ++b) resampled += means[static_cast<std::size_t>(pick(rng))];
      const double rho = spectral_radius(resampled / static_cast<double>(batches));
      sum += rho;
      sum_sq += rho * rho;
    }
    const double mean = sum / replicates;
    out.rho_spread = std::sqrt(std::max(0.0, sum_sq / replicates - mean * mean));
  }
  return out;
}

MsdTerms msd_terms(const Matrix& a, const Matrix& g, const SignalModel& model, int cap) {
  require_cap(model, cap);
  const int n = model.node_count(), m = model.dim(), nm = n * m;
  const Matrix b = build_b(a, g, model);
  if (spectral_radius(b) >= 1.0) throw TheoryError("mean-unstable configuration (rho(B) >= 1)");
  const MomentMatrices mm = build_moments(model);
  const Matrix big_a = kron_expand(a, m);
  const Matrix big_g = kron_expand(g, m);
  const Matrix ga = big_g * big_a;
  const Matrix noise = ga.transpose() * mm.mcal * mm.s * mm.mcal * ga;
  const Matrix i_minus_g = Matrix::Identity(nm, nm) - big_g;
  const Matrix drive = big_a.transpose() * i_minus_g.transpose() * model.second_moment() * i_minus_g * big_a;

  MsdTerms t;
  t.f_a = vec(noise);
  t.f_b = vec(drive);
  // (P ⊗ I) vec(X) = vec(X P^T) with P = B (I - B)^{-1}, P^T = (I - B)^{-T} B^T
  const Matrix pt = Matrix(Matrix::Identity(nm, nm) - b).transpose().partialPivLu().solve(Matrix(b.transpose()));
  t.f_c = 2.0 * vec(Matrix(drive * pt));
  return t;
}

TheoryReport steady_state_msd(const Matrix& a, const Matrix& g, const SignalModel& model, int cap) {
  require_cap(model, cap);
  const int n = model.node_count(), m = model.dim(), nm = n * m;
  TheoryReport rep;
  const Matrix b = build_b(a, g, model);
  rep.rho_b = spectral_radius(b);
  rep.mean_stable = rep.rho_b < 1.0;
  if (!rep.mean_stable) throw TheoryError("mean-unstable configuration (rho(B) >= 1)");
  const Matrix f = build_f(b, cap);
  rep.rho_f = spectral_radius(f);
  if (rep.rho_f >= 1.0) throw TheoryError("mean-square-unstable configuration (rho(F) >= 1)");
  rep.terms = msd_terms(a, g, model, cap);

  const Matrix lhs = Matrix::Identity(nm * nm, nm * nm) - f;
  const int p = model.cluster_count();
  Matrix rhs = Matrix::Zero(nm * nm, 1 + p);
  rhs.col(0) = vec(Matrix(Matrix::Identity(nm, nm)));
  std::vector<int> sizes(static_cast<std::size_t>(p), 0);
  for (int k = 0; k < n; ++k) {
    const int c = model.cluster_of(k);
    ++sizes[static_cast<std::size_t>(c)];
    for (int d = 0; d < m; ++d) {
      const int idx = k * m + d;
      rhs(idx * nm + idx, 1 + c) = 1.0;
    }
  }
  const Eigen::PartialPivLU<Matrix> lu(lhs);
  const Matrix x = lu.solve(rhs);
  const double residual = (lhs * x - rhs).norm() / rhs.norm();
  if (!(residual <= 1e-10)) {
    std::ostringstream os;
    os << "steady-state solve residual " << residual << " exceeds 1e-10";
    throw TheoryError(os.str());
  }
  const Vector f_ab = rep.terms.f_a + rep.terms.f_b;
  const Vector f_all = f_ab + rep.terms.f_c;
  rep.zeta = f_all.dot(x.col(0)) / n;
  rep.zeta_hat = f_ab.dot(x.col(0)) / n;
  for (int c = 0; c < p; ++c) {
    const double size = sizes[static_cast<std::size_t>(c)];
    rep.cluster_zeta.push_back(f_all.dot(x.col(1 + c)) / size);
    rep.cluster_zeta_hat.push_back(f_ab.dot(x.col(1 + c)) / size);
  }
  return rep;
}

}  // namespace maic
