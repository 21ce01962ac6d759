#include "maic/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace maic {

namespace {

constexpr double kPsdTol = 1e-10;

void require_psd(const Matrix& cov, const char* what) {
  if (cov.size() == 0) return;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (lo < -kPsdTol * scale) {
    std::ostringstream os;
    os.precision(6);
    os << what << " is not positive semidefinite (most negative eigenvalue " << lo << ")";
    throw ModelError(os.str());
  }
}

}  // namespace

ParameterMoments moments_from_correlation(const Matrix& cluster_mean, const Vector& sigma_w, double s_v,
                                          const Matrix& gamma) {
  const Eigen::Index m = cluster_mean.rows(), p = cluster_mean.cols();
  if (gamma.rows() != p || gamma.cols() != p) throw ModelError("correlation matrix must be P×P");
  if (sigma_w.size() != p) throw ModelError("need one parameter standard deviation per cluster");
  if (s_v < 0.0) throw ModelError("variance scale s_v must be nonnegative");
  for (Eigen::Index a = 0; a < p; ++a) {
    if (gamma(a, a) != 1.0) throw ModelError("correlation matrix must have unit diagonal");
    if (sigma_w(a) < 0.0) throw ModelError("parameter standard deviations must be nonnegative");
    for (Eigen::Index b = 0; b < p; ++b) {
      if (gamma(a, b) != gamma(b, a)) throw ModelError("correlation matrix must be symmetric");
      if (gamma(a, b) < -1.0 || gamma(a, b) > 1.0) throw ModelError("correlation coefficients must lie in [-1,1]");
    }
  }
  Matrix cov = Matrix::Zero(p * m, p * m);
  for (Eigen::Index b = 0; b < p; ++b)
    for (Eigen::Index a = 0; a < p; ++a)
      cov.block(a * m, b * m, m, m).diagonal().setConstant(s_v * gamma(a, b) * sigma_w(a) * sigma_w(b));
  require_psd(cov, "parameter covariance");
  return {cluster_mean, cov};
}

SignalModel::SignalModel(int dim, std::vector<int> cluster_of, std::vector<Matrix> regressor_cov, Vector noise_var,
                         Vector step_sizes, ParameterMoments moments)
    : dim_(dim),
      cluster_of_(std::move(cluster_of)),
      ru_(std::move(regressor_cov)),
      noise_var_(std::move(noise_var)),
      mu_(std::move(step_sizes)),
      moments_(std::move(moments)) {
  const int n = node_count();
  if (dim_ <= 0) throw ModelError("parameter dimension must be positive");
  if (static_cast<int>(ru_.size()) != n || noise_var_.size() != n || mu_.size() != n)
    throw ModelError("per-node profiles must all have one entry per node");
  const int p = cluster_count();
  if (moments_.cluster_mean.rows() != dim_) throw ModelError("cluster means must be M-dimensional");
  if (moments_.cluster_cov.rows() != p * dim_ || moments_.cluster_cov.cols() != p * dim_)
    throw ModelError("cluster covariance must be PM×PM");
  for (int c : cluster_of_)
    if (c < 0 || c >= p) throw ModelError("cluster id out of range for the parameter moments");
  require_psd(moments_.cluster_cov, "parameter covariance");
  ru_factor_.reserve(ru_.size());
  for (int k = 0; k < n; ++k) {
    const Matrix& r = ru_[static_cast<std::size_t>(k)];
    if (r.rows() != dim_ || r.cols() != dim_) throw ModelError("regressor covariance must be M×M");
    if (!r.isApprox(r.transpose(), 1e-12)) throw ModelError("regressor covariance of node " + std::to_string(k) + " is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(r, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw ModelError("regressor covariance of node " + std::to_string(k) + " is not positive definite");
    ru_factor_.push_back(r.llt().matrixL());
    if (!(noise_var_(k) >= 0.0)) throw ModelError("noise variance must be nonnegative");
    if (!(mu_(k) >= 0.0)) throw ModelError("step sizes must be nonnegative");
  }
}

bool SignalModel::uniform_step() const {
  return mu_.size() == 0 || (mu_.array() == mu_(0)).all();
}

Vector SignalModel::mean_stack() const {
  const int n = node_count();
  Vector out(n * dim_);
  for (int k = 0; k < n; ++k) out.segment(k * dim_, dim_) = moments_.cluster_mean.col(cluster_of(k));
  return out;
}

Matrix SignalModel::parameter_cov() const {
  const int n = node_count();
  Matrix out(n * dim_, n * dim_);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      out.block(l * dim_, k * dim_, dim_, dim_) =
          moments_.cluster_cov.block(cluster_of(l) * dim_, cluster_of(k) * dim_, dim_, dim_);
  return out;
}

Matrix SignalModel::second_moment() const {
  const Vector mean = mean_stack();
  return parameter_cov() + mean * mean.transpose();
}

Matrix SignalModel::second_moment_block(int l, int k) const {
  const int cl = cluster_of(l), ck = cluster_of(k);
  return moments_.cluster_cov.block(cl * dim_, ck * dim_, dim_, dim_) +
         moments_.cluster_mean.col(cl) * moments_.cluster_mean.col(ck).transpose();
}

Matrix SignalModel::second_moment_traces() const {
  const int n = node_count();
  Matrix out(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) out(l, k) = second_moment_block(l, k).trace();
  return out;
}

SignalModel SignalModel::with_moments(ParameterMoments moments) const {
  return SignalModel(dim_, cluster_of_, ru_, noise_var_, mu_, std::move(moments));
}

ParameterSampler::ParameterSampler(const SignalModel& model)
    : mean_(model.moments().cluster_mean), cluster_of_(model.cluster_assignment()), dim_(model.dim()) {
  const Matrix& cov = model.moments().cluster_cov;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()));
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  sqrt_cov_ = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Matrix ParameterSampler::draw(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index pm = sqrt_cov_.rows();
  Vector z(pm);
  for (Eigen::Index i = 0; i < pm; ++i) z(i) = normal(rng);
  const Vector stacked = sqrt_cov_ * z;
  const int n = static_cast<int>(cluster_of_.size());
  Matrix out(dim_, n);
  for (int k = 0; k < n; ++k) {
    const int p = cluster_of_[static_cast<std::size_t>(k)];
    out.col(k) = mean_.col(p) + stacked.segment(p * dim_, dim_);
  }
  return out;
}

Observation observe(const Matrix& realization, const SignalModel& model, int k, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int m = model.dim();
  Vector z(m);
  for (int j = 0; j < m; ++j) z(j) = normal(rng);
  Observation obs{0.0, model.regressor_factor(k) * z};
  const double v = std::sqrt(model.noise_var()(k)) * normal(rng);
  obs.d = obs.u.dot(realization.col(k)) + v;
  return obs;
}

Observations observe_all(const Matrix& realization, const SignalModel& model, Rng& rng) {
  const int n = model.node_count();
  Observations out{Vector(n), Matrix(model.dim(), n)};
  for (int k = 0; k < n; ++k) {
    Observation o = observe(realization, model, k, rng);
    out.d(k) = o.d;
    out.u.col(k) = o.u;
  }
  return out;
}

Vector noise_profile_uniform_db(int node_count, double low_db, double high_db, Rng& rng) {
  if (low_db > high_db) throw ModelError("noise dB interval must satisfy low <= high");
  Vector out(node_count);
  if (low_db == high_db) {
    out.setConstant(from_db(low_db));
    return out;
  }
  std::uniform_real_distribution<double> uni(low_db, high_db);
  for (int k = 0; k < node_count; ++k) out(k) = from_db(uni(rng));
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace maic
