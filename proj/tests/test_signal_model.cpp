#include "maic/scenario.hpp"
#include "maic/signal_model.hpp"

#include <doctest.h>

#include <string>

using namespace maic;

namespace {

Matrix correlation3(double g12, double g13, double g23) {
  Matrix c(3, 3);
  c << 1.0, g12, g13, g12, 1.0, g23, g13, g23, 1.0;
  return c;
}

SignalModel small_model(double s_v) {
  const Matrix mean = Matrix::Constant(2, 3, 0.7);
  ParameterMoments mom = moments_from_correlation(mean, Vector::Ones(3), s_v, correlation3(0.9, 0.5, 0.5));
  std::vector<Matrix> ru(4, Matrix::Identity(2, 2));
  return SignalModel(2, {0, 0, 1, 2}, ru, Vector::Constant(4, 0.01), Vector::Constant(4, 0.05), mom);
}

}  // namespace

TEST_CASE("second moment blocks") {
  SUBCASE("zero variance leaves the mean outer product") {
    const SignalModel m = small_model(0.0);
    const Matrix expected = Matrix::Constant(2, 2, 0.49);
    CHECK((m.second_moment_block(0, 2) - expected).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((m.second_moment_block(3, 3) - expected).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("correlated clusters") {
    const SignalModel m = small_model(0.01 * 0.01);
    const Matrix expected = 9e-5 * Matrix::Identity(2, 2) + Matrix::Constant(2, 2, 0.49);
    CHECK((m.second_moment_block(0, 2) - expected).cwiseAbs().maxCoeff() <= 1e-15);
    // nodes in the same cluster share the parameter, so the block carries the full variance
    const Matrix same = 1e-4 * Matrix::Identity(2, 2) + Matrix::Constant(2, 2, 0.49);
    CHECK((m.second_moment_block(0, 1) - same).cwiseAbs().maxCoeff() <= 1e-15);
    const Matrix rw = m.second_moment();
    CHECK(rw.rows() == 8);
    CHECK((rw - rw.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((rw.block(0, 4, 2, 2) - expected).cwiseAbs().maxCoeff() <= 1e-15);
    const Matrix traces = m.second_moment_traces();
    CHECK(traces(0, 2) == doctest::Approx(2 * 9e-5 + 0.98));
  }
  SUBCASE("reference correlation is PSD") {
    CHECK_NOTHROW(moments_from_correlation(Matrix::Constant(1, 3, 1.0), Vector::Ones(3), 1.0,
                                           correlation3(0.9, 0.5, 0.5)));
  }
}

TEST_CASE("non-PSD correlation is rejected with its eigenvalue") {
  try {
    moments_from_correlation(Matrix::Constant(1, 3, 1.0), Vector::Ones(3), 1.0, correlation3(0.9, 0.9, -0.9));
    FAIL("expected rejection");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("eigenvalue") != std::string::npos);
  }
  CHECK_THROWS_AS(moments_from_correlation(Matrix::Constant(1, 3, 1.0), Vector::Ones(3), 1.0,
                                           correlation3(1.5, 0.0, 0.0)),
                  ModelError);
}

TEST_CASE("parameter sampler") {
  SUBCASE("zero covariance returns the mean") {
    const SignalModel m = small_model(0.0);
    ParameterSampler sampler(m);
    Rng rng(1);
    const Matrix w = sampler.draw(rng);
    CHECK((w.array() == 0.7).all());
  }
  SUBCASE("moments of the reference model") {
    const Scenario sc = preset_a();
    const SignalModel m = sc.model(0);
    ParameterSampler sampler(m);
    Rng rng(42);
    const int draws = 10000;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    bool consistent = true;
    for (int r = 0; r < draws; ++r) {
      const Matrix w = sampler.draw(rng);
      for (int k = 0; k < m.node_count(); ++k)
        for (int l = 0; l < m.node_count(); ++l)
          if (m.cluster_of(l) == m.cluster_of(k) && w.col(l) != w.col(k)) consistent = false;
      const double x = w(0, 0), y = w(0, 3);  // cluster 1 and cluster 2, first entry
      sx += x;
      sy += y;
      sxx += x * x;
      syy += y * y;
      sxy += x * y;
    }
    CHECK(consistent);
    const double mx = sx / draws, my = sy / draws;
    const double vx = sxx / draws - mx * mx, vy = syy / draws - my * my;
    const double se = std::sqrt(vx / draws);
    CHECK(std::abs(mx - 0.7) <= 3.0 * se);
    CHECK(std::abs(my - 0.7) <= 3.0 * std::sqrt(vy / draws));
    const double corr = (sxy / draws - mx * my) / std::sqrt(vx * vy);
    CHECK(std::abs(corr - 0.9) <= 0.05);
  }
}

TEST_CASE("observe") {
  SUBCASE("hand case") {
    std::vector<Matrix> ru(1, Matrix::Identity(2, 2));
    ParameterMoments mom{Matrix::Constant(2, 1, 0.5), Matrix::Zero(2, 2)};
    const SignalModel m(2, {0}, ru, Vector::Zero(1), Vector::Constant(1, 0.1), mom);
    Rng a(9), b(9);
    const Observation o1 = observe(Matrix::Constant(2, 1, 0.5), m, 0, a);
    const Observation o2 = observe(Matrix::Constant(2, 1, 0.5), m, 0, b);
    CHECK(o1.d == o2.d);
    CHECK(o1.u == o2.u);
    CHECK(o1.d == doctest::Approx(0.5 * o1.u.sum()).epsilon(1e-15));
    Vector u(2);
    u << 1.0, 2.0;
    CHECK(u.dot(Vector::Constant(2, 0.5)) == 1.5);
  }
  SUBCASE("regressor covariance") {
    Matrix cov(2, 2);
    cov << 1.5, 0.3, 0.3, 0.8;
    std::vector<Matrix> ru(1, cov);
    ParameterMoments mom{Matrix::Zero(2, 1), Matrix::Zero(2, 2)};
    const SignalModel m(2, {0}, ru, Vector::Constant(1, 0.1), Vector::Constant(1, 0.1), mom);
    Rng rng(3);
    Matrix acc = Matrix::Zero(2, 2);
    double cross = 0.0;
    const int draws = 100000;
    const Matrix w = Matrix::Zero(2, 1);
    for (int i = 0; i < draws; ++i) {
      const Observation o = observe(w, m, 0, rng);
      acc += o.u * o.u.transpose();
      cross += o.u(0) * o.d;  // d = v here, so this estimates E[u v] = 0
    }
    acc /= draws;
    CHECK((acc - cov).norm() / cov.norm() <= 0.02);
    CHECK(std::abs(cross / draws) <= 5.0 * std::sqrt(1.5 * 0.1 / draws));
  }
  SUBCASE("observe_all covers every node") {
    const SignalModel m = small_model(1e-4);
    Rng rng(5);
    const Observations obs = observe_all(Matrix::Constant(2, 4, 0.7), m, rng);
    CHECK(obs.d.size() == 4);
    CHECK(obs.u.rows() == 2);
    CHECK(obs.u.cols() == 4);
  }
}

TEST_CASE("regressors are temporally white") {
  std::vector<Matrix> ru(1, Matrix::Identity(1, 1));
  ParameterMoments mom{Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
  const SignalModel m(1, {0}, ru, Vector::Zero(1), Vector::Constant(1, 0.1), mom);
  Rng rng(8);
  const int draws = 20000;
  double prev = observe(Matrix::Zero(1, 1), m, 0, rng).u(0), lag1 = 0.0;
  for (int i = 1; i < draws; ++i) {
    const double cur = observe(Matrix::Zero(1, 1), m, 0, rng).u(0);
    lag1 += prev * cur;
    prev = cur;
  }
  CHECK(std::abs(lag1 / draws) <= 5.0 / std::sqrt(draws));
}

TEST_CASE("noise profile in dB") {
  Rng rng(2);
  const Vector flat = noise_profile_uniform_db(5, -10.0, -10.0, rng);
  for (int k = 0; k < 5; ++k) CHECK(flat(k) == doctest::Approx(0.1).epsilon(1e-14));
  const Vector v = noise_profile_uniform_db(10000, -15.0, -5.0, rng);
  CHECK(v.minCoeff() >= std::pow(10.0, -1.5));
  CHECK(v.maxCoeff() <= std::pow(10.0, -0.5));
  double mean_db = 0.0;
  for (int k = 0; k < v.size(); ++k) mean_db += 10.0 * std::log10(v(k));
  mean_db /= v.size();
  const double se = 10.0 / std::sqrt(12.0) / std::sqrt(double(v.size()));
  CHECK(std::abs(mean_db + 10.0) <= 3.0 * se);
  CHECK_THROWS(noise_profile_uniform_db(3, -5.0, -15.0, rng));
}

TEST_CASE("derived seeds differ per stream and are reproducible") {
  CHECK(derive_seed(1, 0) == derive_seed(1, 0));
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}
