#include "maic/scenario.hpp"
#include "maic/strategies.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace maic;

namespace {

ClusteredTopology reference_topology() {
  const ReferenceNetwork net = reference_network();
  return ClusteredTopology(net.node_count, net.edges, net.cluster_of);
}

Observations scalar_obs(std::initializer_list<double> u, std::initializer_list<double> d) {
  Observations obs;
  obs.u = Eigen::Map<const Matrix>(u.begin(), 1, static_cast<Eigen::Index>(u.size()));
  obs.d = Eigen::Map<const Vector>(d.begin(), static_cast<Eigen::Index>(d.size()));
  return obs;
}

// Random valid G on N_{I,k}^+ with strictly positive weights.
Matrix random_inter_weights(const ClusteredTopology& topo, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  const int n = topo.node_count();
  Matrix g = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    double sum = 0.0;
    for (int l : topo.neighborhood(k).inter_plus) sum += g(l, k) = u(rng);
    g.col(k) /= sum;
  }
  return g;
}

}  // namespace

TEST_CASE("adapt") {
  SUBCASE("scalar hand case") {
    const Matrix psi = adapt(Matrix::Zero(1, 1), scalar_obs({2.0}, {1.0}), Vector::Constant(1, 0.1));
    CHECK(psi(0, 0) == doctest::Approx(0.2).epsilon(1e-15));
  }
  SUBCASE("zero step keeps the estimate") {
    Matrix w(1, 2);
    w << 0.3, -0.4;
    CHECK(adapt(w, scalar_obs({1.0, 2.0}, {5.0, 6.0}), Vector::Zero(2)) == w);
  }
  SUBCASE("truth is a fixed point without noise") {
    Matrix w(2, 1);
    w << 0.5, 0.5;
    Observations obs;
    obs.u = Matrix(2, 1);
    obs.u << 1.0, 2.0;
    obs.d = Vector::Constant(1, 1.5);
    CHECK(adapt(w, obs, Vector::Constant(1, 0.3)) == w);
  }
}

TEST_CASE("combination steps") {
  const ClusteredTopology topo(2, {{0, 1}}, {0, 1});
  Matrix psi(1, 2);
  psi << 1.0, 3.0;
  CHECK(inter_cluster_combine(topo, psi, Matrix::Identity(2, 2)) == psi);
  const Matrix half = Matrix::Constant(2, 2, 0.5);
  const Matrix phi = inter_cluster_combine(topo, psi, half);
  CHECK(phi(0, 0) == 2.0);
  CHECK(phi(0, 1) == 2.0);
  CHECK_THROWS_AS(intra_cluster_combine(topo, psi, half), TopologyError);

  const ClusteredTopology same(2, {{0, 1}}, {0, 0});
  CHECK(intra_cluster_combine(same, psi, Matrix::Identity(2, 2)) == psi);
  CHECK(intra_cluster_combine(same, psi, half)(0, 1) == 2.0);
  CHECK_THROWS_AS(inter_cluster_combine(same, psi, half), TopologyError);
}

TEST_CASE("combination outputs stay in the input interval") {
  const ClusteredTopology topo = reference_topology();
  const Matrix a = metropolis_matrix(topo);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix g = random_inter_weights(topo, rng);
    Matrix psi(2, 10);
    for (int i = 0; i < psi.size(); ++i) psi.data()[i] = u(rng);
    const double lo = psi.minCoeff(), hi = psi.maxCoeff();
    const Matrix phi = inter_cluster_combine(topo, psi, g);
    const Matrix w = intra_cluster_combine(topo, phi, a);
    CHECK(phi.minCoeff() >= lo - 1e-12);
    CHECK(phi.maxCoeff() <= hi + 1e-12);
    CHECK(w.minCoeff() >= lo - 1e-12);
    CHECK(w.maxCoeff() <= hi + 1e-12);
  }
}

TEST_CASE("MDLMS scalar hand case") {
  // two single-node clusters joined by one edge, A = I, rho = 1, eta = 1
  const ClusteredTopology topo(2, {{0, 1}}, {0, 1});
  const Matrix rho = averaging_rule_matrix(topo);
  CHECK(rho(1, 0) == 1.0);
  Matrix w(1, 2);
  w << 0.2, 0.6;
  const double mu = 0.1;
  const Observations obs = scalar_obs({1.5, -0.5}, {0.4, 0.9});
  const Matrix out = mdlms_step(w, obs, Matrix::Identity(2, 2), rho, 1.0, Vector::Constant(2, mu));
  const double psi0 = 0.2 + mu * 1.5 * (0.4 - 1.5 * 0.2) + mu * (0.6 - 0.2);
  const double psi1 = 0.6 + mu * -0.5 * (0.9 + 0.5 * 0.6) + mu * (0.2 - 0.6);
  CHECK(out(0, 0) == doctest::Approx(psi0).epsilon(1e-14));
  CHECK(out(0, 1) == doctest::Approx(psi1).epsilon(1e-14));

  // equal estimates make the coupling vanish
  const Matrix flat = Matrix::Constant(1, 2, 0.3);
  CHECK(mdlms_step(flat, obs, Matrix::Identity(2, 2), rho, 7.0, Vector::Constant(2, mu)) ==
        atc_step(flat, obs, Matrix::Identity(2, 2), Vector::Constant(2, mu)));
}

TEST_CASE("MAIC three-node hand case") {
  // nodes 0 and 1 form cluster 0, node 2 is cluster 1; path 0-1-2
  const ClusteredTopology topo(3, {{0, 1}, {1, 2}}, {0, 0, 1});
  const Matrix a = metropolis_matrix(topo);
  CHECK(a(0, 1) == 0.5);
  CHECK(a(1, 1) == 0.5);
  CHECK(a(2, 2) == 1.0);
  Matrix g = Matrix::Identity(3, 3);
  g(1, 1) = 0.7;
  g(2, 1) = 0.3;
  g(1, 2) = 0.4;
  g(2, 2) = 0.6;
  Matrix w(1, 3);
  w << 0.1, 0.2, 0.5;
  const Observations obs = scalar_obs({1.0, 2.0, -1.0}, {0.3, 0.1, 0.7});
  const double mu = 0.05;
  const double psi0 = 0.1 + mu * 1.0 * (0.3 - 0.1);
  const double psi1 = 0.2 + mu * 2.0 * (0.1 - 0.4);
  const double psi2 = 0.5 + mu * -1.0 * (0.7 + 0.5);
  const double phi0 = psi0;
  const double phi1 = 0.7 * psi1 + 0.3 * psi2;
  const double phi2 = 0.4 * psi1 + 0.6 * psi2;
  const Matrix out = maic_step(w, obs, a, g, Vector::Constant(3, mu));
  CHECK(out(0, 0) == doctest::Approx(0.5 * phi0 + 0.5 * phi1).epsilon(1e-14));
  CHECK(out(0, 1) == doctest::Approx(0.5 * phi0 + 0.5 * phi1).epsilon(1e-14));
  CHECK(out(0, 2) == doctest::Approx(phi2).epsilon(1e-14));
}

TEST_CASE("reduction chain is bit-exact") {
  const Scenario sc = preset_a();
  const ClusteredTopology topo = sc.topology();
  const SignalModel model = sc.model(0);
  const Matrix a = metropolis_matrix(topo);
  const Matrix rho = averaging_rule_matrix(topo);
  const Matrix eye = Matrix::Identity(10, 10);
  const Vector& mu = model.step_sizes();
  ParameterSampler sampler(model);
  Rng rng(77);
  const Matrix truth = sampler.draw(rng);
  Matrix w_atc = Matrix::Zero(2, 10), w_md = w_atc, w_maic = w_atc;
  bool same = true;
  for (int i = 0; i < 300; ++i) {
    const Observations obs = observe_all(truth, model, rng);
    w_atc = atc_step(w_atc, obs, a, mu);
    w_md = mdlms_step(w_md, obs, a, rho, 0.0, mu);
    w_maic = maic_step(w_maic, obs, a, eye, mu);
    same = same && (w_atc.array() == w_md.array()).all() && (w_atc.array() == w_maic.array()).all();
  }
  CHECK(same);
}

TEST_CASE("isolated node reduces to stand-alone LMS") {
  const ClusteredTopology topo(1, {}, {0});
  Matrix w = Matrix::Zero(1, 1);
  double lms = 0.0;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n01;
  for (int i = 0; i < 50; ++i) {
    const double u = n01(rng), d = 0.5 * u + 0.1 * n01(rng);
    w = atc_step(w, scalar_obs({u}, {d}), Matrix::Identity(1, 1), Vector::Constant(1, 0.2));
    lms += 0.2 * u * (d - u * lms);
  }
  CHECK(w(0, 0) == doctest::Approx(lms).epsilon(1e-13));
}

TEST_CASE("every strategy is stationary at the truth") {
  const ClusteredTopology topo = reference_topology();
  const Matrix a = metropolis_matrix(topo);
  const Matrix rho = averaging_rule_matrix(topo);
  std::mt19937_64 rng(12);
  const Matrix g = random_inter_weights(topo, rng);
  const Matrix truth = Matrix::Constant(2, 10, 0.7);
  std::normal_distribution<double> n01;
  Observations obs;
  obs.u = Matrix(2, 10);
  for (int i = 0; i < obs.u.size(); ++i) obs.u.data()[i] = n01(rng);
  obs.d = (obs.u.array() * truth.array()).colwise().sum().transpose();
  const Vector mu = Vector::Constant(10, 0.05);
  CHECK((atc_step(truth, obs, a, mu) - truth).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((mdlms_step(truth, obs, a, rho, 3.0, mu) - truth).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((maic_step(truth, obs, a, g, mu) - truth).cwiseAbs().maxCoeff() <= 1e-15);
  AdaptiveState st = AdaptiveState::initial(2, 10);
  st.w = truth;
  maic_adaptive_step(st, topo, obs, a, 0.7, 0.05);
  CHECK((st.w - truth).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("adaptive weight selection") {
  const Scenario sc = preset_a();
  const ClusteredTopology topo = sc.topology();
  const SignalModel model = sc.model(0);
  const Matrix a = metropolis_matrix(topo);
  ParameterSampler sampler(model);
  Rng rng(5);
  const Matrix truth = sampler.draw(rng);

  SUBCASE("first iteration sees zero moments") {
    AdaptiveState st = AdaptiveState::initial(2, 10);
    const SimplexQP qp = build_adaptive_qp(0, topo, st.w, st.x_hat);
    CHECK(qp.q.isZero(0.0));
    CHECK(qp.h.isZero(0.0));
    maic_adaptive_step(st, topo, observe_all(truth, model, rng), a, 0.7, 0.05);
    for (int k = 0; k < 10; ++k) CHECK(st.g_hat.col(k).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("alpha = 1 freezes the moving averages") {
    AdaptiveState st = AdaptiveState::initial(2, 10);
    for (int i = 0; i < 20; ++i) maic_adaptive_step(st, topo, observe_all(truth, model, rng), a, 1.0, 0.05);
    CHECK(st.x_hat.isZero(0.0));
  }
  SUBCASE("weights stay valid and match a grid-search oracle") {
    AdaptiveState st = AdaptiveState::initial(2, 10);
    bool valid = true;
    for (int i = 0; i < 400; ++i) {
      maic_adaptive_step(st, topo, observe_all(truth, model, rng), a, 0.7, 0.05);
      valid = valid && (st.x_hat.array() >= 0.0).all();
      try {
        check_inter_weights(topo, st.g_hat);
      } catch (const TopologyError&) {
        valid = false;
      }
    }
    CHECK(valid);
    const Matrix w_before = st.w;
    maic_adaptive_step(st, topo, observe_all(truth, model, rng), a, 0.7, 0.05);
    for (int k : {1, 5}) {  // two-element N_{I,k}^+
      const SimplexQP qp = build_adaptive_qp(k, topo, w_before, st.x_hat);
      REQUIRE(qp.dim() == 2);
      const Vector grid = oracle::grid_search_simplex([&](const Vector& q) { return qp.objective(q); }, 2, 1e-3);
      Vector solved(2);
      for (int i = 0; i < 2; ++i) solved(i) = st.g_hat(qp.support[static_cast<std::size_t>(i)], k);
      CHECK((solved - grid).cwiseAbs().maxCoeff() <= 1e-3 + 1e-9);
    }
  }
}

TEST_CASE("strategy objects") {
  const ClusteredTopology topo = reference_topology();
  const Matrix a = metropolis_matrix(topo);
  const Matrix rho = averaging_rule_matrix(topo);
  const Vector mu = Vector::Constant(10, 0.05);
  auto atc = make_atc(topo, 2, a, mu);
  CHECK(atc->cooperation_weights() == Matrix::Identity(10, 10));
  CHECK_THROWS_AS(atc->set_cooperation_weights(Matrix::Identity(10, 10)), std::logic_error);

  auto md = make_mdlms(topo, 2, a, rho, 1.0, mu);
  CHECK((md->cooperation_weights() - mdlms_to_maic_weights(topo, rho, 1.0, mu)).cwiseAbs().maxCoeff() <= 1e-15);

  auto maic = make_maic(topo, 2, a, Matrix::Identity(10, 10), mu);
  Matrix bad = Matrix::Identity(10, 10);
  bad(1, 0) = 0.5;
  bad(0, 0) = 0.5;
  CHECK_THROWS_AS(maic->set_cooperation_weights(bad), TopologyError);
  CHECK_THROWS_AS(make_maic(topo, 2, a, bad, mu), TopologyError);
  CHECK_THROWS_AS(make_atc(topo, 2, Matrix::Identity(10, 10) * 0.5, mu), TopologyError);
  CHECK_THROWS_AS(make_mdlms(topo, 2, a, rho, -1.0, mu), TopologyError);
  Vector uneven = mu;
  uneven(3) = 0.02;
  CHECK_THROWS_AS(make_maic_adaptive(topo, 2, a, 0.7, uneven), TopologyError);
  CHECK_THROWS_AS(make_maic_adaptive(topo, 2, a, 1.5, mu), TopologyError);

  Observations obs;
  obs.u = Matrix::Ones(2, 10);
  obs.d = Vector::Ones(10);
  atc->step(obs);
  CHECK(!atc->estimates().isZero(0.0));
  atc->reset();
  CHECK(atc->estimates().isZero(0.0));
}
