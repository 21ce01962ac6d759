#include "maic/harness.hpp"
#include "maic/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace maic;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("maic_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Scenario small_a(int runs, int iters) {
  Scenario s = preset_a();
  s.runs = runs;
  s.iterations = iters;
  return s;
}

}  // namespace

TEST_CASE("zero-noise run at the truth has zero MSD") {
  Scenario s = preset_a();
  s.runs = 1;
  s.iterations = 1;
  s.noise_power.setZero();
  s.variance_scale = 0.0;
  s.segments.front().cluster_mean.setZero();
  const ScenarioResult r = run_scenario(s);
  REQUIRE(r.strategies.size() == 5);
  for (const auto& st : r.strategies) {
    REQUIRE(st.msd.size() == 1);
    CHECK(st.msd[0] == 0.0);
  }
  CHECK(r.runs_completed == 1);
}

TEST_CASE("steady-state windows") {
  Scenario s = preset_a();
  CHECK(steady_windows(s) == std::vector<std::pair<int, int>>{{451, 500}});
  s.iterations = 5;
  CHECK(steady_windows(s) == std::vector<std::pair<int, int>>{{5, 5}});
  const Scenario ns = preset_nonstationary();
  const std::vector<std::pair<int, int>> expected{{225, 249}, {475, 499}, {725, 749}, {975, 1000}};
  CHECK(steady_windows(ns) == expected);
}

TEST_CASE("mean and standard error") {
  const SteadyStat st = mean_and_se({1.0, 2.0, 3.0, 4.0});
  CHECK(st.mean == doctest::Approx(2.5));
  CHECK(st.se == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  const SteadyStat d = paired_difference({2.0, 3.0, 5.0}, {1.0, 1.0, 2.0});
  CHECK(d.mean == doctest::Approx(2.0));
  CHECK(d.se == doctest::Approx(std::sqrt(1.0 / 3.0)));
}

TEST_CASE("MSD gain") {
  CHECK(msd_gain(0.01, 0.01) == 0.0);
  CHECK(msd_gain(0.005, 0.01) == doctest::Approx(3.0103).epsilon(1e-5));
  CHECK(msd_gain(0.02, 0.01) < 0.0);
}

TEST_CASE("paired runs share one observation stream") {
  const ScenarioResult r = run_scenario(small_a(20, 60));
  CHECK(r.streams_matched);
  CHECK(r.runs_completed == 20);
  CHECK(r.aborted.empty());
  for (const auto& st : r.strategies) {
    CHECK(st.run_steady.front().size() == 20);
    for (double v : st.msd) CHECK((std::isfinite(v) && v >= 0.0));
  }
  const StrategyResult& atc = r.find("ATC");
  const StrategyResult& p2 = r.find("MAIC-P2");
  CHECK(atc.theory.has_value());
  CHECK(p2.theory.has_value());
  CHECK(!r.find("MDLMS").theory.has_value());
  CHECK(!r.find("MDLMS").theory_note.empty());
  CHECK(p2.certificates.size() == 1);
  CHECK(p2.certificates.front().certified);
  CHECK(std::isfinite(msd_gain_se(p2, atc)));
  CHECK_THROWS(r.find("nope"));
}

TEST_CASE("results are identical for every worker count") {
  Scenario s = small_a(40, 80);
  const fs::path dir = scratch_dir("determinism");
  std::string reference;
  for (int workers : {1, 2, 3}) {
    RunOptions opt;
    opt.workers = workers;
    const ScenarioResult r = run_scenario(s, opt);
    const fs::path out = dir / std::to_string(workers);
    fs::create_directories(out);
    write_outputs(out, r);
    const std::string curves = slurp(out / "curves.csv");
    if (workers == 1) {
      reference = curves;
      CHECK(!reference.empty());
    } else {
      CHECK(curves == reference);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("non-stationary segments redraw the parameters") {
  Scenario s = preset_nonstationary();
  s.runs = 4;
  s.strategies.resize(1);
  const ScenarioResult r = run_scenario(s);
  const StrategyResult& atc = r.strategies.front();
  CHECK(atc.segment_steady.size() == 4);
  // the estimate lags the new parameter, so the error jumps right after a boundary
  for (int boundary : {250, 500, 750}) CHECK(atc.msd[boundary - 1] > 10.0 * atc.msd[boundary - 2]);
  for (const auto& seg : atc.segment_steady) CHECK(seg.mean < 1e-2);
}

TEST_CASE("divergent runs are dropped and an all-divergent scenario fails") {
  Scenario s = small_a(3, 400);
  s.step_size = 1.9;
  s.strategies.resize(1);
  RunOptions opt;
  opt.compute_theory = false;
  CHECK_THROWS_WITH(run_scenario(s, opt), doctest::Contains("diverged"));
}

TEST_CASE("fixed weights per strategy kind") {
  const Scenario s = preset_a();
  const ClusteredTopology topo = s.topology();
  const SignalModel model = s.model(0);
  const Matrix a = metropolis_matrix(topo);
  CHECK(fixed_weights({StrategyKind::Atc, "x", 0.0}, model, topo, a).g == Matrix::Identity(10, 10));
  const Matrix rule = mdlms_to_maic_weights(topo, averaging_rule_matrix(topo), 1.0, model.step_sizes());
  CHECK(fixed_weights({StrategyKind::MaicRule, "x", 1.0}, model, topo, a).g == rule);
  CHECK(fixed_weights({StrategyKind::MaicP2, "x", 0.0}, model, topo, a).certificate.has_value());
  CHECK_THROWS(fixed_weights({StrategyKind::MaicAdaptive, "x", 0.0}, model, topo, a));
}

TEST_CASE("scenario validation") {
  Scenario s = preset_a();
  CHECK_NOTHROW(s.validate());
  s.segments.push_back(s.segments.front());
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = preset_a();
  s.strategies.push_back(s.strategies.front());
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = preset_a();
  s.alpha = 1.5;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = preset_a();
  s.noise_power.resize(3);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  CHECK_THROWS_AS(preset_c(1.5), std::invalid_argument);
  CHECK(!preset_by_name("z").has_value());
  CHECK(strategy_kind_from_string(to_string(StrategyKind::MaicAdaptive)) == StrategyKind::MaicAdaptive);
  CHECK_THROWS(strategy_kind_from_string("lms"));
}

TEST_CASE("preset constants") {
  const Scenario a = preset_a();
  CHECK(a.step_size == 0.05);
  CHECK(a.alpha == 0.7);
  CHECK(a.segments.front().correlation(0, 1) == 0.9);
  CHECK(a.segments.front().correlation(0, 2) == 0.5);
  const Scenario b = preset_b();
  CHECK(b.step_size == 0.1);
  CHECK(b.variance_scale == doctest::Approx(0.03 * 0.03));
  CHECK(b.noise_power.minCoeff() >= std::pow(10.0, -1.5));
  CHECK(b.noise_power.maxCoeff() <= std::pow(10.0, -0.5));
  const Scenario c = preset_c(0.3);
  CHECK(c.segments.front().cluster_mean(0, 0) == doctest::Approx(0.7));
  CHECK(c.segments.front().cluster_mean(0, 2) == doctest::Approx(1.3));
}

TEST_CASE("scenario JSON round trip") {
  for (const Scenario& s : {preset_a(), preset_b(0.3), preset_c(0.3), preset_nonstationary()}) {
    const Json j = scenario_to_json(s);
    const Scenario back = scenario_from_json(j);
    CHECK(scenario_to_json(back) == j);
    CHECK(back.segments.size() == s.segments.size());
    CHECK(back.segment_ceiling.has_value() == s.segment_ceiling.has_value());
  }
  Json j = scenario_to_json(preset_a());
  j.erase("noise_power");
  j["noise_power_db"] = {{"low", -10.0}, {"high", -10.0}, {"seed", 3}};
  const Scenario s = scenario_from_json(j);
  CHECK(s.noise_power(7) == doctest::Approx(0.1));
  j["segments"][0]["mean"] = 0.4;
  CHECK(scenario_from_json(j).segments.front().cluster_mean(1, 2) == 0.4);
  j["strategies"][0]["kind"] = "bogus";
  CHECK_THROWS(scenario_from_json(j));

  const fs::path dir = scratch_dir("json");
  save_scenario(dir / "a.json", preset_a());
  CHECK(scenario_to_json(load_scenario(dir / "a.json")) == scenario_to_json(preset_a()));
  std::ofstream(dir / "bad.json") << "{ not json";
  CHECK_THROWS_AS(load_scenario(dir / "bad.json"), IoError);
  CHECK_THROWS_AS(load_scenario(dir / "missing.json"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("matrix CSV round trip is exact") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n01;
  Matrix m(4, 3);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = n01(rng) / 3.0;
  const fs::path dir = scratch_dir("csv");
  write_matrix_csv(dir / "m.csv", m);
  CHECK(read_matrix_csv(dir / "m.csv") == m);
  std::ofstream(dir / "ragged.csv") << "1,2\n3\n";
  CHECK_THROWS_AS(read_matrix_csv(dir / "ragged.csv"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("summary JSON") {
  const ScenarioResult r = run_scenario(small_a(4, 30));
  const Json j = summary_json(r);
  CHECK(j["runs_completed"] == 4);
  CHECK(j["strategies"].size() == 5);
  const fs::path dir = scratch_dir("summary");
  write_outputs(dir, r);
  CHECK(fs::exists(dir / "curves.csv"));
  CHECK(fs::exists(dir / "cluster_curves.csv"));
  CHECK(fs::exists(dir / "summary.json"));
  CHECK(fs::exists(dir / "weights_MAIC-P2.csv"));
  fs::remove_all(dir);
}
