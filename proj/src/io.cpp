#include "maic/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace maic {

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json vector_json(const Vector& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Json matrix_json(const Matrix& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(row);
  }
  return j;
}

Vector vector_from(const Json& j, const char* key) {
  if (!j.is_array()) throw IoError(std::string("'") + key + "' must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Matrix matrix_from(const Json& j, const char* key) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw IoError(std::string("'") + key + "' must be a nonempty array of rows");
  const std::size_t rows = j.size(), cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) throw IoError(std::string("'") + key + "' has ragged rows");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

// number: same mean everywhere; [p]: one scalar per cluster; [[M] per cluster]: full.
Matrix mean_from(const Json& j, int dim, int clusters) {
  if (j.is_number()) return Matrix::Constant(dim, clusters, j.get<double>());
  if (!j.is_array() || static_cast<int>(j.size()) != clusters)
    throw IoError("segment 'mean' must be a number or have one entry per cluster");
  Matrix m(dim, clusters);
  for (int p = 0; p < clusters; ++p) {
    const Json& e = j[static_cast<std::size_t>(p)];
    if (e.is_number()) {
      m.col(p).setConstant(e.get<double>());
    } else {
      if (!e.is_array() || static_cast<int>(e.size()) != dim) throw IoError("cluster mean must have M entries");
      for (int d = 0; d < dim; ++d) m(d, p) = e[static_cast<std::size_t>(d)].get<double>();
    }
  }
  return m;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

Json stat_json(const SteadyStat& s) {
  return {{"mean", s.mean}, {"se", s.se}, {"mean_db", to_db(s.mean)}};
}

}  // namespace

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream os = open_out(path);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? "," : "") << fmt17(m(r, c));
    os << '\n';
  }
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError("non-numeric cell '" + cell + "' in " + path.string());
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw IoError("ragged rows in " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("empty matrix file " + path.string());
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

Json scenario_to_json(const Scenario& s) {
  Json j;
  j["name"] = s.name;
  j["nodes"] = s.node_count;
  Json edges = Json::array();
  for (const auto& [l, k] : s.edges) edges.push_back({l, k});
  j["edges"] = edges;
  j["clusters"] = s.cluster_of;
  j["dim"] = s.dim;
  j["regressor_power"] = vector_json(s.regressor_power);
  j["noise_power"] = vector_json(s.noise_power);
  j["parameter_variance"] = vector_json(s.parameter_variance);
  j["variance_scale"] = s.variance_scale;
  Json segs = Json::array();
  for (const auto& seg : s.segments)
    segs.push_back({{"start", seg.start}, {"mean", matrix_json(seg.cluster_mean.transpose())},
                    {"correlation", matrix_json(seg.correlation)}});
  j["segments"] = segs;
  j["step_size"] = s.step_size;
  j["alpha"] = s.alpha;
  Json strategies = Json::array();
  for (const auto& st : s.strategies) {
    Json e{{"kind", to_string(st.kind)}, {"label", st.label}};
    if (st.kind == StrategyKind::Mdlms || st.kind == StrategyKind::MaicRule) e["eta"] = st.eta;
    strategies.push_back(e);
  }
  j["strategies"] = strategies;
  j["iterations"] = s.iterations;
  j["runs"] = s.runs;
  j["seed"] = s.seed;
  j["steady_fraction"] = s.steady_fraction;
  if (s.segment_ceiling) j["segment_ceiling"] = *s.segment_ceiling;
  return j;
}

Scenario scenario_from_json(const Json& j) {
  try {
    Scenario s;
    s.name = j.value("name", std::string("custom"));
    s.node_count = j.at("nodes").get<int>();
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw IoError("each edge must be a pair [l, k]");
      s.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    s.cluster_of = j.at("clusters").get<std::vector<int>>();
    s.dim = j.at("dim").get<int>();
    s.regressor_power = vector_from(j.at("regressor_power"), "regressor_power");
    if (j.contains("noise_power")) {
      s.noise_power = vector_from(j.at("noise_power"), "noise_power");
    } else if (j.contains("noise_power_db")) {
      const Json& r = j.at("noise_power_db");
      Rng rng(derive_seed(r.value("seed", std::uint64_t{0}), 0));
      s.noise_power = noise_profile_uniform_db(s.node_count, r.at("low").get<double>(), r.at("high").get<double>(), rng);
    } else {
      throw IoError("either 'noise_power' or 'noise_power_db' is required");
    }
    s.parameter_variance = vector_from(j.at("parameter_variance"), "parameter_variance");
    s.variance_scale = j.at("variance_scale").get<double>();
    const int clusters = s.cluster_count();
    for (const auto& seg : j.at("segments")) {
      ParameterSegment ps;
      ps.start = seg.value("start", 1);
      ps.cluster_mean = mean_from(seg.at("mean"), s.dim, clusters);
      ps.correlation = matrix_from(seg.at("correlation"), "correlation");
      s.segments.push_back(std::move(ps));
    }
    s.step_size = j.at("step_size").get<double>();
    s.alpha = j.value("alpha", 0.7);
    for (const auto& st : j.at("strategies")) {
      StrategySpec spec;
      spec.kind = strategy_kind_from_string(st.at("kind").get<std::string>());
      spec.label = st.value("label", to_string(spec.kind));
      spec.eta = st.value("eta", 0.0);
      s.strategies.push_back(spec);
    }
    s.iterations = j.value("iterations", 500);
    s.runs = j.value("runs", 500);
    s.seed = j.value("seed", std::uint64_t{1});
    s.steady_fraction = j.value("steady_fraction", 0.1);
    if (j.contains("segment_ceiling")) s.segment_ceiling = j.at("segment_ceiling").get<double>();
    return s;
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed scenario: ") + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  Json j;
  try {
    is >> j;
  } catch (const Json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

void save_scenario(const std::filesystem::path& path, const Scenario& s) {
  std::ofstream os = open_out(path);
  os << scenario_to_json(s).dump(2) << '\n';
}

Json theory_json(const TheoryReport& r) {
  Json j{{"rho_b", r.rho_b},
         {"rho_f", r.rho_f},
         {"mean_stable", r.mean_stable},
         {"zeta", r.zeta},
         {"zeta_db", to_db(r.zeta)},
         {"zeta_hat", r.zeta_hat},
         {"zeta_hat_db", to_db(r.zeta_hat)}};
  j["cluster_zeta"] = r.cluster_zeta;
  j["cluster_zeta_hat"] = r.cluster_zeta_hat;
  return j;
}

Json certificate_json(const WeightSolution& sol) {
  return {{"objective", sol.objective},      {"kkt_residual", sol.kkt_residual}, {"iterations", sol.iterations},
          {"certified", sol.certified},      {"fallback_nodes", sol.fallback_nodes}};
}

Json summary_json(const ScenarioResult& r) {
  Json j;
  j["scenario"] = r.name;
  j["iterations"] = r.iterations;
  j["runs_requested"] = r.runs_requested;
  j["runs_completed"] = r.runs_completed;
  Json aborted = Json::array();
  for (const auto& a : r.aborted) aborted.push_back({{"run", a.run}, {"strategy", a.strategy}, {"iteration", a.iteration}});
  j["aborted_runs"] = aborted;
  Json windows = Json::array();
  for (const auto& [first, last] : r.windows) windows.push_back({first, last});
  j["steady_windows"] = windows;
  char digest[17];
  std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(r.stream_digest));
  j["stream_digest"] = digest;
  j["streams_matched"] = r.streams_matched;

  const StrategyResult* atc = nullptr;
  for (const auto& s : r.strategies)
    if (s.spec.kind == StrategyKind::Atc) atc = &s;

  Json strategies = Json::array();
  for (const auto& s : r.strategies) {
    Json e;
    e["label"] = s.spec.label;
    e["kind"] = to_string(s.spec.kind);
    if (s.spec.kind == StrategyKind::Mdlms || s.spec.kind == StrategyKind::MaicRule) e["eta"] = s.spec.eta;
    e["steady_state"] = stat_json(s.steady);
    Json segs = Json::array();
    for (const auto& st : s.segment_steady) segs.push_back(stat_json(st));
    e["segment_steady_state"] = segs;
    Json clusters = Json::array();
    for (const auto& st : s.cluster_steady) clusters.push_back(stat_json(st));
    e["cluster_steady_state"] = clusters;
    if (atc && atc != &s) e["gain_vs_atc_db"] = {{"gain", msd_gain(s, *atc)}, {"se", msd_gain_se(s, *atc)}};
    if (s.theory) e["theory"] = theory_json(*s.theory);
    if (!s.theory_note.empty()) e["theory_note"] = s.theory_note;
    Json certs = Json::array();
    for (const auto& c : s.certificates) certs.push_back(certificate_json(c));
    if (!certs.empty()) e["certificates"] = certs;
    if (s.spec.kind == StrategyKind::MaicAdaptive) e["qp_fallbacks"] = s.diagnostics;
    strategies.push_back(e);
  }
  j["strategies"] = strategies;
  return j;
}

void write_curves_csv(const std::filesystem::path& path, const ScenarioResult& r) {
  std::ofstream os = open_out(path);
  os << "iter";
  for (const auto& s : r.strategies) os << ',' << s.spec.label;
  os << '\n';
  for (int i = 0; i < r.iterations; ++i) {
    os << i + 1;
    for (const auto& s : r.strategies) os << ',' << fmt17(to_db(s.msd[static_cast<std::size_t>(i)]));
    os << '\n';
  }
}

void write_cluster_curves_csv(const std::filesystem::path& path, const ScenarioResult& r) {
  std::ofstream os = open_out(path);
  os << "iter";
  for (const auto& s : r.strategies)
    for (std::size_t c = 0; c < s.cluster_msd.size(); ++c) os << ',' << s.spec.label << ":C" << c;
  os << '\n';
  for (int i = 0; i < r.iterations; ++i) {
    os << i + 1;
    for (const auto& s : r.strategies)
      for (const auto& curve : s.cluster_msd) os << ',' << fmt17(to_db(curve[static_cast<std::size_t>(i)]));
    os << '\n';
  }
}

void write_outputs(const std::filesystem::path& dir, const ScenarioResult& r) {
  std::filesystem::create_directories(dir);
  write_curves_csv(dir / "curves.csv", r);
  write_cluster_curves_csv(dir / "cluster_curves.csv", r);
  {
    std::ofstream os = open_out(dir / "summary.json");
    os << summary_json(r).dump(2) << '\n';
  }
  for (const auto& s : r.strategies)
    for (std::size_t seg = 0; seg < s.weights.size(); ++seg) {
      std::string name = "weights_" + s.spec.label;
      if (s.weights.size() > 1) name += "_seg" + std::to_string(seg);
      write_matrix_csv(dir / (name + ".csv"), s.weights[seg]);
    }
}

}  // namespace maic
