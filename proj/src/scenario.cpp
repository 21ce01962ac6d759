#include "maic/scenario.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace maic {

namespace {

struct KindName {
  StrategyKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {StrategyKind::Atc, "atc"},           {StrategyKind::Mdlms, "mdlms"},
    {StrategyKind::MaicP1, "maic_p1"},    {StrategyKind::MaicP2, "maic_p2"},
    {StrategyKind::MaicAdaptive, "maic_adaptive"}, {StrategyKind::MaicRule, "maic_rule"},
};

void fail(const std::string& what) { throw std::invalid_argument("scenario: " + what); }

Matrix symmetric_correlation(double g12, double g13, double g23) {
  Matrix c(3, 3);
  c << 1.0, g12, g13, g12, 1.0, g23, g13, g23, 1.0;
  return c;
}

ParameterSegment uniform_mean_segment(int start, int dim, double mean, Matrix correlation) {
  return {start, Matrix::Constant(dim, 3, mean), std::move(correlation)};
}

std::vector<StrategySpec> comparison_strategies(double eta) {
  return {{StrategyKind::Atc, "ATC", 0.0},
          {StrategyKind::Mdlms, "MDLMS", eta},
          {StrategyKind::MaicP1, "MAIC-P1", 0.0},
          {StrategyKind::MaicP2, "MAIC-P2", 0.0},
          {StrategyKind::MaicAdaptive, "MAIC-adaptive", 0.0}};
}

Scenario base_scenario(const std::string& name) {
  const ReferenceNetwork net = reference_network();
  Scenario s;
  s.name = name;
  s.node_count = net.node_count;
  s.edges = net.edges;
  s.cluster_of = net.cluster_of;
  s.regressor_power = net.regressor_power;
  s.noise_power = net.noise_power;
  s.parameter_variance = net.parameter_variance;
  return s;
}

}  // namespace

std::string to_string(StrategyKind kind) {
  for (const auto& kn : kKindNames)
    if (kn.kind == kind) return kn.name;
  return "unknown";
}

StrategyKind strategy_kind_from_string(const std::string& name) {
  for (const auto& kn : kKindNames)
    if (name == kn.name) return kn.kind;
  fail("unknown strategy kind '" + name + "'");
  return StrategyKind::Atc;
}

void Scenario::validate() const {
  if (node_count < 1) fail("node count must be positive");
  if (static_cast<int>(cluster_of.size()) != node_count) fail("cluster assignment length differs from node count");
  if (dim < 1) fail("parameter dimension must be positive");
  if (regressor_power.size() != node_count) fail("regressor_power needs one entry per node");
  if (noise_power.size() != node_count) fail("noise_power needs one entry per node");
  if ((regressor_power.array() <= 0.0).any()) fail("regressor powers must be positive");
  if ((noise_power.array() < 0.0).any()) fail("noise powers must be nonnegative");
  const int p = cluster_count();
  if (parameter_variance.size() != p) fail("parameter_variance needs one entry per cluster");
  if ((parameter_variance.array() < 0.0).any()) fail("parameter variances must be nonnegative");
  if (variance_scale < 0.0) fail("variance_scale must be nonnegative");
  if (iterations < 1) fail("iterations must be at least 1");
  if (runs < 1) fail("runs must be at least 1");
  if (!(step_size > 0.0)) fail("step_size must be positive");
  if (alpha < 0.0 || alpha > 1.0) fail("alpha must lie in [0,1]");
  if (!(steady_fraction > 0.0 && steady_fraction <= 1.0)) fail("steady_fraction must lie in (0,1]");
  if (segments.empty()) fail("at least one parameter segment is required");
  if (segments.front().start != 1) fail("the first segment must start at i = 1");
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& seg = segments[s];
    if (s > 0 && seg.start <= segments[s - 1].start) fail("segment boundaries must be strictly increasing");
    if (seg.start > iterations) fail("segment boundary beyond the iteration count");
    if (seg.cluster_mean.rows() != dim || seg.cluster_mean.cols() != p) fail("segment mean must be M×P");
    if (seg.correlation.rows() != p || seg.correlation.cols() != p) fail("segment correlation must be P×P");
  }
  if (strategies.empty()) fail("no strategies selected");
  for (const auto& st : strategies) {
    if (st.label.empty()) fail("strategy label must not be empty");
    if (st.eta < 0.0) fail("eta must be nonnegative for '" + st.label + "'");
  }
  for (std::size_t i = 0; i < strategies.size(); ++i)
    for (std::size_t j = i + 1; j < strategies.size(); ++j)
      if (strategies[i].label == strategies[j].label) fail("duplicate strategy label '" + strategies[i].label + "'");
}

int Scenario::cluster_count() const {
  if (cluster_of.empty()) return 0;
  return *std::max_element(cluster_of.begin(), cluster_of.end()) + 1;
}

ClusteredTopology Scenario::topology() const { return ClusteredTopology(node_count, edges, cluster_of); }

SignalModel Scenario::model(std::size_t s) const {
  if (s >= segments.size()) fail("segment index out of range");
  std::vector<Matrix> ru;
  ru.reserve(static_cast<std::size_t>(node_count));
  for (int k = 0; k < node_count; ++k)
    ru.push_back(regressor_power(k) * Matrix::Identity(dim, dim));
  const Vector sigma_w = parameter_variance.cwiseSqrt();
  ParameterMoments moments =
      moments_from_correlation(segments[s].cluster_mean, sigma_w, variance_scale, segments[s].correlation);
  return SignalModel(dim, cluster_of, std::move(ru), noise_power, Vector::Constant(node_count, step_size),
                     std::move(moments));
}

// Placeholder profiles: one draw of sigma_u^2 ~ U[0.8, 1.8], sigma_v^2 ~ U[-15, -5] dB,
// sigma_w^2 ~ U[0.5, 1.5] (std::mt19937_64 seed 1), rounded.
ReferenceNetwork reference_network() {
  ReferenceNetwork net;
  net.node_count = 10;
  net.cluster_of = {0, 0, 0, 1, 1, 1, 2, 2, 2, 2};
  net.edges = {
      {0, 1}, {0, 2}, {1, 2},          // C1
      {3, 4}, {3, 5}, {4, 5},          // C2
      {6, 7}, {7, 8}, {8, 9}, {6, 9},  // C3
      {1, 4}, {2, 3}, {5, 6}, {2, 8}, {0, 9},
  };
  net.regressor_power.resize(10);
  net.regressor_power << 0.934, 0.936, 1.251, 0.821, 1.151, 1.711, 1.271, 0.874, 1.370, 1.435;
  net.noise_power.resize(10);
  net.noise_power << 0.0389, 0.1138, 0.1948, 0.0527, 0.0829, 0.0562, 0.0619, 0.2010, 0.0943, 0.0589;
  net.parameter_variance.resize(3);
  net.parameter_variance << 0.786, 1.249, 0.958;
  return net;
}

Scenario preset_a() {
  Scenario s = base_scenario("a");
  s.dim = 2;
  s.variance_scale = 0.01 * 0.01;
  s.step_size = 0.05;
  s.alpha = 0.7;
  s.segments = {uniform_mean_segment(1, s.dim, 0.7, symmetric_correlation(0.9, 0.5, 0.5))};
  s.strategies = comparison_strategies(1.0);
  return s;
}

Scenario preset_b(double gamma12) {
  Scenario s = base_scenario("b");
  s.dim = 1;
  s.variance_scale = 0.03 * 0.03;
  s.step_size = 0.1;
  s.alpha = 0.7;
  Rng profile_rng(derive_seed(0x5eedULL, 0));
  s.noise_power = noise_profile_uniform_db(s.node_count, -15.0, -5.0, profile_rng);
  s.segments = {uniform_mean_segment(1, s.dim, 1.0, symmetric_correlation(gamma12, 0.5, 0.5))};
  s.strategies = comparison_strategies(5.0);
  return s;
}

Scenario preset_c(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) fail("mean offset delta must lie in (0,1)");
  Scenario s = preset_a();
  s.name = "c";
  s.variance_scale = 0.03 * 0.03;
  Matrix mean(s.dim, 3);
  mean.col(0).setConstant(1.0 - delta);
  mean.col(1).setConstant(1.0);
  mean.col(2).setConstant(1.0 + delta);
  s.segments = {{1, mean, symmetric_correlation(0.9, 0.5, 0.5)}};
  return s;
}

Scenario preset_nonstationary() {
  Scenario s = preset_a();
  s.name = "nonstationary";
  s.iterations = 1000;
  const Matrix base = symmetric_correlation(0.9, 0.5, 0.5);
  s.segments = {uniform_mean_segment(1, s.dim, 0.8, base),
                uniform_mean_segment(250, s.dim, 0.6, symmetric_correlation(0.5, 0.1, 0.5)),
                uniform_mean_segment(500, s.dim, 1.2, symmetric_correlation(0.1, 0.1, 0.1)),
                uniform_mean_segment(750, s.dim, 0.8, base)};
  // eta = 12 is used verbatim for MDLMS in the tracking experiment, no tuning rationale given
  s.strategies = comparison_strategies(12.0);
  s.segment_ceiling = 1e-2;
  return s;
}

std::optional<Scenario> preset_by_name(const std::string& name) {
  if (name == "a") return preset_a();
  if (name == "b") return preset_b();
  if (name == "c") return preset_c();
  if (name == "nonstationary") return preset_nonstationary();
  return std::nullopt;
}

}  // namespace maic
