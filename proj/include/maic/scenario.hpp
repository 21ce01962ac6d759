#pragma once

#include "maic/signal_model.hpp"
#include "maic/topology.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace maic {

enum class StrategyKind { Atc, Mdlms, MaicP1, MaicP2, MaicAdaptive, MaicRule };

std::string to_string(StrategyKind kind);
StrategyKind strategy_kind_from_string(const std::string& name);

struct StrategySpec {
  StrategyKind kind = StrategyKind::Atc;
  std::string label;
  double eta = 0.0;  // MDLMS regularization, and the mapping used by MaicRule
};

/// Parameter moments in force from time instant `start` (1-based) onward.
struct ParameterSegment {
  int start = 1;
  Matrix cluster_mean;  // M×P
  Matrix correlation;   // P×P
};

/// Complete description of one experiment. Node and cluster ids are 0-based;
/// time instants are 1-based.
struct Scenario {
  std::string name;
  int node_count = 0;
  std::vector<Edge> edges;
  std::vector<int> cluster_of;

  int dim = 1;
  Vector regressor_power;     // σ²_{u,k}; R_{u,k} = σ²_{u,k} I_M
  Vector noise_power;         // σ²_{v,k}
  Vector parameter_variance;  // σ²_w per cluster
  double variance_scale = 0.0;  // s_v
  std::vector<ParameterSegment> segments;

  double step_size = 0.05;
  double alpha = 0.7;
  std::vector<StrategySpec> strategies;

  int iterations = 500;
  int runs = 500;
  std::uint64_t seed = 1;
  double steady_fraction = 0.1;
  /// Optional ceiling (linear) every segment's steady-state network MSD must stay below.
  std::optional<double> segment_ceiling;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;

  ClusteredTopology topology() const;
  /// Signal model with the moments of segment `s`.
  SignalModel model(std::size_t s = 0) const;
  int cluster_count() const;
};

/// Ten-node, three-cluster network shared by the bundled scenarios.
struct ReferenceNetwork {
  int node_count;
  std::vector<Edge> edges;
  std::vector<int> cluster_of;
  Vector regressor_power;
  Vector noise_power;
  Vector parameter_variance;
};

ReferenceNetwork reference_network();

/// Illustrative comparison: M = 2, common mean 0.7, correlation blocks (0.9, 0.5).
Scenario preset_a();
/// Cluster-benefit study: M = 1, mean 1, noise uniform in [-15,-5] dB, gamma12 swept.
Scenario preset_b(double gamma12 = 0.9);
/// Different means (1-δ, 1, 1+δ).
Scenario preset_c(double delta = 0.06);
/// Tracking: moments switch at i = 250, 500, 750.
Scenario preset_nonstationary();

/// Looks up a preset by name ("a", "b", "c", "nonstationary").
std::optional<Scenario> preset_by_name(const std::string& name);

}  // namespace maic
