#pragma once

#include "maic/linalg.hpp"

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace maic {

/// Raised when a graph, cluster partition or weight matrix violates its invariants.
class TopologyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Neighborhood sets of one node, each sorted ascending. All contain node k
/// except `inter`.
struct Neighborhood {
  std::vector<int> all;         // N_k
  std::vector<int> intra;       // N_k ∩ C(k)
  std::vector<int> inter;       // N_k \ C(k)
  std::vector<int> inter_plus;  // inter ∪ {k}
};

using Edge = std::pair<int, int>;

/// Undirected connected graph with a cluster partition. Immutable after
/// construction; every node neighbors itself implicitly.
class ClusteredTopology {
 public:
  /// `cluster_of[k]` is the 0-based cluster of node k; cluster ids must cover
  /// 0..P-1 without gaps. Edges are undirected, self-loops and duplicates are
  /// rejected.
  ClusteredTopology(int node_count, const std::vector<Edge>& edges, std::vector<int> cluster_of);

  int node_count() const { return node_count_; }
  int cluster_count() const { return cluster_count_; }
  int cluster_of(int k) const { return cluster_of_[static_cast<std::size_t>(k)]; }
  const std::vector<int>& cluster_assignment() const { return cluster_of_; }
  const std::vector<int>& cluster_members(int p) const { return members_[static_cast<std::size_t>(p)]; }
  bool adjacent(int l, int k) const { return adjacency_(l, k) != 0; }
  const Neighborhood& neighborhood(int k) const { return hoods_[static_cast<std::size_t>(k)]; }
  const std::vector<Edge>& edges() const { return edges_; }

  /// n_k = |N_{I,k}^+|
  int inter_plus_size(int k) const { return static_cast<int>(neighborhood(k).inter_plus.size()); }

  /// Non-fatal findings from construction (e.g. internally disconnected clusters).
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  int node_count_;
  int cluster_count_ = 0;
  std::vector<int> cluster_of_;
  std::vector<std::vector<int>> members_;
  Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> adjacency_;
  std::vector<Edge> edges_;
  std::vector<Neighborhood> hoods_;
  std::vector<std::string> warnings_;
};

/// Connected components of an adjacency relation restricted to `nodes`
/// (all nodes when empty).
std::vector<std::vector<int>> connected_components(const ClusteredTopology& topo, const std::vector<int>& nodes);

/// Absolute per-column tolerance for stochasticity checks.
inline constexpr double kStochasticTol = 1e-12;

/// Metropolis rule applied within each cluster; symmetric and doubly stochastic.
Matrix metropolis_matrix(const ClusteredTopology& topo);

/// Inter-cluster averaging rule: rho(l,k) = 1/|N_{I,k}| for l in N_{I,k}.
Matrix averaging_rule_matrix(const ClusteredTopology& topo);

/// Maps MDLMS regularization weights to MAIC cooperation weights:
/// g(l,k) = mu_k·eta·rho(l,k), g(k,k) = 1 - mu_k·eta·Σ_l rho(l,k).
Matrix mdlms_to_maic_weights(const ClusteredTopology& topo, const Matrix& rho, double eta, const Vector& step_sizes);

/// Throws TopologyError unless A is nonnegative, left-stochastic and supported
/// on the intra-cluster neighborhoods.
void check_intra_weights(const ClusteredTopology& topo, const Matrix& a);

/// Throws TopologyError unless G is nonnegative, left-stochastic and supported
/// on N_{I,k}^+.
void check_inter_weights(const ClusteredTopology& topo, const Matrix& g);

/// Throws TopologyError unless rho is nonnegative, supported on N_{I,k} and each
/// column with nonempty N_{I,k} sums to one (empty columns must be zero).
void check_regularization_weights(const ClusteredTopology& topo, const Matrix& rho);

}  // namespace maic
