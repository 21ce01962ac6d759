#include "maic/topology.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>

namespace maic {

namespace {

std::string format_set(const std::vector<int>& s) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << '}';
  return os.str();
}

void check_columns(const Matrix& w, const char* what, const ClusteredTopology& topo,
                   const std::vector<int> Neighborhood::*support, bool allow_empty_zero) {
  const int n = topo.node_count();
  if (w.rows() != n || w.cols() != n) {
    std::ostringstream os;
    os << what << ": expected " << n << "x" << n << " matrix, got " << w.rows() << "x" << w.cols();
    throw TopologyError(os.str());
  }
  for (int k = 0; k < n; ++k) {
    const auto& allowed = topo.neighborhood(k).*support;
    double sum = 0.0;
    for (int l = 0; l < n; ++l) {
      const double v = w(l, k);
      if (!std::isfinite(v) || v < 0.0) {
        std::ostringstream os;
        os << what << ": entry (" << l << "," << k << ") = " << v << " is negative or non-finite";
        throw TopologyError(os.str());
      }
      if (v != 0.0 && !std::binary_search(allowed.begin(), allowed.end(), l)) {
        std::ostringstream os;
        os << what << ": entry (" << l << "," << k << ") = " << v << " lies outside the allowed support "
           << format_set(allowed) << " of node " << k;
        throw TopologyError(os.str());
      }
      sum += v;
    }
    if (allow_empty_zero && allowed.empty()) continue;
    if (std::abs(sum - 1.0) > kStochasticTol) {
      std::ostringstream os;
      os.precision(17);
      os << what << ": column " << k << " sums to " << sum << ", not 1";
      throw TopologyError(os.str());
    }
  }
}

}  // namespace

ClusteredTopology::ClusteredTopology(int node_count, const std::vector<Edge>& edges, std::vector<int> assignment)
    : node_count_(node_count), cluster_of_(std::move(assignment)) {
  if (node_count_ <= 0) throw TopologyError("node count must be positive");
  if (static_cast<int>(cluster_of_.size()) != node_count_) {
    std::ostringstream os;
    os << "cluster assignment has " << cluster_of_.size() << " entries for " << node_count_ << " nodes";
    throw TopologyError(os.str());
  }
  for (int k = 0; k < node_count_; ++k) {
    const int p = cluster_of_[static_cast<std::size_t>(k)];
    if (p < 0) throw TopologyError("node " + std::to_string(k) + " has negative cluster id");
    cluster_count_ = std::max(cluster_count_, p + 1);
  }
  members_.assign(static_cast<std::size_t>(cluster_count_), {});
  for (int k = 0; k < node_count_; ++k) members_[static_cast<std::size_t>(cluster_of_[static_cast<std::size_t>(k)])].push_back(k);
  for (int p = 0; p < cluster_count_; ++p)
    if (members_[static_cast<std::size_t>(p)].empty()) throw TopologyError("cluster " + std::to_string(p) + " is empty");

  adjacency_ = Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic>::Zero(node_count_, node_count_);
  for (int k = 0; k < node_count_; ++k) adjacency_(k, k) = 1;
  std::set<Edge> seen;
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= node_count_ || b >= node_count_) {
      std::ostringstream os;
      os << "edge (" << a << "," << b << ") references a node outside 0.." << node_count_ - 1;
      throw TopologyError(os.str());
    }
    if (a == b) throw TopologyError("self-loop on node " + std::to_string(a) + " (self-membership is implicit)");
    const Edge key{std::min(a, b), std::max(a, b)};
    if (!seen.insert(key).second) {
      std::ostringstream os;
      os << "duplicate edge (" << key.first << "," << key.second << ")";
      throw TopologyError(os.str());
    }
    adjacency_(a, b) = adjacency_(b, a) = 1;
    edges_.push_back(key);
  }

  const auto components = connected_components(*this, {});
  if (components.size() > 1) {
    std::ostringstream os;
    os << "graph is disconnected with " << components.size() << " components:";
    for (const auto& c : components) os << ' ' << format_set(c);
    throw TopologyError(os.str());
  }

  hoods_.resize(static_cast<std::size_t>(node_count_));
  for (int k = 0; k < node_count_; ++k) {
    auto& h = hoods_[static_cast<std::size_t>(k)];
    for (int l = 0; l < node_count_; ++l) {
      if (!adjacent(l, k)) continue;
      h.all.push_back(l);
      if (cluster_of(l) == cluster_of(k)) {
        h.intra.push_back(l);
      } else {
        h.inter.push_back(l);
      }
    }
    h.inter_plus = h.inter;
    h.inter_plus.insert(std::lower_bound(h.inter_plus.begin(), h.inter_plus.end(), k), k);
  }

  for (int p = 0; p < cluster_count_; ++p) {
    const auto parts = connected_components(*this, members_[static_cast<std::size_t>(p)]);
    if (parts.size() > 1) {
      std::ostringstream os;
      os << "cluster " << p << " is not internally connected (" << parts.size() << " pieces)";
      warnings_.push_back(os.str());
    }
  }
}

std::vector<std::vector<int>> connected_components(const ClusteredTopology& topo, const std::vector<int>& nodes) {
  const int n = topo.node_count();
  std::vector<char> in_scope(static_cast<std::size_t>(n), nodes.empty() ? 1 : 0);
  for (int k : nodes) in_scope[static_cast<std::size_t>(k)] = 1;
  std::vector<char> visited(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < n; ++s) {
    if (!in_scope[static_cast<std::size_t>(s)] || visited[static_cast<std::size_t>(s)]) continue;
    std::vector<int> comp;
    std::queue<int> frontier;
    frontier.push(s);
    visited[static_cast<std::size_t>(s)] = 1;
    while (!frontier.empty()) {
      const int v = frontier.front();
      frontier.pop();
      comp.push_back(v);
      for (int u = 0; u < n; ++u) {
        if (u == v || !topo.adjacent(u, v) || !in_scope[static_cast<std::size_t>(u)] || visited[static_cast<std::size_t>(u)])
          continue;
        visited[static_cast<std::size_t>(u)] = 1;
        frontier.push(u);
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

Matrix metropolis_matrix(const ClusteredTopology& topo) {
  const int n = topo.node_count();
  Matrix a = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const auto& intra_k = topo.neighborhood(k).intra;
    double off = 0.0;
    for (int l : intra_k) {
      if (l == k) continue;
      const auto deg = std::max(intra_k.size(), topo.neighborhood(l).intra.size());
      a(l, k) = 1.0 / static_cast<double>(deg);
      off += a(l, k);
    }
    a(k, k) = 1.0 - off;
  }
  return a;
}

Matrix averaging_rule_matrix(const ClusteredTopology& topo) {
  const int n = topo.node_count();
  Matrix rho = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const auto& inter = topo.neighborhood(k).inter;
    for (int l : inter) rho(l, k) = 1.0 / static_cast<double>(inter.size());
  }
  return rho;
}

Matrix mdlms_to_maic_weights(const ClusteredTopology& topo, const Matrix& rho, double eta, const Vector& step_sizes) {
  check_regularization_weights(topo, rho);
  const int n = topo.node_count();
  if (eta < 0.0) throw TopologyError("regularization strength eta must be nonnegative");
  if (step_sizes.size() != n) throw TopologyError("step-size vector length does not match node count");
  Matrix g = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    double off = 0.0;
    for (int l : topo.neighborhood(k).inter) {
      g(l, k) = step_sizes(k) * eta * rho(l, k);
      off += g(l, k);
    }
    if (off > 1.0) {
      std::ostringstream os;
      os << "node " << k << ": mu*eta*sum(rho) = " << off << " exceeds 1, self weight would be negative";
      throw TopologyError(os.str());
    }
    g(k, k) = 1.0 - off;
  }
  return g;
}

void check_intra_weights(const ClusteredTopology& topo, const Matrix& a) {
  check_columns(a, "intra-cluster weights", topo, &Neighborhood::intra, false);
}

void check_inter_weights(const ClusteredTopology& topo, const Matrix& g) {
  check_columns(g, "inter-cluster weights", topo, &Neighborhood::inter_plus, false);
}

void check_regularization_weights(const ClusteredTopology& topo, const Matrix& rho) {
  check_columns(rho, "regularization weights", topo, &Neighborhood::inter, true);
}

}  // namespace maic
