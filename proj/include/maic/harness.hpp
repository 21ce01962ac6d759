#pragma once

#include "maic/scenario.hpp"
#include "maic/theory.hpp"
#include "maic/weight_optimizer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace maic {

/// Mean and Monte-Carlo standard error of a per-run statistic.
struct SteadyStat {
  double mean = 0.0;
  double se = 0.0;
};

SteadyStat mean_and_se(const std::vector<double>& values);

/// Mean and standard error of the paired differences a_r - b_r.
SteadyStat paired_difference(const std::vector<double>& a, const std::vector<double>& b);

struct StrategyResult {
  StrategySpec spec;
  /// Cooperation weights per segment (identity for ATC, mapped weights for MDLMS,
  /// final weights of run 0 for the adaptive strategy).
  std::vector<Matrix> weights;
  /// Certificates of the optimized weights per segment (P1/P2 only).
  std::vector<WeightSolution> certificates;

  std::vector<double> msd;                       // network MSD, linear, index i-1
  std::vector<std::vector<double>> cluster_msd;  // [cluster][i-1]

  /// Per-run steady-state network MSD for each segment window: [segment][run].
  std::vector<std::vector<double>> run_steady;
  /// Per-run steady-state per-cluster MSD over the final window: [cluster][run].
  std::vector<std::vector<double>> run_cluster_steady;

  std::vector<SteadyStat> segment_steady;  // network, per segment
  std::vector<SteadyStat> cluster_steady;  // final window, per cluster
  SteadyStat steady;                       // final window, network

  std::optional<TheoryReport> theory;  // first segment, fixed-weight strategies
  std::string theory_note;
  long diagnostics = 0;  // adaptive QP fallbacks summed over runs
};

struct AbortedRun {
  int run;
  std::string strategy;
  int iteration;
};

struct ScenarioResult {
  std::string name;
  int iterations = 0;
  int runs_requested = 0;
  int runs_completed = 0;
  std::vector<AbortedRun> aborted;
  std::vector<std::pair<int, int>> windows;  // [first, last] time instants per segment
  std::vector<StrategyResult> strategies;
  std::uint64_t stream_digest = 0;  // combined per-run observation checksums
  bool streams_matched = true;      // every strategy consumed the identical stream

  const StrategyResult& find(const std::string& label) const;
};

struct RunOptions {
  int workers = 1;
  double divergence_guard = 1e12;
  bool compute_theory = true;
  QpOptions qp;
};

/// Number of runs reduced together; block membership does not depend on the
/// worker count, which keeps the reduction order fixed.
inline constexpr int kRunBlock = 16;

ScenarioResult run_scenario(const Scenario& scenario, const RunOptions& options = {});

/// Steady-state windows: the final `fraction` of each segment, at least one instant.
std::vector<std::pair<int, int>> steady_windows(const Scenario& scenario);

/// Steady-state (dB) of b minus that of a; positive when a improves on b.
double msd_gain(const StrategyResult& a, const StrategyResult& b);
double msd_gain(double steady_a, double steady_b);

/// Standard error of msd_gain from the per-run values (delta method on the
/// paired log-ratio).
double msd_gain_se(const StrategyResult& a, const StrategyResult& b);

/// Cooperation weights a fixed-weight strategy uses for a given model.
struct FixedWeights {
  Matrix g;
  std::optional<WeightSolution> certificate;
};

FixedWeights fixed_weights(const StrategySpec& spec, const SignalModel& model, const ClusteredTopology& topo,
                           const Matrix& a, const QpOptions& qp = {});

}  // namespace maic
