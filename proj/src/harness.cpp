#include "maic/harness.hpp"

#include "maic/strategies.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace maic {

SteadyStat mean_and_se(const std::vector<double>& values) {
  SteadyStat s;
  const auto n = static_cast<double>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return s;
}

SteadyStat paired_difference(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired samples must have equal length");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return mean_and_se(d);
}

const StrategyResult& ScenarioResult::find(const std::string& label) const {
  for (const auto& s : strategies)
    if (s.spec.label == label) return s;
  throw std::out_of_range("no strategy labelled '" + label + "' in result");
}

std::vector<std::pair<int, int>> steady_windows(const Scenario& scenario) {
  std::vector<std::pair<int, int>> out;
  for (std::size_t s = 0; s < scenario.segments.size(); ++s) {
    const int first = scenario.segments[s].start;
    const int last = s + 1 < scenario.segments.size() ? scenario.segments[s + 1].start - 1 : scenario.iterations;
    const int len = last - first + 1;
    const int width = std::max(1, static_cast<int>(std::ceil(scenario.steady_fraction * len - 1e-9)));
    out.emplace_back(last - width + 1, last);
  }
  return out;
}

double msd_gain(double steady_a, double steady_b) { return to_db(steady_b) - to_db(steady_a); }

double msd_gain(const StrategyResult& a, const StrategyResult& b) { return msd_gain(a.steady.mean, b.steady.mean); }

double msd_gain_se(const StrategyResult& a, const StrategyResult& b) {
  const auto& ra = a.run_steady.back();
  const auto& rb = b.run_steady.back();
  if (ra.size() != rb.size() || ra.empty()) return 0.0;
  const double ma = a.steady.mean, mb = b.steady.mean;
  std::vector<double> z(ra.size());
  for (std::size_t r = 0; r < ra.size(); ++r) z[r] = ra[r] / ma - rb[r] / mb;
  return 10.0 / std::log(10.0) * mean_and_se(z).se;
}

FixedWeights fixed_weights(const StrategySpec& spec, const SignalModel& model, const ClusteredTopology& topo,
                           const Matrix& a, const QpOptions& qp) {
  const int n = topo.node_count();
  switch (spec.kind) {
    case StrategyKind::Atc:
      return {Matrix::Identity(n, n), std::nullopt};
    case StrategyKind::Mdlms:
    case StrategyKind::MaicRule:
      return {mdlms_to_maic_weights(topo, averaging_rule_matrix(topo), spec.eta, model.step_sizes()), std::nullopt};
    case StrategyKind::MaicP1: {
      WeightSolution sol = solve_p1(model, topo, a, qp);
      Matrix g = sol.g;
      return {std::move(g), std::move(sol)};
    }
    case StrategyKind::MaicP2: {
      WeightSolution sol = solve_p2_all_nodes(model, topo, qp);
      Matrix g = sol.g;
      return {std::move(g), std::move(sol)};
    }
    case StrategyKind::MaicAdaptive:
      break;
  }
  throw std::invalid_argument("strategy '" + spec.label + "' has no fixed cooperation weights");
}

namespace {

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t observation_hash(std::uint64_t h, const Observations& obs) {
  h = fnv1a(h, obs.d.data(), sizeof(double) * static_cast<std::size_t>(obs.d.size()));
  return fnv1a(h, obs.u.data(), sizeof(double) * static_cast<std::size_t>(obs.u.size()));
}

constexpr std::uint64_t kFnvBasis = 0xcbf29ce484222325ULL;

bool uses_fixed_weights(StrategyKind k) {
  return k == StrategyKind::MaicP1 || k == StrategyKind::MaicP2 || k == StrategyKind::MaicRule;
}

bool has_theory(StrategyKind k) { return k == StrategyKind::Atc || uses_fixed_weights(k); }

// Everything immutable shared by the workers.
struct Plan {
  const Scenario* scenario = nullptr;
  ClusteredTopology topo;
  Matrix a;
  Matrix rho;
  std::vector<SignalModel> models;
  std::vector<ParameterSampler> samplers;
  std::vector<std::vector<Matrix>> weights;  // [strategy][segment]
  std::vector<std::pair<int, int>> windows;
  RunOptions options;
};

std::unique_ptr<Strategy> instantiate(const Plan& plan, std::size_t s) {
  const Scenario& sc = *plan.scenario;
  const StrategySpec& spec = sc.strategies[s];
  const Vector mu = plan.models.front().step_sizes();
  switch (spec.kind) {
    case StrategyKind::Atc:
      return make_atc(plan.topo, sc.dim, plan.a, mu);
    case StrategyKind::Mdlms:
      return make_mdlms(plan.topo, sc.dim, plan.a, plan.rho, spec.eta, mu);
    case StrategyKind::MaicAdaptive:
      return make_maic_adaptive(plan.topo, sc.dim, plan.a, sc.alpha, mu, plan.options.qp);
    case StrategyKind::MaicP1:
    case StrategyKind::MaicP2:
    case StrategyKind::MaicRule:
      return make_maic(plan.topo, sc.dim, plan.a, plan.weights[s].front(), mu);
  }
  throw std::logic_error("unhandled strategy kind");
}

struct RunRecord {
  bool completed = false;
  AbortedRun abort{};
  std::uint64_t digest = 0;
  bool streams_matched = true;
  std::vector<std::vector<double>> steady;          // [strategy][segment]
  std::vector<std::vector<double>> cluster_steady;  // [strategy][cluster]
  std::vector<long> diagnostics;                    // [strategy]
  std::vector<Matrix> final_weights;                // [strategy], run 0 only
};

// Per-block partial sums: [strategy][(1 + P) * T], row 0 network, rows 1.. clusters.
struct BlockSums {
  std::vector<std::vector<double>> curves;
};

class Worker {
 public:
  explicit Worker(const Plan& plan) : plan_(plan) {
    for (std::size_t s = 0; s < plan.scenario->strategies.size(); ++s) strategies_.push_back(instantiate(plan, s));
    const int t = plan.scenario->iterations;
    const int p = plan.scenario->cluster_count();
    net_.assign(strategies_.size(), std::vector<double>(static_cast<std::size_t>((1 + p) * t), 0.0));
  }

  RunRecord run(int r) {
    const Scenario& sc = *plan_.scenario;
    const int t_max = sc.iterations, n = sc.node_count, p = sc.cluster_count();
    const std::size_t ns = strategies_.size();
    RunRecord rec;
    rec.steady.assign(ns, std::vector<double>(sc.segments.size(), 0.0));
    rec.cluster_steady.assign(ns, std::vector<double>(static_cast<std::size_t>(p), 0.0));
    rec.diagnostics.assign(ns, 0);

    for (std::size_t s = 0; s < ns; ++s) {
      strategies_[s]->reset();
      if (uses_fixed_weights(sc.strategies[s].kind)) strategies_[s]->set_cooperation_weights(plan_.weights[s][0]);
    }
    std::vector<std::uint64_t> checks(ns, kFnvBasis);
    std::vector<double> sizes(static_cast<std::size_t>(p), 0.0);
    for (int k = 0; k < n; ++k) sizes[static_cast<std::size_t>(sc.cluster_of[static_cast<std::size_t>(k)])] += 1.0;

    Rng rng(derive_seed(sc.seed, static_cast<std::uint64_t>(r)));
    Matrix truth;
    std::size_t seg = 0;
    const std::size_t stride = static_cast<std::size_t>(t_max);
    for (int i = 1; i <= t_max; ++i) {
      if (seg + 1 < sc.segments.size() && i == sc.segments[seg + 1].start) {
        ++seg;
        for (std::size_t s = 0; s < ns; ++s)
          if (uses_fixed_weights(sc.strategies[s].kind))
            strategies_[s]->set_cooperation_weights(plan_.weights[s][seg]);
      }
      if (i == sc.segments[seg].start) truth = plan_.samplers[seg].draw(rng);
      const Observations obs = observe_all(truth, plan_.models.front(), rng);

      for (std::size_t s = 0; s < ns; ++s) {
        checks[s] = observation_hash(checks[s], obs);
        strategies_[s]->step(obs);
        const Eigen::RowVectorXd err = (truth - strategies_[s]->estimates()).colwise().squaredNorm();
        const double worst = err.maxCoeff();
        if (!(worst <= plan_.options.divergence_guard)) {
          rec.abort = {r, sc.strategies[s].label, i};
          return rec;
        }
        auto& row = net_[s];
        const std::size_t idx = static_cast<std::size_t>(i - 1);
        row[idx] = err.sum() / n;
        for (int c = 0; c < p; ++c) row[(1 + static_cast<std::size_t>(c)) * stride + idx] = 0.0;
        for (int k = 0; k < n; ++k) {
          const auto c = static_cast<std::size_t>(sc.cluster_of[static_cast<std::size_t>(k)]);
          row[(1 + c) * stride + idx] += err(k);
        }
        for (std::size_t c = 0; c < static_cast<std::size_t>(p); ++c) row[(1 + c) * stride + idx] /= sizes[c];
      }
    }

    rec.completed = true;
    rec.digest = checks.front();
    for (std::size_t s = 0; s < ns; ++s) {
      if (checks[s] != checks.front()) rec.streams_matched = false;
      rec.diagnostics[s] = strategies_[s]->diagnostics_count();
      const auto& row = net_[s];
      for (std::size_t g = 0; g < plan_.windows.size(); ++g) {
        const auto [first, last] = plan_.windows[g];
        double acc = 0.0;
        for (int i = first; i <= last; ++i) acc += row[static_cast<std::size_t>(i - 1)];
        rec.steady[s][g] = acc / (last - first + 1);
      }
      const auto [first, last] = plan_.windows.back();
      for (std::size_t c = 0; c < static_cast<std::size_t>(p); ++c) {
        double acc = 0.0;
        for (int i = first; i <= last; ++i) acc += row[(1 + c) * stride + static_cast<std::size_t>(i - 1)];
        rec.cluster_steady[s][c] = acc / (last - first + 1);
      }
      if (r == 0) rec.final_weights.push_back(strategies_[s]->cooperation_weights());
    }
    return rec;
  }

  // Curves of the last completed run.
  const std::vector<std::vector<double>>& curves() const { return net_; }

 private:
  const Plan& plan_;
  std::vector<std::unique_ptr<Strategy>> strategies_;
  std::vector<std::vector<double>> net_;
};

}  // namespace

ScenarioResult run_scenario(const Scenario& scenario, const RunOptions& options) {
  scenario.validate();
  if (options.workers < 1) throw std::invalid_argument("worker count must be at least 1");

  Plan plan{&scenario, scenario.topology(), Matrix(), Matrix(), {}, {}, {}, steady_windows(scenario), options};
  plan.a = metropolis_matrix(plan.topo);
  plan.rho = averaging_rule_matrix(plan.topo);
  for (std::size_t s = 0; s < scenario.segments.size(); ++s) {
    plan.models.push_back(scenario.model(s));
    plan.samplers.emplace_back(plan.models.back());
  }

  const std::size_t ns = scenario.strategies.size();
  const int p = scenario.cluster_count();
  const int t_max = scenario.iterations;
  ScenarioResult result;
  result.name = scenario.name;
  result.iterations = t_max;
  result.runs_requested = scenario.runs;
  result.windows = plan.windows;
  result.strategies.resize(ns);
  plan.weights.resize(ns);

  for (std::size_t s = 0; s < ns; ++s) {
    const StrategySpec& spec = scenario.strategies[s];
    StrategyResult& out = result.strategies[s];
    out.spec = spec;
    if (spec.kind == StrategyKind::MaicAdaptive) continue;
    for (const auto& model : plan.models) {
      FixedWeights fw = fixed_weights(spec, model, plan.topo, plan.a, options.qp);
      plan.weights[s].push_back(fw.g);
      out.weights.push_back(fw.g);
      if (fw.certificate) out.certificates.push_back(*fw.certificate);
    }
    if (options.compute_theory && has_theory(spec.kind)) {
      try {
        out.theory = steady_state_msd(plan.a, plan.weights[s].front(), plan.models.front());
      } catch (const TheoryError& e) {
        out.theory_note = e.what();
      }
    } else if (spec.kind == StrategyKind::Mdlms) {
      out.theory_note = "no closed-form steady state for the regularized recursion";
    }
  }

  // Runs are processed in fixed blocks; each block's partial sums are reduced
  // in block order afterwards so the result does not depend on scheduling.
  const int blocks = (scenario.runs + kRunBlock - 1) / kRunBlock;
  const std::size_t width = static_cast<std::size_t>((1 + p) * t_max);
  std::vector<BlockSums> partial(static_cast<std::size_t>(blocks));
  std::vector<RunRecord> records(static_cast<std::size_t>(scenario.runs));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&]() {
    try {
      Worker worker(plan);
      for (int b = next++; b < blocks; b = next++) {
        BlockSums sums;
        sums.curves.assign(ns, std::vector<double>(width, 0.0));
        const int first = b * kRunBlock;
        const int last = std::min(scenario.runs, first + kRunBlock);
        for (int r = first; r < last; ++r) {
          RunRecord rec = worker.run(r);
          if (rec.completed)
            for (std::size_t s = 0; s < ns; ++s) {
              const auto& c = worker.curves()[s];
              auto& acc = sums.curves[s];
              for (std::size_t j = 0; j < width; ++j) acc[j] += c[j];
            }
          records[static_cast<std::size_t>(r)] = std::move(rec);
        }
        partial[static_cast<std::size_t>(b)] = std::move(sums);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = blocks;
    }
  };

  const int workers = std::min(options.workers, std::max(1, blocks));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::uint64_t digest = kFnvBasis;
  for (const auto& rec : records) {
    if (!rec.completed) {
      result.aborted.push_back(rec.abort);
      continue;
    }
    ++result.runs_completed;
    digest = fnv1a(digest, &rec.digest, sizeof(rec.digest));
    if (!rec.streams_matched) result.streams_matched = false;
  }
  result.stream_digest = digest;
  if (result.runs_completed == 0) throw std::runtime_error("every Monte-Carlo run diverged");

  for (std::size_t s = 0; s < ns; ++s) {
    StrategyResult& out = result.strategies[s];
    std::vector<KahanSum> acc(width);
    for (const auto& blk : partial)
      for (std::size_t j = 0; j < width; ++j) acc[j].add(blk.curves[s][j]);
    const double runs = result.runs_completed;
    out.msd.resize(static_cast<std::size_t>(t_max));
    out.cluster_msd.assign(static_cast<std::size_t>(p), std::vector<double>(static_cast<std::size_t>(t_max)));
    for (int i = 0; i < t_max; ++i) {
      out.msd[static_cast<std::size_t>(i)] = acc[static_cast<std::size_t>(i)].sum / runs;
      for (int c = 0; c < p; ++c)
        out.cluster_msd[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] =
            acc[static_cast<std::size_t>((1 + c) * t_max + i)].sum / runs;
    }

    out.run_steady.assign(plan.windows.size(), {});
    out.run_cluster_steady.assign(static_cast<std::size_t>(p), {});
    for (const auto& rec : records) {
      if (!rec.completed) continue;
      for (std::size_t g = 0; g < plan.windows.size(); ++g) out.run_steady[g].push_back(rec.steady[s][g]);
      for (std::size_t c = 0; c < static_cast<std::size_t>(p); ++c)
        out.run_cluster_steady[c].push_back(rec.cluster_steady[s][c]);
      out.diagnostics += rec.diagnostics[s];
    }
    for (const auto& v : out.run_steady) out.segment_steady.push_back(mean_and_se(v));
    for (const auto& v : out.run_cluster_steady) out.cluster_steady.push_back(mean_and_se(v));
    out.steady = out.segment_steady.back();
    if (scenario.strategies[s].kind == StrategyKind::MaicAdaptive && !records.front().final_weights.empty())
      out.weights.push_back(records.front().final_weights[s]);
  }
  return result;
}

}  // namespace maic
