#include "maic/harness.hpp"
#include "maic/io.hpp"
#include "maic/strategies.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>

using namespace maic;

namespace {

constexpr int kExitInvalid = 2;    // rejected input or violated precondition
constexpr int kExitInvariant = 3;  // a result failed a runtime invariant

struct ScenarioArgs {
  std::string scenario = "a";
  std::optional<double> gamma12;
  std::optional<double> delta;
  std::optional<int> runs;
  std::optional<int> iters;
  std::optional<std::uint64_t> seed;
};

void add_scenario_flags(CLI::App* cmd, ScenarioArgs& args) {
  cmd->add_option("--scenario", args.scenario, "preset (a|b|c|nonstationary) or scenario JSON path")
      ->capture_default_str();
  cmd->add_option("--gamma12", args.gamma12, "preset b: correlation between clusters 1 and 2");
  cmd->add_option("--delta", args.delta, "preset c: mean offset");
}

Scenario resolve(const ScenarioArgs& args) {
  if (args.gamma12 && args.scenario != "b") throw std::invalid_argument("--gamma12 only applies to preset b");
  if (args.delta && args.scenario != "c") throw std::invalid_argument("--delta only applies to preset c");
  Scenario s;
  if (args.scenario == "b")
    s = preset_b(args.gamma12.value_or(0.9));
  else if (args.scenario == "c")
    s = preset_c(args.delta.value_or(0.06));
  else if (auto p = preset_by_name(args.scenario))
    s = *p;
  else
    s = load_scenario(args.scenario);
  if (args.runs) s.runs = *args.runs;
  if (args.iters) s.iterations = *args.iters;
  if (args.seed) s.seed = *args.seed;
  s.validate();
  return s;
}

std::string lower(std::string x) {
  std::transform(x.begin(), x.end(), x.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return x;
}

std::vector<StrategySpec> select_strategies(const Scenario& s, const std::vector<std::string>& wanted) {
  if (wanted.empty()) return s.strategies;
  std::vector<StrategySpec> out;
  for (const auto& w : wanted) {
    bool found = false;
    for (const auto& st : s.strategies)
      if (lower(st.label) == lower(w) || to_string(st.kind) == lower(w)) {
        out.push_back(st);
        found = true;
      }
    if (!found) throw std::invalid_argument("strategy '" + w + "' is not part of scenario " + s.name);
  }
  return out;
}

int cmd_topology(const ScenarioArgs& args) {
  const Scenario s = resolve(args);
  const ClusteredTopology topo = s.topology();
  auto list = [](const std::vector<int>& v) {
    std::string out = "{";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out + "}";
  };
  std::cout << "nodes " << topo.node_count() << ", clusters " << topo.cluster_count() << ", edges "
            << topo.edges().size() << '\n';
  for (int k = 0; k < topo.node_count(); ++k) {
    const auto& h = topo.neighborhood(k);
    std::cout << "node " << k << " cluster " << topo.cluster_of(k) << "  N=" << list(h.all) << "  N_C=" << list(h.intra)
              << "  N_I=" << list(h.inter) << "  N_I+=" << list(h.inter_plus) << '\n';
  }
  for (const auto& w : topo.warnings()) std::cerr << "warning: " << w << '\n';
  check_intra_weights(topo, metropolis_matrix(topo));
  check_regularization_weights(topo, averaging_rule_matrix(topo));
  return 0;
}

Matrix weights_for(const Scenario& s, const std::string& source, const ClusteredTopology& topo, const Matrix& a) {
  const SignalModel model = s.model(0);
  const std::string key = lower(source);
  if (key == "atc" || key == "identity") return Matrix::Identity(s.node_count, s.node_count);
  if (key == "p1") return solve_p1(model, topo, a).g;
  if (key == "p2") return solve_p2_all_nodes(model, topo).g;
  return read_matrix_csv(source);
}

int cmd_theory(const ScenarioArgs& args, const std::vector<std::string>& weights) {
  const Scenario s = resolve(args);
  const ClusteredTopology topo = s.topology();
  const Matrix a = metropolis_matrix(topo);
  const SignalModel model = s.model(0);
  Json out;
  out["scenario"] = s.name;
  const MeanStabilityBound bound = mean_stability_bound(model);
  out["step_size_bounds"] = std::vector<double>(bound.bound.data(), bound.bound.data() + bound.bound.size());
  Json reports = Json::array();
  int status = 0;
  for (const auto& w : weights) {
    Json e{{"weights", w}};
    const Matrix g = weights_for(s, w, topo, a);
    check_inter_weights(topo, g);
    const Matrix b = build_b(a, g, model);
    e["rho_b"] = spectral_radius(b);
    e["block_max_norm_bound"] = [&] {
      const auto mm = build_moments(model);
      return block_max_norm(Matrix(Matrix::Identity(mm.ru.rows(), mm.ru.cols()) - mm.mcal * mm.ru), s.dim);
    }();
    try {
      e["report"] = theory_json(steady_state_msd(a, g, model));
    } catch (const TheoryError& err) {
      e["error"] = err.what();
      status = kExitInvalid;
    }
    reports.push_back(e);
  }
  out["reports"] = reports;
  std::cout << out.dump(2) << '\n';
  return status;
}

int cmd_optimize(const ScenarioArgs& args, const std::string& method, const std::string& out_weights,
                 const std::string& out_certificate, int segment) {
  const Scenario s = resolve(args);
  const ClusteredTopology topo = s.topology();
  const Matrix a = metropolis_matrix(topo);
  if (segment < 0 || segment >= static_cast<int>(s.segments.size()))
    throw std::invalid_argument("segment index out of range");
  const SignalModel model = s.model(static_cast<std::size_t>(segment));
  WeightSolution sol;
  if (method == "p1") {
    sol = solve_p1(model, topo, a);
  } else if (method == "p2") {
    sol = solve_p2_all_nodes(model, topo);
  } else {
    // one run of the adaptive selection; the certificate reports its final step
    auto strat = make_maic_adaptive(topo, s.dim, a, s.alpha, model.step_sizes());
    const ParameterSampler sampler(model);
    Rng rng(derive_seed(s.seed, 0));
    const Matrix truth = sampler.draw(rng);
    for (int i = 0; i < s.iterations; ++i) strat->step(observe_all(truth, model, rng));
    sol.g = strat->cooperation_weights();
    sol.iterations = s.iterations;
    sol.certified = strat->diagnostics_count() == 0;
    sol.objective = std::nan("");
  }
  check_inter_weights(topo, sol.g);
  Json cert = certificate_json(sol);
  cert["method"] = method;
  cert["scenario"] = s.name;
  if (method == "adaptive-preview") {
    cert.erase("objective");
    cert.erase("kkt_residual");
  }
  if (out_weights.empty()) {
    std::cout << sol.g.format(Eigen::IOFormat(Eigen::FullPrecision, 0, ",", "\n")) << '\n';
  } else {
    write_matrix_csv(out_weights, sol.g);
  }
  if (out_certificate.empty()) {
    std::cerr << cert.dump(2) << '\n';
  } else {
    std::ofstream os(out_certificate);
    os << cert.dump(2) << '\n';
  }
  return sol.certified ? 0 : kExitInvariant;
}

int cmd_simulate(const ScenarioArgs& args, const std::vector<std::string>& strategies, const std::string& out,
                 int workers) {
  Scenario s = resolve(args);
  s.strategies = select_strategies(s, strategies);
  RunOptions opts;
  opts.workers = workers;
  const ScenarioResult r = run_scenario(s, opts);
  write_outputs(out, r);

  int status = 0;
  if (!r.streams_matched) {
    std::cerr << "invariant violated: strategies consumed different observation streams\n";
    status = kExitInvariant;
  }
  for (const auto& st : r.strategies)
    for (double v : st.msd)
      if (!std::isfinite(v) || v < 0.0) {
        std::cerr << "invariant violated: non-finite MSD for " << st.spec.label << '\n';
        status = kExitInvariant;
        break;
      }
  for (const auto& ab : r.aborted)
    std::cerr << "run " << ab.run << " aborted at i=" << ab.iteration << " (" << ab.strategy << " diverged)\n";
  if (s.segment_ceiling)
    for (const auto& st : r.strategies)
      for (std::size_t g = 0; g < st.segment_steady.size(); ++g)
        if (st.segment_steady[g].mean >= *s.segment_ceiling) {
          std::cerr << "invariant violated: " << st.spec.label << " segment " << g << " steady state "
                    << st.segment_steady[g].mean << " above ceiling " << *s.segment_ceiling << '\n';
          status = kExitInvariant;
        }

  std::cout << r.name << ": " << r.runs_completed << "/" << r.runs_requested << " runs, " << r.iterations
            << " iterations\n";
  for (const auto& st : r.strategies) {
    std::cout << "  " << st.spec.label << ": steady " << to_db(st.steady.mean) << " dB";
    if (st.theory) std::cout << ", theory " << to_db(st.theory->zeta) << " dB";
    std::cout << '\n';
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multitask diffusion over clustered networks: weights, theory and Monte-Carlo runs"};
  app.require_subcommand(1);

  ScenarioArgs args;

  auto* topo_cmd = app.add_subcommand("topology", "topology utilities");
  auto* inspect = topo_cmd->add_subcommand("inspect", "print neighborhoods and validate the topology");
  add_scenario_flags(inspect, args);
  topo_cmd->require_subcommand(1);

  auto* theory = app.add_subcommand("theory", "steady-state analysis for given cooperation weights");
  add_scenario_flags(theory, args);
  std::vector<std::string> weights{"atc", "p1", "p2"};
  theory->add_option("--weights", weights, "weight sources: atc, p1, p2 or CSV paths")->capture_default_str();

  auto* optimize = app.add_subcommand("optimize-weights", "compute cooperation weights");
  add_scenario_flags(optimize, args);
  std::string method = "p2", out_weights, out_certificate;
  int segment = 0;
  optimize->add_option("--method", method, "p1, p2 or adaptive-preview")
      ->check(CLI::IsMember({"p1", "p2", "adaptive-preview"}))
      ->capture_default_str();
  optimize->add_option("--out", out_weights, "CSV path for G (stdout if omitted)");
  optimize->add_option("--certificate", out_certificate, "JSON path for the certificate (stderr if omitted)");
  optimize->add_option("--segment", segment, "parameter segment whose moments are used")->capture_default_str();
  optimize->add_option("--iters", args.iters, "adaptive-preview iterations");
  optimize->add_option("--seed", args.seed, "adaptive-preview seed");

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo learning curves");
  add_scenario_flags(simulate, args);
  std::vector<std::string> strategies;
  std::string out = "out";
  int workers = 1;
  simulate->add_option("--runs", args.runs, "Monte-Carlo runs");
  simulate->add_option("--iters", args.iters, "iterations per run");
  simulate->add_option("--seed", args.seed, "master seed");
  simulate->add_option("--strategies", strategies, "subset of strategy labels or kinds")->delimiter(',');
  simulate->add_option("--out", out, "output directory")->capture_default_str();
  simulate->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  auto* dump = app.add_subcommand("scenario", "print a scenario as JSON");
  add_scenario_flags(dump, args);
  dump->add_option("--runs", args.runs, "Monte-Carlo runs");
  dump->add_option("--iters", args.iters, "iterations per run");
  dump->add_option("--seed", args.seed, "master seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (inspect->parsed()) return cmd_topology(args);
    if (theory->parsed()) return cmd_theory(args, weights);
    if (optimize->parsed()) return cmd_optimize(args, method, out_weights, out_certificate, segment);
    if (simulate->parsed()) return cmd_simulate(args, strategies, out, workers);
    if (dump->parsed()) {
      std::cout << scenario_to_json(resolve(args)).dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return 0;
}
