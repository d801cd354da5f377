// Command-line experiment runner: solves l2-regularized logistic regression
// with the centralized and distributed splitting solvers over simulated
// networks, and reproduces the step-size grid-search protocol.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pdsplit/dataio.hpp"
#include "pdsplit/distributed.hpp"
#include "pdsplit/experiment.hpp"
#include "pdsplit/graph.hpp"
#include "pdsplit/logistic.hpp"
#include "pdsplit/primal_dual.hpp"
#include "pdsplit/rng.hpp"
#include "pdsplit/terms.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

struct RunArgs {
  std::string config_path;
  std::string algorithm, dataset, graph, steps, out, format;
  double mu = -1.0;
  long budget = -1;
  long seed = -1;
  bool timing = false;
};

pdsplit::ExperimentConfig build_config(const RunArgs& args) {
  pdsplit::ExperimentConfig config;
  if (!args.config_path.empty())
    config = pdsplit::ExperimentConfig::from_file(args.config_path);
  if (!args.algorithm.empty()) config.set("algorithm", args.algorithm);
  if (!args.dataset.empty()) config.set("dataset", args.dataset);
  if (!args.graph.empty()) config.set("graph", args.graph);
  if (!args.steps.empty()) config.set("steps", args.steps);
  if (!args.out.empty()) config.set("out", args.out);
  if (!args.format.empty()) config.set("format", args.format);
  if (args.mu >= 0) config.mu = args.mu;
  if (args.budget >= 0) config.budget = args.budget;
  if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
  if (args.timing) config.timing = true;
  return config;
}

void add_run_options(CLI::App* cmd, RunArgs& args) {
  cmd->add_option("--config", args.config_path, "key=value config file");
  cmd->add_option("--algorithm", args.algorithm,
                  "dadmm_plus|dapd|dgd|abg|pwg|admm_plus|vu_condat|fb|admm");
  cmd->add_option("--dataset", args.dataset,
                  "libsvm path or synthetic:m=..,p=..,seed=..");
  cmd->add_option("--graph", args.graph,
                  "ring:N | torus:RxC | complete:N | er:N:p | file:path");
  cmd->add_option("--steps", args.steps,
                  "auto | tau=..,rho=.. | gamma0=.. | rho=..");
  cmd->add_option("--mu", args.mu, "l2 regularization weight");
  cmd->add_option("--budget", args.budget, "gradient evaluation budget");
  cmd->add_option("--seed", args.seed, "run seed");
  cmd->add_option("--out", args.out, "trace output path");
  cmd->add_option("--format", args.format, "csv|json");
  cmd->add_flag("--timing", args.timing, "record wall-clock in the trace");
}

void print_summary(const pdsplit::ExperimentSummary& s) {
  std::printf("algorithm            %s\n", s.algorithm.c_str());
  std::printf("agents               %zu\n", s.agents);
  if (s.tau > 0) std::printf("tau                  %.17g\n", s.tau);
  if (s.rho > 0) std::printf("rho                  %.17g\n", s.rho);
  if (s.gamma0 > 0) std::printf("gamma0               %.17g\n", s.gamma0);
  std::printf("steps from grid      %s\n", s.grid_searched ? "yes" : "no");
  std::printf("rounds               %ld\n", s.rounds);
  std::printf("gradient evals       %ld\n", s.grads);
  std::printf("final objective      %.17g\n", s.final_objective);
  std::printf("best objective       %.17g\n", s.best_objective);
  std::printf("consensus residual   %.17g\n", s.final_consensus_residual);
  std::printf("wall seconds         %.3f\n", s.seconds);
}

int cmd_run(const RunArgs& args) {
  auto config = build_config(args);
  auto result = pdsplit::run_experiment(config);
  print_summary(result.summary);
  if (!config.out.empty())
    std::printf("trace written to     %s\n", config.out.c_str());
  return kExitOk;
}

int cmd_grid(const RunArgs& args) {
  auto config = build_config(args);
  config.validate();
  auto grid = pdsplit::grid_search(config);
  std::printf("theory value         %.17g\n", grid.theory);
  std::printf("%-4s %-24s %-24s %s\n", "i", "candidate", "objective@50", "status");
  for (const auto& o : grid.outcomes)
    std::printf("%-4d %-24.17g %-24.17g %s\n", o.exponent, o.value,
                o.objective, o.diverged ? "diverged" : "ok");
  std::printf("chosen exponent      %d\n", grid.chosen_exponent);
  if (grid.tau > 0)
    std::printf("chosen tau, rho      %.17g %.17g\n", grid.tau, grid.rho);
  if (grid.gamma0 > 0)
    std::printf("chosen gamma0        %.17g\n", grid.gamma0);
  return kExitOk;
}

int cmd_gen_graph(const std::string& spec, long seed, const std::string& out) {
  pdsplit::ExperimentConfig dummy;  // reuse the spec parser via a tiny config
  dummy.graph = spec;
  pdsplit::Graph graph = [&] {
    const auto colon = spec.find(':');
    const std::string kind = colon == std::string::npos ? spec : spec.substr(0, colon);
    if (kind == "ring")
      return pdsplit::ring_graph(std::stoul(spec.substr(colon + 1)));
    if (kind == "complete")
      return pdsplit::complete_graph(std::stoul(spec.substr(colon + 1)));
    if (kind == "torus") {
      const std::string rest = spec.substr(colon + 1);
      const auto x = rest.find('x');
      return pdsplit::torus_graph(std::stoul(rest.substr(0, x)),
                                  std::stoul(rest.substr(x + 1)));
    }
    if (kind == "er") {
      const std::string rest = spec.substr(colon + 1);
      const auto c2 = rest.find(':');
      return pdsplit::erdos_renyi_graph(std::stoul(rest.substr(0, c2)),
                                        std::stod(rest.substr(c2 + 1)),
                                        static_cast<std::uint64_t>(seed));
    }
    throw pdsplit::ConfigError("unknown graph spec '" + spec + "'");
  }();
  pdsplit::write_edge_list_file(graph, out);
  std::printf("wrote %zu nodes, %zu edges to %s\n", graph.nodes(),
              graph.num_edges(), out.c_str());
  return kExitOk;
}

int cmd_gen_data(long m, long p, long seed, double noise,
                 const std::string& out) {
  auto ds = pdsplit::synthetic_logistic_dataset(
      static_cast<std::size_t>(m), static_cast<std::size_t>(p),
      static_cast<std::uint64_t>(seed), noise);
  pdsplit::serialize_libsvm_file(ds, out);
  std::printf("wrote %zu x %zu dataset to %s\n", ds.m, ds.p, out.c_str());
  return kExitOk;
}

// sampling-based audit of the library invariants; a condensed version of
// the unit suites, runnable from a deployed binary
int cmd_check() {
  using namespace pdsplit;
  int failures = 0;
  auto report = [&](const char* name, bool ok) {
    std::printf("%-44s %s\n", name, ok ? "PASS" : "FAIL");
    if (!ok) ++failures;
  };

  Rng rng(20240517);

  {  // prox optimality + firm nonexpansiveness on the catalog
    bool ok = true;
    std::vector<ProxableTerm> catalog = {l1_term(0.7), quadratic_prox_term(2.0),
                                         zero_prox_term()};
    for (const auto& term : catalog) {
      for (int trial = 0; trial < 200 && ok; ++trial) {
        const double gamma = rng.uniform(0.1, 3.0);
        Vec x(4), y(4);
        for (auto& v : x) v = rng.normal();
        for (auto& v : y) v = rng.normal();
        Vec px = term.prox(gamma, x);
        Vec py = term.prox(gamma, y);
        const double base = term.eval(px) + sqnorm(sub(px, x)) / (2 * gamma);
        for (int probe = 0; probe < 8; ++probe) {
          Vec w = px;
          for (auto& v : w) v += 0.05 * rng.normal();
          const double cand = term.eval(w) + sqnorm(sub(w, x)) / (2 * gamma);
          ok = ok && cand >= base - 1e-9;
        }
        const double lhs = sqnorm(sub(px, py));
        const double rhs = dot(sub(px, py), sub(x, y));
        ok = ok && lhs <= rhs + 1e-9;
      }
    }
    report("prox optimality / firm nonexpansiveness", ok);
  }

  {  // Moreau identity
    bool ok = true;
    auto term = l1_term(1.3);
    for (int trial = 0; trial < 500 && ok; ++trial) {
      const double rho = rng.uniform(0.2, 4.0);
      Vec x(5);
      for (auto& v : x) v = rng.normal();
      Vec conj = moreau_prox_conjugate(term, rho, x);
      Vec direct = term.prox(rho, scaled(rho, x));
      for (std::size_t i = 0; i < x.size(); ++i)
        ok = ok && std::fabs(conj[i] + direct[i] / rho - x[i]) < 1e-12;
    }
    report("Moreau conjugate-prox identity", ok);
  }

  {  // edge operator adjoint + degree Gram on a random graph
    Graph g = erdos_renyi_graph(12, 0.35, 7);
    bool ok = true;
    for (int trial = 0; trial < 100 && ok; ++trial) {
      Vec x(g.nodes() * 2), y(2 * g.num_edges() * 2);
      // short mantissas keep the repeated-addition path exact
      for (auto& v : x) v = std::floor(rng.normal() * 1024.0) / 1024.0;
      for (auto& v : y) v = rng.normal();
      Vec mx = edge_op_apply(g, 2, x);
      Vec mty = edge_op_adjoint(g, 2, y);
      ok = ok && std::fabs(dot(mx, y) - dot(x, mty)) < 1e-10;
      Vec gram = edge_op_adjoint(g, 2, edge_op_apply(g, 2, x));
      for (std::size_t n = 0; n < g.nodes(); ++n)
        for (std::size_t c = 0; c < 2; ++c)
          ok = ok && gram[n * 2 + c] ==
                         static_cast<double>(g.degree(n)) * x[n * 2 + c];
    }
    report("edge operator adjoint / degree Gram", ok);
  }

  {  // step-size guards
    bool ok = false;
    try {
      check_step_sizes(2.0, false, {1.0, 1.0});
    } catch (const std::invalid_argument&) {
      ok = true;
    }
    bool ok2 = check_step_sizes(0.0, true, {1.0, 1.0}).validated;
    report("step-size guards", ok && ok2);
  }

  {  // deterministic trajectories
    ExperimentConfig config;
    config.algorithm = "dapd";
    config.dataset = "synthetic:m=60,p=5,seed=3";
    config.graph = "ring:5";
    config.steps = "auto";
    config.budget = 400;
    config.seed = 11;
    auto a = run_experiment(config);
    auto b = run_experiment(config);
    bool ok = a.trace.records.size() == b.trace.records.size();
    for (std::size_t i = 0; ok && i < a.trace.records.size(); ++i)
      ok = a.trace.records[i].objective == b.trace.records[i].objective;
    report("seeded determinism", ok);
  }

  return failures == 0 ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"primal-dual splitting and distributed consensus toolkit"};
  app.require_subcommand(1);

  RunArgs run_args, grid_args;
  auto* run_cmd = app.add_subcommand("run", "run one experiment");
  add_run_options(run_cmd, run_args);
  auto* grid_cmd = app.add_subcommand("grid", "step-size grid search only");
  add_run_options(grid_cmd, grid_args);

  std::string gg_spec = "ring:10", gg_out = "graph.txt";
  long gg_seed = 1;
  auto* gg_cmd = app.add_subcommand("gen-graph", "write an edge-list file");
  gg_cmd->add_option("--type", gg_spec, "ring:N|torus:RxC|complete:N|er:N:p");
  gg_cmd->add_option("--seed", gg_seed, "seed (er only)");
  gg_cmd->add_option("--out", gg_out, "output path")->required();

  long gd_m = 1000, gd_p = 20, gd_seed = 1;
  double gd_noise = 0.05;
  std::string gd_out = "data.libsvm";
  auto* gd_cmd = app.add_subcommand("gen-data", "write a synthetic dataset");
  gd_cmd->add_option("--m", gd_m, "observations");
  gd_cmd->add_option("--p", gd_p, "features");
  gd_cmd->add_option("--seed", gd_seed, "seed");
  gd_cmd->add_option("--noise", gd_noise, "label flip probability");
  gd_cmd->add_option("--out", gd_out, "output path")->required();

  auto* check_cmd = app.add_subcommand("check", "run the invariant audit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_args);
    if (grid_cmd->parsed()) return cmd_grid(grid_args);
    if (gg_cmd->parsed()) return cmd_gen_graph(gg_spec, gg_seed, gg_out);
    if (gd_cmd->parsed())
      return cmd_gen_data(gd_m, gd_p, gd_seed, gd_noise, gd_out);
    if (check_cmd->parsed()) return cmd_check();
  } catch (const pdsplit::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const pdsplit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
