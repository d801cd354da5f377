#include "pdsplit/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <climits>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "pdsplit/dataio.hpp"
#include "pdsplit/distributed.hpp"
#include "pdsplit/graph.hpp"
#include "pdsplit/logistic.hpp"
#include "pdsplit/primal_dual.hpp"
#include "pdsplit/terms.hpp"

namespace pdsplit {

namespace {

const char* const kAlgorithms[] = {"dadmm_plus", "dapd", "dgd",
                                   "abg",        "pwg",  "admm_plus",
                                   "vu_condat",  "fb",   "admm"};

bool known_algorithm(const std::string& id) {
  for (const char* a : kAlgorithms)
    if (id == a) return true;
  return false;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::map<std::string, std::string> parse_kv(const std::string& spec) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key=value, got '" + item + "'");
    kv[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
  }
  return kv;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + what + ": '" + s + "'");
  }
}

long to_long(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for " + what + ": '" + s + "'");
  }
}

Graph build_graph(const std::string& spec, std::uint64_t seed) {
  const auto colon = spec.find(':');
  const std::string kind = colon == std::string::npos ? spec : spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  try {
    if (kind == "ring") return ring_graph(to_long(rest, "graph"));
    if (kind == "complete") return complete_graph(to_long(rest, "graph"));
    if (kind == "torus") {
      const auto x = rest.find('x');
      if (x == std::string::npos)
        throw ConfigError("torus spec must be torus:RxC");
      return torus_graph(to_long(rest.substr(0, x), "graph"),
                         to_long(rest.substr(x + 1), "graph"));
    }
    if (kind == "er") {
      const auto c2 = rest.find(':');
      if (c2 == std::string::npos) throw ConfigError("er spec must be er:N:p");
      return erdos_renyi_graph(to_long(rest.substr(0, c2), "graph"),
                               to_double(rest.substr(c2 + 1), "graph"), seed);
    }
    if (kind == "file") return read_edge_list_file(rest);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("bad graph spec '" + spec + "': " + e.what());
  }
  throw ConfigError("unknown graph spec '" + spec + "'");
}

SparseDataset load_dataset(const ExperimentConfig& config) {
  const std::string& spec = config.dataset;
  if (spec.empty()) throw ConfigError("dataset is required");
  if (spec.rfind("synthetic:", 0) == 0) {
    auto kv = parse_kv(spec.substr(10));
    const long m = kv.count("m") ? to_long(kv["m"], "dataset m") : 1000;
    const long p = kv.count("p") ? to_long(kv["p"], "dataset p") : 20;
    const std::uint64_t seed =
        kv.count("seed") ? static_cast<std::uint64_t>(to_long(kv["seed"], "dataset seed"))
                         : config.seed;
    const double noise =
        kv.count("noise") ? to_double(kv["noise"], "dataset noise") : 0.05;
    SparseDataset ds = synthetic_logistic_dataset(m, p, seed, noise);
    return standardize(ds);
  }
  std::string path = spec;
  if (spec.rfind("file:", 0) == 0) path = spec.substr(5);
  std::ifstream probe(path);
  if (!probe) throw ConfigError("dataset file not found: " + path);
  SparseDataset ds = parse_libsvm(probe);
  // only dense data is standardized, matching the benchmark protocol
  if (ds.dense()) ds = standardize(ds);
  return ds;
}

struct Assembled {
  bool dist = false;
  std::optional<Graph> graph;
  DistributedProblem dprob;

  CompositeProblem cprob;      // admm_plus / admm
  VuCondatProblem vcprob;      // vu_condat
  SmoothTerm fb_f;             // fb
  ProxableTerm fb_g;

  double lipschitz = 0.0;  // base L for theory steps
  std::size_t dim = 0;
  std::shared_ptr<long> grad_counter;
  std::function<double(const Vec&)> objective;
};

Assembled assemble(const ExperimentConfig& config) {
  Assembled ax;
  ax.dist = is_distributed_algorithm(config.algorithm);
  ax.grad_counter = std::make_shared<long>(0);

  SparseDataset ds = load_dataset(config);
  LogisticLossTerm full = to_logistic_term(ds);
  const double base_lip = lipschitz_estimate(full);
  ax.dim = ds.p;

  if (ax.dist) {
    ax.graph = build_graph(config.graph, config.seed);
    const std::size_t n_agents = ax.graph->nodes();
    if (n_agents > ds.m)
      throw ConfigError("more agents than observations");
    auto blocks = partition(ds.m, n_agents, PartitionMode::balanced, config.seed);

    DistributedProblem dp;
    dp.dim = ds.p;
    const double mu_n = config.mu / static_cast<double>(n_agents);
    for (std::size_t n = 0; n < n_agents; ++n) {
      LogisticLossTerm local = full.subset(blocks[n]);
      std::vector<SmoothTerm> parts;
      parts.push_back(local.as_smooth());
      parts.push_back(quadratic_smooth_term(mu_n, Vec(ds.p, 0.0)));
      dp.f.push_back(sum_smooth_terms(std::move(parts)));
      dp.g.push_back(zero_prox_term());
    }
    dp.local_lipschitz = base_lip + mu_n;
    ax.lipschitz = dp.local_lipschitz;
    auto prob = std::make_shared<DistributedProblem>(dp);
    ax.objective = [prob](const Vec& u) { return prob->objective(u); };
    ax.dprob = std::move(dp);
    return ax;
  }

  // centralized: f smooth logistic, g the l2 term, h empty (except for the
  // implicit-step ADMM, which moves the loss into the composite slot)
  SmoothTerm loss = full.as_smooth(ax.grad_counter);
  ProxableTerm reg = quadratic_prox_term(config.mu);
  const double mu = config.mu;
  auto full_term = std::make_shared<LogisticLossTerm>(full);
  ax.objective = [full_term, mu](const Vec& x) {
    return full_term->value(x) + 0.5 * mu * sqnorm(x);
  };
  ax.lipschitz = loss.lipschitz;

  if (config.algorithm == "admm") {
    ax.cprob.f = zero_smooth_term();
    ax.cprob.g = reg;
    ax.cprob.h = prox_via_inner_gradient(loss, 1e-10);
    ax.cprob.M = identity_operator(ds.p);
    ax.cprob.lifted_lipschitz = 0.0;
  } else {
    ax.cprob.f = loss;
    ax.cprob.g = reg;
    ax.cprob.h = zero_prox_term();
    ax.cprob.M = identity_operator(ds.p);
    ax.cprob.lifted_lipschitz = loss.lipschitz;
  }

  ax.vcprob.dim = ds.p;
  ax.vcprob.fbar = loss;
  ax.vcprob.gbar = reg;
  ax.vcprob.h = zero_prox_term();

  ax.fb_f = loss;
  ax.fb_g = reg;
  return ax;
}

struct CentralRun {
  Trace trace;
  double best = std::numeric_limits<double>::infinity();
  double final_obj = std::numeric_limits<double>::infinity();
  double final_residual = 0.0;
  long rounds = 0;
  long grads = 0;
};

CentralRun run_centralized(const Assembled& ax, const std::string& alg,
                           StepSizes steps, long budget, long max_iters,
                           bool validate, bool timing) {
  CentralRun out;
  const auto started = std::chrono::steady_clock::now();
  auto seconds = [&]() {
    if (!timing) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         started)
        .count();
  };
  *ax.grad_counter = 0;

  auto record = [&](long k, const Vec& x, double residual) {
    const double obj = ax.objective(x);
    if (!std::isfinite(obj) || norm2(x) > 1e12)
      throw std::runtime_error("centralized run diverged at iteration " +
                               std::to_string(k));
    out.trace.add(k, *ax.grad_counter, obj, residual, seconds());
    out.best = std::min(out.best, obj);
    out.final_obj = obj;
    out.final_residual = residual;
  };

  if (alg == "admm_plus" || alg == "admm") {
    const CompositeProblem& prob = ax.cprob;
    StepSizes s = validate ? check_step_sizes(prob, steps)
                           : unchecked_step_sizes(steps.tau, steps.rho);
    PrimalDualState state = PrimalDualState::zeros(prob);
    record(0, state.x, 0.0);
    while (*ax.grad_counter < budget && out.rounds < max_iters) {
      state = alg == "admm" ? admm_step(prob, s.rho, state)
                            : admm_plus_step(prob, s, state);
      ++out.rounds;
      record(out.rounds, state.x, primal_dual_residual(prob, state).first);
    }
  } else if (alg == "vu_condat") {
    StepSizes s = validate
                      ? check_step_sizes(ax.vcprob.fbar.lipschitz,
                                         ax.vcprob.fbar.is_zero, steps)
                      : unchecked_step_sizes(steps.tau, steps.rho);
    VuCondatState state{Vec(ax.dim, 0.0), Vec(ax.dim, 0.0)};
    record(0, state.y, 0.0);
    while (*ax.grad_counter < budget && out.rounds < max_iters) {
      state = vu_condat_step(ax.vcprob, s, state);
      ++out.rounds;
      record(out.rounds, state.y, 0.0);
    }
  } else if (alg == "fb") {
    check_forward_backward_step(ax.fb_f.lipschitz, steps.tau);
    Vec x(ax.dim, 0.0);
    record(0, x, 0.0);
    while (*ax.grad_counter < budget && out.rounds < max_iters) {
      x = forward_backward_step(ax.fb_f, ax.fb_g, steps.tau, x);
      ++out.rounds;
      record(out.rounds, x, 0.0);
    }
  } else {
    throw ConfigError("unknown centralized algorithm: " + alg);
  }
  out.grads = *ax.grad_counter;
  return out;
}

struct StepChoice {
  StepSizes steps;        // tau/rho algorithms
  double gamma0 = 0.0;    // baselines
  bool from_grid = false;
};

bool uses_tau_rho(const std::string& alg) {
  return alg == "dadmm_plus" || alg == "dapd" || alg == "admm_plus" ||
         alg == "vu_condat" || alg == "admm";
}

bool grid_scannable(const std::string& alg) {
  return alg == "dadmm_plus" || alg == "dapd" || alg == "admm_plus" ||
         alg == "vu_condat" || alg == "dgd" || alg == "abg" || alg == "pwg";
}

double theory_parameter(const Assembled& ax, const std::string& alg) {
  constexpr double kSafety = 1.01;
  if (alg == "dadmm_plus" || alg == "dapd") {
    const double dmin = static_cast<double>(ax.graph->min_degree());
    return dmin / (kSafety * ax.lipschitz);
  }
  if (alg == "admm_plus" || alg == "vu_condat")
    return 1.0 / (kSafety * ax.lipschitz);
  if (alg == "fb") return 1.0 / ax.lipschitz;
  if (alg == "admm") return 1.0;
  return 1.0 / ax.lipschitz;  // gamma0 for the gradient baselines
}

double probe_candidate(const Assembled& ax, const ExperimentConfig& config,
                       double value) {
  // 50-iteration probe from the common seed; +inf marks divergence
  constexpr long kProbeIters = 50;
  try {
    if (ax.dist) {
      DistributedRunConfig rc;
      rc.algorithm = distributed_algorithm_from_string(config.algorithm);
      rc.budget = LONG_MAX / 2;
      rc.max_rounds = kProbeIters;
      rc.validate_steps = false;
      if (uses_tau_rho(config.algorithm))
        rc.steps = unchecked_step_sizes(value, 2.0 * value);
      else
        rc.gamma0 = value;
      auto activation =
          ActivationProcess::uniform_single(ax.graph->nodes(), config.seed);
      auto run = run_distributed(ax.dprob, *ax.graph, activation, rc);
      return run.final_objective;
    }
    StepSizes s;
    if (uses_tau_rho(config.algorithm)) {
      s.tau = value;
      s.rho = 2.0 * value;
    }
    auto run = run_centralized(ax, config.algorithm, s, LONG_MAX / 2,
                               kProbeIters, false, false);
    return run.final_obj;
  } catch (const std::runtime_error&) {
    return std::numeric_limits<double>::infinity();
  }
}

GridResult grid_search_impl(const Assembled& ax,
                            const ExperimentConfig& config) {
  if (!grid_scannable(config.algorithm))
    throw ConfigError("grid search does not apply to " + config.algorithm);
  GridResult grid;
  grid.theory = theory_parameter(ax, config.algorithm);

  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (int i = 1; i <= 10; ++i) {
    const double value = grid.theory * std::pow(10.0, i);
    GridOutcome outcome;
    outcome.exponent = i;
    outcome.value = value;
    outcome.objective = probe_candidate(ax, config, value);
    outcome.diverged = !std::isfinite(outcome.objective);
    // ascending scan: ties go to the smaller candidate
    if (!outcome.diverged && outcome.objective < best) {
      best = outcome.objective;
      grid.chosen_exponent = i;
      any = true;
    }
    grid.outcomes.push_back(outcome);
  }
  if (!any) throw DivergenceError("grid search: every candidate diverged");

  const double chosen = grid.theory * std::pow(10.0, grid.chosen_exponent);
  if (uses_tau_rho(config.algorithm)) {
    grid.tau = chosen;
    grid.rho = 2.0 * chosen;
  } else {
    grid.gamma0 = chosen;
  }
  return grid;
}

StepChoice resolve_steps(const Assembled& ax, const ExperimentConfig& config,
                         GridResult* grid_out) {
  StepChoice choice;
  const std::string& spec = config.steps;
  if (spec == "auto") {
    if (grid_scannable(config.algorithm)) {
      GridResult grid = grid_search_impl(ax, config);
      if (grid_out) *grid_out = grid;
      choice.from_grid = true;
      if (uses_tau_rho(config.algorithm)) {
        choice.steps.tau = grid.tau;
        choice.steps.rho = grid.rho;
      } else {
        choice.gamma0 = grid.gamma0;
      }
    } else {
      const double theory = theory_parameter(ax, config.algorithm);
      if (config.algorithm == "fb") {
        choice.steps.tau = theory;
      } else {  // admm
        choice.steps.tau = theory;
        choice.steps.rho = theory;
      }
    }
    return choice;
  }
  auto kv = parse_kv(spec);
  if (uses_tau_rho(config.algorithm) || config.algorithm == "fb") {
    if (config.algorithm == "admm") {
      if (!kv.count("rho")) throw ConfigError("admm needs steps \"rho=..\"");
      choice.steps.rho = to_double(kv["rho"], "rho");
      choice.steps.tau = choice.steps.rho;
    } else if (config.algorithm == "fb") {
      if (!kv.count("tau")) throw ConfigError("fb needs steps \"tau=..\"");
      choice.steps.tau = to_double(kv["tau"], "tau");
    } else {
      if (!kv.count("tau") || !kv.count("rho"))
        throw ConfigError(config.algorithm + " needs steps \"tau=..,rho=..\"");
      choice.steps.tau = to_double(kv["tau"], "tau");
      choice.steps.rho = to_double(kv["rho"], "rho");
    }
  } else {
    if (!kv.count("gamma0"))
      throw ConfigError(config.algorithm + " needs steps \"gamma0=..\"");
    choice.gamma0 = to_double(kv["gamma0"], "gamma0");
  }
  return choice;
}

}  // namespace

bool is_distributed_algorithm(const std::string& id) {
  return id == "dadmm_plus" || id == "dapd" || id == "dgd" || id == "abg" ||
         id == "pwg";
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  ExperimentConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key=value");
    config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "algorithm") algorithm = value;
  else if (key == "dataset") dataset = value;
  else if (key == "graph") graph = value;
  else if (key == "mu") mu = to_double(value, "mu");
  else if (key == "steps") steps = value;
  else if (key == "budget") budget = to_long(value, "budget");
  else if (key == "seed") seed = static_cast<std::uint64_t>(to_long(value, "seed"));
  else if (key == "out") out = value;
  else if (key == "format") format = value;
  else if (key == "timing") timing = (value == "1" || value == "true");
  else throw ConfigError("unknown config key '" + key + "'");
}

void ExperimentConfig::validate() const {
  if (!known_algorithm(algorithm))
    throw ConfigError("unknown algorithm '" + algorithm + "'");
  if (dataset.empty()) throw ConfigError("dataset is required");
  if (is_distributed_algorithm(algorithm) && graph.empty())
    throw ConfigError("distributed algorithms require a graph");
  if (budget < 0) throw ConfigError("budget must be >= 0");
  if (mu < 0) throw ConfigError("mu must be >= 0");
  trace_format_from_string(format);
  if (steps.empty()) throw ConfigError("steps must be set (or \"auto\")");
}

GridResult grid_search(const ExperimentConfig& config) {
  config.validate();
  Assembled ax = assemble(config);
  return grid_search_impl(ax, config);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  Assembled ax = assemble(config);

  ExperimentResult result;
  StepChoice choice = resolve_steps(ax, config, &result.grid);

  const auto started = std::chrono::steady_clock::now();
  try {
    if (ax.dist) {
      DistributedRunConfig rc;
      rc.algorithm = distributed_algorithm_from_string(config.algorithm);
      rc.steps = choice.steps;
      rc.gamma0 = choice.gamma0;
      rc.budget = config.budget;
      rc.validate_steps =
          uses_tau_rho(config.algorithm) && !choice.from_grid;
      rc.record_seconds = config.timing;
      if (!rc.validate_steps && uses_tau_rho(config.algorithm))
        rc.steps = unchecked_step_sizes(choice.steps.tau, choice.steps.rho);
      auto activation =
          ActivationProcess::uniform_single(ax.graph->nodes(), config.seed);
      try {
        auto run = run_distributed(ax.dprob, *ax.graph, activation, rc);
        result.trace = std::move(run.trace);
        result.summary.best_objective = run.best_objective;
        result.summary.final_objective = run.final_objective;
        result.summary.rounds = run.rounds;
        result.summary.grads = run.grads;
        result.summary.agents = ax.graph->nodes();
        result.summary.final_consensus_residual =
            result.trace.back().consensus_residual;
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    } else {
      bool validate = !choice.from_grid;
      try {
        auto run = run_centralized(ax, config.algorithm, choice.steps,
                                   config.budget, 1000000, validate,
                                   config.timing);
        result.trace = std::move(run.trace);
        result.summary.best_objective = run.best;
        result.summary.final_objective = run.final_obj;
        result.summary.final_consensus_residual = run.final_residual;
        result.summary.rounds = run.rounds;
        result.summary.grads = run.grads;
        result.summary.agents = 1;
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw DivergenceError(e.what());
  }

  result.summary.algorithm = config.algorithm;
  result.summary.tau = choice.steps.tau;
  result.summary.rho = choice.steps.rho;
  result.summary.gamma0 = choice.gamma0;
  result.summary.grid_searched = choice.from_grid;
  result.summary.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();

  if (!config.out.empty()) {
    try {
      emit_trace(result.trace, trace_format_from_string(config.format),
                 config.out);
    } catch (const std::runtime_error& e) {
      throw ConfigError(e.what());
    }
  }
  return result;
}

}  // namespace pdsplit
