#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdsplit/trace.hpp"

namespace pdsplit {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One benchmark run: which algorithm, on which data, over which graph,
/// with which steps. `steps` accepts "auto" (theory value refined by the
/// x10^i grid search), explicit "tau=..,rho=..", "gamma0=..", or "rho=..".
struct ExperimentConfig {
  std::string algorithm = "dapd";
  std::string dataset;        // path, "file:path" or "synthetic:m=..,p=..,seed=..[,noise=..]"
  std::string graph = "ring:10";
  double mu = 1e-4;           // l2 weight
  std::string steps = "auto";
  long budget = 100000;       // gradient evaluations
  std::uint64_t seed = 1;
  std::string out;            // trace path ("" = do not write)
  std::string format = "csv";
  bool timing = false;        // include wall-clock seconds in the trace

  static ExperimentConfig from_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  void validate() const;
};

bool is_distributed_algorithm(const std::string& id);

struct GridOutcome {
  int exponent = 0;     // candidate = theory * 10^exponent
  double value = 0.0;   // the scanned parameter (tau or gamma0 or rho)
  double objective = 0.0;
  bool diverged = false;
};

struct GridResult {
  double theory = 0.0;  // base value derived from the Lipschitz estimate
  double tau = 0.0;
  double rho = 0.0;
  double gamma0 = 0.0;
  int chosen_exponent = 0;
  std::vector<GridOutcome> outcomes;
};

struct ExperimentSummary {
  std::string algorithm;
  std::size_t agents = 0;
  double tau = 0.0;
  double rho = 0.0;
  double gamma0 = 0.0;
  bool grid_searched = false;
  double final_objective = 0.0;
  double best_objective = 0.0;
  double final_consensus_residual = 0.0;
  long grads = 0;
  long rounds = 0;
  double seconds = 0.0;
};

struct ExperimentResult {
  Trace trace;
  ExperimentSummary summary;
  GridResult grid;  // meaningful when steps == "auto"
};

/// load -> standardize -> partition -> graph -> (grid search) -> run.
/// Writes the trace when config.out is set.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// The step-size scan alone: candidates theory * 10^i, i = 1..10, each run
/// for 50 iterations from the config seed; the lowest final cost wins,
/// ties to the smaller step. Throws DivergenceError when every candidate
/// diverges.
GridResult grid_search(const ExperimentConfig& config);

}  // namespace pdsplit
