#pragma once

#include <cstdint>
#include <vector>

#include "pdsplit/avgop.hpp"
#include "pdsplit/graph.hpp"
#include "pdsplit/primal_dual.hpp"
#include "pdsplit/terms.hpp"
#include "pdsplit/trace.hpp"

namespace pdsplit {

/// min_u sum_n f_n(u) + g_n(u), each pair private to one agent.
struct DistributedProblem {
  std::size_t dim = 0;
  std::vector<SmoothTerm> f;
  std::vector<ProxableTerm> g;
  /// Common Lipschitz bound on the local gradients.
  double local_lipschitz = 0.0;

  std::size_t agents() const { return f.size(); }
  double objective(const Vec& u) const;
  void validate(const Graph& graph) const;
  bool f_all_zero() const;
};

/// Local memory of one agent: its estimate, its endpoints of the edge
/// duals, and the last values received from each neighbor. All per-neighbor
/// vectors are aligned with Graph::neighbors(n).
struct AgentState {
  Vec x;
  std::vector<Vec> lambda_out;  // own endpoint of each incident edge dual
  std::vector<Vec> lambda_in;   // neighbor endpoint, as last received
  std::vector<Vec> x_in;        // neighbor estimate, as last received
  long grad_count = 0;
};

/// Round-synchronous message fabric: a payload handed to send() during
/// round k becomes visible in the receiver's caches once the round is
/// advanced, i.e. from round k+1 on. Delivery is instantaneous and
/// reliable; per (sender, receiver) pair order is preserved.
class SimNetwork {
 public:
  struct Payload {
    Vec x;
    Vec lambda;
    bool has_lambda = false;
  };

  explicit SimNetwork(const Graph& graph);

  long clock() const { return clock_; }
  void send(std::size_t from, std::size_t to, Payload payload);
  /// Deliver pending messages into the receivers' caches and tick.
  void advance(std::vector<AgentState>& states);

 private:
  const Graph* graph_;
  long clock_ = 0;
  std::vector<std::vector<std::pair<std::size_t, Payload>>> pending_;
};

/// Zero-initialized agent states (duals trivially antisymmetric), with
/// neighbor caches primed by an initial exchange.
std::vector<AgentState> init_agent_states(const DistributedProblem& problem,
                                          const Graph& graph);

/// Condition for the distributed solvers: 1/tau - 1/rho > localL/(2 dmin).
StepSizes check_distributed_step_sizes(const DistributedProblem& problem,
                                       const Graph& graph, StepSizes steps);

/// One synchronous round: every agent refreshes its edge duals from the
/// cached neighbor estimates, takes a scaled prox step, and broadcasts the
/// new estimate. Requires antisymmetric duals, which the round preserves.
void dadmm_plus_round(const DistributedProblem& problem, const Graph& graph,
                      const StepSizes& steps, std::vector<AgentState>& states,
                      SimNetwork& net);

/// One asynchronous round: only agents in `active` update, from their
/// (possibly stale) caches, then send their new estimate and dual
/// endpoints to their neighbors. An empty active set is a no-op round.
void dapd_round(const DistributedProblem& problem, const Graph& graph,
                const StepSizes& steps, std::vector<AgentState>& states,
                const std::vector<std::size_t>& active, SimNetwork& net);

struct MetropolisWeights {
  std::vector<double> self;
  std::vector<std::vector<double>> nbr;  // aligned with Graph::neighbors
};

MetropolisWeights metropolis_weights(const Graph& graph);

/// Synchronous baseline: every agent descends on its own cost, then the
/// descended values are mixed with the given averaging weights.
void dgd_round(const DistributedProblem& problem, const Graph& graph,
               const MetropolisWeights& weights, double gamma,
               std::vector<AgentState>& states);

/// Broadcast baseline: the waker sends its value; each neighbor averages
/// it into its own and then descends. The waker itself does not move.
void abg_round(const DistributedProblem& problem, const Graph& graph,
               double gamma, std::vector<AgentState>& states,
               std::size_t waker);

/// Pairwise baseline: waker and partner each descend, then both adopt the
/// mean of the two results.
void pwg_round(const DistributedProblem& problem, const Graph& graph,
               double gamma, std::vector<AgentState>& states,
               std::size_t waker, std::size_t partner);

/// max_n |x_n - mean|.
double consensus_residual(const std::vector<AgentState>& states);

/// Subsets of agents waking per round; every agent must have positive
/// activation probability.
struct ActivationProcess {
  CoordinateSelector subsets;
  std::uint64_t seed = 0;

  static ActivationProcess uniform_single(std::size_t agents,
                                          std::uint64_t seed);
};

enum class DistributedAlgorithm { dadmm_plus, dapd, dgd, abg, pwg };

DistributedAlgorithm distributed_algorithm_from_string(const std::string& id);

struct DistributedRunConfig {
  DistributedAlgorithm algorithm = DistributedAlgorithm::dapd;
  StepSizes steps;                 // dadmm_plus / dapd
  double gamma0 = 1.0;             // baselines: step gamma0 / k^0.75
  long budget = 0;                 // total local gradient evaluations
  long max_rounds = 0;             // 0 = no round cap
  bool validate_steps = true;      // theory guard on entry
  bool record_seconds = false;
};

struct DistributedRunResult {
  Trace trace;
  double best_objective = 0.0;
  double final_objective = 0.0;
  long rounds = 0;
  long grads = 0;
};

/// Drives rounds until the gradient budget is exhausted (or the round cap
/// hits). The trace is keyed by cumulative gradient count and sampled
/// every time the count crosses a multiple of the agent count, so longer
/// runs extend shorter ones; the objective is the full cost evaluated at
/// agent 0's estimate.
DistributedRunResult run_distributed(const DistributedProblem& problem,
                                     const Graph& graph,
                                     const ActivationProcess& activation,
                                     const DistributedRunConfig& config);

// --- bridges to the centralized machinery ---

/// The consensus problem on the product space: blockwise f and g, the
/// edge-duplication operator, and the edgewise consensus indicator.
CompositeProblem lift_to_composite(const DistributedProblem& problem,
                                   const Graph& graph);

/// The same problem in the one-space primal-dual form on the edge space.
VuCondatProblem lift_to_vu_condat(const DistributedProblem& problem,
                                  const Graph& graph);

/// The lifted primal-dual iteration as a fixed-point operator with one
/// block per agent, ((lambda_e(n))_{e incident}, x_n), carrying the
/// block-separable metric it is averaged in.
FixedPointOperator dapd_operator(const DistributedProblem& problem,
                                 const Graph& graph, const StepSizes& steps);

/// Layout of dapd_operator's block vector.
std::vector<std::size_t> dapd_block_layout(const DistributedProblem& problem,
                                           const Graph& graph);

BlockVector pack_dapd_state(const DistributedProblem& problem,
                            const Graph& graph,
                            const std::vector<AgentState>& states);
void unpack_dapd_state(const DistributedProblem& problem, const Graph& graph,
                       const BlockVector& packed,
                       std::vector<AgentState>& states);

}  // namespace pdsplit
