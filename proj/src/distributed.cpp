#include "pdsplit/distributed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <set>
#include <stdexcept>

namespace pdsplit {

double DistributedProblem::objective(const Vec& u) const {
  double s = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) s += f[n].eval(u) + g[n].eval(u);
  return s;
}

void DistributedProblem::validate(const Graph& graph) const {
  if (f.size() != g.size())
    throw std::invalid_argument("DistributedProblem: f/g size mismatch");
  if (f.size() != graph.nodes())
    throw std::invalid_argument("DistributedProblem: agent count mismatch");
  if (dim == 0) throw std::invalid_argument("DistributedProblem: zero dim");
  if (local_lipschitz < 0)
    throw std::invalid_argument("DistributedProblem: negative Lipschitz bound");
}

bool DistributedProblem::f_all_zero() const {
  for (const auto& t : f)
    if (!t.is_zero) return false;
  return true;
}

SimNetwork::SimNetwork(const Graph& graph) : graph_(&graph) {
  pending_.resize(graph.nodes());
}

void SimNetwork::send(std::size_t from, std::size_t to, Payload payload) {
  if (to >= pending_.size())
    throw std::invalid_argument("SimNetwork::send: unknown receiver");
  pending_[to].push_back({from, std::move(payload)});
}

void SimNetwork::advance(std::vector<AgentState>& states) {
  for (std::size_t to = 0; to < pending_.size(); ++to) {
    for (auto& [from, payload] : pending_[to]) {
      const auto& nbrs = graph_->neighbors(to);
      const auto it = std::lower_bound(nbrs.begin(), nbrs.end(), from);
      if (it == nbrs.end() || *it != from)
        throw std::invalid_argument("SimNetwork: message from non-neighbor");
      const std::size_t ord = static_cast<std::size_t>(it - nbrs.begin());
      states[to].x_in[ord] = std::move(payload.x);
      if (payload.has_lambda)
        states[to].lambda_in[ord] = std::move(payload.lambda);
    }
    pending_[to].clear();
  }
  ++clock_;
}

std::vector<AgentState> init_agent_states(const DistributedProblem& problem,
                                          const Graph& graph) {
  problem.validate(graph);
  std::vector<AgentState> states(graph.nodes());
  for (std::size_t n = 0; n < graph.nodes(); ++n) {
    const std::size_t deg = graph.degree(n);
    states[n].x.assign(problem.dim, 0.0);
    states[n].lambda_out.assign(deg, Vec(problem.dim, 0.0));
    states[n].lambda_in.assign(deg, Vec(problem.dim, 0.0));
    states[n].x_in.assign(deg, Vec(problem.dim, 0.0));
  }
  // initial broadcast so caches match the true round-0 values
  for (std::size_t n = 0; n < graph.nodes(); ++n) {
    const auto& nbrs = graph.neighbors(n);
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      const std::size_t m = nbrs[i];
      const auto& back = graph.neighbors(m);
      const std::size_t ord =
          std::lower_bound(back.begin(), back.end(), n) - back.begin();
      states[m].x_in[ord] = states[n].x;
      states[m].lambda_in[ord] = states[n].lambda_out[i];
    }
  }
  return states;
}

StepSizes check_distributed_step_sizes(const DistributedProblem& problem,
                                       const Graph& graph, StepSizes steps) {
  const double lifted = lifted_lipschitz_bound(graph, problem.local_lipschitz);
  return check_step_sizes(lifted, problem.f_all_zero(), steps);
}

namespace {

std::size_t ordinal_of(const Graph& graph, std::size_t node,
                       std::size_t neighbor) {
  const auto& nbrs = graph.neighbors(node);
  const auto it = std::lower_bound(nbrs.begin(), nbrs.end(), neighbor);
  if (it == nbrs.end() || *it != neighbor)
    throw std::invalid_argument("ordinal_of: not a neighbor");
  return static_cast<std::size_t>(it - nbrs.begin());
}

void check_dual_antisymmetry(const Graph& graph,
                             const std::vector<AgentState>& states,
                             std::size_t dim) {
  for (const auto& [n, m] : graph.edges()) {
    const Vec& a = states[n].lambda_out[ordinal_of(graph, n, m)];
    const Vec& b = states[m].lambda_out[ordinal_of(graph, m, n)];
    for (std::size_t i = 0; i < dim; ++i)
      if (a[i] != -b[i])
        throw std::invalid_argument(
            "dadmm_plus_round: edge duals are not antisymmetric");
  }
}

}  // namespace

void dadmm_plus_round(const DistributedProblem& problem, const Graph& graph,
                      const StepSizes& steps, std::vector<AgentState>& states,
                      SimNetwork& net) {
  if (!steps.validated)
    throw std::invalid_argument("dadmm_plus_round: unvalidated step sizes");
  const double tau = steps.tau;
  const double rho = steps.rho;
  const std::size_t dim = problem.dim;
  check_dual_antisymmetry(graph, states, dim);

  for (std::size_t n = 0; n < graph.nodes(); ++n) {
    AgentState& st = states[n];
    const auto& nbrs = graph.neighbors(n);
    const double deg = static_cast<double>(nbrs.size());

    // neighbor aggregate with the pre-update duals
    Vec acc(dim, 0.0);
    for (std::size_t i = 0; i < nbrs.size(); ++i)
      for (std::size_t c = 0; c < dim; ++c)
        acc[c] += st.x_in[i][c] / rho - st.lambda_out[i][c];

    // dual update along each incident edge
    for (std::size_t i = 0; i < nbrs.size(); ++i)
      for (std::size_t c = 0; c < dim; ++c)
        st.lambda_out[i][c] += (st.x[c] - st.x_in[i][c]) / (2.0 * rho);

    Vec grad = problem.f[n].grad(st.x);
    ++st.grad_count;
    Vec w(dim);
    for (std::size_t c = 0; c < dim; ++c)
      w[c] = (1.0 - tau / rho) * st.x[c] - (tau / deg) * grad[c] +
             (tau / deg) * acc[c];
    st.x = problem.g[n].prox(tau / deg, w);
  }

  for (std::size_t n = 0; n < graph.nodes(); ++n)
    for (std::size_t m : graph.neighbors(n))
      net.send(n, m, {states[n].x, {}, false});
  net.advance(states);
}

void dapd_round(const DistributedProblem& problem, const Graph& graph,
                const StepSizes& steps, std::vector<AgentState>& states,
                const std::vector<std::size_t>& active, SimNetwork& net) {
  if (!steps.validated)
    throw std::invalid_argument("dapd_round: unvalidated step sizes");
  const double tau = steps.tau;
  const double rho = steps.rho;
  const std::size_t dim = problem.dim;

  std::set<std::size_t> seen;
  for (std::size_t n : active) {
    if (n >= graph.nodes())
      throw std::invalid_argument("dapd_round: active agent out of range");
    if (!seen.insert(n).second)
      throw std::invalid_argument("dapd_round: duplicate active agent");
  }

  for (std::size_t n : active) {
    AgentState& st = states[n];
    const auto& nbrs = graph.neighbors(n);
    const double deg = static_cast<double>(nbrs.size());

    // the x-update reads the cached neighbor estimates and duals as of the
    // start of the round
    Vec acc(dim, 0.0);
    for (std::size_t i = 0; i < nbrs.size(); ++i)
      for (std::size_t c = 0; c < dim; ++c)
        acc[c] += st.x_in[i][c] / rho + st.lambda_in[i][c];

    for (std::size_t i = 0; i < nbrs.size(); ++i)
      for (std::size_t c = 0; c < dim; ++c)
        st.lambda_out[i][c] =
            0.5 * (st.lambda_out[i][c] - st.lambda_in[i][c]) +
            (st.x[c] - st.x_in[i][c]) / (2.0 * rho);

    Vec grad = problem.f[n].grad(st.x);
    ++st.grad_count;
    Vec w(dim);
    for (std::size_t c = 0; c < dim; ++c)
      w[c] = (1.0 - tau / rho) * st.x[c] - (tau / deg) * grad[c] +
             (tau / deg) * acc[c];
    st.x = problem.g[n].prox(tau / deg, w);
  }

  for (std::size_t n : active) {
    const auto& nbrs = graph.neighbors(n);
    for (std::size_t i = 0; i < nbrs.size(); ++i)
      net.send(n, nbrs[i], {states[n].x, states[n].lambda_out[i], true});
  }
  net.advance(states);
}

MetropolisWeights metropolis_weights(const Graph& graph) {
  MetropolisWeights w;
  w.self.resize(graph.nodes());
  w.nbr.resize(graph.nodes());
  for (std::size_t n = 0; n < graph.nodes(); ++n) {
    const auto& nbrs = graph.neighbors(n);
    double off = 0.0;
    w.nbr[n].resize(nbrs.size());
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      const double dmax = static_cast<double>(
          std::max(graph.degree(n), graph.degree(nbrs[i])));
      w.nbr[n][i] = 1.0 / (1.0 + dmax);
      off += w.nbr[n][i];
    }
    w.self[n] = 1.0 - off;
  }
  return w;
}

namespace {

void validate_weights(const MetropolisWeights& w, const Graph& graph) {
  if (w.self.size() != graph.nodes() || w.nbr.size() != graph.nodes())
    throw std::invalid_argument("dgd_round: weight shape mismatch");
  for (std::size_t n = 0; n < graph.nodes(); ++n) {
    if (w.nbr[n].size() != graph.degree(n))
      throw std::invalid_argument("dgd_round: weight shape mismatch");
    double row = w.self[n];
    if (w.self[n] < -1e-12)
      throw std::invalid_argument("dgd_round: negative weight");
    for (double v : w.nbr[n]) {
      if (v < 0) throw std::invalid_argument("dgd_round: negative weight");
      row += v;
    }
    if (std::fabs(row - 1.0) > 1e-12)
      throw std::invalid_argument("dgd_round: weights row does not sum to 1");
  }
}

}  // namespace

void dgd_round(const DistributedProblem& problem, const Graph& graph,
               const MetropolisWeights& weights, double gamma,
               std::vector<AgentState>& states) {
  validate_weights(weights, graph);
  const std::size_t dim = problem.dim;

  // local descent first
  std::vector<Vec> descended(graph.nodes());
  for (std::size_t n = 0; n < graph.nodes(); ++n) {
    Vec grad = problem.f[n].grad(states[n].x);
    ++states[n].grad_count;
    descended[n] = states[n].x;
    axpy(-gamma, grad, descended[n]);
  }
  // then the averaging exchange
  for (std::size_t n = 0; n < graph.nodes(); ++n) {
    Vec mix(dim, 0.0);
    axpy(weights.self[n], descended[n], mix);
    const auto& nbrs = graph.neighbors(n);
    for (std::size_t i = 0; i < nbrs.size(); ++i)
      axpy(weights.nbr[n][i], descended[nbrs[i]], mix);
    states[n].x = std::move(mix);
  }
}

void abg_round(const DistributedProblem& problem, const Graph& graph,
               double gamma, std::vector<AgentState>& states,
               std::size_t waker) {
  if (waker >= graph.nodes())
    throw std::invalid_argument("abg_round: waker out of range");
  const Vec broadcast = states[waker].x;
  for (std::size_t m : graph.neighbors(waker)) {
    Vec mean(problem.dim);
    for (std::size_t c = 0; c < problem.dim; ++c)
      mean[c] = 0.5 * (states[m].x[c] + broadcast[c]);
    Vec grad = problem.f[m].grad(mean);
    ++states[m].grad_count;
    axpy(-gamma, grad, mean);
    states[m].x = std::move(mean);
  }
}

void pwg_round(const DistributedProblem& problem, const Graph& graph,
               double gamma, std::vector<AgentState>& states,
               std::size_t waker, std::size_t partner) {
  if (waker >= graph.nodes())
    throw std::invalid_argument("pwg_round: waker out of range");
  const auto& nbrs = graph.neighbors(waker);
  if (!std::binary_search(nbrs.begin(), nbrs.end(), partner))
    throw std::invalid_argument("pwg_round: partner not adjacent to waker");

  Vec tw = states[waker].x;
  Vec grad_w = problem.f[waker].grad(tw);
  ++states[waker].grad_count;
  axpy(-gamma, grad_w, tw);

  Vec tp = states[partner].x;
  Vec grad_p = problem.f[partner].grad(tp);
  ++states[partner].grad_count;
  axpy(-gamma, grad_p, tp);

  Vec mean(problem.dim);
  for (std::size_t c = 0; c < problem.dim; ++c)
    mean[c] = 0.5 * (tw[c] + tp[c]);
  states[waker].x = mean;
  states[partner].x = std::move(mean);
}

double consensus_residual(const std::vector<AgentState>& states) {
  if (states.empty()) return 0.0;
  const std::size_t dim = states[0].x.size();
  Vec mean(dim, 0.0);
  for (const auto& st : states) axpy(1.0, st.x, mean);
  scale(1.0 / static_cast<double>(states.size()), mean);
  double worst = 0.0;
  for (const auto& st : states) worst = std::max(worst, dist2(st.x, mean));
  return worst;
}

ActivationProcess ActivationProcess::uniform_single(std::size_t agents,
                                                    std::uint64_t seed) {
  return {CoordinateSelector::uniform_single(agents), seed};
}

DistributedAlgorithm distributed_algorithm_from_string(const std::string& id) {
  if (id == "dadmm_plus") return DistributedAlgorithm::dadmm_plus;
  if (id == "dapd") return DistributedAlgorithm::dapd;
  if (id == "dgd") return DistributedAlgorithm::dgd;
  if (id == "abg") return DistributedAlgorithm::abg;
  if (id == "pwg") return DistributedAlgorithm::pwg;
  throw std::invalid_argument("unknown distributed algorithm: " + id);
}

DistributedRunResult run_distributed(const DistributedProblem& problem,
                                     const Graph& graph,
                                     const ActivationProcess& activation,
                                     const DistributedRunConfig& config) {
  problem.validate(graph);
  const bool primal_dual =
      config.algorithm == DistributedAlgorithm::dadmm_plus ||
      config.algorithm == DistributedAlgorithm::dapd;
  StepSizes steps = config.steps;
  if (primal_dual) {
    steps = config.validate_steps
                ? check_distributed_step_sizes(problem, graph, config.steps)
                : unchecked_step_sizes(config.steps.tau, config.steps.rho);
  }
  if (activation.subsets.num_blocks() != graph.nodes())
    throw std::invalid_argument("run_distributed: activation size mismatch");

  std::vector<AgentState> states = init_agent_states(problem, graph);
  SimNetwork net(graph);
  Rng rng(activation.seed);
  MetropolisWeights weights;
  if (config.algorithm == DistributedAlgorithm::dgd)
    weights = metropolis_weights(graph);

  const auto started = std::chrono::steady_clock::now();
  auto seconds = [&]() {
    if (!config.record_seconds) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         started)
        .count();
  };
  auto total_grads = [&states]() {
    long s = 0;
    for (const auto& st : states) s += st.grad_count;
    return s;
  };

  DistributedRunResult result;
  double obj = problem.objective(states[0].x);
  result.trace.add(0, 0, obj, consensus_residual(states), seconds());
  result.best_objective = obj;
  result.final_objective = obj;

  // sampling cadence independent of the budget, so a longer run's record
  // set extends a shorter run's
  const long quantum = static_cast<long>(graph.nodes());
  long next_mark = quantum;
  long k = 0;
  while (total_grads() < config.budget &&
         (config.max_rounds == 0 || k < config.max_rounds)) {
    ++k;
    switch (config.algorithm) {
      case DistributedAlgorithm::dadmm_plus:
        dadmm_plus_round(problem, graph, steps, states, net);
        break;
      case DistributedAlgorithm::dapd: {
        const auto& subset = activation.subsets.sample(rng);
        dapd_round(problem, graph, steps, states, subset, net);
        break;
      }
      case DistributedAlgorithm::dgd:
        dgd_round(problem, graph, weights,
                  config.gamma0 / std::pow(static_cast<double>(k), 0.75),
                  states);
        break;
      case DistributedAlgorithm::abg:
        abg_round(problem, graph,
                  config.gamma0 / std::pow(static_cast<double>(k), 0.75),
                  states, rng.below(graph.nodes()));
        break;
      case DistributedAlgorithm::pwg: {
        const std::size_t waker = rng.below(graph.nodes());
        const auto& nbrs = graph.neighbors(waker);
        const std::size_t partner = nbrs[rng.below(nbrs.size())];
        pwg_round(problem, graph,
                  config.gamma0 / std::pow(static_cast<double>(k), 0.75),
                  states, waker, partner);
        break;
      }
    }
    for (const auto& st : states) {
      if (!all_finite(st.x) || norm2(st.x) > 1e12)
        throw std::runtime_error("run_distributed: diverged at round " +
                                 std::to_string(k));
    }
    const long grads = total_grads();
    const bool done = grads >= config.budget ||
                      (config.max_rounds != 0 && k >= config.max_rounds);
    if (grads >= next_mark || done) {
      obj = problem.objective(states[0].x);
      result.trace.add(k, grads, obj, consensus_residual(states), seconds());
      result.best_objective = std::min(result.best_objective, obj);
      result.final_objective = obj;
      while (next_mark <= grads) next_mark += quantum;
    }
  }
  result.rounds = k;
  result.grads = total_grads();
  return result;
}

CompositeProblem lift_to_composite(const DistributedProblem& problem,
                                   const Graph& graph) {
  problem.validate(graph);
  const std::size_t dim = problem.dim;
  const std::size_t n_agents = graph.nodes();

  CompositeProblem cp;
  cp.M = edge_operator(graph, dim);
  cp.h = edge_consensus_term(graph, dim);
  cp.lifted_lipschitz = lifted_lipschitz_bound(graph, problem.local_lipschitz);

  auto fs = std::make_shared<std::vector<SmoothTerm>>(problem.f);
  SmoothTerm f;
  f.eval = [fs, dim, n_agents](const Vec& x) {
    double s = 0.0;
    for (std::size_t n = 0; n < n_agents; ++n) {
      Vec xn(x.begin() + n * dim, x.begin() + (n + 1) * dim);
      s += (*fs)[n].eval(xn);
    }
    return s;
  };
  f.grad = [fs, dim, n_agents](const Vec& x) {
    Vec g(x.size());
    for (std::size_t n = 0; n < n_agents; ++n) {
      Vec xn(x.begin() + n * dim, x.begin() + (n + 1) * dim);
      Vec gn = (*fs)[n].grad(xn);
      std::copy(gn.begin(), gn.end(), g.begin() + n * dim);
    }
    return g;
  };
  f.lipschitz = problem.local_lipschitz;
  f.is_zero = problem.f_all_zero();
  cp.f = std::move(f);

  auto gs = std::make_shared<std::vector<ProxableTerm>>(problem.g);
  ProxableTerm g;
  g.eval = [gs, dim, n_agents](const Vec& x) {
    double s = 0.0;
    for (std::size_t n = 0; n < n_agents; ++n) {
      Vec xn(x.begin() + n * dim, x.begin() + (n + 1) * dim);
      s += (*gs)[n].eval(xn);
    }
    return s;
  };
  g.prox = [gs, dim, n_agents](double gamma, const Vec& x) {
    Vec out(x.size());
    for (std::size_t n = 0; n < n_agents; ++n) {
      Vec xn(x.begin() + n * dim, x.begin() + (n + 1) * dim);
      Vec pn = (*gs)[n].prox(gamma, xn);
      std::copy(pn.begin(), pn.end(), out.begin() + n * dim);
    }
    return out;
  };
  g.prox_diag = [gs, dim, n_agents](const Vec& gamma, const Vec& x) {
    Vec out(x.size());
    for (std::size_t n = 0; n < n_agents; ++n) {
      const double g0 = gamma[n * dim];
      for (std::size_t i = 1; i < dim; ++i)
        if (gamma[n * dim + i] != g0)
          throw std::invalid_argument(
              "lifted prox_diag: step varies within an agent block");
      Vec xn(x.begin() + n * dim, x.begin() + (n + 1) * dim);
      Vec pn = (*gs)[n].prox(g0, xn);
      std::copy(pn.begin(), pn.end(), out.begin() + n * dim);
    }
    return out;
  };
  bool all_zero = true;
  for (const auto& t : problem.g) all_zero = all_zero && t.is_zero;
  g.is_zero = all_zero;
  cp.g = std::move(g);
  return cp;
}

VuCondatProblem lift_to_vu_condat(const DistributedProblem& problem,
                                  const Graph& graph) {
  CompositeProblem cp = lift_to_composite(problem, graph);
  const std::size_t dim = problem.dim;
  const std::size_t edge_dim = 2 * graph.num_edges() * dim;
  auto M = std::make_shared<LinearOperator>(cp.M);
  auto f = std::make_shared<SmoothTerm>(cp.f);
  auto g = std::make_shared<ProxableTerm>(cp.g);

  VuCondatProblem vp;
  vp.dim = edge_dim;
  vp.h = cp.h;

  // fbar(y) = f(x) with x = (M*M)^{-1} M* y, the inverse of M on its range
  auto pull_back = [M](const Vec& y) { return M->gram_inverse(M->adjoint(y)); };
  vp.fbar.eval = [f, pull_back](const Vec& y) { return f->eval(pull_back(y)); };
  vp.fbar.grad = [f, M, pull_back](const Vec& y) {
    Vec gx = f->grad(pull_back(y));
    return M->apply(M->gram_inverse(gx));
  };
  vp.fbar.lipschitz = cp.lifted_lipschitz;
  vp.fbar.is_zero = cp.f.is_zero;

  // gbar on the edge space: value through the pull-back, prox by solving
  // the x-space subproblem and pushing forward
  vp.gbar.eval = [g, pull_back](const Vec& y) { return g->eval(pull_back(y)); };
  vp.gbar.prox = [g, M](double gamma, const Vec& v) {
    Vec zero_c(M->dim_in, 0.0);
    Vec x = detail::solve_x_subproblem(*g, *M, gamma, zero_c, v);
    return M->apply(x);
  };
  vp.gbar.is_zero = cp.g.is_zero;
  return vp;
}

std::vector<std::size_t> dapd_block_layout(const DistributedProblem& problem,
                                           const Graph& graph) {
  std::vector<std::size_t> layout(graph.nodes());
  for (std::size_t n = 0; n < graph.nodes(); ++n)
    layout[n] = (graph.degree(n) + 1) * problem.dim;
  return layout;
}

BlockVector pack_dapd_state(const DistributedProblem& problem,
                            const Graph& graph,
                            const std::vector<AgentState>& states) {
  BlockVector out(dapd_block_layout(problem, graph));
  const std::size_t dim = problem.dim;
  for (std::size_t n = 0; n < graph.nodes(); ++n) {
    auto blk = out.block(n);
    const auto& st = states[n];
    for (std::size_t i = 0; i < graph.degree(n); ++i)
      std::copy(st.lambda_out[i].begin(), st.lambda_out[i].end(),
                blk.begin() + i * dim);
    std::copy(st.x.begin(), st.x.end(), blk.begin() + graph.degree(n) * dim);
  }
  return out;
}

void unpack_dapd_state(const DistributedProblem& problem, const Graph& graph,
                       const BlockVector& packed,
                       std::vector<AgentState>& states) {
  const std::size_t dim = problem.dim;
  for (std::size_t n = 0; n < graph.nodes(); ++n) {
    auto blk = packed.block(n);
    auto& st = states[n];
    for (std::size_t i = 0; i < graph.degree(n); ++i)
      st.lambda_out[i].assign(blk.begin() + i * dim,
                              blk.begin() + (i + 1) * dim);
    st.x.assign(blk.begin() + graph.degree(n) * dim,
                blk.begin() + (graph.degree(n) + 1) * dim);
  }
}

FixedPointOperator dapd_operator(const DistributedProblem& problem,
                                 const Graph& graph, const StepSizes& steps) {
  if (!steps.validated || std::isnan(steps.alpha))
    throw std::invalid_argument(
        "dapd_operator: steps must pass the theory validation");
  auto prob = std::make_shared<DistributedProblem>(problem);
  auto g = std::make_shared<Graph>(graph);
  const double tau = steps.tau;
  const double rho = steps.rho;
  const std::size_t dim = problem.dim;

  FixedPointOperator op;
  op.layout = dapd_block_layout(problem, graph);
  op.alpha = steps.alpha;

  // per-agent component of the lifted primal-dual map; expressions mirror
  // the local update rules so agent-driven rounds reproduce coordinate
  // iterations bit for bit
  op.apply_block = [prob, g, tau, rho, dim](std::size_t n,
                                            const BlockVector& in) {
    const std::size_t deg = g->degree(n);
    Vec out((deg + 1) * dim);
    auto own = in.block(n);
    const double* x_n = own.data() + deg * dim;

    Vec acc(dim, 0.0);  // sum over neighbors of x_m / rho + lambda(m)
    const auto& inc = g->incident(n);
    for (std::size_t i = 0; i < deg; ++i) {
      const std::size_t m = inc[i].first;
      auto other = in.block(m);
      const std::size_t back = ordinal_of(*g, m, n);
      const double* lam_nm_n = own.data() + i * dim;
      const double* lam_nm_m = other.data() + back * dim;
      const double* x_m = other.data() + g->degree(m) * dim;
      for (std::size_t c = 0; c < dim; ++c) {
        acc[c] += x_m[c] / rho + lam_nm_m[c];
        out[i * dim + c] = 0.5 * (lam_nm_n[c] - lam_nm_m[c]) +
                           (x_n[c] - x_m[c]) / (2.0 * rho);
      }
    }

    Vec xn(x_n, x_n + dim);
    Vec grad = prob->f[n].grad(xn);
    const double dn = static_cast<double>(deg);
    Vec w(dim);
    for (std::size_t c = 0; c < dim; ++c)
      w[c] = (1.0 - tau / rho) * xn[c] - (tau / dn) * grad[c] +
             (tau / dn) * acc[c];
    Vec xp = prob->g[n].prox(tau / dn, w);
    std::copy(xp.begin(), xp.end(), out.begin() + deg * dim);
    return out;
  };

  auto block_apply = op.apply_block;
  auto layout = op.layout;
  op.apply = [block_apply, layout](const BlockVector& in) {
    BlockVector out(layout);
    for (std::size_t n = 0; n < layout.size(); ++n) {
      Vec b = block_apply(n, in);
      std::copy(b.begin(), b.end(), out.block(n).begin());
    }
    return out;
  };

  // block-separable primal-dual metric
  op.metric.block_inner = [g, tau, rho, dim](std::size_t n,
                                             std::span<const double> a,
                                             std::span<const double> b) {
    const std::size_t deg = g->degree(n);
    const double* va = a.data() + deg * dim;
    const double* vb = b.data() + deg * dim;
    double s = 0.0;
    for (std::size_t i = 0; i < deg; ++i) {
      const double* la = a.data() + i * dim;
      const double* lb = b.data() + i * dim;
      for (std::size_t c = 0; c < dim; ++c)
        s += rho * la[c] * lb[c] + la[c] * vb[c] + va[c] * lb[c];
    }
    const double dn = static_cast<double>(deg);
    for (std::size_t c = 0; c < dim; ++c) s += dn * va[c] * vb[c] / tau;
    return s;
  };
  return op;
}

}  // namespace pdsplit
