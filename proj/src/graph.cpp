#include "pdsplit/graph.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pdsplit/rng.hpp"

namespace pdsplit {

Graph Graph::from_edges(std::size_t n_nodes, std::vector<Edge> edges) {
  if (n_nodes < 2)
    throw std::invalid_argument("Graph: need at least two nodes");
  for (auto& [a, b] : edges) {
    if (a == b) throw std::invalid_argument("Graph: self-loop rejected");
    if (a >= n_nodes || b >= n_nodes)
      throw std::invalid_argument("Graph: node id out of range");
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw std::invalid_argument("Graph: duplicate edge rejected");
  if (!is_connected(n_nodes, edges))
    throw std::invalid_argument("Graph: not connected");

  Graph g;
  g.n_nodes_ = n_nodes;
  g.edges_ = std::move(edges);
  g.adjacency_.resize(n_nodes);
  g.incident_.resize(n_nodes);
  for (std::size_t e = 0; e < g.edges_.size(); ++e) {
    const auto [a, b] = g.edges_[e];
    g.adjacency_[a].push_back(b);
    g.adjacency_[b].push_back(a);
    g.incident_[a].push_back({b, e});
    g.incident_[b].push_back({a, e});
  }
  g.degrees_.resize(n_nodes);
  for (std::size_t n = 0; n < n_nodes; ++n) {
    std::sort(g.adjacency_[n].begin(), g.adjacency_[n].end());
    std::sort(g.incident_[n].begin(), g.incident_[n].end());
    g.degrees_[n] = g.adjacency_[n].size();
  }
  return g;
}

const std::vector<std::size_t>& Graph::neighbors(std::size_t n) const {
  if (n >= n_nodes_) throw std::out_of_range("Graph::neighbors");
  return adjacency_[n];
}

std::size_t Graph::degree(std::size_t n) const {
  if (n >= n_nodes_) throw std::out_of_range("Graph::degree");
  return degrees_[n];
}

std::size_t Graph::min_degree() const {
  std::size_t d = std::numeric_limits<std::size_t>::max();
  for (std::size_t v : degrees_) d = std::min(d, v);
  return d;
}

const std::vector<std::pair<std::size_t, std::size_t>>& Graph::incident(
    std::size_t n) const {
  if (n >= n_nodes_) throw std::out_of_range("Graph::incident");
  return incident_[n];
}

bool is_connected(std::size_t n_nodes, const std::vector<Graph::Edge>& edges) {
  if (n_nodes == 0) return false;
  std::vector<std::vector<std::size_t>> adj(n_nodes);
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<bool> seen(n_nodes, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n_nodes;
}

Graph ring_graph(std::size_t n) {
  if (n < 3) throw std::invalid_argument("ring_graph: need n >= 3");
  std::vector<Graph::Edge> edges;
  for (std::size_t i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
  return Graph::from_edges(n, std::move(edges));
}

Graph torus_graph(std::size_t rows, std::size_t cols) {
  if (rows < 2 || cols < 2)
    throw std::invalid_argument("torus_graph: need at least 2x2");
  auto id = [cols](std::size_t r, std::size_t c) { return r * cols + c; };
  std::set<Graph::Edge> edges;  // wrap links on a 2-row/col torus collapse
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t a = id(r, c);
      const std::size_t right = id(r, (c + 1) % cols);
      const std::size_t down = id((r + 1) % rows, c);
      edges.insert({std::min(a, right), std::max(a, right)});
      edges.insert({std::min(a, down), std::max(a, down)});
    }
  }
  return Graph::from_edges(rows * cols,
                           std::vector<Graph::Edge>(edges.begin(), edges.end()));
}

Graph complete_graph(std::size_t n) {
  if (n < 2) throw std::invalid_argument("complete_graph: need n >= 2");
  std::vector<Graph::Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) edges.push_back({i, j});
  return Graph::from_edges(n, std::move(edges));
}

Graph erdos_renyi_graph(std::size_t n, double p, std::uint64_t seed,
                        int max_attempts) {
  if (n < 2) throw std::invalid_argument("erdos_renyi_graph: need n >= 2");
  if (!(p > 0) || p > 1)
    throw std::invalid_argument("erdos_renyi_graph: p must be in (0, 1]");
  Rng rng(seed);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<Graph::Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rng.uniform01() < p) edges.push_back({i, j});
    if (is_connected(n, edges)) return Graph::from_edges(n, std::move(edges));
  }
  throw std::runtime_error(
      "erdos_renyi_graph: no connected sample within attempt budget");
}

Graph read_edge_list(std::istream& in) {
  std::vector<Graph::Edge> edges;
  std::size_t max_id = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    long long a, b;
    if (!(ls >> a >> b) || a < 0 || b < 0)
      throw std::runtime_error("edge list: bad line " + std::to_string(line_no) +
                               ": " + line);
    edges.push_back({static_cast<std::size_t>(a), static_cast<std::size_t>(b)});
    max_id = std::max({max_id, static_cast<std::size_t>(a),
                       static_cast<std::size_t>(b)});
  }
  if (edges.empty()) throw std::runtime_error("edge list: no edges");
  return Graph::from_edges(max_id + 1, std::move(edges));
}

Graph read_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file " + path);
  return read_edge_list(in);
}

void write_edge_list(const Graph& graph, std::ostream& out) {
  for (const auto& [a, b] : graph.edges()) out << a << ' ' << b << '\n';
}

void write_edge_list_file(const Graph& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  write_edge_list(graph, out);
}

Vec edge_op_apply(const Graph& graph, std::size_t dim, const Vec& x) {
  if (x.size() != graph.nodes() * dim)
    throw std::invalid_argument("edge_op_apply: size mismatch");
  Vec y(2 * graph.num_edges() * dim);
  for (std::size_t e = 0; e < graph.num_edges(); ++e) {
    const auto [n, m] = graph.edges()[e];
    for (std::size_t i = 0; i < dim; ++i) {
      y[edge_offset(e, 0, dim) + i] = x[n * dim + i];
      y[edge_offset(e, 1, dim) + i] = x[m * dim + i];
    }
  }
  return y;
}

Vec edge_op_adjoint(const Graph& graph, std::size_t dim, const Vec& y) {
  if (y.size() != 2 * graph.num_edges() * dim)
    throw std::invalid_argument("edge_op_adjoint: size mismatch");
  Vec x(graph.nodes() * dim, 0.0);
  for (std::size_t e = 0; e < graph.num_edges(); ++e) {
    const auto [n, m] = graph.edges()[e];
    for (std::size_t i = 0; i < dim; ++i) {
      x[n * dim + i] += y[edge_offset(e, 0, dim) + i];
      x[m * dim + i] += y[edge_offset(e, 1, dim) + i];
    }
  }
  return x;
}

LinearOperator edge_operator(const Graph& graph, std::size_t dim) {
  LinearOperator op;
  op.dim_in = graph.nodes() * dim;
  op.dim_out = 2 * graph.num_edges() * dim;
  op.injective = true;  // every node of a connected graph has an edge
  auto g = std::make_shared<Graph>(graph);
  op.apply = [g, dim](const Vec& x) { return edge_op_apply(*g, dim, x); };
  op.adjoint = [g, dim](const Vec& y) { return edge_op_adjoint(*g, dim, y); };
  op.gram_diag.resize(op.dim_in);
  double max_deg = 0.0;
  for (std::size_t n = 0; n < graph.nodes(); ++n) {
    const auto d = static_cast<double>(graph.degree(n));
    max_deg = std::max(max_deg, d);
    for (std::size_t i = 0; i < dim; ++i) op.gram_diag[n * dim + i] = d;
  }
  op.gram_opnorm = max_deg;
  Vec gdiag = op.gram_diag;
  op.gram_inverse = [gdiag](const Vec& v) {
    if (v.size() != gdiag.size())
      throw std::invalid_argument("edge_operator gram_inverse: size mismatch");
    Vec r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i] / gdiag[i];
    return r;
  };
  return op;
}

ProxableTerm edge_consensus_term(const Graph& graph, std::size_t dim) {
  ProxableTerm t;
  auto g = std::make_shared<Graph>(graph);
  t.eval = [g, dim](const Vec& y) {
    if (y.size() != 2 * g->num_edges() * dim)
      throw std::invalid_argument("edge_consensus_term: size mismatch");
    for (std::size_t e = 0; e < g->num_edges(); ++e)
      for (std::size_t i = 0; i < dim; ++i)
        if (y[edge_offset(e, 0, dim) + i] != y[edge_offset(e, 1, dim) + i])
          return std::numeric_limits<double>::infinity();
    return 0.0;
  };
  t.prox = [g, dim](double, const Vec& y) {
    if (y.size() != 2 * g->num_edges() * dim)
      throw std::invalid_argument("edge_consensus_term: size mismatch");
    Vec r(y.size());
    for (std::size_t e = 0; e < g->num_edges(); ++e) {
      for (std::size_t i = 0; i < dim; ++i) {
        const double mid = 0.5 * (y[edge_offset(e, 0, dim) + i] +
                                  y[edge_offset(e, 1, dim) + i]);
        r[edge_offset(e, 0, dim) + i] = mid;
        r[edge_offset(e, 1, dim) + i] = mid;
      }
    }
    return r;
  };
  return t;
}

double lifted_lipschitz_bound(const Graph& graph, double local_lipschitz) {
  if (local_lipschitz < 0)
    throw std::invalid_argument("lifted_lipschitz_bound: negative bound");
  return local_lipschitz / static_cast<double>(graph.min_degree());
}

}  // namespace pdsplit
