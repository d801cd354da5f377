#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pdsplit/linear_operator.hpp"
#include "pdsplit/terms.hpp"
#include "pdsplit/vec.hpp"

namespace pdsplit {

/// Undirected simple connected communication graph. Edges are stored
/// canonically as (min, max) pairs in lexicographic order, so the edge
/// layout does not depend on the order edges were supplied in.
class Graph {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;

  static Graph from_edges(std::size_t n_nodes, std::vector<Edge> edges);

  std::size_t nodes() const { return n_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::size_t>& neighbors(std::size_t n) const;
  std::size_t degree(std::size_t n) const;
  std::size_t min_degree() const;

  /// Edges incident to n as (neighbor, edge index) pairs, neighbor-sorted.
  const std::vector<std::pair<std::size_t, std::size_t>>& incident(
      std::size_t n) const;

 private:
  std::size_t n_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> incident_;
  std::vector<std::size_t> degrees_;
};

/// Connectivity by traversal on a raw edge list (single node counts as
/// connected).
bool is_connected(std::size_t n_nodes, const std::vector<Graph::Edge>& edges);

// generators
Graph ring_graph(std::size_t n);
Graph torus_graph(std::size_t rows, std::size_t cols);
Graph complete_graph(std::size_t n);
/// Erdos-Renyi with edge probability p, resampled until connected.
Graph erdos_renyi_graph(std::size_t n, double p, std::uint64_t seed,
                        int max_attempts = 1000);

// edge-list text format: one "n m" pair per line, 0-based ids
Graph read_edge_list(std::istream& in);
Graph read_edge_list_file(const std::string& path);
void write_edge_list(const Graph& graph, std::ostream& out);
void write_edge_list_file(const Graph& graph, const std::string& path);

/// Offset of the (edge, slot) component in an edge-space vector whose
/// per-node values have `dim` coordinates.
inline std::size_t edge_offset(std::size_t edge, std::size_t slot,
                               std::size_t dim) {
  return (2 * edge + slot) * dim;
}

/// y_e = (x_n, x_m) for every edge e = {n, m}, n < m. Input is the
/// node-major concatenation of the per-node vectors.
Vec edge_op_apply(const Graph& graph, std::size_t dim, const Vec& x);

/// (M* y)_n = sum over edges containing n of the n-endpoint component.
Vec edge_op_adjoint(const Graph& graph, std::size_t dim, const Vec& y);

/// The duplication map as a LinearOperator; M*M is the degree diagonal.
LinearOperator edge_operator(const Graph& graph, std::size_t dim);

/// Indicator of edgewise consensus: zero when both endpoint values of
/// every edge coincide exactly, +inf otherwise. Prox is the edgewise
/// midpoint, independent of the step.
ProxableTerm edge_consensus_term(const Graph& graph, std::size_t dim);

/// Lipschitz bound of the lifted gradient: local bound / min degree.
double lifted_lipschitz_bound(const Graph& graph, double local_lipschitz);

}  // namespace pdsplit
