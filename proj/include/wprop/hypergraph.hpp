#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace wprop {

using Vertex = std::size_t;

// H = (V, E) with V = {0, .., n-1}. Each hyperedge is stored sorted and
// duplicate-free; repeated hyperedges are kept (they accumulate weight under
// clique expansion).
class Hypergraph {
 public:
  Hypergraph() = default;
  // Sorts each hyperedge. Throws InputError on out-of-range or repeated
  // vertices inside a hyperedge, or hyperedges with fewer than two vertices.
  Hypergraph(std::size_t n, std::vector<std::vector<Vertex>> edges);

  std::size_t num_vertices() const noexcept { return n_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  const std::vector<std::vector<Vertex>>& edges() const noexcept { return edges_; }
  std::span<const Vertex> edge(std::size_t e) const noexcept { return edges_[e]; }

  // incident_edges()[v] lists hyperedge indices containing v, ascending.
  std::vector<std::vector<std::size_t>> incident_edges() const;

 private:
  std::size_t n_ = 0;
  std::vector<std::vector<Vertex>> edges_;
};

struct WeightedEdge {
  Vertex u;  // u < v
  Vertex v;
  double weight;

  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

// Undirected graph with strictly positive weights, no self loops. Parallel
// edges passed to the constructor are merged by summing weights; edges are
// stored sorted by (u, v).
class WeightedGraph {
 public:
  WeightedGraph() = default;
  WeightedGraph(std::size_t n, std::span<const WeightedEdge> edges);

  std::size_t num_vertices() const noexcept { return n_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  const std::vector<WeightedEdge>& edges() const noexcept { return edges_; }

  // Weight of {u, v}, or 0 when absent.
  double weight(Vertex u, Vertex v) const;

  // Neighbors of v with edge weights, ordered by neighbor index.
  const std::vector<std::pair<Vertex, double>>& neighbors(Vertex v) const {
    return adjacency_[v];
  }

  // Union of both edge sets with weights summed.
  static WeightedGraph merge(const WeightedGraph& a, const WeightedGraph& b);

 private:
  std::size_t n_ = 0;
  std::vector<WeightedEdge> edges_;
  std::vector<std::vector<std::pair<Vertex, double>>> adjacency_;
};

// L = D - W as a read-only operator.
class LaplacianView {
 public:
  explicit LaplacianView(const WeightedGraph& graph);

  const WeightedGraph& graph() const noexcept { return *graph_; }
  std::span<const double> degrees() const noexcept { return degrees_; }

  // (L x)(i) = deg(i) x(i) - sum_{j ~ i} w_ij x(j)
  std::vector<double> apply(std::span<const double> x) const;
  // x^T L x = sum_{edges} w_ij (x_i - x_j)^2
  double quadratic_form(std::span<const double> x) const;

  Eigen::SparseMatrix<double> sparse() const;
  Eigen::MatrixXd dense() const;

 private:
  const WeightedGraph* graph_;
  std::vector<double> degrees_;
};

// Pair {i, j} inside a hyperedge of size k receives weight 1/k^2; weights from
// different hyperedges add up.
WeightedGraph clique_expand(const Hypergraph& h);

LaplacianView laplacian(const WeightedGraph& g);

bool is_connected(const WeightedGraph& g);

// Largest vertex count handled by dense eigendecomposition in spectral_gap.
inline constexpr std::size_t kDenseSpectralLimit = 512;

// Smallest non-zero eigenvalue of L. Throws StructureError when the graph is
// disconnected or has fewer than two vertices.
double spectral_gap(const WeightedGraph& g);

}  // namespace wprop
