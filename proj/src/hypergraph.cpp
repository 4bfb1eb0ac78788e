#include "wprop/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "wprop/error.hpp"

namespace wprop {

Hypergraph::Hypergraph(std::size_t n, std::vector<std::vector<Vertex>> edges)
    : n_(n), edges_(std::move(edges)) {
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    auto& edge = edges_[e];
    std::sort(edge.begin(), edge.end());
    if (edge.size() < 2) {
      throw InputError("hyperedge " + std::to_string(e) + " has fewer than two vertices");
    }
    if (std::adjacent_find(edge.begin(), edge.end()) != edge.end()) {
      throw InputError("hyperedge " + std::to_string(e) + " repeats a vertex");
    }
    if (edge.back() >= n_) {
      throw InputError("hyperedge " + std::to_string(e) + " references vertex " +
                       std::to_string(edge.back()) + " but n = " + std::to_string(n_));
    }
  }
}

std::vector<std::vector<std::size_t>> Hypergraph::incident_edges() const {
  std::vector<std::vector<std::size_t>> out(n_);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    for (Vertex v : edges_[e]) out[v].push_back(e);
  }
  return out;
}

WeightedGraph::WeightedGraph(std::size_t n, std::span<const WeightedEdge> edges) : n_(n) {
  std::map<std::pair<Vertex, Vertex>, double> merged;
  for (const auto& edge : edges) {
    if (edge.u == edge.v) throw InputError("self loop at vertex " + std::to_string(edge.u));
    if (edge.u >= n || edge.v >= n) {
      throw InputError("edge (" + std::to_string(edge.u) + ", " + std::to_string(edge.v) +
                       ") out of range for n = " + std::to_string(n));
    }
    if (!(edge.weight > 0.0) || !std::isfinite(edge.weight)) {
      throw InputError("edge weights must be positive and finite");
    }
    merged[std::minmax(edge.u, edge.v)] += edge.weight;
  }
  edges_.reserve(merged.size());
  adjacency_.resize(n);
  for (const auto& [key, w] : merged) {
    edges_.push_back({key.first, key.second, w});
    adjacency_[key.first].emplace_back(key.second, w);
    adjacency_[key.second].emplace_back(key.first, w);
  }
  for (auto& list : adjacency_) std::sort(list.begin(), list.end());
}

double WeightedGraph::weight(Vertex u, Vertex v) const {
  if (u >= n_ || v >= n_) return 0.0;
  const auto& list = adjacency_[u];
  auto it = std::lower_bound(list.begin(), list.end(), v,
                             [](const auto& entry, Vertex key) { return entry.first < key; });
  return (it != list.end() && it->first == v) ? it->second : 0.0;
}

WeightedGraph WeightedGraph::merge(const WeightedGraph& a, const WeightedGraph& b) {
  std::vector<WeightedEdge> all = a.edges_;
  all.insert(all.end(), b.edges_.begin(), b.edges_.end());
  return WeightedGraph(std::max(a.n_, b.n_), all);
}

LaplacianView::LaplacianView(const WeightedGraph& graph)
    : graph_(&graph), degrees_(graph.num_vertices(), 0.0) {
  for (const auto& e : graph.edges()) {
    degrees_[e.u] += e.weight;
    degrees_[e.v] += e.weight;
  }
}

std::vector<double> LaplacianView::apply(std::span<const double> x) const {
  const std::size_t n = graph_->num_vertices();
  if (x.size() != n) throw DimensionError("laplacian apply: vector length mismatch");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = degrees_[i] * x[i];
  for (const auto& e : graph_->edges()) {
    out[e.u] -= e.weight * x[e.v];
    out[e.v] -= e.weight * x[e.u];
  }
  return out;
}

double LaplacianView::quadratic_form(std::span<const double> x) const {
  if (x.size() != graph_->num_vertices()) {
    throw DimensionError("laplacian quadratic form: vector length mismatch");
  }
  double sum = 0.0;
  for (const auto& e : graph_->edges()) {
    const double d = x[e.u] - x[e.v];
    sum += e.weight * d * d;
  }
  return sum;
}

Eigen::SparseMatrix<double> LaplacianView::sparse() const {
  const auto n = static_cast<Eigen::Index>(graph_->num_vertices());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(graph_->num_edges() * 2 + graph_->num_vertices());
  for (Eigen::Index i = 0; i < n; ++i) triplets.emplace_back(i, i, degrees_[i]);
  for (const auto& e : graph_->edges()) {
    const auto u = static_cast<Eigen::Index>(e.u);
    const auto v = static_cast<Eigen::Index>(e.v);
    triplets.emplace_back(u, v, -e.weight);
    triplets.emplace_back(v, u, -e.weight);
  }
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

Eigen::MatrixXd LaplacianView::dense() const { return Eigen::MatrixXd(sparse()); }

WeightedGraph clique_expand(const Hypergraph& h) {
  std::vector<WeightedEdge> pairs;
  for (const auto& edge : h.edges()) {
    const double k = static_cast<double>(edge.size());
    const double w = 1.0 / (k * k);
    for (std::size_t a = 0; a < edge.size(); ++a) {
      for (std::size_t b = a + 1; b < edge.size(); ++b) {
        pairs.push_back({edge[a], edge[b], w});
      }
    }
  }
  return WeightedGraph(h.num_vertices(), pairs);
}

LaplacianView laplacian(const WeightedGraph& g) { return LaplacianView(g); }

bool is_connected(const WeightedGraph& g) {
  const std::size_t n = g.num_vertices();
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::vector<Vertex> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const Vertex v = stack.back();
    stack.pop_back();
    for (const auto& [u, w] : g.neighbors(v)) {
      if (!seen[u]) {
        seen[u] = 1;
        ++reached;
        stack.push_back(u);
      }
    }
  }
  return reached == n;
}

namespace {

double dense_spectral_gap(const LaplacianView& lap) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap.dense(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("spectral_gap: dense eigensolver failed", 0.0);
  }
  // Connected: eigenvalue 0 is simple, so the second smallest is the gap.
  return solver.eigenvalues()(1);
}

// Shifted subspace inverse iteration restricted to the complement of the
// constant vector, followed by Rayleigh-Ritz on the block.
double iterative_spectral_gap(const LaplacianView& lap) {
  const auto n = static_cast<Eigen::Index>(lap.graph().num_vertices());
  const Eigen::SparseMatrix<double> L = lap.sparse();
  const double max_degree = *std::max_element(lap.degrees().begin(), lap.degrees().end());
  const double shift = 1e-6 * max_degree;

  Eigen::SparseMatrix<double> shifted = L;
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += shift;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> factor(shifted);
  if (factor.info() != Eigen::Success) {
    throw NumericalError("spectral_gap: factorization of shifted Laplacian failed", 0.0);
  }

  const Eigen::Index block = std::min<Eigen::Index>(8, n - 1);
  auto deflate = [](Eigen::MatrixXd& x) { x.rowwise() -= x.colwise().mean(); };

  // Deterministic start: low-frequency cosines plus a vertex-index ramp.
  Eigen::MatrixXd x(n, block);
  for (Eigen::Index c = 0; c < block; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i, c) = std::cos(static_cast<double>((c + 1) * (2 * i + 1)) * 1.2345 /
                         static_cast<double>(n)) +
                1e-3 * static_cast<double>((i * (c + 3)) % 7);
    }
  }

  double previous = std::numeric_limits<double>::infinity();
  double theta = previous;
  for (int iter = 0; iter < 2000; ++iter) {
    deflate(x);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
    deflate(q);
    const Eigen::MatrixXd lq = L * q;
    const Eigen::MatrixXd ritz = q.transpose() * lq;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(ritz);
    theta = small.eigenvalues()(0);
    const Eigen::VectorXd vec = q * small.eigenvectors().col(0);
    const double residual = (L * vec - theta * vec).norm() / vec.norm();
    // Ritz value error scales like residual^2 / (lambda_2 - lambda_1).
    if (residual <= 1e-7 * theta || std::abs(theta - previous) <= 1e-14 * theta) {
      return theta;
    }
    previous = theta;
    x = factor.solve(q);
  }
  throw NumericalError("spectral_gap: subspace iteration did not converge", theta);
}

}  // namespace

double spectral_gap(const WeightedGraph& g) {
  if (g.num_vertices() < 2) throw StructureError("spectral_gap: needs at least two vertices");
  if (!is_connected(g)) throw StructureError("spectral_gap: graph is disconnected");
  const LaplacianView lap(g);
  if (g.num_vertices() <= kDenseSpectralLimit) return dense_spectral_gap(lap);
  return iterative_spectral_gap(lap);
}

}  // namespace wprop
