#include "wprop/propagation.hpp"

#include <cmath>

namespace wprop {

void PropagationConfig::validate() const {
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw InputError("alpha must be >= 1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InputError("gamma must be positive");
  if (max_iters < 1) throw InputError("max_iters must be at least 1");
  if (!(rel_tol > 0.0)) throw InputError("rel_tol must be positive");
}

PropagationWeights init_weights(const Hypergraph& h, const std::vector<bool>& known,
                                const PropagationConfig& cfg) {
  if (known.size() != h.num_vertices()) {
    throw DimensionError("known-vertex mask does not match the vertex count");
  }
  PropagationWeights w;
  w.edge_vertex.reserve(h.num_edges());
  for (const auto& edge : h.edges()) {
    std::vector<double> row;
    row.reserve(edge.size());
    for (Vertex v : edge) row.push_back(known[v] ? cfg.alpha : 1.0);
    w.edge_vertex.push_back(std::move(row));
  }
  w.incident = h.incident_edges();
  w.vertex_edge.resize(h.num_vertices());
  w.anchor.resize(h.num_vertices());
  for (Vertex v = 0; v < h.num_vertices(); ++v) {
    for (std::size_t e : w.incident[v]) {
      w.vertex_edge[v].push_back(1.0 / static_cast<double>(h.edge(e).size()));
    }
    if (known[v]) w.anchor[v] = cfg.gamma;
  }
  return w;
}

QuantileLabel QuantileBackend::random_label(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> shift(-1.0, 1.0);
  return QuantileLabel::normal(grid, shift(rng), 1.0);
}

DiagGaussianLabel GaussianBackend::random_label(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> mean(init_std.size());
  for (double& m : mean) m = unit(rng);
  return DiagGaussianLabel(std::move(mean), init_std);
}

std::uint64_t vertex_seed(std::uint64_t seed, Vertex v) {
  // splitmix64 finalizer over seed + golden-ratio stride * (v + 1)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(v) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<Vertex> unreachable_vertices(const Hypergraph& h, const std::vector<bool>& known) {
  const auto incident = h.incident_edges();
  std::vector<char> seen(h.num_vertices(), 0);
  std::vector<char> edge_seen(h.num_edges(), 0);
  std::vector<Vertex> stack;
  for (Vertex v = 0; v < h.num_vertices(); ++v) {
    if (known[v]) {
      seen[v] = 1;
      stack.push_back(v);
    }
  }
  while (!stack.empty()) {
    const Vertex v = stack.back();
    stack.pop_back();
    for (std::size_t e : incident[v]) {
      if (edge_seen[e]) continue;
      edge_seen[e] = 1;
      for (Vertex u : h.edge(e)) {
        if (!seen[u]) {
          seen[u] = 1;
          stack.push_back(u);
        }
      }
    }
  }
  std::vector<Vertex> out;
  for (Vertex v = 0; v < h.num_vertices(); ++v) {
    if (!seen[v]) out.push_back(v);
  }
  return out;
}

}  // namespace wprop
