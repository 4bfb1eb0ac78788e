#pragma once

// Random instance builders shared by the tests.

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "wprop/hypergraph.hpp"
#include "wprop/labels.hpp"

namespace testing_support {

struct RandomHistogram {
  std::vector<double> bins;
  std::vector<double> masses;
};

// 1..max_bins atoms at strictly increasing positions in [-5, 5], masses
// normalized to sum to one.
inline RandomHistogram random_histogram(std::mt19937_64& rng, std::size_t max_bins = 8) {
  std::uniform_int_distribution<std::size_t> count(1, max_bins);
  std::uniform_real_distribution<double> pos(-5.0, 5.0);
  std::uniform_real_distribution<double> mass(0.05, 1.0);
  const std::size_t k = count(rng);
  RandomHistogram h;
  while (h.bins.size() < k) {
    const double x = pos(rng);
    if (std::find(h.bins.begin(), h.bins.end(), x) == h.bins.end()) h.bins.push_back(x);
  }
  std::sort(h.bins.begin(), h.bins.end());
  for (std::size_t i = 0; i < k; ++i) h.masses.push_back(mass(rng));
  const double total = std::accumulate(h.masses.begin(), h.masses.end(), 0.0);
  for (double& m : h.masses) m /= total;
  // Absorb rounding so the masses sum to one as closely as possible.
  h.masses.back() = 1.0 - std::accumulate(h.masses.begin(), h.masses.end() - 1, 0.0);
  return h;
}

inline wprop::QuantileLabel random_label(std::mt19937_64& rng, const wprop::QuantileGrid& grid) {
  const auto h = random_histogram(rng);
  return wprop::quantile_from_histogram(h.bins, h.masses, grid);
}

inline std::vector<double> values(const wprop::QuantileLabel& l) {
  return std::vector<double>(l.values().begin(), l.values().end());
}

inline wprop::WeightedGraph to_graph(std::size_t n, const std::vector<oracle::Edge>& edges) {
  std::vector<wprop::WeightedEdge> out;
  for (const auto& e : edges) out.push_back({e.u, e.v, e.w});
  return wprop::WeightedGraph(n, out);
}

// Edge list of a WeightedGraph, for feeding the oracles.
inline std::vector<oracle::Edge> edges_of(const wprop::WeightedGraph& g) {
  std::vector<oracle::Edge> out;
  for (const auto& e : g.edges()) out.push_back({e.u, e.v, e.weight});
  return out;
}

inline wprop::Hypergraph random_hypergraph(std::mt19937_64& rng, std::size_t max_n,
                                           std::size_t max_edges) {
  std::uniform_int_distribution<std::size_t> nd(2, max_n);
  const std::size_t n = nd(rng);
  std::uniform_int_distribution<std::size_t> ed(1, max_edges);
  const std::size_t m = ed(rng);
  std::vector<std::vector<wprop::Vertex>> edges;
  std::uniform_int_distribution<std::size_t> size(2, n);
  for (std::size_t e = 0; e < m; ++e) {
    std::vector<wprop::Vertex> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(size(rng));
    edges.push_back(all);
  }
  return wprop::Hypergraph(n, edges);
}

}  // namespace testing_support
