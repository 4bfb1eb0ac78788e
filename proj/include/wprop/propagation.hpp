#pragma once

// Alternating barycenter label propagation on hypergraphs.
//
// Each iteration first sets every hyperedge label to the weighted barycenter
// of its vertices' labels (known vertices weigh alpha, others 1), then sets
// every vertex label to the barycenter of its incident hyperedge labels
// (weight 1/|E| each) plus, for known vertices, the target label with weight
// gamma. The loop stops when the loss changes by at most
// rel_tol * max(1, previous loss) or after max_iters iterations.
//
// The algorithm is generic over a label backend providing distance,
// barycenter, seeded initialization and per-coordinate means.

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wprop/error.hpp"
#include "wprop/hypergraph.hpp"
#include "wprop/labels.hpp"
#include "wprop/log.hpp"

namespace wprop {

struct PropagationConfig {
  double alpha = 20.0;
  double gamma = 10.0;
  std::size_t max_iters = 200;
  double rel_tol = 1e-6;
  std::uint64_t seed = 0;

  // Throws InputError unless alpha >= 1, gamma > 0, max_iters >= 1 and
  // rel_tol > 0.
  void validate() const;
};

template <class Label>
using LabeledSubset = std::map<Vertex, Label>;

struct PropagationWeights {
  // W_E(v), aligned with h.edge(e).
  std::vector<std::vector<double>> edge_vertex;
  // Incident hyperedges of each vertex, ascending.
  std::vector<std::vector<std::size_t>> incident;
  // w_v(E) = 1/|E|, aligned with incident[v].
  std::vector<std::vector<double>> vertex_edge;
  // gamma for known vertices.
  std::vector<std::optional<double>> anchor;
};

PropagationWeights init_weights(const Hypergraph& h, const std::vector<bool>& known,
                                const PropagationConfig& cfg);

template <class Label>
PropagationWeights init_weights(const Hypergraph& h, const LabeledSubset<Label>& known,
                                const PropagationConfig& cfg) {
  std::vector<bool> mask(h.num_vertices(), false);
  for (const auto& [v, label] : known) {
    if (v >= h.num_vertices()) throw InputError("known vertex out of range");
    mask[v] = true;
  }
  return init_weights(h, mask, cfg);
}

template <class Label>
struct PropagationState {
  std::vector<Label> vertex_labels;
  std::vector<Label> edge_labels;
  std::vector<double> loss_history;
  std::size_t iteration = 0;
};

template <class B>
concept LabelBackend = requires(const B& b, const typename B::Label& l,
                                std::span<const double> w,
                                std::span<const typename B::Label> ls, std::mt19937_64& rng) {
  { b.distance2(l, l) } -> std::convertible_to<double>;
  { b.barycenter(w, ls) } -> std::same_as<typename B::Label>;
  { b.random_label(rng) } -> std::same_as<typename B::Label>;
  { b.mean(l) } -> std::same_as<std::vector<double>>;
};

// One-dimensional labels on a quantile grid. Random labels are N(u, 1) with
// u uniform on [-1, 1].
struct QuantileBackend {
  using Label = QuantileLabel;
  QuantileGrid grid{};

  double distance2(const Label& a, const Label& b) const { return w2_squared_quantile(a, b); }
  Label barycenter(std::span<const double> w, std::span<const Label> ls) const {
    return barycenter_quantile(w, ls);
  }
  Label random_label(std::mt19937_64& rng) const;
  std::vector<double> mean(const Label& l) const { return {l.mean()}; }
};

// Diagonal Gaussians. Random labels have means uniform on [0, 1]^b and the
// configured standard deviations.
struct GaussianBackend {
  using Label = DiagGaussianLabel;
  std::vector<double> init_std;

  double distance2(const Label& a, const Label& b) const { return w2_squared_gaussian(a, b); }
  Label barycenter(std::span<const double> w, std::span<const Label> ls) const {
    return barycenter_gaussian(w, ls);
  }
  Label random_label(std::mt19937_64& rng) const;
  std::vector<double> mean(const Label& l) const {
    return std::vector<double>(l.mean().begin(), l.mean().end());
  }
};

// Per-vertex initialization stream: vertex v always draws from the same
// generator for a given seed, independent of the other vertices.
std::uint64_t vertex_seed(std::uint64_t seed, Vertex v);

// Vertices sharing no hyperedge path with any known vertex.
std::vector<Vertex> unreachable_vertices(const Hypergraph& h, const std::vector<bool>& known);

template <LabelBackend B>
std::vector<typename B::Label> random_initial_labels(const Hypergraph& h, const B& backend,
                                                     std::uint64_t seed) {
  std::vector<typename B::Label> out;
  out.reserve(h.num_vertices());
  for (Vertex v = 0; v < h.num_vertices(); ++v) {
    std::mt19937_64 rng(vertex_seed(seed, v));
    out.push_back(backend.random_label(rng));
  }
  return out;
}

// Hyperedge labels as W_E-weighted barycenters of the current vertex labels.
template <LabelBackend B>
std::vector<typename B::Label> edge_barycenters(const Hypergraph& h,
                                                const PropagationWeights& weights,
                                                const B& backend,
                                                const std::vector<typename B::Label>& vertices) {
  std::vector<typename B::Label> out;
  out.reserve(h.num_edges());
  std::vector<typename B::Label> members;
  for (std::size_t e = 0; e < h.num_edges(); ++e) {
    members.clear();
    for (Vertex v : h.edge(e)) members.push_back(vertices[v]);
    out.push_back(backend.barycenter(weights.edge_vertex[e], members));
  }
  return out;
}

template <LabelBackend B>
PropagationState<typename B::Label> initial_state(const Hypergraph& h,
                                                  const PropagationWeights& weights,
                                                  const B& backend,
                                                  std::vector<typename B::Label> vertex_labels) {
  if (vertex_labels.size() != h.num_vertices()) {
    throw DimensionError("initial labels: expected one label per vertex");
  }
  PropagationState<typename B::Label> state;
  state.edge_labels = edge_barycenters(h, weights, backend, vertex_labels);
  state.vertex_labels = std::move(vertex_labels);
  return state;
}

// One alternating iteration. Returns the iteration loss
//   sum_v sum_{E ~ v} w_v(E) W2^2(l(v), l(E)) + sum_{v known} gamma W2^2(l(v), target(v))
// and appends it to the state's history.
template <LabelBackend B>
double step(const Hypergraph& h, const LabeledSubset<typename B::Label>& known,
            const PropagationWeights& weights, const B& backend,
            PropagationState<typename B::Label>& state) {
  using Label = typename B::Label;
  state.edge_labels = edge_barycenters(h, weights, backend, state.vertex_labels);

  double loss = 0.0;
  std::vector<Label> inputs;
  std::vector<double> w;
  for (Vertex v = 0; v < h.num_vertices(); ++v) {
    const auto& incident = weights.incident[v];
    const auto target = known.find(v);
    if (incident.empty() && target == known.end()) continue;

    inputs.clear();
    w.assign(weights.vertex_edge[v].begin(), weights.vertex_edge[v].end());
    for (std::size_t e : incident) inputs.push_back(state.edge_labels[e]);
    if (target != known.end()) {
      inputs.push_back(target->second);
      w.push_back(*weights.anchor[v]);
    }
    state.vertex_labels[v] = backend.barycenter(w, inputs);

    const Label& current = state.vertex_labels[v];
    for (std::size_t k = 0; k < incident.size(); ++k) {
      loss += weights.vertex_edge[v][k] * backend.distance2(current, state.edge_labels[incident[k]]);
    }
    if (target != known.end()) {
      loss += *weights.anchor[v] * backend.distance2(current, target->second);
    }
  }
  state.loss_history.push_back(loss);
  ++state.iteration;
  return loss;
}

inline bool loss_converged(const std::vector<double>& history, double rel_tol) {
  if (history.size() < 2) return false;
  const double prev = history[history.size() - 2];
  const double curr = history.back();
  return std::abs(curr - prev) <= rel_tol * std::max(1.0, prev);
}

// Runs the alternating iteration from `initial` labels, or from seeded random
// labels when none are given. Throws InputError when no vertex is known.
template <LabelBackend B>
PropagationState<typename B::Label> propagate(
    const Hypergraph& h, const LabeledSubset<typename B::Label>& known,
    const PropagationConfig& cfg, const B& backend,
    std::optional<std::vector<typename B::Label>> initial = std::nullopt) {
  cfg.validate();
  if (known.empty()) throw InputError("propagate: the known vertex set is empty");
  const PropagationWeights weights = init_weights(h, known, cfg);

  std::vector<bool> mask(h.num_vertices(), false);
  for (const auto& [v, label] : known) mask[v] = true;
  const auto unreachable = unreachable_vertices(h, mask);
  if (!unreachable.empty()) {
    std::string list;
    for (std::size_t i = 0; i < unreachable.size() && i < 20; ++i) {
      list += (i ? " " : "") + std::to_string(unreachable[i]);
    }
    if (unreachable.size() > 20) list += " ...";
    warn(std::to_string(unreachable.size()) +
         " vertices are not connected to any known vertex and keep their initial labels: " +
         list);
  }

  auto state = initial_state(h, weights, backend,
                             initial ? std::move(*initial)
                                     : random_initial_labels(h, backend, cfg.seed));
  while (state.iteration < cfg.max_iters) {
    step(h, known, weights, backend, state);
    if (loss_converged(state.loss_history, cfg.rel_tol)) break;
  }
  return state;
}

// Class per vertex: argmax of the mean coordinates (lowest index on ties) for
// b >= 2, or the sign of the mean (+1 / -1, zero maps to +1) for b = 1.
template <LabelBackend B>
std::vector<int> classify(const PropagationState<typename B::Label>& state, const B& backend) {
  std::vector<int> out;
  out.reserve(state.vertex_labels.size());
  for (const auto& label : state.vertex_labels) {
    const std::vector<double> mean = backend.mean(label);
    if (mean.size() == 1) {
      out.push_back(mean[0] >= 0.0 ? 1 : -1);
      continue;
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < mean.size(); ++c) {
      if (mean[c] > mean[best]) best = c;
    }
    out.push_back(static_cast<int>(best));
  }
  return out;
}

}  // namespace wprop
