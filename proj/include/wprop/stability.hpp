#pragma once

// Uniform-stability constant and generalization bounds for Tikhonov
// propagation of one-dimensional labels, plus an empirical harness that
// replaces single training samples and compares the observed changes with
// the bounds.

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "wprop/hypergraph.hpp"
#include "wprop/labels.hpp"
#include "wprop/tikhonov.hpp"

namespace wprop {

struct StabilityInputs {
  std::size_t m = 1;
  double gamma = 1.0;
  double lambda1 = 1.0;
  std::size_t T = 1;  // largest training multiplicity
  double phi_l2_squared = 0.0;

  // m gamma lambda1 - T
  double margin() const noexcept {
    return static_cast<double>(m) * gamma * lambda1 - static_cast<double>(T);
  }
  bool margin_positive() const noexcept { return margin() > 0.0; }

  // Throws InputError when a field is outside its domain.
  void validate() const;
};

// 3 sqrt(T m) / margin^2 + 4 / margin + 2 / m; the per-unit-M_s bound on the
// sup-norm change of one quantile level. Throws HypothesisError when the
// margin is not positive.
double slice_stability_coefficient(const StabilityInputs& si);

// beta = 4 |phi|_2^2 * slice_stability_coefficient(si)
double beta(const StabilityInputs& si);

struct BoundReport {
  double beta = 0.0;
  double M = 0.0;  // 4 |phi|_2^2, the uniform bound on the cost
  double epsilon = 0.0;
  // P(|R_m - R_D| > eps) <= (64 M m beta + 8 M^2) / (m eps^2)
  double fraction_bound = 0.0;
  // P(|R_m - R_D| > eps + beta) <= 2 exp(-m eps^2 / (2 (m beta + M)^2))
  double exponential_bound = 0.0;

  bool m_at_least_4 = false;
  bool m_large_enough = false;  // m >= 8 M^2 / eps^2, required by fraction_bound
  bool margin_positive = false;
  bool fraction_vacuous = false;     // fraction_bound >= 1
  bool exponential_vacuous = false;  // exponential_bound >= 1
};

// (64 M m beta + 8 M^2) / (m eps^2)
double fraction_bound(std::size_t m, double beta, double M, double epsilon);
// 2 exp(-m eps^2 / (2 (m beta + M)^2))
double exponential_bound(std::size_t m, double beta, double M, double epsilon);

// Values are reported raw; bounds above one are flagged, not clipped.
BoundReport generalization_bounds(const StabilityInputs& si, double epsilon);

struct SwapRecord {
  std::size_t replaced_index = 0;
  Vertex vertex = 0;
  // The replacement keeps the vertex and draws a new label, so T is unchanged.
  // False when the margin is not positive and no bound applies.
  bool bound_applicable = true;
  double max_slice_difference = 0.0;  // max_j |phi_j - phi'_j|_inf
  double slice_ratio = 0.0;           // max_j |phi_j - phi'_j|_inf / (coef * M_j)
  double max_cost_difference = 0.0;   // over probe points
  double cost_ratio = 0.0;            // max_cost_difference / beta
};

struct EmpiricalStabilityReport {
  StabilityInputs inputs;
  double slice_coefficient = 0.0;
  double beta = 0.0;
  std::vector<SwapRecord> swaps;
  double worst_slice_ratio = 0.0;
  double worst_cost_ratio = 0.0;
  std::size_t slice_violations = 0;  // ratio above 1 beyond 1e-9 slack
  std::size_t cost_violations = 0;

  bool ok() const noexcept { return slice_violations == 0 && cost_violations == 0; }
};

// A random label whose quantiles are dominated by the envelope. Throws
// InputError if the envelope admits no non-decreasing quantile function.
QuantileLabel random_dominated_label(const DominatedQuantileEnvelope& envelope,
                                     std::mt19937_64& rng);

struct EmpiricalStabilityOptions {
  std::size_t swaps = 20;
  std::uint64_t seed = 0;
  std::size_t probes_per_vertex = 10;
};

// For each trial, replaces the label of one training sample with a random
// dominated label at the same vertex, re-solves, and records the slice and cost changes
// relative to their bounds. M_s is taken as phi(s_j). The cost supremum over
// test points is approximated by probing every vertex against
// `probes_per_vertex` random dominated labels.
EmpiricalStabilityReport empirical_stability(const WeightedGraph& g, const TrainingSet& base,
                                             double gamma,
                                             const DominatedQuantileEnvelope& envelope,
                                             const EmpiricalStabilityOptions& options);

// Bound inputs for a concrete instance.
StabilityInputs stability_inputs(const WeightedGraph& g, const TrainingSet& ts, double gamma,
                                 const DominatedQuantileEnvelope& envelope);

}  // namespace wprop
