#include "wprop/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wprop/error.hpp"

namespace wprop {

void StabilityInputs::validate() const {
  if (m < 1) throw InputError("stability: m must be at least 1");
  if (!(gamma > 0.0)) throw InputError("stability: gamma must be positive");
  if (!(lambda1 > 0.0)) throw InputError("stability: spectral gap must be positive");
  if (T < 1) throw InputError("stability: T must be at least 1");
  if (!(phi_l2_squared >= 0.0)) throw InputError("stability: |phi|_2^2 must be non-negative");
}

double slice_stability_coefficient(const StabilityInputs& si) {
  si.validate();
  const double margin = si.margin();
  if (!(margin > 0.0)) {
    throw HypothesisError("stability bound requires m*gamma*lambda1 - T > 0, got " +
                          std::to_string(margin));
  }
  const double m = static_cast<double>(si.m);
  const double T = static_cast<double>(si.T);
  return 3.0 * std::sqrt(T * m) / (margin * margin) + 4.0 / margin + 2.0 / m;
}

double beta(const StabilityInputs& si) {
  return 4.0 * si.phi_l2_squared * slice_stability_coefficient(si);
}

double fraction_bound(std::size_t m, double beta, double M, double epsilon) {
  const double md = static_cast<double>(m);
  return (64.0 * M * md * beta + 8.0 * M * M) / (md * epsilon * epsilon);
}

double exponential_bound(std::size_t m, double beta, double M, double epsilon) {
  const double md = static_cast<double>(m);
  const double spread = md * beta + M;
  return 2.0 * std::exp(-md * epsilon * epsilon / (2.0 * spread * spread));
}

BoundReport generalization_bounds(const StabilityInputs& si, double epsilon) {
  if (!(epsilon > 0.0)) throw InputError("generalization bounds: epsilon must be positive");
  BoundReport r;
  r.beta = beta(si);
  r.M = 4.0 * si.phi_l2_squared;
  r.epsilon = epsilon;
  r.fraction_bound = fraction_bound(si.m, r.beta, r.M, epsilon);
  r.exponential_bound = exponential_bound(si.m, r.beta, r.M, epsilon);
  r.m_at_least_4 = si.m >= 4;
  r.m_large_enough = static_cast<double>(si.m) >= 8.0 * r.M * r.M / (epsilon * epsilon);
  r.margin_positive = si.margin_positive();
  r.fraction_vacuous = r.fraction_bound >= 1.0;
  r.exponential_vacuous = r.exponential_bound >= 1.0;
  return r;
}

QuantileLabel random_dominated_label(const DominatedQuantileEnvelope& envelope,
                                     std::mt19937_64& rng) {
  const std::size_t S = envelope.grid().size();
  // Tightest non-decreasing bounds inside [-phi, phi]: running max of the
  // lower edge and suffix min of the upper edge.
  std::vector<double> lo(S), hi(S);
  for (std::size_t j = 0; j < S; ++j) {
    lo[j] = j ? std::max(lo[j - 1], -envelope[j]) : -envelope[j];
  }
  for (std::size_t j = S; j-- > 0;) {
    hi[j] = j + 1 < S ? std::min(hi[j + 1], envelope[j]) : envelope[j];
  }
  for (std::size_t j = 0; j < S; ++j) {
    if (lo[j] > hi[j]) {
      throw InputError("envelope admits no non-decreasing quantile function");
    }
  }

  // Step profile t in [0,1], non-decreasing: k levels separated by k-1 cuts.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pieces(1, 6);
  const int k = pieces(rng);
  std::vector<double> levels(k), cuts(k - 1);
  for (double& v : levels) v = unit(rng);
  for (double& c : cuts) c = unit(rng);
  std::sort(levels.begin(), levels.end());
  std::sort(cuts.begin(), cuts.end());

  std::vector<double> values(S);
  std::size_t piece = 0;
  for (std::size_t j = 0; j < S; ++j) {
    const double s = envelope.grid().node(j);
    while (piece < cuts.size() && s >= cuts[piece]) ++piece;
    const double t = levels[piece];
    // Convex combination of non-decreasing bounds with non-decreasing t.
    values[j] = std::clamp(lo[j] + t * (hi[j] - lo[j]), lo[j], hi[j]);
    if (j > 0) values[j] = std::max(values[j], values[j - 1]);
  }
  return QuantileLabel(envelope.grid(), std::move(values));
}

StabilityInputs stability_inputs(const WeightedGraph& g, const TrainingSet& ts, double gamma,
                                 const DominatedQuantileEnvelope& envelope) {
  StabilityInputs si;
  si.m = ts.m();
  si.gamma = gamma;
  si.lambda1 = spectral_gap(g);
  si.T = ts.max_multiplicity();
  si.phi_l2_squared = envelope.phi_l2_squared();
  return si;
}

namespace {

constexpr double kRatioSlack = 1e-9;

}  // namespace

EmpiricalStabilityReport empirical_stability(const WeightedGraph& g, const TrainingSet& base,
                                             double gamma,
                                             const DominatedQuantileEnvelope& envelope,
                                             const EmpiricalStabilityOptions& options) {
  for (const auto& sample : base.samples()) {
    if (!check_dominated(sample.label, envelope)) {
      throw InputError("training label at vertex " + std::to_string(sample.vertex) +
                       " is outside the envelope");
    }
  }
  EmpiricalStabilityReport report;
  report.inputs = stability_inputs(g, base, gamma, envelope);
  if (report.inputs.margin_positive()) {
    report.slice_coefficient = slice_stability_coefficient(report.inputs);
    report.beta = beta(report.inputs);
  }

  const std::size_t n = base.num_vertices();
  const std::size_t S = envelope.grid().size();
  std::mt19937_64 rng(options.seed);

  std::vector<std::vector<QuantileLabel>> probes(n);
  for (auto& list : probes) {
    for (std::size_t p = 0; p < options.probes_per_vertex; ++p) {
      list.push_back(random_dominated_label(envelope, rng));
    }
  }

  const QuantileField field = solve_field(g, base, gamma);
  const auto rows = field.rows();

  std::uniform_int_distribution<std::size_t> pick_sample(0, base.m() - 1);
  for (std::size_t trial = 0; trial < options.swaps; ++trial) {
    SwapRecord rec;
    rec.replaced_index = pick_sample(rng);
    rec.vertex = base.samples()[rec.replaced_index].vertex;
    const TrainingSet swapped = base.with_replacement(
        rec.replaced_index, {rec.vertex, random_dominated_label(envelope, rng)});

    const StabilityInputs si = report.inputs;
    rec.bound_applicable = si.margin_positive();

    const QuantileField other = solve_field(g, swapped, gamma);
    const double coef = rec.bound_applicable ? slice_stability_coefficient(si) : 0.0;
    for (std::size_t j = 0; j < S; ++j) {
      double diff = 0.0;
      for (Vertex i = 0; i < n; ++i) diff = std::max(diff, std::abs(field.at(i, j) - other.at(i, j)));
      rec.max_slice_difference = std::max(rec.max_slice_difference, diff);
      if (!rec.bound_applicable) continue;
      const double bound = coef * envelope[j];
      const double ratio = bound > 0.0 ? diff / bound
                                       : (diff > 1e-12 ? std::numeric_limits<double>::infinity()
                                                       : 0.0);
      rec.slice_ratio = std::max(rec.slice_ratio, ratio);
    }

    const auto other_rows = other.rows();
    for (Vertex i = 0; i < n; ++i) {
      for (const auto& theta : probes[i]) {
        const double diff = std::abs(w2_squared_quantile(rows[i], theta) -
                                     w2_squared_quantile(other_rows[i], theta));
        rec.max_cost_difference = std::max(rec.max_cost_difference, diff);
      }
    }
    if (rec.bound_applicable) {
      const double b = beta(si);
      rec.cost_ratio = b > 0.0 ? rec.max_cost_difference / b
                               : (rec.max_cost_difference > 1e-12
                                      ? std::numeric_limits<double>::infinity()
                                      : 0.0);
      report.worst_slice_ratio = std::max(report.worst_slice_ratio, rec.slice_ratio);
      report.worst_cost_ratio = std::max(report.worst_cost_ratio, rec.cost_ratio);
      if (rec.slice_ratio > 1.0 + kRatioSlack) ++report.slice_violations;
      if (rec.cost_ratio > 1.0 + kRatioSlack) ++report.cost_violations;
    }
    report.swaps.push_back(rec);
  }
  return report;
}

}  // namespace wprop
