#pragma once

// Closed-form graph Tikhonov regularization for quantile labels.
//
// Minimizing
//   (1/m) sum_i W2^2(mu_i, f_{v_i}) + gamma * sum_{ij} w_ij W2^2(f_i, f_j)
// decouples over quantile levels s. Each level is the linear system
//   (T + m gamma L) phi_s = y_s
// where T = diag(t) holds training multiplicities and y_s(i) sums the
// training quantiles observed at vertex i. For a connected graph with at
// least one training sample the operator is symmetric positive definite, so
// it is factored once and reused for every level.

#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "wprop/hypergraph.hpp"
#include "wprop/labels.hpp"

namespace wprop {

struct TrainingSample {
  Vertex vertex;
  QuantileLabel label;
};

class TrainingSet {
 public:
  // Throws InputError for an empty sample list or out-of-range vertices and
  // DimensionError when the labels do not share a grid.
  TrainingSet(std::size_t num_vertices, std::vector<TrainingSample> samples);

  std::size_t num_vertices() const noexcept { return n_; }
  std::size_t m() const noexcept { return samples_.size(); }
  const QuantileGrid& grid() const noexcept { return samples_.front().label.grid(); }
  const std::vector<TrainingSample>& samples() const noexcept { return samples_; }

  // Distinct sampled vertices, ascending.
  const std::vector<Vertex>& labeled_vertices() const noexcept { return labeled_; }
  // t_i for every vertex (zero when unsampled).
  const std::vector<std::size_t>& multiplicities() const noexcept { return multiplicity_; }
  std::size_t max_multiplicity() const noexcept { return max_multiplicity_; }

  // Copy with sample `index` replaced.
  TrainingSet with_replacement(std::size_t index, TrainingSample replacement) const;

 private:
  std::size_t n_;
  std::vector<TrainingSample> samples_;
  std::vector<Vertex> labeled_;
  std::vector<std::size_t> multiplicity_;
  std::size_t max_multiplicity_ = 0;
};

// One quantile level of the Euler-Lagrange system.
struct SliceSystem {
  Eigen::SparseMatrix<double> op;  // T + m gamma L
  std::vector<double> rhs;         // y_s
  double offset = 0.0;             // ybar_s = (1/m) 1^T y_s
  std::vector<double> multiplicities;
};

// Factored T + m gamma L, shared across quantile levels.
class TikhonovOperator {
 public:
  // Sparse Cholesky up to this many vertices, conjugate gradients above.
  static constexpr std::size_t kDirectLimit = 2000;

  // Throws StructureError when the graph is disconnected, InputError when
  // gamma is not positive or the vertex counts differ.
  TikhonovOperator(const WeightedGraph& g, const TrainingSet& ts, double gamma);
  explicit TikhonovOperator(Eigen::SparseMatrix<double> op);
  ~TikhonovOperator();
  TikhonovOperator(TikhonovOperator&&) noexcept;
  TikhonovOperator& operator=(TikhonovOperator&&) noexcept;

  const Eigen::SparseMatrix<double>& matrix() const noexcept;

  // Solves op x = rhs. Throws NumericalError when the infinity-norm residual
  // exceeds 1e-9 * max(1, |rhs|_inf).
  std::vector<double> solve(std::span<const double> rhs) const;

 private:
  // Heap-held so the iterative solver's reference to the matrix stays valid
  // across moves.
  struct Factorization;
  std::unique_ptr<Factorization> factorization_;
};

// Rows are vertices, columns are grid nodes.
class QuantileField {
 public:
  QuantileField(QuantileGrid grid, std::size_t num_vertices, std::vector<double> values);

  const QuantileGrid& grid() const noexcept { return grid_; }
  std::size_t num_vertices() const noexcept { return n_; }
  double at(Vertex i, std::size_t j) const noexcept { return values_[i * grid_.size() + j]; }
  std::span<const double> row_values(Vertex i) const noexcept {
    return std::span<const double>(values_).subspan(i * grid_.size(), grid_.size());
  }
  QuantileLabel row(Vertex i) const;
  std::vector<double> slice(std::size_t j) const;
  std::vector<QuantileLabel> rows() const;

 private:
  QuantileGrid grid_;
  std::size_t n_;
  std::vector<double> values_;
};

std::vector<double> slice_rhs(const TrainingSet& ts, std::size_t s_index);

SliceSystem assemble_system(const WeightedGraph& g, const TrainingSet& ts, double gamma,
                            std::size_t s_index);

std::vector<double> solve_slice(const SliceSystem& sys);

// Evaluates op^{-1}(y - ybar T 1) + ybar 1. Mathematically identical to
// solve_slice; kept as an independent cross-check of the centering identity.
std::vector<double> solve_slice_centered(const SliceSystem& sys);

// Solves every quantile level. Rows are checked for monotonicity in s:
// dips up to 1e-9 (relative to the data scale) are clamped by a running
// maximum, larger ones throw ConsistencyError.
QuantileField solve_field(const WeightedGraph& g, const TrainingSet& ts, double gamma);

struct MaximumPrincipleReport {
  std::size_t slices_checked = 0;
  // Slices where an extremum over V lies outside the labeled extrema.
  std::size_t extremum_violations = 0;
  // Slices with non-negative data but a negative field value.
  std::size_t sign_violations = 0;
  std::size_t nonnegative_slices = 0;
  double worst_excess = 0.0;

  bool ok() const noexcept { return extremum_violations == 0 && sign_violations == 0; }
};

MaximumPrincipleReport check_maximum_principle(const QuantileField& field, const TrainingSet& ts,
                                               double tolerance = 1e-9);

// True when every row of the field is dominated by the envelope (slack 1e-9).
// Throws InputError if some training label is not dominated.
bool check_apriori(const QuantileField& field, const TrainingSet& ts,
                   const DominatedQuantileEnvelope& envelope);

// m gamma lambda_1 - T. Non-positive margins emit a warning.
double invertibility_margin(std::size_t m, double gamma, double lambda1,
                            std::size_t max_multiplicity);
double invertibility_margin(const TrainingSet& ts, const WeightedGraph& g, double gamma);

// sum_{ij} w_ij W2^2(f_i, f_j)
double graph_regularizer(const WeightedGraph& g, std::span<const QuantileLabel> f);
// sum_E bar(E) with bar(E) the uniform barycenter energy of the labels in E.
double hypergraph_regularizer(const Hypergraph& h, std::span<const QuantileLabel> f);
// (1/m) sum_i W2^2(mu_i, f_{v_i}) + gamma * graph_regularizer(g, f)
double tikhonov_objective(const WeightedGraph& g, const TrainingSet& ts, double gamma,
                          std::span<const QuantileLabel> f);

}  // namespace wprop
