#include "wprop/tikhonov.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "wprop/error.hpp"
#include "wprop/log.hpp"

namespace wprop {

TrainingSet::TrainingSet(std::size_t num_vertices, std::vector<TrainingSample> samples)
    : n_(num_vertices), samples_(std::move(samples)), multiplicity_(num_vertices, 0) {
  if (samples_.empty()) throw InputError("training set is empty");
  const QuantileGrid grid = samples_.front().label.grid();
  for (const auto& sample : samples_) {
    if (sample.vertex >= n_) {
      throw InputError("training sample at vertex " + std::to_string(sample.vertex) +
                       " but n = " + std::to_string(n_));
    }
    if (sample.label.grid() != grid) {
      throw DimensionError("training labels use different quantile grids");
    }
    ++multiplicity_[sample.vertex];
  }
  for (Vertex v = 0; v < n_; ++v) {
    if (multiplicity_[v] > 0) labeled_.push_back(v);
    max_multiplicity_ = std::max(max_multiplicity_, multiplicity_[v]);
  }
}

TrainingSet TrainingSet::with_replacement(std::size_t index, TrainingSample replacement) const {
  if (index >= samples_.size()) throw InputError("replacement index out of range");
  std::vector<TrainingSample> samples = samples_;
  samples[index] = std::move(replacement);
  return TrainingSet(n_, std::move(samples));
}

namespace {

void require_system_inputs(const WeightedGraph& g, const TrainingSet& ts, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw InputError("gamma must be positive and finite");
  }
  if (g.num_vertices() != ts.num_vertices()) {
    throw InputError("graph has " + std::to_string(g.num_vertices()) +
                     " vertices but training set expects " + std::to_string(ts.num_vertices()));
  }
  if (!is_connected(g)) throw StructureError("graph is disconnected; the system is singular");
}

Eigen::SparseMatrix<double> build_operator(const WeightedGraph& g, const TrainingSet& ts,
                                           double gamma) {
  Eigen::SparseMatrix<double> op = LaplacianView(g).sparse();
  op *= static_cast<double>(ts.m()) * gamma;
  for (Vertex v : ts.labeled_vertices()) {
    const auto i = static_cast<Eigen::Index>(v);
    op.coeffRef(i, i) += static_cast<double>(ts.multiplicities()[v]);
  }
  op.makeCompressed();
  return op;
}

}  // namespace

struct TikhonovOperator::Factorization {
  Eigen::SparseMatrix<double> op;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> direct;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> iterative;
  bool use_direct = true;
};

TikhonovOperator::TikhonovOperator(const WeightedGraph& g, const TrainingSet& ts, double gamma)
    : TikhonovOperator((require_system_inputs(g, ts, gamma), build_operator(g, ts, gamma))) {}

TikhonovOperator::TikhonovOperator(Eigen::SparseMatrix<double> op)
    : factorization_(std::make_unique<Factorization>()) {
  auto& f = *factorization_;
  f.op = std::move(op);
  f.use_direct = static_cast<std::size_t>(f.op.rows()) <= kDirectLimit;
  if (f.use_direct) {
    f.direct.compute(f.op);
    if (f.direct.info() != Eigen::Success) {
      throw NumericalError("Cholesky factorization failed; operator is not positive definite",
                           0.0);
    }
  } else {
    f.iterative.setTolerance(1e-13);
    f.iterative.setMaxIterations(std::max<Eigen::Index>(1000, 10 * f.op.rows()));
    f.iterative.compute(f.op);
  }
}

TikhonovOperator::~TikhonovOperator() = default;
TikhonovOperator::TikhonovOperator(TikhonovOperator&&) noexcept = default;
TikhonovOperator& TikhonovOperator::operator=(TikhonovOperator&&) noexcept = default;

const Eigen::SparseMatrix<double>& TikhonovOperator::matrix() const noexcept {
  return factorization_->op;
}

std::vector<double> TikhonovOperator::solve(std::span<const double> rhs) const {
  const auto& op = factorization_->op;
  const auto n = op.rows();
  if (static_cast<Eigen::Index>(rhs.size()) != n) {
    throw DimensionError("right-hand side length does not match the operator");
  }
  const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n);
  Eigen::VectorXd x = factorization_->use_direct ? Eigen::VectorXd(factorization_->direct.solve(b))
                                                 : Eigen::VectorXd(factorization_->iterative.solve(b));
  const Eigen::VectorXd r = op * x - b;
  const double residual = r.lpNorm<Eigen::Infinity>();
  const double limit = 1e-9 * std::max(1.0, b.lpNorm<Eigen::Infinity>());
  if (!(residual <= limit)) {
    throw NumericalError("linear solve residual " + std::to_string(residual) +
                             " exceeds " + std::to_string(limit),
                         residual);
  }
  return std::vector<double>(x.data(), x.data() + n);
}

QuantileField::QuantileField(QuantileGrid grid, std::size_t num_vertices,
                             std::vector<double> values)
    : grid_(grid), n_(num_vertices), values_(std::move(values)) {
  if (values_.size() != n_ * grid_.size()) {
    throw DimensionError("quantile field storage does not match n x S");
  }
}

QuantileLabel QuantileField::row(Vertex i) const {
  auto r = row_values(i);
  return QuantileLabel(grid_, std::vector<double>(r.begin(), r.end()));
}

std::vector<double> QuantileField::slice(std::size_t j) const {
  std::vector<double> out(n_);
  for (Vertex i = 0; i < n_; ++i) out[i] = at(i, j);
  return out;
}

std::vector<QuantileLabel> QuantileField::rows() const {
  std::vector<QuantileLabel> out;
  out.reserve(n_);
  for (Vertex i = 0; i < n_; ++i) out.push_back(row(i));
  return out;
}

std::vector<double> slice_rhs(const TrainingSet& ts, std::size_t s_index) {
  if (s_index >= ts.grid().size()) throw InputError("quantile index out of range");
  std::vector<double> y(ts.num_vertices(), 0.0);
  for (const auto& sample : ts.samples()) y[sample.vertex] += sample.label[s_index];
  return y;
}

SliceSystem assemble_system(const WeightedGraph& g, const TrainingSet& ts, double gamma,
                            std::size_t s_index) {
  require_system_inputs(g, ts, gamma);
  SliceSystem sys;
  sys.op = build_operator(g, ts, gamma);
  sys.rhs = slice_rhs(ts, s_index);
  double total = 0.0;
  for (double v : sys.rhs) total += v;
  sys.offset = total / static_cast<double>(ts.m());
  sys.multiplicities.assign(ts.multiplicities().begin(), ts.multiplicities().end());
  return sys;
}

std::vector<double> solve_slice(const SliceSystem& sys) {
  return TikhonovOperator(sys.op).solve(sys.rhs);
}

std::vector<double> solve_slice_centered(const SliceSystem& sys) {
  std::vector<double> centered = sys.rhs;
  for (std::size_t i = 0; i < centered.size(); ++i) {
    centered[i] -= sys.offset * sys.multiplicities[i];
  }
  std::vector<double> x = TikhonovOperator(sys.op).solve(centered);
  for (double& v : x) v += sys.offset;
  return x;
}

QuantileField solve_field(const WeightedGraph& g, const TrainingSet& ts, double gamma) {
  const TikhonovOperator op(g, ts, gamma);
  const QuantileGrid grid = ts.grid();
  const std::size_t n = ts.num_vertices();
  const std::size_t S = grid.size();

  double scale = 1.0;
  for (const auto& sample : ts.samples()) {
    scale = std::max({scale, std::abs(sample.label[0]), std::abs(sample.label[S - 1])});
  }
  const double slack = 1e-9 * scale;

  std::vector<double> values(n * S);
  for (std::size_t j = 0; j < S; ++j) {
    const std::vector<double> phi = op.solve(slice_rhs(ts, j));
    for (Vertex i = 0; i < n; ++i) values[i * S + j] = phi[i];
  }

  for (Vertex i = 0; i < n; ++i) {
    double* row = values.data() + i * S;
    for (std::size_t j = 1; j < S; ++j) {
      if (row[j] < row[j - 1]) {
        if (row[j - 1] - row[j] > slack) {
          throw ConsistencyError("solved quantiles decrease by " +
                                 std::to_string(row[j - 1] - row[j]) + " at vertex " +
                                 std::to_string(i) + ", node " + std::to_string(j));
        }
        row[j] = row[j - 1];
      }
    }
  }
  return QuantileField(grid, n, std::move(values));
}

MaximumPrincipleReport check_maximum_principle(const QuantileField& field, const TrainingSet& ts,
                                               double tolerance) {
  if (field.num_vertices() != ts.num_vertices() || field.grid() != ts.grid()) {
    throw DimensionError("maximum principle: field and training set disagree in shape");
  }
  MaximumPrincipleReport report;
  const auto& labeled = ts.labeled_vertices();
  for (std::size_t j = 0; j < field.grid().size(); ++j) {
    ++report.slices_checked;
    double all_min = field.at(0, j), all_max = all_min;
    for (Vertex i = 1; i < field.num_vertices(); ++i) {
      all_min = std::min(all_min, field.at(i, j));
      all_max = std::max(all_max, field.at(i, j));
    }
    double lab_min = field.at(labeled.front(), j), lab_max = lab_min;
    for (Vertex v : labeled) {
      lab_min = std::min(lab_min, field.at(v, j));
      lab_max = std::max(lab_max, field.at(v, j));
    }
    const double excess = std::max(all_max - lab_max, lab_min - all_min);
    report.worst_excess = std::max(report.worst_excess, excess);
    if (excess > tolerance) ++report.extremum_violations;

    const bool nonnegative_data = std::all_of(ts.samples().begin(), ts.samples().end(),
                                              [j](const auto& s) { return s.label[j] >= 0.0; });
    if (nonnegative_data) {
      ++report.nonnegative_slices;
      if (all_min < -tolerance) ++report.sign_violations;
    }
  }
  return report;
}

bool check_apriori(const QuantileField& field, const TrainingSet& ts,
                   const DominatedQuantileEnvelope& envelope) {
  for (const auto& sample : ts.samples()) {
    if (!check_dominated(sample.label, envelope)) {
      throw InputError("training label at vertex " + std::to_string(sample.vertex) +
                       " is not dominated by the envelope");
    }
  }
  if (field.grid() != envelope.grid()) {
    throw DimensionError("check_apriori: field and envelope grids differ");
  }
  for (Vertex i = 0; i < field.num_vertices(); ++i) {
    for (std::size_t j = 0; j < field.grid().size(); ++j) {
      if (std::abs(field.at(i, j)) > envelope[j] + 1e-9) return false;
    }
  }
  return true;
}

double invertibility_margin(std::size_t m, double gamma, double lambda1,
                            std::size_t max_multiplicity) {
  const double margin = static_cast<double>(m) * gamma * lambda1 -
                        static_cast<double>(max_multiplicity);
  if (!(margin > 0.0)) {
    warn("invertibility margin m*gamma*lambda1 - T = " + std::to_string(margin) +
         " is not positive; the stability bound is vacuous for this configuration");
  }
  return margin;
}

double invertibility_margin(const TrainingSet& ts, const WeightedGraph& g, double gamma) {
  return invertibility_margin(ts.m(), gamma, spectral_gap(g), ts.max_multiplicity());
}

double graph_regularizer(const WeightedGraph& g, std::span<const QuantileLabel> f) {
  if (f.size() != g.num_vertices()) throw DimensionError("one label per vertex required");
  double sum = 0.0;
  for (const auto& e : g.edges()) sum += e.weight * w2_squared_quantile(f[e.u], f[e.v]);
  return sum;
}

double hypergraph_regularizer(const Hypergraph& h, std::span<const QuantileLabel> f) {
  if (f.size() != h.num_vertices()) throw DimensionError("one label per vertex required");
  double sum = 0.0;
  std::vector<QuantileLabel> members;
  for (const auto& edge : h.edges()) {
    members.clear();
    for (Vertex v : edge) members.push_back(f[v]);
    sum += barycenter_energy(members);
  }
  return sum;
}

double tikhonov_objective(const WeightedGraph& g, const TrainingSet& ts, double gamma,
                          std::span<const QuantileLabel> f) {
  double fit = 0.0;
  for (const auto& sample : ts.samples()) {
    fit += w2_squared_quantile(sample.label, f[sample.vertex]);
  }
  return fit / static_cast<double>(ts.m()) + gamma * graph_regularizer(g, f);
}

}  // namespace wprop
