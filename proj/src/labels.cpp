#include "wprop/labels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "wprop/error.hpp"

namespace wprop {

namespace {

void require_same_grid(const QuantileGrid& a, const QuantileGrid& b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": grid size mismatch (" +
                         std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}

double normalized_weight_sum(std::span<const double> weights, std::size_t count,
                             const char* what) {
  if (count == 0) throw InputError(std::string(what) + ": no labels");
  if (weights.size() != count) {
    throw DimensionError(std::string(what) + ": " + std::to_string(weights.size()) +
                         " weights for " + std::to_string(count) + " labels");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw InputError(std::string(what) + ": weights must be positive and finite");
    }
    total += w;
  }
  return total;
}

}  // namespace

QuantileGrid::QuantileGrid(std::size_t size) : size_(size) {
  if (size == 0) throw InputError("quantile grid needs at least one node");
}

std::vector<double> QuantileGrid::nodes() const {
  std::vector<double> out(size_);
  for (std::size_t j = 0; j < size_; ++j) out[j] = node(j);
  return out;
}

QuantileLabel::QuantileLabel(QuantileGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw DimensionError("quantile label has " + std::to_string(values_.size()) +
                         " samples, grid has " + std::to_string(grid_.size()));
  }
  for (std::size_t j = 0; j < values_.size(); ++j) {
    if (!std::isfinite(values_[j])) throw InputError("quantile label: non-finite sample");
    if (j > 0 && values_[j] < values_[j - 1]) {
      throw InputError("quantile label: samples decrease at index " + std::to_string(j));
    }
  }
}

QuantileLabel QuantileLabel::dirac(QuantileGrid grid, double c) {
  return QuantileLabel(grid, std::vector<double>(grid.size(), c));
}

QuantileLabel QuantileLabel::normal(QuantileGrid grid, double mean, double std) {
  if (!(std >= 0.0)) throw InputError("normal label: negative standard deviation");
  if (std == 0.0) return dirac(grid, mean);
  boost::math::normal_distribution<double> dist(mean, std);
  std::vector<double> values(grid.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    values[j] = boost::math::quantile(dist, grid.node(j));
  }
  return QuantileLabel(grid, std::move(values));
}

QuantileLabel QuantileLabel::uniform(QuantileGrid grid, double lo, double hi) {
  if (!(hi >= lo)) throw InputError("uniform label: hi < lo");
  std::vector<double> values(grid.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    values[j] = lo + grid.node(j) * (hi - lo);
  }
  return QuantileLabel(grid, std::move(values));
}

double QuantileLabel::mean() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0) /
         static_cast<double>(values_.size());
}

DiagGaussianLabel::DiagGaussianLabel(std::vector<double> mean, std::vector<double> std)
    : mean_(std::move(mean)), std_(std::move(std)) {
  if (mean_.empty()) throw InputError("gaussian label: dimension must be at least 1");
  if (mean_.size() != std_.size()) {
    throw DimensionError("gaussian label: mean has " + std::to_string(mean_.size()) +
                         " coordinates, std has " + std::to_string(std_.size()));
  }
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    if (!std::isfinite(mean_[i]) || !std::isfinite(std_[i])) {
      throw InputError("gaussian label: non-finite parameter");
    }
    if (std_[i] < 0.0) throw InputError("gaussian label: negative standard deviation");
  }
}

DominatedQuantileEnvelope::DominatedQuantileEnvelope(QuantileGrid grid, std::vector<double> phi)
    : grid_(grid), phi_(std::move(phi)), phi_l2_squared_(0.0) {
  if (phi_.size() != grid_.size()) {
    throw DimensionError("envelope has " + std::to_string(phi_.size()) + " samples, grid has " +
                         std::to_string(grid_.size()));
  }
  for (double p : phi_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw InputError("envelope values must be finite and non-negative");
    }
    phi_l2_squared_ += p * p;
  }
  phi_l2_squared_ /= static_cast<double>(phi_.size());
}

DominatedQuantileEnvelope DominatedQuantileEnvelope::constant(QuantileGrid grid, double c) {
  return DominatedQuantileEnvelope(grid, std::vector<double>(grid.size(), c));
}

DominatedQuantileEnvelope DominatedQuantileEnvelope::tight(
    std::span<const QuantileLabel> labels) {
  if (labels.empty()) throw InputError("tight envelope: no labels");
  const QuantileGrid grid = labels.front().grid();
  std::vector<double> phi(grid.size(), 0.0);
  for (const auto& label : labels) {
    require_same_grid(grid, label.grid(), "tight envelope");
    for (std::size_t j = 0; j < phi.size(); ++j) {
      phi[j] = std::max(phi[j], std::abs(label[j]));
    }
  }
  return DominatedQuantileEnvelope(grid, std::move(phi));
}

QuantileLabel quantile_from_histogram(std::span<const double> bin_values,
                                      std::span<const double> masses, QuantileGrid grid) {
  if (bin_values.size() != masses.size()) {
    throw InputError("histogram: " + std::to_string(bin_values.size()) + " bins but " +
                     std::to_string(masses.size()) + " masses");
  }
  if (bin_values.empty()) throw InputError("histogram: no bins");
  double total = 0.0;
  for (std::size_t k = 0; k < bin_values.size(); ++k) {
    if (!std::isfinite(bin_values[k])) throw InputError("histogram: non-finite bin value");
    if (k > 0 && !(bin_values[k] > bin_values[k - 1])) {
      throw InputError("histogram: bin values must be strictly increasing");
    }
    if (!(masses[k] >= 0.0) || !std::isfinite(masses[k])) {
      throw InputError("histogram: masses must be finite and non-negative");
    }
    total += masses[k];
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw NormalizationError("histogram: masses sum to " + std::to_string(total) +
                             ", expected 1");
  }

  // Both the nodes and the cumulative masses increase, so one merge pass
  // finds the first bin whose cumulative mass strictly exceeds each node.
  // Round-off can leave the final cumulative sum just below the last node;
  // the last bin then takes the remaining nodes.
  std::vector<double> values(grid.size());
  std::size_t bin = 0;
  double cumulative = masses[0];
  const std::size_t last = bin_values.size() - 1;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double s = grid.node(j);
    while (bin < last && !(cumulative > s)) {
      ++bin;
      cumulative += masses[bin];
    }
    values[j] = bin_values[bin];
  }
  return QuantileLabel(grid, std::move(values));
}

double w2_squared_quantile(const QuantileLabel& a, const QuantileLabel& b) {
  require_same_grid(a.grid(), b.grid(), "w2_squared_quantile");
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

QuantileLabel barycenter_quantile(std::span<const double> weights,
                                  std::span<const QuantileLabel> labels) {
  const double total = normalized_weight_sum(weights, labels.size(), "barycenter_quantile");
  const QuantileGrid grid = labels.front().grid();
  std::vector<double> values(grid.size(), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require_same_grid(grid, labels[i].grid(), "barycenter_quantile");
    const double w = weights[i] / total;
    for (std::size_t j = 0; j < values.size(); ++j) values[j] += w * labels[i][j];
  }
  // A convex combination of non-decreasing sequences is non-decreasing in
  // exact arithmetic; rounding can break ties by one ulp.
  for (std::size_t j = 1; j < values.size(); ++j) {
    values[j] = std::max(values[j], values[j - 1]);
  }
  return QuantileLabel(grid, std::move(values));
}

double barycenter_energy(std::span<const QuantileLabel> labels) {
  if (labels.size() < 2) throw InputError("barycenter_energy: needs at least two labels");
  const QuantileGrid grid = labels.front().grid();
  for (const auto& label : labels) require_same_grid(grid, label.grid(), "barycenter_energy");

  const double k = static_cast<double>(labels.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    double mean = 0.0;
    for (const auto& label : labels) mean += label[j];
    mean /= k;
    for (const auto& label : labels) {
      const double d = label[j] - mean;
      sum += d * d;
    }
  }
  return sum / (k * static_cast<double>(grid.size()));
}

double w2_squared_gaussian(const DiagGaussianLabel& a, const DiagGaussianLabel& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("w2_squared_gaussian: dimensions " + std::to_string(a.dim()) +
                         " and " + std::to_string(b.dim()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double dm = a.mean()[i] - b.mean()[i];
    const double ds = a.std()[i] - b.std()[i];
    sum += dm * dm + ds * ds;
  }
  return sum;
}

DiagGaussianLabel barycenter_gaussian(std::span<const double> weights,
                                      std::span<const DiagGaussianLabel> labels) {
  const double total = normalized_weight_sum(weights, labels.size(), "barycenter_gaussian");
  const std::size_t dim = labels.front().dim();
  std::vector<double> mean(dim, 0.0);
  std::vector<double> std(dim, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].dim() != dim) {
      throw DimensionError("barycenter_gaussian: mixed label dimensions");
    }
    const double w = weights[i] / total;
    for (std::size_t c = 0; c < dim; ++c) {
      mean[c] += w * labels[i].mean()[c];
      std[c] += w * labels[i].std()[c];
    }
  }
  return DiagGaussianLabel(std::move(mean), std::move(std));
}

bool check_dominated(const QuantileLabel& label, const DominatedQuantileEnvelope& envelope) {
  require_same_grid(label.grid(), envelope.grid(), "check_dominated");
  for (std::size_t j = 0; j < label.size(); ++j) {
    if (std::abs(label[j]) > envelope[j]) return false;
  }
  return true;
}

}  // namespace wprop
