#pragma once

// Distribution labels.
//
// One-dimensional labels are stored as their quantile function (generalized
// inverse CDF) sampled at the midpoints of a uniform grid on (0,1). In that
// representation the squared 2-Wasserstein distance is an L2 distance and the
// Wasserstein barycenter is a pointwise weighted average, so both are exact up
// to midpoint quadrature.
//
// Diagonal Gaussian labels use the closed forms coordinate by coordinate.

#include <cstddef>
#include <span>
#include <vector>

namespace wprop {

inline constexpr std::size_t kDefaultGridSize = 1024;

// Midpoint nodes s_j = (j + 1/2) / S, j = 0..S-1.
class QuantileGrid {
 public:
  explicit QuantileGrid(std::size_t size = kDefaultGridSize);

  std::size_t size() const noexcept { return size_; }
  double spacing() const noexcept { return 1.0 / static_cast<double>(size_); }
  double node(std::size_t j) const noexcept {
    return (static_cast<double>(j) + 0.5) / static_cast<double>(size_);
  }
  std::vector<double> nodes() const;

  friend bool operator==(const QuantileGrid&, const QuantileGrid&) = default;

 private:
  std::size_t size_;
};

class QuantileLabel {
 public:
  // Validates that values are finite and non-decreasing.
  QuantileLabel(QuantileGrid grid, std::vector<double> values);

  // Point mass at c.
  static QuantileLabel dirac(QuantileGrid grid, double c);
  // N(mean, std^2) sampled on the grid.
  static QuantileLabel normal(QuantileGrid grid, double mean, double std);
  // Uniform distribution on [lo, hi].
  static QuantileLabel uniform(QuantileGrid grid, double lo, double hi);

  const QuantileGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t j) const noexcept { return values_[j]; }

  // Mean of the distribution, the grid average of the quantile samples.
  double mean() const;

  friend bool operator==(const QuantileLabel&, const QuantileLabel&) = default;

 private:
  QuantileGrid grid_;
  std::vector<double> values_;
};

// Gaussian with diagonal covariance diag(std^2).
class DiagGaussianLabel {
 public:
  DiagGaussianLabel(std::vector<double> mean, std::vector<double> std);

  std::size_t dim() const noexcept { return mean_.size(); }
  std::span<const double> mean() const noexcept { return mean_; }
  std::span<const double> std() const noexcept { return std_; }

  friend bool operator==(const DiagGaussianLabel&, const DiagGaussianLabel&) = default;

 private:
  std::vector<double> mean_;
  std::vector<double> std_;
};

// A non-negative envelope phi on the grid; a label is dominated when
// |F^{-1}(s_j)| <= phi[j] for every node.
class DominatedQuantileEnvelope {
 public:
  DominatedQuantileEnvelope(QuantileGrid grid, std::vector<double> phi);

  static DominatedQuantileEnvelope constant(QuantileGrid grid, double c);
  // Pointwise maximum of |F^{-1}(s_j)| over the labels; the tightest envelope
  // dominating all of them.
  static DominatedQuantileEnvelope tight(std::span<const QuantileLabel> labels);

  const QuantileGrid& grid() const noexcept { return grid_; }
  std::span<const double> phi() const noexcept { return phi_; }
  double operator[](std::size_t j) const noexcept { return phi_[j]; }
  // (1/S) * sum_j phi[j]^2
  double phi_l2_squared() const noexcept { return phi_l2_squared_; }

 private:
  QuantileGrid grid_;
  std::vector<double> phi_;
  double phi_l2_squared_;
};

inline constexpr double kMassTolerance = 1e-9;

// Right-continuous generalized inverse F^{-1}(s) = inf{x : F(x) > s} of a
// discrete distribution with atoms at strictly increasing bin_values.
QuantileLabel quantile_from_histogram(std::span<const double> bin_values,
                                      std::span<const double> masses,
                                      QuantileGrid grid);

double w2_squared_quantile(const QuantileLabel& a, const QuantileLabel& b);

// Weights are positive and normalized internally.
QuantileLabel barycenter_quantile(std::span<const double> weights,
                                  std::span<const QuantileLabel> labels);

// (1/k) * sum_i W2^2(label_i, barycenter) for the uniform barycenter.
double barycenter_energy(std::span<const QuantileLabel> labels);

double w2_squared_gaussian(const DiagGaussianLabel& a, const DiagGaussianLabel& b);

DiagGaussianLabel barycenter_gaussian(std::span<const double> weights,
                                      std::span<const DiagGaussianLabel> labels);

bool check_dominated(const QuantileLabel& label,
                     const DominatedQuantileEnvelope& envelope);

}  // namespace wprop
