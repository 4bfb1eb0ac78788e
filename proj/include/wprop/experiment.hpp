#pragma once

// Experiment harness: stochastic block model hypergraphs, categorical table
// ingestion, seeded propagation trials and their metrics.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "wprop/hypergraph.hpp"
#include "wprop/propagation.hpp"

namespace wprop {

struct SbmConfig {
  std::vector<std::size_t> block_sizes{50, 50};
  std::size_t k = 3;
  double p_in = 0.01;
  double p_out = 0.002;
  std::uint64_t seed = 0;

  std::size_t n() const noexcept;
  // Throws InputError unless 0 <= p_out <= p_in <= 1, k >= 2, blocks are
  // positive and n >= k.
  void validate() const;
};

// Largest number of k-subsets gen_sbm is willing to enumerate.
inline constexpr double kMaxSbmSubsets = 5e7;

struct SbmInstance {
  Hypergraph hypergraph;
  std::vector<std::size_t> blocks;  // block index per vertex
  std::size_t within_block = 0;     // hyperedges inside a single block
};

// Visits every k-subset in lexicographic order and keeps it with probability
// p_in when all members share a block, p_out otherwise. One uniform draw per
// subset from a generator seeded with cfg.seed.
SbmInstance gen_sbm(const SbmConfig& cfg);

// C(n, k) as a double.
double binomial(std::size_t n, std::size_t k);
// Number of k-subsets lying inside one block.
double sbm_within_subsets(const SbmConfig& cfg);
double sbm_expected_within(const SbmConfig& cfg);
double sbm_expected_total(const SbmConfig& cfg);
// Variance of the total count (independent Bernoulli draws).
double sbm_total_variance(const SbmConfig& cfg);

struct CategoricalTable {
  std::vector<std::string> feature_names;
  std::vector<std::vector<std::string>> rows;  // feature values per row
  std::vector<std::string> classes;            // class value per row
  std::string missing = "?";
};

// CSV with a header row. `class_column` is a header name or a 0-based column
// index. Cells are trimmed; no quoting is supported. Throws InputError on
// ragged rows, a missing class column or a missing class value.
CategoricalTable read_categorical_csv(std::istream& in, const std::string& class_column,
                                      const std::string& missing = "?");
CategoricalTable read_categorical_csv(const std::filesystem::path& path,
                                      const std::string& class_column,
                                      const std::string& missing = "?");

// Keeps `per_class` rows of every class, drawn without replacement with the
// given seed. Returns the kept original row indices, ascending. Throws
// InputError when a class has fewer rows.
std::vector<std::size_t> subsample_per_class(const CategoricalTable& table,
                                             std::size_t per_class, std::uint64_t seed);
CategoricalTable select_rows(const CategoricalTable& table, const std::vector<std::size_t>& rows);

struct HyperedgeSource {
  std::size_t feature;
  std::string value;
};

struct IngestResult {
  Hypergraph hypergraph;
  std::vector<std::size_t> classes;      // class id per row
  std::vector<std::string> class_names;  // sorted; id is the position
  std::vector<HyperedgeSource> sources;  // one per hyperedge
};

// One hyperedge per (feature, value), features in column order and values
// sorted. Rows with the missing marker are left out of that feature's
// hyperedges; hyperedges with fewer than two rows are dropped. Throws
// InputError for an empty table.
IngestResult ingest_categorical(const CategoricalTable& table);

// Vertex-by-hyperedge 0/1 matrix with a trailing class column.
void write_incidence_csv(std::ostream& out, const Hypergraph& h,
                         const std::vector<std::size_t>& classes);

enum class AnchorKind {
  OneHotGaussian,  // N(e_c, variance I_b), b = number of classes
  SignedGaussian,  // two classes, N(+1 or -1, variance)
  SignedQuantile,  // two classes, N(+1 or -1, variance) on a quantile grid
};

struct AnchorSpec {
  AnchorKind kind = AnchorKind::OneHotGaussian;
  double variance = 0.05;
  std::size_t grid_size = kDefaultGridSize;
};

inline constexpr double kSbmAnchorVariance = 0.05;
inline constexpr double kCategoricalAnchorVariance = 0.01;

std::string anchor_kind_name(AnchorKind kind);
// Accepts onehot, signed, quantile.
AnchorKind parse_anchor_kind(const std::string& name);

struct ExperimentResult {
  std::size_t per_class = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  PropagationConfig config;
  AnchorSpec anchor;

  // NaN marks a trial whose evaluation set was empty.
  std::vector<double> accuracy;
  std::vector<std::size_t> evaluated;
  std::vector<std::size_t> iterations;
  bool undefined = false;  // some trial had nothing to evaluate
  double mean = 0.0;       // over defined trials; NaN when none
  double std_error = 0.0;  // sample std / sqrt(count); 0 for one trial
};

// Each trial draws `per_class` known vertices from every class, anchors them
// according to `anchor`, propagates and scores the predicted classes on the
// remaining vertices. Trial t uses seeds derived from (seed, t) only.
// Signed anchors map class 0 to +1 and class 1 to -1. Throws InputError when
// a class has fewer than `per_class` vertices or signed anchors meet more
// than two classes.
ExperimentResult run_experiment(const Hypergraph& h, const std::vector<std::size_t>& truth,
                                std::size_t per_class, std::size_t trials,
                                const PropagationConfig& cfg, const AnchorSpec& anchor,
                                std::uint64_t seed);

// "trial,accuracy" rows followed by "mean,<mean>".
void emit_metrics(std::ostream& out, const ExperimentResult& result);
void emit_metrics(const ExperimentResult& result, const std::filesystem::path& path);

}  // namespace wprop
