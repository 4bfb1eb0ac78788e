#include "wprop/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <set>

#include "wprop/error.hpp"
#include "wprop/io.hpp"

namespace wprop {

std::size_t SbmConfig::n() const noexcept {
  std::size_t n = 0;
  for (std::size_t b : block_sizes) n += b;
  return n;
}

void SbmConfig::validate() const {
  if (block_sizes.empty()) throw InputError("sbm: at least one block is required");
  for (std::size_t b : block_sizes) {
    if (b == 0) throw InputError("sbm: block sizes must be positive");
  }
  if (k < 2) throw InputError("sbm: hyperedge size k must be at least 2");
  if (n() < k) throw InputError("sbm: fewer vertices than the hyperedge size");
  if (!(p_out >= 0.0 && p_out <= p_in && p_in <= 1.0)) {
    throw InputError("sbm: probabilities must satisfy 0 <= p_out <= p_in <= 1");
  }
}

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double out = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return std::round(out);
}

double sbm_within_subsets(const SbmConfig& cfg) {
  double out = 0.0;
  for (std::size_t b : cfg.block_sizes) out += binomial(b, cfg.k);
  return out;
}

double sbm_expected_within(const SbmConfig& cfg) {
  return sbm_within_subsets(cfg) * cfg.p_in;
}

double sbm_expected_total(const SbmConfig& cfg) {
  const double within = sbm_within_subsets(cfg);
  return within * cfg.p_in + (binomial(cfg.n(), cfg.k) - within) * cfg.p_out;
}

double sbm_total_variance(const SbmConfig& cfg) {
  const double within = sbm_within_subsets(cfg);
  const double cross = binomial(cfg.n(), cfg.k) - within;
  return within * cfg.p_in * (1.0 - cfg.p_in) + cross * cfg.p_out * (1.0 - cfg.p_out);
}

SbmInstance gen_sbm(const SbmConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n();
  if (binomial(n, cfg.k) > kMaxSbmSubsets) {
    throw InputError("sbm: C(n, k) is too large to enumerate");
  }
  SbmInstance out;
  for (std::size_t b = 0; b < cfg.block_sizes.size(); ++b) {
    out.blocks.insert(out.blocks.end(), cfg.block_sizes[b], b);
  }

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<Vertex>> edges;
  std::vector<Vertex> subset(cfg.k);
  for (std::size_t i = 0; i < cfg.k; ++i) subset[i] = i;
  while (true) {
    bool same = true;
    for (std::size_t i = 1; i < cfg.k && same; ++i) {
      same = out.blocks[subset[i]] == out.blocks[subset[0]];
    }
    const double u = unit(rng);
    if (u < (same ? cfg.p_in : cfg.p_out)) {
      edges.push_back(subset);
      if (same) ++out.within_block;
    }
    // Next subset in lexicographic order.
    std::size_t i = cfg.k;
    while (i > 0 && subset[i - 1] == n - cfg.k + i - 1) --i;
    if (i == 0) break;
    ++subset[i - 1];
    for (std::size_t j = i; j < cfg.k; ++j) subset[j] = subset[j - 1] + 1;
  }
  out.hypergraph = Hypergraph(n, std::move(edges));
  return out;
}

namespace {

std::string trim_copy(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim_copy(std::string_view(line).substr(
        start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::size_t resolve_column(const std::vector<std::string>& header, const std::string& column) {
  const auto named = std::find(header.begin(), header.end(), column);
  if (named != header.end()) return static_cast<std::size_t>(named - header.begin());
  std::size_t index = 0;
  const auto [ptr, ec] = std::from_chars(column.data(), column.data() + column.size(), index);
  if (ec == std::errc() && ptr == column.data() + column.size() && index < header.size()) {
    return index;
  }
  throw InputError("class column '" + column + "' not found");
}

}  // namespace

CategoricalTable read_categorical_csv(std::istream& in, const std::string& class_column,
                                      const std::string& missing) {
  CategoricalTable table;
  table.missing = missing;
  std::string line;
  std::vector<std::string> header;
  std::size_t class_index = 0;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (trim_copy(line).empty()) continue;
    auto cells = split_csv(line);
    if (header.empty()) {
      header = std::move(cells);
      class_index = resolve_column(header, class_column);
      for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != class_index) table.feature_names.push_back(header[c]);
      }
      continue;
    }
    if (cells.size() != header.size()) {
      throw InputError("categorical line " + std::to_string(lineno) + ": expected " +
                       std::to_string(header.size()) + " cells, got " +
                       std::to_string(cells.size()));
    }
    if (cells[class_index].empty() || cells[class_index] == missing) {
      throw InputError("categorical line " + std::to_string(lineno) + ": missing class value");
    }
    table.classes.push_back(cells[class_index]);
    std::vector<std::string> row;
    row.reserve(cells.size() - 1);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c != class_index) row.push_back(std::move(cells[c]));
    }
    table.rows.push_back(std::move(row));
  }
  if (header.empty()) throw InputError("categorical table has no header");
  return table;
}

CategoricalTable read_categorical_csv(const std::filesystem::path& path,
                                      const std::string& class_column,
                                      const std::string& missing) {
  auto in = open_input(path);
  return read_categorical_csv(in, class_column, missing);
}

std::vector<std::size_t> subsample_per_class(const CategoricalTable& table,
                                             std::size_t per_class, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t r = 0; r < table.classes.size(); ++r) by_class[table.classes[r]].push_back(r);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> kept;
  for (auto& [name, rows] : by_class) {
    if (rows.size() < per_class) {
      throw InputError("class '" + name + "' has only " + std::to_string(rows.size()) +
                       " rows");
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    kept.insert(kept.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(per_class));
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

CategoricalTable select_rows(const CategoricalTable& table, const std::vector<std::size_t>& rows) {
  CategoricalTable out;
  out.feature_names = table.feature_names;
  out.missing = table.missing;
  for (std::size_t r : rows) {
    if (r >= table.rows.size()) throw InputError("select_rows: row out of range");
    out.rows.push_back(table.rows[r]);
    out.classes.push_back(table.classes[r]);
  }
  return out;
}

IngestResult ingest_categorical(const CategoricalTable& table) {
  if (table.rows.empty()) throw InputError("ingest: the table has no rows");
  if (table.classes.size() != table.rows.size()) {
    throw InputError("ingest: class column does not match the row count");
  }
  const std::size_t features = table.feature_names.size();
  for (const auto& row : table.rows) {
    if (row.size() != features) throw InputError("ingest: the table is not rectangular");
  }

  IngestResult out;
  const std::set<std::string> names(table.classes.begin(), table.classes.end());
  out.class_names.assign(names.begin(), names.end());
  for (const auto& c : table.classes) {
    out.classes.push_back(static_cast<std::size_t>(
        std::lower_bound(out.class_names.begin(), out.class_names.end(), c) -
        out.class_names.begin()));
  }

  std::vector<std::vector<Vertex>> edges;
  for (std::size_t f = 0; f < features; ++f) {
    std::map<std::string, std::vector<Vertex>> groups;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const std::string& value = table.rows[r][f];
      if (value == table.missing) continue;
      groups[value].push_back(r);
    }
    for (auto& [value, members] : groups) {
      if (members.size() < 2) continue;
      edges.push_back(std::move(members));
      out.sources.push_back({f, value});
    }
  }
  out.hypergraph = Hypergraph(table.rows.size(), std::move(edges));
  return out;
}

void write_incidence_csv(std::ostream& out, const Hypergraph& h,
                         const std::vector<std::size_t>& classes) {
  if (classes.size() != h.num_vertices()) {
    throw DimensionError("incidence export: one class per vertex is required");
  }
  std::vector<std::vector<char>> member(h.num_vertices(), std::vector<char>(h.num_edges(), 0));
  for (std::size_t e = 0; e < h.num_edges(); ++e) {
    for (Vertex v : h.edge(e)) member[v][e] = 1;
  }
  out << "vertex";
  for (std::size_t e = 0; e < h.num_edges(); ++e) out << ",e" << e;
  out << ",class\n";
  for (Vertex v = 0; v < h.num_vertices(); ++v) {
    out << v;
    for (char c : member[v]) out << ',' << (c ? '1' : '0');
    out << ',' << classes[v] << '\n';
  }
}

std::string anchor_kind_name(AnchorKind kind) {
  switch (kind) {
    case AnchorKind::OneHotGaussian: return "onehot";
    case AnchorKind::SignedGaussian: return "signed";
    case AnchorKind::SignedQuantile: return "quantile";
  }
  return "unknown";
}

AnchorKind parse_anchor_kind(const std::string& name) {
  if (name == "onehot") return AnchorKind::OneHotGaussian;
  if (name == "signed") return AnchorKind::SignedGaussian;
  if (name == "quantile") return AnchorKind::SignedQuantile;
  throw InputError("unknown anchor kind '" + name + "' (expected onehot, signed or quantile)");
}

namespace {

// Predicted class ids from classify() output.
std::vector<std::size_t> to_class_ids(const std::vector<int>& predicted, bool signed_labels) {
  std::vector<std::size_t> out;
  out.reserve(predicted.size());
  for (int p : predicted) {
    out.push_back(signed_labels ? (p > 0 ? 0 : 1) : static_cast<std::size_t>(p));
  }
  return out;
}

template <LabelBackend B>
std::vector<std::size_t> run_trial(const Hypergraph& h,
                                   const LabeledSubset<typename B::Label>& known,
                                   const PropagationConfig& cfg, const B& backend,
                                   bool signed_labels, std::size_t& iterations) {
  const auto state = propagate(h, known, cfg, backend);
  iterations = state.iteration;
  return to_class_ids(classify(state, backend), signed_labels);
}

}  // namespace

ExperimentResult run_experiment(const Hypergraph& h, const std::vector<std::size_t>& truth,
                                std::size_t per_class, std::size_t trials,
                                const PropagationConfig& cfg, const AnchorSpec& anchor,
                                std::uint64_t seed) {
  cfg.validate();
  const std::size_t n = h.num_vertices();
  if (truth.size() != n) throw DimensionError("experiment: one class per vertex is required");
  if (trials == 0) throw InputError("experiment: at least one trial is required");
  if (per_class == 0) throw InputError("experiment: at least one known vertex per class");
  if (!(anchor.variance > 0.0)) throw InputError("experiment: anchor variance must be positive");

  std::size_t num_classes = 0;
  for (std::size_t c : truth) num_classes = std::max(num_classes, c + 1);
  std::vector<std::vector<Vertex>> members(num_classes);
  for (Vertex v = 0; v < n; ++v) members[truth[v]].push_back(v);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (members[c].size() < per_class) {
      throw InputError("experiment: class " + std::to_string(c) + " has " +
                       std::to_string(members[c].size()) + " vertices, fewer than " +
                       std::to_string(per_class));
    }
  }
  const bool signed_labels = anchor.kind != AnchorKind::OneHotGaussian;
  if (signed_labels && num_classes > 2) {
    throw InputError("experiment: signed anchors need at most two classes");
  }

  ExperimentResult result;
  result.per_class = per_class;
  result.trials = trials;
  result.seed = seed;
  result.config = cfg;
  result.anchor = anchor;

  const double sd = std::sqrt(anchor.variance);
  const QuantileGrid grid(anchor.grid_size);
  for (std::size_t t = 0; t < trials; ++t) {
    std::mt19937_64 rng(vertex_seed(seed, t));
    std::vector<char> is_known(n, 0);
    for (const auto& list : members) {
      std::vector<Vertex> pool = list;
      std::shuffle(pool.begin(), pool.end(), rng);
      for (std::size_t i = 0; i < per_class; ++i) is_known[pool[i]] = 1;
    }
    PropagationConfig trial_cfg = cfg;
    trial_cfg.seed = vertex_seed(seed ^ 0xA5A5A5A5A5A5A5A5ULL, t);

    std::vector<std::size_t> predicted;
    std::size_t iterations = 0;
    if (anchor.kind == AnchorKind::OneHotGaussian) {
      const std::size_t b = std::max<std::size_t>(num_classes, 1);
      LabeledSubset<DiagGaussianLabel> known;
      for (Vertex v = 0; v < n; ++v) {
        if (!is_known[v]) continue;
        std::vector<double> mean(b, 0.0);
        mean[truth[v]] = 1.0;
        known.emplace(v, DiagGaussianLabel(std::move(mean), std::vector<double>(b, sd)));
      }
      predicted = run_trial(h, known, trial_cfg, GaussianBackend{std::vector<double>(b, sd)},
                            false, iterations);
    } else if (anchor.kind == AnchorKind::SignedGaussian) {
      LabeledSubset<DiagGaussianLabel> known;
      for (Vertex v = 0; v < n; ++v) {
        if (!is_known[v]) continue;
        known.emplace(v, DiagGaussianLabel({truth[v] == 0 ? 1.0 : -1.0}, {sd}));
      }
      predicted = run_trial(h, known, trial_cfg, GaussianBackend{{sd}}, true, iterations);
    } else {
      LabeledSubset<QuantileLabel> known;
      for (Vertex v = 0; v < n; ++v) {
        if (!is_known[v]) continue;
        known.emplace(v, QuantileLabel::normal(grid, truth[v] == 0 ? 1.0 : -1.0, sd));
      }
      predicted = run_trial(h, known, trial_cfg, QuantileBackend{grid}, true, iterations);
    }

    std::size_t evaluated = 0, correct = 0;
    for (Vertex v = 0; v < n; ++v) {
      if (is_known[v]) continue;
      ++evaluated;
      if (predicted[v] == truth[v]) ++correct;
    }
    result.evaluated.push_back(evaluated);
    result.iterations.push_back(iterations);
    if (evaluated == 0) {
      result.undefined = true;
      result.accuracy.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      result.accuracy.push_back(static_cast<double>(correct) / static_cast<double>(evaluated));
    }
  }

  std::vector<double> defined;
  for (double a : result.accuracy) {
    if (!std::isnan(a)) defined.push_back(a);
  }
  if (defined.empty()) {
    result.mean = std::numeric_limits<double>::quiet_NaN();
    result.std_error = std::numeric_limits<double>::quiet_NaN();
    return result;
  }
  double sum = 0.0;
  for (double a : defined) sum += a;
  result.mean = sum / static_cast<double>(defined.size());
  if (defined.size() > 1) {
    double ss = 0.0;
    for (double a : defined) ss += (a - result.mean) * (a - result.mean);
    const double var = ss / static_cast<double>(defined.size() - 1);
    result.std_error = std::sqrt(var / static_cast<double>(defined.size()));
  }
  return result;
}

void emit_metrics(std::ostream& out, const ExperimentResult& result) {
  out << "trial,accuracy\n";
  for (std::size_t t = 0; t < result.accuracy.size(); ++t) {
    out << t << ',' << format_double(result.accuracy[t]) << '\n';
  }
  out << "mean," << format_double(result.mean) << '\n';
}

void emit_metrics(const ExperimentResult& result, const std::filesystem::path& path) {
  auto out = open_output(path);
  emit_metrics(out, result);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace wprop
