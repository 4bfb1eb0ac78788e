// wprop command-line front end.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <type_traits>
#include <variant>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wprop/error.hpp"
#include "wprop/experiment.hpp"
#include "wprop/hypergraph.hpp"
#include "wprop/io.hpp"
#include "wprop/labels.hpp"
#include "wprop/propagation.hpp"
#include "wprop/stability.hpp"
#include "wprop/tikhonov.hpp"

namespace fs = std::filesystem;
using namespace wprop;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string output;
};

void add_common(CLI::App* cmd, Common& common, bool output_required) {
  cmd->add_option("--seed", common.seed, "Random seed")->capture_default_str();
  auto* out = cmd->add_option("--output", common.output, "Output path");
  if (output_required) out->required();
}

// Keys outside any [section] belong to the subcommand being run, so a plain
// key=value file works with every subcommand.
class SubcommandConfig : public CLI::ConfigTOML {
 public:
  explicit SubcommandConfig(std::string section) : section_(std::move(section)) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigTOML::from_config(input);
    if (section_.empty()) return items;
    for (auto& item : items) {
      if (item.parents.empty()) item.parents = {section_};
    }
    return items;
  }

 private:
  std::string section_;
};

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

// Graph from --graph, or the clique expansion of --hypergraph.
WeightedGraph load_graph(const std::string& graph, const std::string& hypergraph,
                         std::size_t min_vertices) {
  if (!graph.empty() && !hypergraph.empty()) {
    throw InputError("give either --graph or --hypergraph, not both");
  }
  if (!graph.empty()) return read_graph(fs::path(graph), min_vertices);
  if (!hypergraph.empty()) return clique_expand(read_hypergraph(fs::path(hypergraph), min_vertices));
  throw InputError("one of --graph or --hypergraph is required");
}

// ---- gen-sbm

struct GenSbmArgs {
  Common common;
  std::vector<std::size_t> blocks{50, 50};
  std::size_t k = 3;
  double p_in = 0.01;
  double p_out = 0.002;
  std::string truth;
};

void run_gen_sbm(const GenSbmArgs& a) {
  SbmConfig cfg;
  cfg.block_sizes = a.blocks;
  cfg.k = a.k;
  cfg.p_in = a.p_in;
  cfg.p_out = a.p_out;
  cfg.seed = a.common.seed;
  const SbmInstance inst = gen_sbm(cfg);

  auto out = open_output(a.common.output);
  write_hypergraph(out, inst.hypergraph);
  finish(out, a.common.output);
  if (!a.truth.empty()) {
    auto truth = open_output(a.truth);
    write_truth(truth, inst.blocks);
    finish(truth, a.truth);
  }
  std::cout << "vertices: " << inst.hypergraph.num_vertices() << '\n'
            << "hyperedges: " << inst.hypergraph.num_edges() << '\n'
            << "within_block: " << inst.within_block << '\n'
            << "expected_total: " << format_double(sbm_expected_total(cfg)) << '\n'
            << "expected_within: " << format_double(sbm_expected_within(cfg)) << '\n'
            << "total_sd: " << format_double(std::sqrt(sbm_total_variance(cfg))) << '\n';
}

// ---- ingest

struct IngestArgs {
  Common common;
  std::string input;
  std::string class_column = "0";
  std::string missing = "?";
  std::size_t per_class = 0;
  std::string truth;
  std::string incidence;
  std::string rows;
  std::string hyperedges;
};

void run_ingest(const IngestArgs& a) {
  CategoricalTable table = read_categorical_csv(fs::path(a.input), a.class_column, a.missing);
  std::vector<std::size_t> kept;
  if (a.per_class > 0) {
    kept = subsample_per_class(table, a.per_class, a.common.seed);
    table = select_rows(table, kept);
  }
  const IngestResult r = ingest_categorical(table);

  auto out = open_output(a.common.output);
  write_hypergraph(out, r.hypergraph);
  finish(out, a.common.output);
  if (!a.truth.empty()) {
    auto f = open_output(a.truth);
    write_truth(f, r.classes);
    finish(f, a.truth);
  }
  if (!a.incidence.empty()) {
    auto f = open_output(a.incidence);
    write_incidence_csv(f, r.hypergraph, r.classes);
    finish(f, a.incidence);
  }
  if (!a.rows.empty()) {
    auto f = open_output(a.rows);
    f << "vertex,row\n";
    for (std::size_t v = 0; v < r.classes.size(); ++v) {
      f << v << ',' << (kept.empty() ? v : kept[v]) << '\n';
    }
    finish(f, a.rows);
  }
  if (!a.hyperedges.empty()) {
    auto f = open_output(a.hyperedges);
    f << "hyperedge,feature,value,size\n";
    for (std::size_t e = 0; e < r.sources.size(); ++e) {
      f << e << ',' << table.feature_names[r.sources[e].feature] << ',' << r.sources[e].value
        << ',' << r.hypergraph.edge(e).size() << '\n';
    }
    finish(f, a.hyperedges);
  }
  std::cout << "rows: " << table.rows.size() << '\n'
            << "features: " << table.feature_names.size() << '\n'
            << "hyperedges: " << r.hypergraph.num_edges() << '\n'
            << "classes:";
  for (std::size_t c = 0; c < r.class_names.size(); ++c) {
    std::cout << ' ' << c << '=' << r.class_names[c];
  }
  std::cout << '\n';
}

// ---- propagate

struct PropagateArgs {
  Common common;
  std::string hypergraph;
  std::string labels;
  PropagationConfig cfg;
  std::size_t grid_size = kDefaultGridSize;
  std::string trace;
};

template <LabelBackend B>
void write_propagation(const PropagateArgs& a, const PropagationState<typename B::Label>& state,
                       const B& backend) {
  const auto classes = classify(state, backend);
  auto out = open_output(a.common.output);
  out << "vertex,predicted_class,label_params\n";
  for (Vertex v = 0; v < state.vertex_labels.size(); ++v) {
    out << v << ',' << classes[v] << ',';
    if constexpr (std::is_same_v<typename B::Label, QuantileLabel>) {
      out << histogram_params(state.vertex_labels[v]);
    } else {
      out << gaussian_params(state.vertex_labels[v]);
    }
    out << '\n';
  }
  finish(out, a.common.output);
  if (!a.trace.empty()) {
    auto f = open_output(a.trace);
    f << "iter,loss\n";
    for (std::size_t i = 0; i < state.loss_history.size(); ++i) {
      f << i + 1 << ',' << format_double(state.loss_history[i]) << '\n';
    }
    finish(f, a.trace);
  }
  std::cout << "iterations: " << state.iteration << '\n'
            << "final_loss: "
            << (state.loss_history.empty() ? std::string("nan")
                                           : format_double(state.loss_history.back()))
            << '\n';
}

void run_propagate(PropagateArgs a) {
  a.cfg.seed = a.common.seed;
  const auto records = read_labels(fs::path(a.labels));
  if (records.empty()) throw InputError("the labels file has no records");
  const Hypergraph h = read_hypergraph(fs::path(a.hypergraph), max_vertex_bound(records));

  bool any_hist = false;
  for (const auto& r : records) any_hist = any_hist || std::holds_alternative<Histogram>(r.value);

  if (any_hist) {
    const QuantileGrid grid(a.grid_size);
    LabeledSubset<QuantileLabel> known;
    for (const auto& r : records) {
      if (!known.emplace(r.vertex, to_quantile(r, grid)).second) {
        throw InputError("vertex " + std::to_string(r.vertex) + " is labeled twice");
      }
    }
    const QuantileBackend backend{grid};
    write_propagation(a, propagate(h, known, a.cfg, backend), backend);
    return;
  }

  LabeledSubset<DiagGaussianLabel> known;
  for (const auto& r : records) {
    const auto& g = std::get<DiagGaussianLabel>(r.value);
    if (g.dim() != std::get<DiagGaussianLabel>(records.front().value).dim()) {
      throw DimensionError("gauss labels have different dimensions");
    }
    if (!known.emplace(r.vertex, g).second) {
      throw InputError("vertex " + std::to_string(r.vertex) + " is labeled twice");
    }
  }
  // Random initial labels share the standard deviations of the lowest known
  // vertex's anchor.
  const auto& first = known.begin()->second;
  const GaussianBackend backend{std::vector<double>(first.std().begin(), first.std().end())};
  write_propagation(a, propagate(h, known, a.cfg, backend), backend);
}

// ---- solve-tikhonov

struct SolveArgs {
  Common common;
  std::string graph;
  std::string hypergraph;
  std::string labels;
  double gamma = 1.0;
  std::size_t grid_size = kDefaultGridSize;
};

void run_solve(const SolveArgs& a) {
  const auto records = read_labels(fs::path(a.labels));
  const WeightedGraph g = load_graph(a.graph, a.hypergraph, max_vertex_bound(records));
  const QuantileGrid grid(a.grid_size);
  const TrainingSet ts = to_training_set(records, g.num_vertices(), grid);
  const QuantileField field = solve_field(g, ts, a.gamma);

  auto out = open_output(a.common.output);
  out << "vertex";
  for (std::size_t j = 1; j <= grid.size(); ++j) out << ",s_" << j;
  out << '\n';
  for (Vertex v = 0; v < field.num_vertices(); ++v) {
    out << v;
    for (double x : field.row_values(v)) out << ',' << format_double(x);
    out << '\n';
  }
  finish(out, a.common.output);
}

// ---- stability

struct StabilityArgs {
  Common common;
  std::string graph;
  std::string hypergraph;
  std::string labels;
  double gamma = 1.0;
  double epsilon = 0.1;
  std::size_t grid_size = kDefaultGridSize;
  std::optional<double> phi;
  bool empirical = false;
  std::size_t swaps = 20;
  std::string swaps_csv;
};

void run_stability(const StabilityArgs& a) {
  const auto records = read_labels(fs::path(a.labels));
  const WeightedGraph g = load_graph(a.graph, a.hypergraph, max_vertex_bound(records));
  const QuantileGrid grid(a.grid_size);
  const TrainingSet ts = to_training_set(records, g.num_vertices(), grid);

  std::vector<QuantileLabel> labels;
  for (const auto& s : ts.samples()) labels.push_back(s.label);
  const DominatedQuantileEnvelope envelope =
      a.phi ? DominatedQuantileEnvelope::constant(grid, *a.phi)
            : DominatedQuantileEnvelope::tight(labels);
  for (const auto& s : ts.samples()) {
    if (!check_dominated(s.label, envelope)) {
      throw InputError("the training label at vertex " + std::to_string(s.vertex) +
                       " exceeds the envelope");
    }
  }

  const StabilityInputs si = stability_inputs(g, ts, a.gamma, envelope);
  std::ostringstream report;
  report << "m: " << si.m << '\n'
         << "gamma: " << format_double(si.gamma) << '\n'
         << "lambda1: " << format_double(si.lambda1) << '\n'
         << "T: " << si.T << '\n'
         << "phi_l2_squared: " << format_double(si.phi_l2_squared) << '\n'
         << "margin: " << format_double(si.margin()) << '\n'
         << "margin_positive: " << (si.margin_positive() ? "true" : "false") << '\n';
  if (!si.margin_positive()) {
    invertibility_margin(si.m, si.gamma, si.lambda1, si.T);
    report << "bounds: unavailable\n";
  } else {
    const BoundReport b = generalization_bounds(si, a.epsilon);
    report << "slice_coefficient: " << format_double(slice_stability_coefficient(si)) << '\n'
           << "beta: " << format_double(b.beta) << '\n'
           << "M: " << format_double(b.M) << '\n'
           << "epsilon: " << format_double(b.epsilon) << '\n'
           << "fraction_bound: " << format_double(b.fraction_bound) << '\n'
           << "fraction_vacuous: " << (b.fraction_vacuous ? "true" : "false") << '\n'
           << "exponential_bound: " << format_double(b.exponential_bound) << '\n'
           << "exponential_vacuous: " << (b.exponential_vacuous ? "true" : "false") << '\n'
           << "m_at_least_4: " << (b.m_at_least_4 ? "true" : "false") << '\n'
           << "m_large_enough: " << (b.m_large_enough ? "true" : "false") << '\n';
  }

  if (a.empirical) {
    if (!si.margin_positive()) {
      throw HypothesisError("empirical stability needs a positive margin");
    }
    EmpiricalStabilityOptions opts;
    opts.swaps = a.swaps;
    opts.seed = a.common.seed;
    const auto er = empirical_stability(g, ts, a.gamma, envelope, opts);
    report << "swaps: " << er.swaps.size() << '\n'
           << "worst_slice_ratio: " << format_double(er.worst_slice_ratio) << '\n'
           << "worst_cost_ratio: " << format_double(er.worst_cost_ratio) << '\n'
           << "slice_violations: " << er.slice_violations << '\n'
           << "cost_violations: " << er.cost_violations << '\n';
    if (!a.swaps_csv.empty()) {
      auto f = open_output(a.swaps_csv);
      f << "swap,replaced_index,vertex,max_slice_difference,slice_ratio,max_cost_difference,"
           "cost_ratio\n";
      for (std::size_t i = 0; i < er.swaps.size(); ++i) {
        const auto& s = er.swaps[i];
        f << i << ',' << s.replaced_index << ',' << s.vertex << ','
          << format_double(s.max_slice_difference) << ',' << format_double(s.slice_ratio) << ','
          << format_double(s.max_cost_difference) << ',' << format_double(s.cost_ratio) << '\n';
      }
      finish(f, a.swaps_csv);
    }
  }

  if (a.common.output.empty()) {
    std::cout << report.str();
  } else {
    auto out = open_output(a.common.output);
    out << report.str();
    finish(out, a.common.output);
  }
}

// ---- experiment

struct ExperimentArgs {
  Common common;
  std::string hypergraph;
  std::string truth;
  std::size_t per_class = 15;
  std::size_t trials = 20;
  PropagationConfig cfg;
  std::string anchor = "onehot";
  std::optional<double> variance;
  std::size_t grid_size = kDefaultGridSize;
};

void run_experiment_cmd(const ExperimentArgs& a) {
  Hypergraph h = read_hypergraph(fs::path(a.hypergraph));
  const auto truth = read_truth(fs::path(a.truth), h.num_vertices());
  AnchorSpec anchor;
  anchor.kind = parse_anchor_kind(a.anchor);
  anchor.variance = a.variance.value_or(kSbmAnchorVariance);
  anchor.grid_size = a.grid_size;

  // Trials are summarized below; per-trial unreachable-vertex warnings would
  // only repeat.
  std::size_t suppressed = 0;
  ExperimentResult r;
  {
    ScopedWarningHandler quiet([&](std::string_view) { ++suppressed; });
    r = run_experiment(h, truth, a.per_class, a.trials, a.cfg, anchor, a.common.seed);
  }
  emit_metrics(r, fs::path(a.common.output));
  std::cout << "trials: " << r.trials << '\n'
            << "per_class: " << r.per_class << '\n'
            << "anchor: " << anchor_kind_name(anchor.kind) << '\n'
            << "variance: " << format_double(anchor.variance) << '\n'
            << "alpha: " << format_double(r.config.alpha) << '\n'
            << "gamma: " << format_double(r.config.gamma) << '\n'
            << "seed: " << r.seed << '\n'
            << "mean_accuracy: " << format_double(r.mean) << '\n'
            << "std_error: " << format_double(r.std_error) << '\n'
            << "undefined: " << (r.undefined ? "true" : "false") << '\n';
  if (suppressed > 0) {
    std::cout << "trials_with_unreachable_vertices: " << suppressed << '\n';
  }
}

void add_propagation_flags(CLI::App* cmd, PropagationConfig& cfg) {
  cmd->add_option("--alpha", cfg.alpha, "Hyperedge weight of known vertices")
      ->capture_default_str();
  cmd->add_option("--gamma", cfg.gamma, "Anchor weight")->capture_default_str();
  cmd->add_option("--max-iters", cfg.max_iters, "Iteration cap")->capture_default_str();
  cmd->add_option("--tol", cfg.rel_tol, "Relative loss tolerance")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wasserstein soft-label propagation on graphs and hypergraphs"};
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "key=value configuration file");

  GenSbmArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-sbm", "Sample a stochastic block model hypergraph");
  add_common(gen_cmd, gen.common, true);
  gen_cmd->add_option("--blocks", gen.blocks, "Block sizes")->delimiter(',')->capture_default_str();
  gen_cmd->add_option("--k", gen.k, "Hyperedge size")->capture_default_str();
  gen_cmd->add_option("--p-in", gen.p_in, "Within-block probability")->capture_default_str();
  gen_cmd->add_option("--p-out", gen.p_out, "Cross-block probability")->capture_default_str();
  gen_cmd->add_option("--truth", gen.truth, "Block assignment CSV");

  IngestArgs ing;
  auto* ing_cmd = app.add_subcommand("ingest", "Build a hypergraph from a categorical CSV");
  add_common(ing_cmd, ing.common, true);
  ing_cmd->add_option("--input", ing.input, "Categorical CSV with header")->required();
  ing_cmd->add_option("--class-column", ing.class_column, "Class column name or index")
      ->capture_default_str();
  ing_cmd->add_option("--missing", ing.missing, "Missing-value marker")->capture_default_str();
  ing_cmd->add_option("--per-class", ing.per_class, "Rows kept per class (0 keeps all)")
      ->capture_default_str();
  ing_cmd->add_option("--truth", ing.truth, "Class assignment CSV");
  ing_cmd->add_option("--incidence", ing.incidence, "Vertex-by-hyperedge incidence CSV");
  ing_cmd->add_option("--rows", ing.rows, "Vertex to input row mapping CSV");
  ing_cmd->add_option("--hyperedges", ing.hyperedges, "Feature and value per hyperedge CSV");

  PropagateArgs prop;
  auto* prop_cmd = app.add_subcommand("propagate", "Alternating barycenter propagation");
  add_common(prop_cmd, prop.common, true);
  prop_cmd->add_option("--hypergraph", prop.hypergraph, "Hypergraph file")->required();
  prop_cmd->add_option("--labels", prop.labels, "Known labels CSV")->required();
  add_propagation_flags(prop_cmd, prop.cfg);
  prop_cmd->add_option("--grid-size", prop.grid_size, "Quantile grid size")
      ->capture_default_str();
  prop_cmd->add_option("--trace", prop.trace, "Loss history CSV");

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve-tikhonov", "Closed-form Tikhonov solution");
  add_common(solve_cmd, solve.common, true);
  solve_cmd->add_option("--graph", solve.graph, "Weighted graph file");
  solve_cmd->add_option("--hypergraph", solve.hypergraph, "Hypergraph file (clique expanded)");
  solve_cmd->add_option("--labels", solve.labels, "Training labels CSV")->required();
  solve_cmd->add_option("--gamma", solve.gamma, "Regularization weight")->capture_default_str();
  solve_cmd->add_option("--grid-size", solve.grid_size, "Quantile grid size")
      ->capture_default_str();

  StabilityArgs stab;
  auto* stab_cmd = app.add_subcommand("stability", "Stability constant and generalization bounds");
  add_common(stab_cmd, stab.common, false);
  stab_cmd->add_option("--graph", stab.graph, "Weighted graph file");
  stab_cmd->add_option("--hypergraph", stab.hypergraph, "Hypergraph file (clique expanded)");
  stab_cmd->add_option("--labels", stab.labels, "Training labels CSV")->required();
  stab_cmd->add_option("--gamma", stab.gamma, "Regularization weight")->capture_default_str();
  stab_cmd->add_option("--epsilon", stab.epsilon, "Deviation epsilon")->capture_default_str();
  stab_cmd->add_option("--grid-size", stab.grid_size, "Quantile grid size")
      ->capture_default_str();
  stab_cmd->add_option("--phi", stab.phi,
                       "Constant envelope (default: tightest envelope of the labels)");
  stab_cmd->add_flag("--empirical", stab.empirical, "Run single-sample replacement trials");
  stab_cmd->add_option("--swaps", stab.swaps, "Replacement trials")->capture_default_str();
  stab_cmd->add_option("--swaps-csv", stab.swaps_csv, "Per-trial ratios CSV");

  ExperimentArgs exp;
  auto* exp_cmd = app.add_subcommand("experiment", "Seeded propagation trials with accuracy");
  add_common(exp_cmd, exp.common, true);
  exp_cmd->add_option("--hypergraph", exp.hypergraph, "Hypergraph file")->required();
  exp_cmd->add_option("--truth", exp.truth, "Class assignment CSV")->required();
  exp_cmd->add_option("--per-class", exp.per_class, "Known vertices per class")
      ->capture_default_str();
  exp_cmd->add_option("--trials", exp.trials, "Number of trials")->capture_default_str();
  add_propagation_flags(exp_cmd, exp.cfg);
  exp_cmd->add_option("--anchor", exp.anchor, "onehot, signed or quantile")
      ->capture_default_str();
  exp_cmd->add_option("--variance", exp.variance,
                      "Anchor variance (default 0.05; use 0.01 for categorical data)");
  exp_cmd->add_option("--grid-size", exp.grid_size, "Quantile grid size")->capture_default_str();

  std::string selected;
  for (int i = 1; i < argc && selected.empty(); ++i) {
    for (const auto* sub : app.get_subcommands({})) {
      if (sub->get_name() == argv[i]) selected = argv[i];
    }
  }
  app.config_formatter(std::make_shared<SubcommandConfig>(selected));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen_cmd->parsed()) run_gen_sbm(gen);
    if (ing_cmd->parsed()) run_ingest(ing);
    if (prop_cmd->parsed()) run_propagate(prop);
    if (solve_cmd->parsed()) run_solve(solve);
    if (stab_cmd->parsed()) run_stability(stab);
    if (exp_cmd->parsed()) run_experiment_cmd(exp);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
