#include "wprop/io.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <optional>
#include <fstream>
#include <sstream>
#include <string>

#include "wprop/error.hpp"

namespace wprop {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view s, std::size_t line) {
  s = trim(s);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw InputError("line " + std::to_string(line) + ": cannot parse number '" +
                     std::string(s) + "'");
  }
  return value;
}

std::size_t parse_index(std::string_view s, std::size_t line) {
  s = trim(s);
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw InputError("line " + std::to_string(line) + ": cannot parse index '" +
                     std::string(s) + "'");
  }
  return value;
}

// Returns the declared vertex count from "# vertices: N", if present.
std::optional<std::size_t> vertex_hint(std::string_view comment, std::size_t line) {
  comment = trim(comment.substr(1));
  constexpr std::string_view key = "vertices:";
  if (comment.substr(0, key.size()) != key) return std::nullopt;
  return parse_index(comment.substr(key.size()), line);
}

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, ptr);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

Hypergraph read_hypergraph(std::istream& in, std::size_t min_vertices) {
  std::vector<std::vector<Vertex>> edges;
  std::size_t n = min_vertices;
  std::optional<std::size_t> declared;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      if (auto hint = vertex_hint(view, lineno)) declared = hint;
      continue;
    }
    std::vector<Vertex> edge;
    for (auto tok : tokens(view)) edge.push_back(parse_index(tok, lineno));
    if (edge.size() < 2) {
      throw InputError("line " + std::to_string(lineno) +
                       ": hyperedges need at least two vertices");
    }
    for (Vertex v : edge) n = std::max(n, v + 1);
    edges.push_back(std::move(edge));
  }
  if (declared) {
    if (*declared < n) throw InputError("hypergraph references vertices beyond '# vertices:'");
    n = *declared;
  }
  return Hypergraph(n, std::move(edges));
}

Hypergraph read_hypergraph(const std::filesystem::path& path, std::size_t min_vertices) {
  auto in = open_input(path);
  return read_hypergraph(in, min_vertices);
}

void write_hypergraph(std::ostream& out, const Hypergraph& h) {
  out << "# vertices: " << h.num_vertices() << '\n';
  for (const auto& edge : h.edges()) {
    for (std::size_t i = 0; i < edge.size(); ++i) out << (i ? " " : "") << edge[i];
    out << '\n';
  }
}

WeightedGraph read_graph(std::istream& in, std::size_t min_vertices) {
  std::vector<WeightedEdge> edges;
  std::size_t n = min_vertices;
  std::optional<std::size_t> declared;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      if (auto hint = vertex_hint(view, lineno)) declared = hint;
      continue;
    }
    const auto tok = tokens(view);
    if (tok.size() != 3) {
      throw InputError("line " + std::to_string(lineno) + ": expected 'i j w'");
    }
    WeightedEdge e{parse_index(tok[0], lineno), parse_index(tok[1], lineno),
                   parse_double(tok[2], lineno)};
    n = std::max({n, e.u + 1, e.v + 1});
    edges.push_back(e);
  }
  if (declared) {
    if (*declared < n) throw InputError("graph references vertices beyond '# vertices:'");
    n = *declared;
  }
  return WeightedGraph(n, edges);
}

WeightedGraph read_graph(const std::filesystem::path& path, std::size_t min_vertices) {
  auto in = open_input(path);
  return read_graph(in, min_vertices);
}

void write_graph(std::ostream& out, const WeightedGraph& g) {
  out << "# vertices: " << g.num_vertices() << '\n';
  for (const auto& e : g.edges()) {
    out << e.u << ' ' << e.v << ' ' << format_double(e.weight) << '\n';
  }
}

std::vector<LabelRecord> read_labels(std::istream& in) {
  std::vector<LabelRecord> out;
  std::string line;
  bool header_seen = false;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (view.substr(0, 7) == "vertex,") continue;
    }
    const auto c1 = view.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : view.find(',', c1 + 1);
    if (c2 == std::string_view::npos) {
      throw InputError("labels line " + std::to_string(lineno) + ": expected vertex,kind,params");
    }
    const Vertex v = parse_index(view.substr(0, c1), lineno);
    const std::string_view kind = trim(view.substr(c1 + 1, c2 - c1 - 1));
    const std::string_view params = trim(view.substr(c2 + 1));
    if (kind == "hist") {
      Histogram hist;
      for (auto pair : split(params, ';')) {
        if (pair.empty()) continue;
        const auto colon = pair.find(':');
        if (colon == std::string_view::npos) {
          throw InputError("labels line " + std::to_string(lineno) + ": expected bin:mass");
        }
        hist.bins.push_back(parse_double(pair.substr(0, colon), lineno));
        hist.masses.push_back(parse_double(pair.substr(colon + 1), lineno));
      }
      out.push_back({v, std::move(hist)});
    } else if (kind == "gauss") {
      const auto bar = params.find('|');
      if (bar == std::string_view::npos) {
        throw InputError("labels line " + std::to_string(lineno) + ": expected mu...|sd...");
      }
      std::vector<double> mean, sd;
      for (auto tok : split(params.substr(0, bar), ',')) mean.push_back(parse_double(tok, lineno));
      for (auto tok : split(params.substr(bar + 1), ',')) sd.push_back(parse_double(tok, lineno));
      out.push_back({v, DiagGaussianLabel(std::move(mean), std::move(sd))});
    } else {
      throw InputError("labels line " + std::to_string(lineno) + ": unknown kind '" +
                       std::string(kind) + "'");
    }
  }
  return out;
}

std::vector<LabelRecord> read_labels(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_labels(in);
}

std::string kind_name(const LabelRecord& record) {
  return std::holds_alternative<Histogram>(record.value) ? "hist" : "gauss";
}

std::string params_of(const LabelRecord& record) {
  if (const auto* hist = std::get_if<Histogram>(&record.value)) {
    std::string out;
    for (std::size_t i = 0; i < hist->bins.size(); ++i) {
      if (i) out += ';';
      out += format_double(hist->bins[i]) + ':' + format_double(hist->masses[i]);
    }
    return out;
  }
  return gaussian_params(std::get<DiagGaussianLabel>(record.value));
}

void write_labels(std::ostream& out, const std::vector<LabelRecord>& records) {
  out << "vertex,kind,params\n";
  for (const auto& r : records) {
    out << r.vertex << ',' << kind_name(r) << ',' << params_of(r) << '\n';
  }
}

std::size_t max_vertex_bound(const std::vector<LabelRecord>& records) {
  std::size_t n = 0;
  for (const auto& r : records) n = std::max(n, r.vertex + 1);
  return n;
}

std::string histogram_params(const QuantileLabel& label) {
  std::string out;
  const double S = static_cast<double>(label.size());
  std::size_t j = 0;
  while (j < label.size()) {
    std::size_t k = j;
    while (k < label.size() && label[k] == label[j]) ++k;
    if (!out.empty()) out += ';';
    out += format_double(label[j]) + ':' + format_double(static_cast<double>(k - j) / S);
    j = k;
  }
  return out;
}

std::string gaussian_params(const DiagGaussianLabel& label) {
  std::string out;
  for (std::size_t i = 0; i < label.dim(); ++i) {
    out += (i ? "," : "") + format_double(label.mean()[i]);
  }
  out += '|';
  for (std::size_t i = 0; i < label.dim(); ++i) {
    out += (i ? "," : "") + format_double(label.std()[i]);
  }
  return out;
}

QuantileLabel to_quantile(const LabelRecord& record, QuantileGrid grid) {
  if (const auto* hist = std::get_if<Histogram>(&record.value)) {
    return quantile_from_histogram(hist->bins, hist->masses, grid);
  }
  const auto& g = std::get<DiagGaussianLabel>(record.value);
  if (g.dim() != 1) {
    throw InputError("vertex " + std::to_string(record.vertex) +
                     ": only one-dimensional gauss labels convert to quantiles");
  }
  return QuantileLabel::normal(grid, g.mean()[0], g.std()[0]);
}

TrainingSet to_training_set(const std::vector<LabelRecord>& records, std::size_t num_vertices,
                            QuantileGrid grid) {
  std::vector<TrainingSample> samples;
  samples.reserve(records.size());
  for (const auto& r : records) samples.push_back({r.vertex, to_quantile(r, grid)});
  return TrainingSet(num_vertices, std::move(samples));
}

std::vector<std::size_t> read_truth(std::istream& in, std::size_t num_vertices) {
  std::vector<std::size_t> classes(num_vertices, 0);
  std::vector<char> seen(num_vertices, 0);
  std::string line;
  bool header_seen = false;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (view.substr(0, 7) == "vertex,") continue;
    }
    const auto fields = split(view, ',');
    if (fields.size() != 2) throw InputError("truth line " + std::to_string(lineno));
    const Vertex v = parse_index(fields[0], lineno);
    if (v >= num_vertices) throw InputError("truth vertex out of range");
    classes[v] = parse_index(fields[1], lineno);
    seen[v] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw InputError("truth file does not cover every vertex");
  }
  return classes;
}

std::vector<std::size_t> read_truth(const std::filesystem::path& path, std::size_t num_vertices) {
  auto in = open_input(path);
  return read_truth(in, num_vertices);
}

void write_truth(std::ostream& out, const std::vector<std::size_t>& classes) {
  out << "vertex,class\n";
  for (std::size_t v = 0; v < classes.size(); ++v) out << v << ',' << classes[v] << '\n';
}

}  // namespace wprop
