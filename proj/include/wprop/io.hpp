#pragma once

// File formats.
//
//   hypergraph   one hyperedge per line, whitespace-separated 0-based vertex
//                indices; lines starting with '#' are comments. A comment of
//                the form "# vertices: N" fixes the vertex count, otherwise it
//                is one more than the largest index seen.
//   graph        same comment rules, one "i j w" edge per line.
//   labels CSV   header "vertex,kind,params"; kind is hist or gauss.
//                hist params:  b1:m1;b2:m2;...        (bin:mass pairs)
//                gauss params: mu1,...,mub|sd1,...,sdb
//                The params field runs to the end of the line, so gauss
//                params need no quoting.
//   truth CSV    header "vertex,class".
//
// Numbers are written in shortest round-trip form with '.' decimals and '\n'
// line endings.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wprop/hypergraph.hpp"
#include "wprop/labels.hpp"
#include "wprop/tikhonov.hpp"

namespace wprop {

std::string format_double(double value);

struct Histogram {
  std::vector<double> bins;
  std::vector<double> masses;
};

struct LabelRecord {
  Vertex vertex;
  std::variant<Histogram, DiagGaussianLabel> value;
};

Hypergraph read_hypergraph(std::istream& in, std::size_t min_vertices = 0);
Hypergraph read_hypergraph(const std::filesystem::path& path, std::size_t min_vertices = 0);
void write_hypergraph(std::ostream& out, const Hypergraph& h);

WeightedGraph read_graph(std::istream& in, std::size_t min_vertices = 0);
WeightedGraph read_graph(const std::filesystem::path& path, std::size_t min_vertices = 0);
void write_graph(std::ostream& out, const WeightedGraph& g);

std::vector<LabelRecord> read_labels(std::istream& in);
std::vector<LabelRecord> read_labels(const std::filesystem::path& path);
void write_labels(std::ostream& out, const std::vector<LabelRecord>& records);

// One more than the largest vertex referenced, or 0.
std::size_t max_vertex_bound(const std::vector<LabelRecord>& records);

// Quantile labels written as histograms: equal consecutive samples merge into
// one bin of mass (count / S). Reading the result back on the same grid
// reproduces the samples.
std::string histogram_params(const QuantileLabel& label);
std::string gaussian_params(const DiagGaussianLabel& label);
std::string kind_name(const LabelRecord& record);
std::string params_of(const LabelRecord& record);

// hist records become quantile labels on the grid; one-dimensional gauss
// records are sampled on the grid. Higher-dimensional gauss records are an
// InputError.
QuantileLabel to_quantile(const LabelRecord& record, QuantileGrid grid);

// Every record is one training sample; repeated vertices add multiplicity.
TrainingSet to_training_set(const std::vector<LabelRecord>& records, std::size_t num_vertices,
                            QuantileGrid grid);

std::vector<std::size_t> read_truth(std::istream& in, std::size_t num_vertices);
std::vector<std::size_t> read_truth(const std::filesystem::path& path, std::size_t num_vertices);
void write_truth(std::ostream& out, const std::vector<std::size_t>& classes);

// Opens for writing; IoError on failure.
std::ofstream open_output(const std::filesystem::path& path);
std::ifstream open_input(const std::filesystem::path& path);

}  // namespace wprop
