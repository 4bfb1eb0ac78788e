#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wprop/error.hpp"
#include "wprop/experiment.hpp"
#include "wprop/io.hpp"

using namespace wprop;

namespace {

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// n rows, 16 binary features drawn at random, two classes.
std::string binary_table(std::size_t n, std::uint64_t seed, bool with_missing) {
  std::mt19937_64 rng(seed);
  std::ostringstream out;
  out << "party";
  for (int f = 0; f < 16; ++f) out << ",issue" << f;
  out << '\n';
  for (std::size_t r = 0; r < n; ++r) {
    out << (r % 2 ? "rep" : "dem");
    for (int f = 0; f < 16; ++f) {
      const auto x = rng() % 10;
      out << ',' << (with_missing && x == 0 ? "?" : (x % 2 ? "y" : "n"));
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

TEST_CASE("SBM trivial configurations") {
  SbmConfig none;
  none.p_in = 0;
  none.p_out = 0;
  CHECK(gen_sbm(none).hypergraph.num_edges() == 0);

  SbmConfig two;
  two.block_sizes = {3, 3};
  two.p_in = 1;
  two.p_out = 0;
  const auto inst = gen_sbm(two);
  REQUIRE(inst.hypergraph.num_edges() == 2);
  CHECK(inst.within_block == 2);
  CHECK(inst.hypergraph.edges()[0] == std::vector<Vertex>{0, 1, 2});
  CHECK(inst.hypergraph.edges()[1] == std::vector<Vertex>{3, 4, 5});
  CHECK(inst.blocks == std::vector<std::size_t>{0, 0, 0, 1, 1, 1});

  SbmConfig all;
  all.block_sizes = {2, 3};
  all.p_in = 1;
  all.p_out = 1;
  CHECK(gen_sbm(all).hypergraph.num_edges() == 10);
}

TEST_CASE("SBM configuration errors") {
  SbmConfig c;
  c.p_out = 0.5;  // above p_in
  CHECK_THROWS_AS(gen_sbm(c), InputError);
  c = SbmConfig{};
  c.k = 1;
  CHECK_THROWS_AS(gen_sbm(c), InputError);
  c = SbmConfig{};
  c.block_sizes = {1, 1};
  CHECK_THROWS_AS(gen_sbm(c), InputError);
  c = SbmConfig{};
  c.block_sizes = {0, 5};
  CHECK_THROWS_AS(gen_sbm(c), InputError);
  c = SbmConfig{};
  c.p_in = 1.5;
  CHECK_THROWS_AS(gen_sbm(c), InputError);
  c = SbmConfig{};
  c.block_sizes = {1000, 1000};
  CHECK_THROWS_AS(gen_sbm(c), InputError);
}

TEST_CASE("SBM expectations") {
  const SbmConfig c;
  CHECK(binomial(50, 3) == 19600.0);
  CHECK(binomial(100, 3) == 161700.0);
  CHECK(binomial(3, 5) == 0.0);
  CHECK(sbm_within_subsets(c) == 39200.0);
  CHECK(sbm_expected_within(c) == doctest::Approx(392.0));
  CHECK(sbm_expected_total(c) == doctest::Approx(392.0 + 122500.0 * 0.002));
  CHECK(sbm_expected_total(c) == doctest::Approx(637.0));
  CHECK(sbm_total_variance(c) ==
        doctest::Approx(39200.0 * 0.01 * 0.99 + 122500.0 * 0.002 * 0.998));
}

TEST_CASE("SBM is seeded and counts concentrate") {
  SbmConfig c;
  c.seed = 5;
  const auto a = gen_sbm(c);
  const auto b = gen_sbm(c);
  CHECK(a.hypergraph.edges() == b.hypergraph.edges());
  c.seed = 6;
  CHECK(gen_sbm(c).hypergraph.edges() != a.hypergraph.edges());

  double total = 0.0;
  const double sd = std::sqrt(sbm_total_variance(c));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    c.seed = seed;
    const auto inst = gen_sbm(c);
    const double count = static_cast<double>(inst.hypergraph.num_edges());
    CHECK(std::abs(count - sbm_expected_total(c)) <= 5.0 * sd);
    std::size_t within = 0;
    for (const auto& e : inst.hypergraph.edges()) {
      CHECK(e.size() == 3);
      const bool same = inst.blocks[e[0]] == inst.blocks[e[1]] && inst.blocks[e[1]] == inst.blocks[e[2]];
      if (same) ++within;
    }
    CHECK(within == inst.within_block);
    total += count;
  }
  CHECK(std::abs(total / 50.0 - sbm_expected_total(c)) <= 0.05 * sbm_expected_total(c));
}

TEST_CASE("categorical CSV reader") {
  std::istringstream in("a, b ,class\nx,y,p\nx,?,q\n");
  const auto t = read_categorical_csv(in, "class");
  CHECK(t.feature_names == std::vector<std::string>{"a", "b"});
  CHECK(t.classes == std::vector<std::string>{"p", "q"});
  CHECK(t.rows[1] == std::vector<std::string>{"x", "?"});

  std::istringstream by_index("class,a\np,x\n");
  const auto u = read_categorical_csv(by_index, "0");
  CHECK(u.feature_names == std::vector<std::string>{"a"});
  CHECK(u.classes == std::vector<std::string>{"p"});

  std::istringstream ragged("a,class\nx\n");
  CHECK_THROWS_AS(read_categorical_csv(ragged, "class"), InputError);
  std::istringstream nocol("a,b\nx,y\n");
  CHECK_THROWS_AS(read_categorical_csv(nocol, "class"), InputError);
  std::istringstream noclass("a,class\nx,?\n");
  CHECK_THROWS_AS(read_categorical_csv(noclass, "class"), InputError);
}

TEST_CASE("ingestion examples") {
  std::istringstream votes(binary_table(40, 1, false));
  const auto table = read_categorical_csv(votes, "party");
  const auto r = ingest_categorical(table);
  CHECK(r.hypergraph.num_edges() == 32);
  CHECK(r.hypergraph.num_vertices() == 40);
  CHECK(r.class_names == std::vector<std::string>{"dem", "rep"});
  CHECK(r.classes[0] == 0);
  CHECK(r.classes[1] == 1);
  REQUIRE(r.sources.size() == 32);
  CHECK(r.sources[0].feature == 0);
  CHECK(r.sources[0].value == "n");
  CHECK(r.sources[1].value == "y");

  std::istringstream same("f,c\nz,p\nz,q\nz,p\n");
  const auto s = ingest_categorical(read_categorical_csv(same, "c"));
  REQUIRE(s.hypergraph.num_edges() == 1);
  CHECK(s.hypergraph.edges()[0] == std::vector<Vertex>{0, 1, 2});

  std::istringstream missing("f,c\na,p\na,q\n?,p\n");
  const auto m = ingest_categorical(read_categorical_csv(missing, "c"));
  REQUIRE(m.hypergraph.num_edges() == 1);
  CHECK(m.hypergraph.edges()[0] == std::vector<Vertex>{0, 1});

  std::istringstream singleton("f,c\na,p\nb,q\n");
  CHECK(ingest_categorical(read_categorical_csv(singleton, "c")).hypergraph.num_edges() == 0);

  CategoricalTable empty;
  empty.feature_names = {"f"};
  CHECK_THROWS_AS(ingest_categorical(empty), InputError);
}

TEST_CASE("complete features partition the rows and missing rows stay out") {
  for (bool with_missing : {false, true}) {
    std::istringstream in(binary_table(60, 9, with_missing));
    const auto table = read_categorical_csv(in, "party");
    const auto r = ingest_categorical(table);
    for (std::size_t f = 0; f < table.feature_names.size(); ++f) {
      std::vector<int> hits(table.rows.size(), 0);
      for (std::size_t e = 0; e < r.hypergraph.num_edges(); ++e) {
        if (r.sources[e].feature != f) continue;
        for (Vertex v : r.hypergraph.edge(e)) {
          ++hits[v];
          CHECK(table.rows[v][f] == r.sources[e].value);
        }
      }
      for (std::size_t row = 0; row < table.rows.size(); ++row) {
        const bool is_missing = table.rows[row][f] == table.missing;
        CHECK(hits[row] == (is_missing ? 0 : 1));
      }
    }
  }
}

TEST_CASE("per-class subsampling") {
  std::istringstream in(binary_table(30, 3, false));
  const auto table = read_categorical_csv(in, "party");
  const auto rows = subsample_per_class(table, 5, 17);
  CHECK(rows.size() == 10);
  CHECK(std::is_sorted(rows.begin(), rows.end()));
  CHECK(rows == subsample_per_class(table, 5, 17));
  const auto picked = select_rows(table, rows);
  CHECK(std::count(picked.classes.begin(), picked.classes.end(), "dem") == 5);
  CHECK_THROWS_AS(subsample_per_class(table, 16, 17), InputError);
}

TEST_CASE("incidence export") {
  const Hypergraph h(3, {{0, 1}, {1, 2}});
  std::ostringstream out;
  write_incidence_csv(out, h, {0, 1, 1});
  CHECK(out.str() == "vertex,e0,e1,class\n0,1,0,0\n1,1,1,1\n2,0,1,1\n");
}

TEST_CASE("anchor kind names") {
  for (auto k : {AnchorKind::OneHotGaussian, AnchorKind::SignedGaussian, AnchorKind::SignedQuantile}) {
    CHECK(parse_anchor_kind(anchor_kind_name(k)) == k);
  }
  CHECK_THROWS_AS(parse_anchor_kind("cauchy"), InputError);
}

TEST_CASE("experiment trials") {
  SbmConfig c;
  c.seed = 2;
  const auto inst = gen_sbm(c);
  PropagationConfig cfg;
  ScopedWarningHandler quiet([](std::string_view) {});

  const auto r = run_experiment(inst.hypergraph, inst.blocks, 15, 20, cfg, AnchorSpec{}, 7);
  CHECK(r.accuracy.size() == 20);
  CHECK_FALSE(r.undefined);
  for (std::size_t t = 0; t < 20; ++t) {
    CHECK(r.accuracy[t] >= 0.0);
    CHECK(r.accuracy[t] <= 1.0);
    CHECK(r.evaluated[t] == 70);
  }
  const double mean = std::accumulate(r.accuracy.begin(), r.accuracy.end(), 0.0) / 20.0;
  CHECK(r.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(r.std_error >= 0.0);

  const auto again = run_experiment(inst.hypergraph, inst.blocks, 15, 20, cfg, AnchorSpec{}, 7);
  CHECK(again.accuracy == r.accuracy);
  CHECK(again.iterations == r.iterations);

  AnchorSpec signed_q{AnchorKind::SignedQuantile, 0.05, 128};
  const auto q = run_experiment(inst.hypergraph, inst.blocks, 15, 3, cfg, signed_q, 7);
  CHECK(q.accuracy.size() == 3);
  AnchorSpec signed_g{AnchorKind::SignedGaussian, 0.05, 128};
  CHECK(run_experiment(inst.hypergraph, inst.blocks, 15, 3, cfg, signed_g, 7).accuracy.size() == 3);
}

TEST_CASE("experiment edge cases") {
  const Hypergraph h(4, {{0, 1}, {2, 3}, {1, 2}});
  const std::vector<std::size_t> truth{0, 0, 1, 1};
  ScopedWarningHandler quiet([](std::string_view) {});
  const auto all = run_experiment(h, truth, 2, 3, PropagationConfig{}, AnchorSpec{}, 1);
  CHECK(all.undefined);
  CHECK(std::isnan(all.mean));
  for (double a : all.accuracy) CHECK(std::isnan(a));

  CHECK_THROWS_AS(run_experiment(h, truth, 3, 1, PropagationConfig{}, AnchorSpec{}, 1), InputError);
  const std::vector<std::size_t> three{0, 1, 2, 2};
  AnchorSpec s{AnchorKind::SignedGaussian, 0.05, 64};
  CHECK_THROWS_AS(run_experiment(h, three, 1, 1, PropagationConfig{}, s, 1), InputError);
  CHECK_THROWS_AS(run_experiment(h, {0, 1}, 1, 1, PropagationConfig{}, AnchorSpec{}, 1), Error);
}

TEST_CASE("metrics file") {
  ExperimentResult r;
  r.accuracy = {0.5, 0.75, 1.0};
  r.mean = 0.75;
  std::ostringstream out;
  emit_metrics(out, r);
  CHECK(out.str() == "trial,accuracy\n0,0.5\n1,0.75\n2,1\nmean,0.75\n");

  SbmConfig c;
  c.seed = 4;
  const auto inst = gen_sbm(c);
  ScopedWarningHandler quiet([](std::string_view) {});
  const auto res = run_experiment(inst.hypergraph, inst.blocks, 15, 20, PropagationConfig{},
                                  AnchorSpec{}, 3);
  std::ostringstream a, b;
  emit_metrics(a, res);
  emit_metrics(b, run_experiment(inst.hypergraph, inst.blocks, 15, 20, PropagationConfig{},
                                 AnchorSpec{}, 3));
  CHECK(a.str() == b.str());
  const auto lines = lines_of(a.str());
  REQUIRE(lines.size() == 22);  // header + 20 trials + mean
  double sum = 0.0;
  for (std::size_t i = 1; i <= 20; ++i) sum += std::stod(lines[i].substr(lines[i].find(',') + 1));
  CHECK(std::stod(lines[21].substr(5)) == doctest::Approx(sum / 20.0).epsilon(1e-12));

  const auto bad = std::filesystem::temp_directory_path() / "wprop-no-such-dir" / "m.csv";
  CHECK_THROWS_AS(emit_metrics(res, bad), IoError);
}
