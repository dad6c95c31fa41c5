#include "doctest.h"

#include "zpt/errors.hpp"
#include "zpt/tag/graph.hpp"
#include "zpt/tag/synthetic.hpp"

#include <filesystem>
#include <fstream>
#include <random>

using namespace zpt;
using namespace zpt::tag;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("zpt_test_" + name);
  fs::remove_all(p);
  return p;
}

TextAttributedGraph small(std::vector<std::pair<NodeId, NodeId>> edges, int n) {
  std::vector<NodeId> ids;
  std::vector<std::string> texts;
  for (int i = 0; i < n; ++i) {
    ids.push_back(i);
    texts.push_back("node " + std::to_string(i));
  }
  return {ids, std::move(edges), Matrix::Zero(n, 2), texts};
}

}  // namespace

TEST_SUITE("tagcore") {
  TEST_CASE("edges are canonicalised once per unordered pair") {
    const auto g = small({{1, 0}, {0, 1}, {2, 1}, {1, 1}}, 3);
    CHECK(g.num_edges() == 2);
    CHECK(g.edges()[0] == std::pair<NodeId, NodeId>{0, 1});
    CHECK(g.edges()[1] == std::pair<NodeId, NodeId>{1, 2});
  }

  TEST_CASE("constructor rejects length mismatches and dangling endpoints") {
    CHECK_THROWS_AS(TextAttributedGraph({0, 1}, {}, Matrix::Zero(2, 1), {"a"}), ContractError);
    CHECK_THROWS_AS(TextAttributedGraph({0, 1}, {}, Matrix::Zero(3, 1), {"a", "b"}), ContractError);
    CHECK_THROWS_AS(TextAttributedGraph({0, 1}, {{0, 99}}, Matrix::Zero(2, 1), {"a", "b"}), ContractError);
    CHECK_THROWS_AS(TextAttributedGraph({0, 1}, {}, Matrix::Zero(2, 1), {"a", "b"},
                                        std::vector<std::string>{"x", ""}),
                    ContractError);
  }

  TEST_CASE("neighbor sets: path, triangle, edgeless") {
    auto path = neighbor_sets(small({{0, 1}, {1, 2}}, 3));
    CHECK(path[1] == std::set<NodeId>{0, 2});
    CHECK(path[0] == std::set<NodeId>{1});
    auto tri = neighbor_sets(small({{0, 1}, {1, 2}, {0, 2}}, 3));
    for (NodeId v = 0; v < 3; ++v) CHECK(tri[v].size() == 2);
    auto none = neighbor_sets(small({}, 4));
    for (NodeId v = 0; v < 4; ++v) CHECK(none[v].empty());
  }

  TEST_CASE("neighbor sets are symmetric and loop-free on random graphs") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::pair<NodeId, NodeId>> edges;
      for (int e = 0; e < 30; ++e) edges.emplace_back(rng() % 12, rng() % 12);
      const auto sets = neighbor_sets(small(edges, 12));
      for (const auto& [v, ns] : sets) {
        CHECK(ns.count(v) == 0);
        for (NodeId u : ns) CHECK(sets.at(u).count(v) == 1);
      }
    }
  }

  TEST_CASE("load_tag reads the documented format") {
    const fs::path dir = temp_dir("load3");
    fs::create_directories(dir);
    std::ofstream(dir / "meta.json") << R"({"feature_dim": 2, "num_nodes": 3})";
    std::ofstream(dir / "nodes.jsonl") << R"({"id": 0, "text": "a"})" "\n"
                                       << R"({"id": 1, "text": "b"})" "\n"
                                       << R"({"id": 2, "text": "c"})" "\n";
    std::ofstream(dir / "edges.tsv") << "0\t1\n1\t2\n";
    const auto g = load_tag(dir);
    CHECK(g.num_nodes() == 3);
    CHECK(g.num_edges() == 2);
    CHECK_FALSE(g.has_labels());

    std::ofstream(dir / "edges.tsv") << "0\t1\n1\t99\n";
    try {
      load_tag(dir);
      FAIL("expected a load error");
    } catch (const LoadError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("99") != std::string::npos);
      CHECK(msg.find("edges.tsv line 2") != std::string::npos);
    }
  }

  TEST_CASE("save then load is the identity") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
      const int n = 1 + static_cast<int>(rng() % 9);
      std::vector<std::pair<NodeId, NodeId>> edges;
      for (int e = 0; e < n; ++e) edges.emplace_back(rng() % n, rng() % n);
      std::vector<NodeId> ids;
      std::vector<std::string> texts, labels;
      Matrix x(n, 3);
      for (int i = 0; i < n; ++i) {
        ids.push_back(i * 3 + 1);
        texts.push_back("text \"quoted\" " + std::to_string(rng() % 100));
        labels.push_back(i % 2 ? "odd" : "even");
        for (int k = 0; k < 3; ++k) x(i, k) = std::ldexp(static_cast<double>(rng() % 1000), -7) - 3.0;
      }
      for (auto& [u, v] : edges) {
        u = ids[static_cast<std::size_t>(u)];
        v = ids[static_cast<std::size_t>(v)];
      }
      std::optional<std::vector<std::string>> maybe_labels;
      if (trial % 2 == 0) maybe_labels = labels;
      const TextAttributedGraph g(ids, edges, x, texts, maybe_labels);
      const fs::path dir = temp_dir("roundtrip" + std::to_string(trial));
      save_tag(g, dir);
      CHECK(load_tag(dir) == g);
    }
  }

  TEST_CASE("1-node graph without edges round-trips; labels omitted when absent") {
    const TextAttributedGraph g({7}, {}, Matrix::Zero(1, 2), {"alone"});
    const fs::path dir = temp_dir("single");
    save_tag(g, dir);
    std::ifstream edges(dir / "edges.tsv");
    std::string line;
    CHECK_FALSE(static_cast<bool>(std::getline(edges, line)));
    std::ifstream nodes(dir / "nodes.jsonl");
    std::getline(nodes, line);
    CHECK(line.find("label") == std::string::npos);
    CHECK(load_tag(dir) == g);
  }

  TEST_CASE("save to an unwritable location raises IoError") {
    const TextAttributedGraph g({0}, {}, Matrix::Zero(1, 1), {"a"});
    CHECK_THROWS_AS(save_tag(g, "/proc/zpt_not_writable/x"), IoError);
  }

  TEST_CASE("synthetic generator: sizes, determinism and class names") {
    SyntheticTagSpec spec;
    const auto a = generate_synthetic_tag(spec);
    const auto b = generate_synthetic_tag(spec);
    CHECK(a.num_nodes() == 500);
    CHECK(a == b);
    const auto& labels = *a.labels();
    std::set<std::string> names(labels.begin(), labels.end());
    CHECK(names.size() == 5);
    for (int c = 0; c < 5; ++c) {
      CHECK(names.count(default_vocab()[static_cast<std::size_t>(c * spec.tokens_per_class)]) == 1);
    }
    spec.seed = 8;
    CHECK_FALSE(generate_synthetic_tag(spec) == a);
  }

  TEST_CASE("synthetic generator rejects invalid specs naming the field") {
    SyntheticTagSpec spec;
    spec.tokens_per_class = 1000;
    CHECK_THROWS_WITH_AS(generate_synthetic_tag(spec), doctest::Contains("tokens_per_class"), ConfigError);
    spec = {};
    spec.inter_edge_prob = 0.5;
    CHECK_THROWS_WITH_AS(generate_synthetic_tag(spec), doctest::Contains("intra_edge_prob"), ConfigError);
  }

  TEST_CASE("planted partition: intra-class degree dominates, intra fraction > 0.5") {
    for (std::uint64_t seed : {1, 2, 3}) {
      SyntheticTagSpec spec;
      spec.seed = seed;
      const auto g = generate_synthetic_tag(spec);
      const auto& labels = *g.labels();
      long intra = 0, inter = 0;
      for (const auto& [u, v] : g.edges()) {
        (labels[g.index_of(u)] == labels[g.index_of(v)] ? intra : inter) += 1;
      }
      const double n = static_cast<double>(g.num_nodes());
      CHECK(2.0 * intra / n > 2.0 * inter / n);
      CHECK(static_cast<double>(intra) / static_cast<double>(intra + inter) > 0.5);
    }
  }

  TEST_CASE("texts draw topic tokens of their own class more often") {
    SyntheticTagSpec spec;
    const auto g = generate_synthetic_tag(spec);
    const auto& vocab = default_vocab();
    long own = 0, other = 0;
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
      const std::string& label = (*g.labels())[i];
      const auto c = static_cast<int>(std::find(vocab.begin(), vocab.end(), label) - vocab.begin()) /
                     spec.tokens_per_class;
      for (const std::string& w : split_words(g.texts()[i])) {
        const auto k = std::find(vocab.begin(), vocab.end(), w) - vocab.begin();
        if (k >= spec.num_classes * spec.tokens_per_class) continue;
        (k / spec.tokens_per_class == c ? own : other) += 1;
      }
    }
    CHECK(own > 5 * other);
  }
}
