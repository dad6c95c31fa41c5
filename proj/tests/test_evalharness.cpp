#include "doctest.h"

#include "zpt/ad/random.hpp"
#include "zpt/encoders/similarity.hpp"
#include "zpt/errors.hpp"
#include "zpt/eval/harness.hpp"
#include "zpt/tag/synthetic.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace zpt;
using namespace zpt::eval;

namespace {

tag::TextAttributedGraph corpus(int classes, int per_class) {
  tag::SyntheticTagSpec spec;
  spec.num_classes = classes;
  spec.nodes_per_class = per_class;
  return tag::generate_synthetic_tag(spec);
}

// Untrained encoders: fast, and enough for structural checks.
const enc::PretrainedModel& random_model() {
  static const enc::PretrainedModel m = [] {
    const auto g = corpus(5, 20);
    return enc::PretrainedModel::create(enc::Vocabulary::build(g.texts()), {}, {},
                                        static_cast<int>(g.feature_dim()), 3, 0.0);
  }();
  return m;
}

std::string read(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ubcg::UbcgModel quick_generator(const EmbeddingCache& cache) {
  ubcg::UbcgConfig c;
  c.epochs = 2;
  return ubcg::train_ubcg(cache.nodes, cache.texts, c).model;
}

}  // namespace

TEST_SUITE("evalharness") {
  TEST_CASE("task sampling: full coverage, distinct classes, determinism") {
    const auto g5 = corpus(5, 30);
    for (const ZeroShotTask& t : sample_tasks(g5, 5, 4, 10, 1)) {
      CHECK(std::set<std::string>(t.class_names.begin(), t.class_names.end()).size() == 5);
      CHECK(t.query_rows.size() == 50);
      CHECK(std::set<int>(t.query_rows.begin(), t.query_rows.end()).size() == 50);
      for (std::size_t q = 0; q < t.query_rows.size(); ++q) {
        CHECK((*g5.labels())[static_cast<std::size_t>(t.query_rows[q])] ==
              t.class_names[static_cast<std::size_t>(t.truth[q])]);
      }
    }
    const auto a = sample_tasks(g5, 5, 3, 10, 7), b = sample_tasks(g5, 5, 3, 10, 7);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].class_names == b[i].class_names);
      CHECK(a[i].query_rows == b[i].query_rows);
    }

    const auto g10 = corpus(8, 10);  // default vocab holds 8 topic groups
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      std::set<std::string> seen;
      for (const ZeroShotTask& t : sample_tasks(g10, 3, 3, 5, seed)) {
        CHECK(std::set<std::string>(t.class_names.begin(), t.class_names.end()).size() == 3);
        seen.insert(t.class_names.begin(), t.class_names.end());
      }
      CHECK(seen.size() == 8);
    }
  }

  TEST_CASE("task sampling errors") {
    const auto g = corpus(5, 10);
    CHECK_THROWS_AS(sample_tasks(g, 6, 2, 5, 0), ConfigError);
    CHECK_THROWS_AS(sample_tasks(g, 5, 2, 11, 0), ConfigError);
    CHECK_THROWS_AS(sample_tasks(g, 2, 2, 5, 0), ConfigError);  // 2 x 2 < 5 classes
  }

  TEST_CASE("macro-F1 and accuracy") {
    CHECK(macro_f1({0, 1, 2}, {0, 1, 2}, 3) == 1.0);
    CHECK(macro_f1({0, 0, 0, 0}, {0, 0, 1, 1}, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    const std::vector<int> p{0, 2, 1, 1, 0, 2, 2}, t{0, 1, 1, 2, 0, 2, 1};
    const std::vector<int> perm{2, 0, 1};
    std::vector<int> pp, tp;
    for (int x : p) pp.push_back(perm[static_cast<std::size_t>(x)]);
    for (int x : t) tp.push_back(perm[static_cast<std::size_t>(x)]);
    CHECK(macro_f1(pp, tp, 3) == doctest::Approx(macro_f1(p, t, 3)).epsilon(1e-15));
    CHECK(accuracy(p, t) == doctest::Approx(4.0 / 7.0));
    CHECK_THROWS_AS(macro_f1({0}, {0, 1}, 2), ContractError);
    CHECK_THROWS_AS(macro_f1({3}, {0}, 2), ContractError);
  }

  TEST_CASE("evaluate: oracle and constant classifiers; aggregate is the task mean") {
    const auto g = corpus(5, 30);
    const auto tasks = sample_tasks(g, 5, 3, 10, 2);
    const EmbeddingCache cache = embed_graph(g, random_model());
    const Metrics oracle = evaluate([](std::size_t, const ZeroShotTask& t, const Matrix&, const Matrix&) { return t.truth; },
                                    tasks, cache);
    CHECK(oracle.accuracy.mean == 1.0);
    CHECK(oracle.macro_f1.mean == 1.0);
    const Metrics constant = evaluate(
        [](std::size_t, const ZeroShotTask& t, const Matrix&, const Matrix&) { return std::vector<int>(t.truth.size(), 0); },
        tasks, cache);
    CHECK(constant.accuracy.mean == doctest::Approx(0.2));
    double sum = 0;
    for (const TaskMetrics& m : constant.per_task) sum += m.macro_f1;
    CHECK(constant.macro_f1.mean == doctest::Approx(sum / 3.0).epsilon(1e-15));
  }

  TEST_CASE("runners are deterministic; node-only and discrete relations hold") {
    const auto g = corpus(5, 30);
    const auto tasks = sample_tasks(g, 5, 2, 10, 3);
    const enc::PretrainedModel& m = random_model();
    const EmbeddingCache cache = embed_graph(g, m);
    const ubcg::UbcgModel gen = quick_generator(cache);
    ZptConfig cfg;
    cfg.samples_per_class = 20;
    cfg.seed = 4;
    const RunOutput a = run_zpt(cache, m, gen, tasks, cfg), b = run_zpt(cache, m, gen, tasks, cfg);
    CHECK(a.metrics.accuracy.mean == b.metrics.accuracy.mean);
    CHECK(a.prompts.size() == 2);
    CHECK(a.prompts[0].context == b.prompts[0].context);
    CHECK(a.metrics.accuracy.mean >= 0.0);
    CHECK(a.metrics.accuracy.mean <= 1.0);

    const Metrics d1 = run_discrete(cache, m, tasks, "{class name}", 1.0);
    const Metrics node_only = evaluate(
        [&](std::size_t, const ZeroShotTask& t, const Matrix& v, const Matrix&) {
          const Matrix w = prompt::discrete_class_weights("{class name}", t.class_names, m);
          std::vector<int> out;
          for (Eigen::Index i = 0; i < v.rows(); ++i) {
            const ad::Vector c = enc::cosine_similarity_matrix(ad::Matrix(v.row(i)), w).row(0).transpose();
            out.push_back(prompt::argmax_lowest(c));
          }
          return out;
        },
        tasks, cache);
    CHECK(d1.accuracy.mean == node_only.accuracy.mean);

    const Metrics s1 = run_simple_classifier(cache, m, gen, tasks, cfg, {});
    const Metrics s2 = run_simple_classifier(cache, m, gen, tasks, cfg, {});
    CHECK(s1.accuracy.mean == s2.accuracy.mean);
  }

  TEST_CASE("linear classifier fits separable data and is seeded") {
    Rng rng(1);
    Matrix x = normal_matrix(90, 4, 0.2, rng);
    std::vector<int> y;
    for (int i = 0; i < 90; ++i) {
      y.push_back(i % 3);
      x(i, i % 3) += 3.0;
    }
    LinearClassifierConfig c;
    c.seed = 5;
    const LinearClassifier a = train_linear_classifier(x, y, 3, c), b = train_linear_classifier(x, y, 3, c);
    CHECK(accuracy(a.predict(x), y) == 1.0);
    CHECK(a.weight == b.weight);
    CHECK(a.bias == b.bias);
  }

  TEST_CASE("pseudo-label: fallback to discrete weights when a class gets no labels") {
    const auto g = corpus(5, 30);
    const enc::PretrainedModel& m = random_model();
    const EmbeddingCache cache = embed_graph(g, m);
    auto tasks = sample_tasks(g, 5, 1, 5, 1);
    // Two identical names: ties go to the first, so the second never gets a label.
    tasks[0].class_names[1] = tasks[0].class_names[0];
    PseudoLabelConfig pc;
    pc.label_template = "{class name}";
    const RunOutput r = run_pseudo_label(cache, m, tasks, {}, pc);
    REQUIRE(r.metrics.notes.size() == 1);
    CHECK(r.metrics.notes[0].find("untuned discrete") != std::string::npos);
    CHECK(pc.hybrid.learning_rate == 2e-5);
    CHECK(pc.hybrid.epochs == 1);
    CHECK(pc.hybrid.batch_size == 64);
    CHECK(pc.max_per_class == 200);
  }

  TEST_CASE("projection export: row counts, byte determinism, centroid report") {
    Rng rng(2);
    LabeledEmbeddings real, synth;
    real.nodes = normal_matrix(30, 6, 0.1, rng);
    real.texts = normal_matrix(30, 6, 0.1, rng);
    synth.nodes = normal_matrix(45, 6, 0.1, rng);
    synth.texts = normal_matrix(45, 6, 0.1, rng);
    for (int i = 0; i < 30; ++i) {
      real.labels.push_back("c" + std::to_string(i % 3));
      real.nodes(i, i % 3) += 1.0;
      real.texts(i, i % 3) += 1.0;
    }
    for (int i = 0; i < 45; ++i) {
      synth.labels.push_back("c" + std::to_string(i % 3));
      synth.nodes(i, i % 3) += 0.9;
      synth.texts(i, (i + 1) % 3) += 0.9;  // texts land on the wrong class
    }
    TsneConfig tc;
    tc.iterations = 100;
    tc.perplexity = 10;
    const auto dir = std::filesystem::temp_directory_path();
    const CentroidReport r = export_projection(real, synth, dir / "zpt_proj_a.csv", tc);
    export_projection(real, synth, dir / "zpt_proj_b.csv", tc);
    CHECK(read(dir / "zpt_proj_a.csv") == read(dir / "zpt_proj_b.csv"));
    CHECK(read(dir / "zpt_proj_a.centroids.json") == read(dir / "zpt_proj_b.centroids.json"));
    std::ifstream csv(dir / "zpt_proj_a.csv");
    std::string line;
    int rows = 0, nodes = 0;
    std::getline(csv, line);
    CHECK(line == "modality,class,real_or_synth,x,y");
    while (std::getline(csv, line)) {
      ++rows;
      nodes += line.rfind("node,", 0) == 0;
    }
    CHECK(rows == 2 * 75);
    CHECK(nodes == 75);
    CHECK(r.node_matches() == 3);
    CHECK(r.text_matches() == 0);
    CHECK(r.nodes[0].cosine_distance < 0.05);
    CHECK_THROWS_AS(export_projection(real, synth, "/proc/zpt_no/x.csv", tc), IoError);
  }

  TEST_CASE("t-SNE keeps well-separated clusters apart") {
    Rng rng(3);
    Matrix x = normal_matrix(60, 5, 0.05, rng);
    for (int i = 0; i < 60; ++i) x(i, i % 2) += 3.0;
    TsneConfig tc;
    tc.perplexity = 10;
    const Matrix y = tsne(x, tc);
    // Nearest neighbour in the embedding shares the cluster.
    int pure = 0;
    for (Eigen::Index i = 0; i < 60; ++i) {
      Eigen::Index best = -1;
      double bd = 1e300;
      for (Eigen::Index j = 0; j < 60; ++j) {
        const double d = (y.row(i) - y.row(j)).norm();
        if (j != i && d < bd) bd = d, best = j;
      }
      pure += best % 2 == i % 2;
    }
    CHECK(pure >= 57);
  }
}
