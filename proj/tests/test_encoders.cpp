#include "doctest.h"

#include "checks.hpp"
#include "zpt/ad/random.hpp"
#include "zpt/encoders/graph_encoder.hpp"
#include "zpt/encoders/model.hpp"
#include "zpt/encoders/similarity.hpp"
#include "zpt/encoders/vocab.hpp"
#include "zpt/errors.hpp"
#include "zpt/tag/synthetic.hpp"

#include <cmath>

using namespace zpt;
using namespace zpt::enc;
using ad::Matrix;

namespace {

Matrix leaky(const Matrix& m, double slope) { return m.unaryExpr([slope](double x) { return x > 0 ? x : slope * x; }); }

tag::TextAttributedGraph random_graph(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<tag::NodeId> ids;
  std::vector<std::string> texts;
  for (int i = 0; i < n; ++i) {
    ids.push_back(i);
    texts.push_back("t");
  }
  std::vector<std::pair<tag::NodeId, tag::NodeId>> edges;
  for (int e = 0; e < 2 * n; ++e) edges.emplace_back(rng() % n, rng() % n);
  return {ids, edges, normal_matrix(n, d, 1.0, rng), texts};
}

}  // namespace

TEST_SUITE("encoders") {
  TEST_CASE("vocabulary reserves PAD, UNK, BOS, EOS and maps unknown words to UNK") {
    const Vocabulary v = Vocabulary::build({"graph theory graph", "theory"});
    CHECK(v.size() == 6);
    CHECK(v.token(Vocabulary::kPad) != v.token(Vocabulary::kUnk));
    CHECK(v.id("graph") >= Vocabulary::kReserved);
    CHECK(v.id("never-seen") == Vocabulary::kUnk);
    CHECK(Vocabulary::from_json(v.to_json()) == v);
  }

  TEST_CASE("tokenize: spec examples") {
    const Vocabulary v = Vocabulary::from_words({"graph", "theory"});
    const std::vector<int> a = tokenize("graph theory", v, 5);
    CHECK(a == std::vector<int>{Vocabulary::kBos, v.id("graph"), v.id("theory"), Vocabulary::kEos, Vocabulary::kPad});
    const std::vector<int> e = tokenize("", v, 4);
    CHECK(e == std::vector<int>{Vocabulary::kBos, Vocabulary::kEos, Vocabulary::kPad, Vocabulary::kPad});
    std::string long_text;
    for (int i = 0; i < 100; ++i) long_text += "graph ";
    const std::vector<int> t = tokenize(long_text, v, 8);
    CHECK(t.size() == 8);
    CHECK(t[7] == Vocabulary::kEos);
  }

  TEST_CASE("text encoder: shape, determinism, batch equivariance, length contract") {
    const PretrainedModel m = testing::micro_model(3);
    std::vector<std::vector<int>> seqs;
    for (const char* s : {"theory proof", "a paper of layers", "network", "theory proof", "lemma", "of", "a"}) {
      seqs.push_back(m.tokenize(s));
    }
    const Matrix out = m.encode_text(seqs);
    CHECK(out.rows() == 7);
    CHECK(out.cols() == 128);
    CHECK((out.row(0) - out.row(3)).norm() == 0.0);
    std::vector<std::vector<int>> perm{seqs[4], seqs[0], seqs[6], seqs[1], seqs[5], seqs[2], seqs[3]};
    const Matrix p = m.encode_text(perm);
    const std::vector<int> idx{4, 0, 6, 1, 5, 2, 3};
    for (std::size_t i = 0; i < idx.size(); ++i) {
      CHECK((p.row(static_cast<Eigen::Index>(i)) - out.row(idx[i])).norm() < 1e-12);
    }
    std::vector<std::vector<int>> too_long{std::vector<int>(11, Vocabulary::kUnk)};
    CHECK_THROWS_AS(m.encode_text(too_long), ContractError);
  }

  TEST_CASE("output dimensionality is 128 regardless of hidden sizes") {
    const auto g = random_graph(5, 4, 1);
    for (int hidden : {3, 17, 200}) {
      GraphEncoderConfig gc;
      gc.hidden_dim = hidden;
      TextEncoderConfig tc;
      tc.layers = 1;
      tc.width = hidden % 2 ? hidden + 1 : hidden;
      tc.heads = 2;
      const PretrainedModel m = PretrainedModel::create(Vocabulary::build({"t"}), tc, gc, 4, 0, 0.0);
      CHECK(m.encode_nodes(g).cols() == 128);
      CHECK(m.encode_texts({"t", "u"}).cols() == 128);
    }
  }

  TEST_CASE("GCN matches a dense-matrix oracle on a random 10-node graph") {
    const auto g = random_graph(10, 6, 42);
    GraphEncoderConfig gc;
    gc.hidden_dim = 16;
    Rng rng(7);
    GraphEncoder enc(gc, 6, rng);
    for (ad::Parameter* p : enc.parameters()) p->value = normal_matrix(p->value.rows(), p->value.cols(), 0.5, rng);

    Matrix a = Matrix::Identity(10, 10);
    for (const auto& [u, v] : g.edges()) {
      a(g.index_of(u), g.index_of(v)) = 1;
      a(g.index_of(v), g.index_of(u)) = 1;
    }
    const Eigen::VectorXd dinv = a.rowwise().sum().array().rsqrt();
    const Matrix ahat = dinv.asDiagonal() * a * dinv.asDiagonal();
    const auto ps = enc.parameters();
    Matrix h = ahat * g.features() * ps[0]->value;
    h.rowwise() += ps[1]->value.row(0);
    h = leaky(h, gc.negative_slope);
    Matrix ref = ahat * h * ps[2]->value;
    ref.rowwise() += ps[3]->value.row(0);

    const Matrix out = enc.encode(g);
    CHECK((out - ref).norm() / ref.norm() < 1e-6);
  }

  TEST_CASE("GCN: isolated node is a chain of its own features; isomorphic nodes agree") {
    const tag::TextAttributedGraph one({0}, {}, Matrix::Constant(1, 3, 0.7), {"x"});
    GraphEncoderConfig gc;
    Rng rng(1);
    GraphEncoder enc(gc, 3, rng);
    const auto ps = enc.parameters();
    Matrix h = one.features() * ps[0]->value + ps[1]->value;
    const Matrix ref = leaky(h, gc.negative_slope) * ps[2]->value + ps[3]->value;
    CHECK((enc.encode(one) - ref).norm() < 1e-12);

    // 0 and 2 are mirror images around 1.
    const tag::TextAttributedGraph path({0, 1, 2}, {{0, 1}, {1, 2}}, Matrix::Ones(3, 3), {"a", "b", "c"});
    const Matrix out = enc.encode(path);
    CHECK((out.row(0) - out.row(2)).norm() < 1e-12);
  }

  TEST_CASE("GCN is permutation-equivariant") {
    const auto g = random_graph(8, 5, 3);
    const std::vector<int> perm{3, 7, 0, 5, 1, 6, 2, 4};  // new row i holds old node perm[i]
    std::vector<tag::NodeId> ids;
    std::vector<std::string> texts;
    Matrix x(8, 5);
    for (int i = 0; i < 8; ++i) {
      ids.push_back(100 + perm[static_cast<std::size_t>(i)]);
      texts.push_back("t");
      x.row(i) = g.features().row(perm[static_cast<std::size_t>(i)]);
    }
    std::vector<std::pair<tag::NodeId, tag::NodeId>> edges;
    for (const auto& [u, v] : g.edges()) edges.emplace_back(100 + u, 100 + v);
    const tag::TextAttributedGraph h(ids, edges, x, texts);
    Rng rng(2);
    GraphEncoder enc(GraphEncoderConfig{}, 5, rng);
    const Matrix a = enc.encode(g), b = enc.encode(h);
    for (int i = 0; i < 8; ++i) CHECK((b.row(i) - a.row(perm[static_cast<std::size_t>(i)])).norm() < 1e-10);
  }

  TEST_CASE("cosine similarity and l2 normalisation: spec examples and properties") {
    const Matrix eye = Matrix::Identity(2, 2);
    CHECK((cosine_similarity_matrix(eye, eye) - eye).norm() < 1e-15);
    Matrix a(1, 2), b(1, 2);
    a << 1, 1;
    b << 1, 0;
    CHECK(cosine_similarity_matrix(a, b)(0, 0) == doctest::Approx(0.70710678).epsilon(1e-8));
    Matrix m(1, 2);
    m << 3, 4;
    const Matrix n = l2_normalize(m);
    CHECK(n(0, 0) == doctest::Approx(0.6));
    CHECK(n(0, 1) == doctest::Approx(0.8));

    Rng rng(4);
    const Matrix x = normal_matrix(6, 5, 1.0, rng), y = normal_matrix(4, 5, 1.0, rng);
    const Matrix xn = l2_normalize(x);
    for (Eigen::Index i = 0; i < xn.rows(); ++i) CHECK(std::abs(xn.row(i).norm() - 1.0) < 1e-9);
    CHECK((l2_normalize(xn) - xn).norm() < 1e-12);
    const Matrix s = cosine_similarity_matrix(x, y);
    CHECK((s.transpose() - cosine_similarity_matrix(y, x)).norm() < 1e-9);
    CHECK(s.maxCoeff() <= 1.0);
    CHECK(s.minCoeff() >= -1.0);
    Matrix x5 = x;
    x5.row(2) *= 5.0;
    CHECK((cosine_similarity_matrix(x5, y) - s).norm() < 1e-12);

    Matrix z = Matrix::Zero(1, 2);
    CHECK_THROWS_AS(l2_normalize(z), NumericalDomainError);
    CHECK_THROWS_AS(cosine_similarity_matrix(z, b), NumericalDomainError);
  }

  TEST_CASE("config validation") {
    TextEncoderConfig tc;
    tc.heads = 3;
    CHECK_THROWS_AS(tc.validate(), ConfigError);
    GraphEncoderConfig gc;
    gc.layers = 0;
    CHECK_THROWS_AS(gc.validate(), ConfigError);
  }
}
