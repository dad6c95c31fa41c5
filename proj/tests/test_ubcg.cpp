#include "doctest.h"

#include "checks.hpp"
#include "zpt/ad/random.hpp"
#include "zpt/errors.hpp"
#include "zpt/ubcg/ubcg.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace zpt;
using namespace zpt::ubcg;
using ad::Matrix;
using ad::Vector;

namespace {

// Independent layer-size arithmetic: sum of (fan_in + 1) * fan_out.
std::size_t mlp_params(std::vector<int> widths) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    n += static_cast<std::size_t>(widths[i] + 1) * static_cast<std::size_t>(widths[i + 1]);
  }
  return n;
}

UbcgModel zeroed(UbcgConfig c) {
  UbcgModel m(c);
  for (ad::Parameter* p : m.parameters()) p->value.setZero();
  return m;
}

Vector randv(int n, Rng& rng) { return normal_matrix(n, 1, 1.0, rng).col(0); }

}  // namespace

TEST_SUITE("ubcg") {
  TEST_CASE("parameter count at the reference configuration is 68,560") {
    const UbcgModel m(UbcgConfig{});
    CHECK(m.parameter_count() == 68560);
    CHECK(mlp_params({256, 128, 128, 16}) + mlp_params({136, 64, 128}) == 68560);
    CHECK(UbcgModel(UbcgConfig{}).parameter_count() == m.parameter_count());
  }

  TEST_CASE("parameter count at latent 16 follows layer arithmetic") {
    UbcgConfig c;
    c.latent_dim = 16;
    // 68,560 + (128 * 16 + 16) + 64 * 8
    CHECK(UbcgModel(c).parameter_count() == 71136);
    CHECK(mlp_params({256, 128, 128, 32}) + mlp_params({144, 64, 128}) == 71136);
  }

  TEST_CASE("degenerate configurations are rejected") {
    UbcgConfig c;
    c.enc_hidden.clear();
    CHECK_THROWS_AS(UbcgModel{c}, ConfigError);
    c = {};
    c.latent_dim = 0;
    CHECK_THROWS_AS(UbcgModel{c}, ConfigError);
    c = {};
    c.dec_hidden = {0};
    CHECK_THROWS_AS(UbcgModel{c}, ConfigError);
  }

  TEST_CASE("encode and decode: determinism, shapes, zero networks, dimension contract") {
    Rng rng(1);
    const UbcgModel m(UbcgConfig{});
    const Vector x = randv(128, rng), c = randv(128, rng);
    const LatentGaussian a = cvae_encode(x, c, m), b = cvae_encode(x, c, m);
    CHECK(a.mu == b.mu);
    CHECK(a.logvar == b.logvar);
    CHECK(a.mu.size() == 8);
    CHECK(a.logvar.size() == 8);
    const Vector z = randv(8, rng);
    CHECK(cvae_decode(z, c, m) == cvae_decode(z, c, m));
    CHECK(cvae_decode(z, c, m).size() == 128);

    const UbcgModel zero = zeroed(UbcgConfig{});
    const LatentGaussian g = cvae_encode(x, c, zero);
    CHECK(g.mu.isZero(0.0));
    CHECK(g.logvar.isZero(0.0));
    CHECK(cvae_decode(z, c, zero).isZero(0.0));

    CHECK_THROWS_AS(cvae_encode(randv(5, rng), c, m), ContractError);
    CHECK_THROWS_AS(cvae_decode(randv(3, rng), c, m), ContractError);
  }

  TEST_CASE("reparameterize: closed cases and Monte-Carlo mean") {
    LatentGaussian g{Vector::Constant(3, 0.5), Vector::Zero(3)};
    CHECK(reparameterize(g, Vector::Zero(3)) == g.mu);
    Vector e1 = Vector::Zero(3);
    e1(0) = 1;
    CHECK(reparameterize(g, e1) == g.mu + e1);

    g.mu << 1.0, -2.0, 0.3;
    g.logvar << 0.0, 1.0, -1.0;
    const int n = 100000;
    Rng rng(9);
    std::normal_distribution<double> d(0, 1);
    Vector sum = Vector::Zero(3);
    for (int i = 0; i < n; ++i) {
      Vector eps(3);
      for (int k = 0; k < 3; ++k) eps(k) = d(rng);
      sum += reparameterize(g, eps);
    }
    const Vector mean = sum / n;
    for (int k = 0; k < 3; ++k) {
      const double sigma = std::exp(0.5 * g.logvar(k));
      CHECK(std::abs(mean(k) - g.mu(k)) < 3 * sigma / std::sqrt(static_cast<double>(n)));
    }
  }

  TEST_CASE("KL divergence: closed cases, positivity and Monte-Carlo agreement") {
    CHECK(kl_standard_normal({Vector::Zero(4), Vector::Zero(4)}) == 0.0);
    CHECK(kl_standard_normal({Vector::Ones(1), Vector::Zero(1)}) == doctest::Approx(0.5));
    const LatentGaussian e{Vector::Zero(1), Vector::Ones(1)};
    CHECK(kl_standard_normal(e) == doctest::Approx(0.3591409).epsilon(1e-6));
    const double mc = testing::kl_monte_carlo(e, 1000000, 3);
    CHECK(std::abs(mc - 0.3591409) / 0.3591409 < 0.01);
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
      const LatentGaussian g{randv(4, rng) * 0.1, randv(4, rng) * 0.1};
      CHECK(kl_standard_normal(g) > 0.0);
    }
  }

  TEST_CASE("loss: nonnegative KL terms, role symmetry, perfect reconstruction is zero") {
    Rng rng(4);
    const UbcgModel m(UbcgConfig{});
    const Vector v = randv(128, rng), t = randv(128, rng), ev = randv(8, rng), et = randv(8, rng);
    const UbcgLossTerms a = ubcg_loss(v, t, m, ev, et);
    CHECK(a.node_kl >= 0.0);
    CHECK(a.text_kl >= 0.0);
    CHECK(a.total == doctest::Approx(a.node() + a.text()));
    const UbcgLossTerms b = ubcg_loss(t, v, m, et, ev);
    CHECK(b.node_reconstruction == a.text_reconstruction);
    CHECK(b.node_kl == a.text_kl);
    CHECK(b.text_reconstruction == a.node_reconstruction);

    // Zero networks give mu = 0, logvar = 0 and a zero reconstruction, so
    // zero embeddings are reconstructed perfectly.
    const UbcgModel zero = zeroed(UbcgConfig{});
    const UbcgLossTerms z = ubcg_loss(Vector::Zero(128), Vector::Zero(128), zero, ev, et);
    CHECK(z.total == 0.0);
  }

  TEST_CASE("node-only loss has half the component terms") {
    Rng rng(5);
    const UbcgModel m(UbcgConfig{});
    const Matrix v = normal_matrix(3, 128, 1, rng), t = normal_matrix(3, 128, 1, rng);
    const Matrix en = normal_matrix(3, 8, 1, rng), et = normal_matrix(3, 8, 1, rng);
    ad::Tape t1, t2;
    const UbcgLoss both = ubcg_loss(t1, m, v, t, en, et, false, true);
    const UbcgLoss node = ubcg_loss(t2, m, v, t, en, et, false, false);
    CHECK(node.terms.text() == 0.0);
    CHECK(node.terms.total == doctest::Approx(both.terms.node()));
  }

  TEST_CASE("loss gradients match finite differences for every tensor") {
    const auto errs = testing::check_ubcg_gradients(7);
    CHECK(errs.size() == 10);
    for (const auto& e : errs) {
      CAPTURE(e.name);
      CHECK(e.rel_error <= 1e-4);
    }
  }

  TEST_CASE("2-D toy: the decoder learns the conditional mean A t") {
    Matrix a(2, 2);
    a << 0.8, -0.5, 0.3, 1.2;
    Rng rng(11);
    const int n = 2000;
    const Matrix t = normal_matrix(n, 2, 1.0, rng);
    const Matrix v = t * a.transpose() + normal_matrix(n, 2, 0.1, rng);
    UbcgConfig c;
    c.input_dim = 2;
    c.cond_dim = 2;
    c.latent_dim = 2;
    c.epochs = 60;
    c.seed = 3;
    // One direction: a shared decoder cannot serve v|t and t|v at once when
    // both live in the same 2-D space with different conditional means.
    c.text_direction = false;
    const UbcgTrainResult r = train_ubcg(v, t, c);
    CHECK(r.epoch_losses.back() < r.epoch_losses.front());

    const Matrix test_t = normal_matrix(50, 2, 1.0, rng);
    double err = 0.0;
    for (Eigen::Index i = 0; i < test_t.rows(); ++i) {
      const SyntheticSamples s = generate_class_samples(test_t.row(i).transpose(), 400, r.model, 100 + i);
      const Vector mean = s.nodes.colwise().mean().transpose();
      err += (mean - a * test_t.row(i).transpose()).norm();
    }
    err /= static_cast<double>(test_t.rows());
    CHECK(err < 0.15);
  }

  TEST_CASE("training and generation: determinism, shapes, state contract, latent mean") {
    Rng rng(6);
    const Matrix v = normal_matrix(100, 128, 1, rng), t = normal_matrix(100, 128, 1, rng);
    UbcgConfig c;
    c.epochs = 3;
    const UbcgTrainResult a = train_ubcg(v, t, c), b = train_ubcg(v, t, c);
    for (std::size_t i = 0; i < a.model.parameters().size(); ++i) {
      CHECK(a.model.parameters()[i]->value == b.model.parameters()[i]->value);
    }
    const Vector cond = randv(128, rng);
    const SyntheticSamples s = generate_class_samples(cond, 200, a.model, 1);
    CHECK(s.nodes.rows() == 200);
    CHECK(s.nodes.cols() == 128);
    CHECK(s.texts.cols() == 128);
    CHECK(generate_class_samples(cond, 200, a.model, 1).texts == s.texts);
    CHECK_THROWS_AS(generate_class_samples(cond, 5, UbcgModel(c), 1), StateError);
    CHECK_THROWS_AS(generate_class_samples(cond, 0, a.model, 1), ContractError);

    // t is D(z, v) with the generator's own z: rebuild it from the same stream.
    Rng zr(1);
    const Matrix z = normal_matrix(200, 8, 1.0, zr);
    const Vector first_v = cvae_decode(z.row(0).transpose(), cond, a.model);
    CHECK((first_v - s.nodes.row(0).transpose()).norm() < 1e-12);
    CHECK((cvae_decode(z.row(0).transpose(), first_v, a.model) - s.texts.row(0).transpose()).norm() < 1e-12);

    Rng big(8);
    const int count = 10000;
    const Matrix zz = normal_matrix(count, 8, 1.0, big);
    CHECK(zz.colwise().mean().cwiseAbs().maxCoeff() < 4.0 / std::sqrt(static_cast<double>(count)));
  }

  TEST_CASE("samples export as JSONL") {
    SyntheticSamples s{Matrix::Ones(2, 3), Matrix::Zero(2, 3)};
    const auto path = std::filesystem::temp_directory_path() / "zpt_samples.jsonl";
    write_samples_jsonl({{"theory", s}}, path);
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
      const auto j = nlohmann::json::parse(line);
      CHECK(j["class"] == "theory");
      CHECK(j["v"].size() == 3);
      CHECK(j["t"].size() == 3);
      ++lines;
    }
    CHECK(lines == 2);
  }
}
