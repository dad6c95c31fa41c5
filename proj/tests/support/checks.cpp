#include "checks.hpp"

#include "zpt/ad/ops.hpp"
#include "zpt/ad/random.hpp"
#include "zpt/encoders/vocab.hpp"
#include "zpt/pretrain/losses.hpp"
#include "zpt/prompt/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace zpt::testing {

std::vector<TensorError> gradient_check(const Objective& f, const std::vector<ad::Parameter*>& params,
                                        double h) {
  for (ad::Parameter* p : params) p->zero_grad();
  {
    ad::Tape tape;
    tape.backward(f(tape));
  }
  std::vector<TensorError> out;
  for (ad::Parameter* p : params) {
    const ad::Matrix analytic = p->grad;
    ad::Matrix numeric(p->value.rows(), p->value.cols());
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& x = p->value.data()[i];
      const double saved = x;
      x = saved + h;
      double up;
      {
        ad::Tape t;
        up = f(t).scalar();
      }
      x = saved - h;
      double down;
      {
        ad::Tape t;
        down = f(t).scalar();
      }
      x = saved;
      numeric.data()[i] = (up - down) / (2 * h);
    }
    const double denom = std::max({analytic.norm(), numeric.norm(), 1e-10});
    out.push_back({p->name, (analytic - numeric).norm() / denom});
  }
  return out;
}

double max_error(const std::vector<TensorError>& errs) {
  double m = 0.0;
  for (const TensorError& e : errs) m = std::max(m, e.rel_error);
  return m;
}

tag::TextAttributedGraph micro_graph() {
  std::vector<tag::NodeId> ids{0, 1, 2, 3, 4, 5};
  std::vector<std::pair<tag::NodeId, tag::NodeId>> edges{{0, 1}, {1, 2}, {0, 2}, {2, 3}, {3, 4}};
  std::vector<std::string> texts{"theory proof lemma", "proof of theory", "a lemma",
                                 "neural network", "network of layers", "a paper of layers"};
  std::vector<std::string> labels{"theory", "theory", "theory", "neural", "neural", "neural"};
  return {ids, edges, tag::bag_of_words_features(texts, 8), texts, labels};
}

enc::PretrainedModel micro_model(std::uint64_t seed) {
  const tag::TextAttributedGraph g = micro_graph();
  enc::TextEncoderConfig tc;
  tc.layers = 1;
  tc.width = 8;
  tc.heads = 2;
  tc.max_seq_len = 10;
  tc.output_dim = enc::kEmbeddingDim;
  enc::GraphEncoderConfig gc;
  gc.hidden_dim = 6;
  enc::PretrainedModel m = enc::PretrainedModel::create(enc::Vocabulary::build(g.texts()), tc, gc,
                                                        static_cast<int>(g.feature_dim()), seed, std::log(1 / 0.07));
  // Random position table so the check does not sit at the zero init.
  Rng rng(derive_seed(seed, 99));
  for (ad::Parameter* p : m.parameters()) {
    if (p->name.find("position") != std::string::npos) p->value = normal_matrix(p->value.rows(), p->value.cols(), 0.1, rng);
  }
  return m;
}

std::vector<TensorError> check_alignment_gradients(std::uint64_t seed) {
  const tag::TextAttributedGraph g = micro_graph();
  enc::PretrainedModel m = micro_model(seed);
  const auto adjacency = enc::normalized_adjacency(g);
  std::vector<std::vector<int>> seqs;
  for (const std::string& t : g.texts()) seqs.push_back(m.tokenize(t));
  const std::vector<int> rows{0, 1, 2, 3, 4, 5};
  const auto summary = pretrain::summary_operator(g, rows, rows);
  const Objective f = [&](ad::Tape& tape) {
    ad::Var v = m.graph.forward(tape, adjacency, tape.constant(g.features()), true);
    ad::Var t = m.text.forward(tape, seqs, true);
    ad::Var s = ad::sparse_matmul(summary, t);
    return pretrain::alignment_loss(v, t, s, tape.param(m.log_temperature), 0.1).total;
  };
  return gradient_check(f, m.parameters());
}

std::vector<TensorError> check_ubcg_gradients(std::uint64_t seed) {
  ubcg::UbcgConfig c;
  c.input_dim = 5;
  c.cond_dim = 5;
  c.enc_hidden = {7, 6};
  c.dec_hidden = {4};
  c.latent_dim = 3;
  c.seed = seed;
  ubcg::UbcgModel model(c);
  Rng rng(derive_seed(seed, 1));
  const ad::Matrix v = normal_matrix(4, 5, 1.0, rng), t = normal_matrix(4, 5, 1.0, rng);
  const ad::Matrix en = normal_matrix(4, 3, 1.0, rng), et = normal_matrix(4, 3, 1.0, rng);
  const Objective f = [&](ad::Tape& tape) { return ubcg::ubcg_loss(tape, model, v, t, en, et, true).total; };
  return gradient_check(f, model.parameters());
}

std::vector<TensorError> check_tuning_gradients(std::uint64_t seed) {
  const enc::PretrainedModel m = micro_model(seed);
  prompt::ContinuousPrompt p = prompt::init_prompt({"theory", "a paper of neural"}, 3, m, seed);
  p.context *= 10.0;  // away from the near-zero init, where the check is trivially small
  Rng rng(derive_seed(seed, 2));
  const ad::Matrix v = normal_matrix(6, enc::kEmbeddingDim, 1.0, rng);
  const ad::Matrix t = normal_matrix(6, enc::kEmbeddingDim, 1.0, rng);
  const std::vector<int> labels{0, 1, 0, 1, 1, 0};
  ad::Parameter ctx{"prompt.context", p.context};
  const Objective f = [&](ad::Tape& tape) {
    return prompt::tuning_loss(tape, tape.param(ctx), p, m, v, t, labels, 0.5);
  };
  return gradient_check(f, {&ctx});
}

double kl_monte_carlo(const ubcg::LatentGaussian& g, long samples, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  const Eigen::Index d = g.mu.size();
  const Eigen::VectorXd sd = (0.5 * g.logvar.array()).exp();
  double total = 0.0;
  for (long s = 0; s < samples; ++s) {
    double log_ratio = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double e = n01(rng);
      const double z = g.mu(k) + sd(k) * e;
      // log q(z) - log p(z); the 2 pi terms cancel.
      log_ratio += -0.5 * g.logvar(k) - 0.5 * e * e + 0.5 * z * z;
    }
    total += log_ratio;
  }
  return total / static_cast<double>(samples);
}

std::vector<double> reference_hybrid(const std::vector<double>& a, const std::vector<double>& b, double lambda) {
  auto softmax = [](const std::vector<double>& x) {
    double z = 0.0;
    for (double xi : x) z += std::exp(xi);
    std::vector<double> p;
    for (double xi : x) p.push_back(std::exp(xi) / z);
    return p;
  };
  const auto pa = softmax(a), pb = softmax(b);
  std::vector<double> out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(lambda * pa[i] + (1 - lambda) * pb[i]);
  return out;
}

}  // namespace zpt::testing
