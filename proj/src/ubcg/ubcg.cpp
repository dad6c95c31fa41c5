#include "zpt/ubcg/ubcg.hpp"

#include "zpt/ad/adam.hpp"
#include "zpt/ad/random.hpp"
#include "zpt/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace zpt::ubcg {

void UbcgConfig::validate() const {
  if (input_dim < 1) throw ConfigError("ubcg.input_dim must be >= 1");
  if (cond_dim < 1) throw ConfigError("ubcg.cond_dim must be >= 1");
  if (latent_dim < 1) throw ConfigError("ubcg.latent_dim must be >= 1");
  if (enc_hidden.empty()) throw ConfigError("ubcg.enc_hidden must list at least one layer");
  if (dec_hidden.empty()) throw ConfigError("ubcg.dec_hidden must list at least one layer");
  for (int h : enc_hidden) {
    if (h < 1) throw ConfigError("ubcg.enc_hidden sizes must be >= 1");
  }
  for (int h : dec_hidden) {
    if (h < 1) throw ConfigError("ubcg.dec_hidden sizes must be >= 1");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("ubcg.learning_rate must be > 0");
  if (epochs < 1) throw ConfigError("ubcg.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("ubcg.batch_size must be >= 1");
}

UbcgModel::UbcgModel(const UbcgConfig& config) : config_(config) {
  config_.validate();
  Rng rng(derive_seed(config_.seed, 0));
  auto build = [&rng](const std::string& prefix, std::vector<int> sizes) {
    std::vector<Layer> layers;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
      const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
      std::uniform_real_distribution<double> dist(-bound, bound);
      Matrix w(sizes[l], sizes[l + 1]);
      Matrix b(1, sizes[l + 1]);
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
      }
      for (Eigen::Index c = 0; c < b.cols(); ++c) b(0, c) = dist(rng);
      const std::string name = prefix + std::to_string(l) + ".";
      layers.push_back({{name + "weight", std::move(w)}, {name + "bias", std::move(b)}});
    }
    return layers;
  };
  std::vector<int> enc{config_.input_dim + config_.cond_dim};
  enc.insert(enc.end(), config_.enc_hidden.begin(), config_.enc_hidden.end());
  enc.push_back(2 * config_.latent_dim);
  std::vector<int> dec{config_.latent_dim + config_.cond_dim};
  dec.insert(dec.end(), config_.dec_hidden.begin(), config_.dec_hidden.end());
  dec.push_back(config_.input_dim);
  encoder_ = build("ubcg.encoder.", enc);
  decoder_ = build("ubcg.decoder.", dec);
}

std::size_t UbcgModel::parameter_count() const {
  std::size_t n = 0;
  for (const ad::Parameter* p : parameters()) n += static_cast<std::size_t>(p->size());
  return n;
}

ad::Var UbcgModel::mlp(ad::Tape& tape, const std::vector<Layer>& layers, ad::Var x, bool trainable) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    ad::Var w = trainable ? tape.param(const_cast<ad::Parameter&>(layer.weight))
                          : tape.constant(layer.weight.value);
    ad::Var b = trainable ? tape.param(const_cast<ad::Parameter&>(layer.bias))
                          : tape.constant(layer.bias.value);
    x = ad::linear(x, w, b);
    if (l + 1 < layers.size()) x = ad::relu(x);
  }
  return x;
}

UbcgModel::Posterior UbcgModel::encode(ad::Tape& tape, ad::Var x, ad::Var c, bool trainable) const {
  if (encoder_.empty()) throw StateError("ubcg: model not constructed");
  if (x.cols() != config_.input_dim || c.cols() != config_.cond_dim || x.rows() != c.rows()) {
    throw ContractError("ubcg encode: expected n x " + std::to_string(config_.input_dim) +
                        " input and n x " + std::to_string(config_.cond_dim) + " condition");
  }
  ad::Var out = mlp(tape, encoder_, ad::concat_cols({x, c}), trainable);
  return {ad::slice_cols(out, 0, config_.latent_dim),
          ad::slice_cols(out, config_.latent_dim, config_.latent_dim)};
}

ad::Var UbcgModel::decode(ad::Tape& tape, ad::Var z, ad::Var c, bool trainable) const {
  if (decoder_.empty()) throw StateError("ubcg: model not constructed");
  if (z.cols() != config_.latent_dim || c.cols() != config_.cond_dim || z.rows() != c.rows()) {
    throw ContractError("ubcg decode: expected n x " + std::to_string(config_.latent_dim) +
                        " latent and n x " + std::to_string(config_.cond_dim) + " condition");
  }
  return mlp(tape, decoder_, ad::concat_cols({z, c}), trainable);
}

std::vector<ad::Parameter*> UbcgModel::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto* layers : {&encoder_, &decoder_}) {
    for (Layer& l : *layers) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
  }
  return out;
}

std::vector<const ad::Parameter*> UbcgModel::parameters() const {
  auto mut = const_cast<UbcgModel*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

LatentGaussian cvae_encode(const Vector& x, const Vector& c, const UbcgModel& model) {
  ad::Tape tape;
  auto post = model.encode(tape, tape.constant(x.transpose()), tape.constant(c.transpose()), false);
  return {post.mu.value().row(0).transpose(), post.logvar.value().row(0).transpose()};
}

Vector reparameterize(const LatentGaussian& g, const Vector& eps) {
  if (eps.size() != g.mu.size() || g.logvar.size() != g.mu.size()) {
    throw ContractError("reparameterize: dimension mismatch");
  }
  return g.mu + ((0.5 * g.logvar.array()).exp() * eps.array()).matrix();
}

Vector cvae_decode(const Vector& z, const Vector& c, const UbcgModel& model) {
  ad::Tape tape;
  return model.decode(tape, tape.constant(z.transpose()), tape.constant(c.transpose()), false)
      .value()
      .row(0)
      .transpose();
}

double kl_standard_normal(const LatentGaussian& g) {
  if (g.logvar.size() != g.mu.size()) throw ContractError("kl_standard_normal: dimension mismatch");
  return 0.5 * (g.mu.array().square() + g.logvar.array().exp() - 1.0 - g.logvar.array()).sum();
}

namespace {

struct DirectionLoss {
  ad::Var reconstruction;  // batch mean of squared error
  ad::Var kl;              // batch mean
};

// Reconstruct `input` conditioned on `condition`.
DirectionLoss direction_loss(ad::Tape& tape, const UbcgModel& model, ad::Var input,
                             ad::Var condition, const Matrix& eps, bool trainable) {
  const double n = static_cast<double>(input.rows());
  if (eps.rows() != input.rows() || eps.cols() != model.config().latent_dim) {
    throw ContractError("ubcg_loss: eps must be n x latent_dim");
  }
  auto post = model.encode(tape, input, condition, trainable);
  ad::Var stddev = ad::exp(ad::scale(post.logvar, 0.5));
  ad::Var z = ad::add(post.mu, ad::mul(stddev, tape.constant(eps)));
  ad::Var recon = model.decode(tape, z, condition, trainable);
  ad::Var sq = ad::scale(ad::sum(ad::square(ad::sub(input, recon))), 1.0 / n);
  // 1/2 sum(mu^2 + exp(logvar) - 1 - logvar), averaged over rows.
  ad::Var kl_sum = ad::sub(ad::add(ad::sum(ad::square(post.mu)), ad::sum(ad::exp(post.logvar))),
                           ad::sum(post.logvar));
  Matrix offset(1, 1);
  offset(0, 0) = -static_cast<double>(post.mu.value().size());
  ad::Var kl = ad::scale(ad::add(kl_sum, tape.constant(offset)), 0.5 / n);
  return {sq, kl};
}

}  // namespace

UbcgLoss ubcg_loss(ad::Tape& tape, const UbcgModel& model, const Matrix& nodes, const Matrix& texts,
                   const Matrix& eps_node, const Matrix& eps_text, bool trainable,
                   bool include_text) {
  if (nodes.rows() != texts.rows() || nodes.rows() == 0) {
    throw ContractError("ubcg_loss: nodes and texts must be non-empty and row-aligned");
  }
  ad::Var v = tape.constant(nodes);
  ad::Var t = tape.constant(texts);
  UbcgLoss out;
  DirectionLoss node = direction_loss(tape, model, v, t, eps_node, trainable);
  out.terms.node_reconstruction = node.reconstruction.scalar();
  out.terms.node_kl = node.kl.scalar();
  out.total = ad::add(node.reconstruction, node.kl);
  if (include_text) {
    DirectionLoss text = direction_loss(tape, model, t, v, eps_text, trainable);
    out.terms.text_reconstruction = text.reconstruction.scalar();
    out.terms.text_kl = text.kl.scalar();
    out.total = ad::add(out.total, ad::add(text.reconstruction, text.kl));
  }
  out.terms.total = out.total.scalar();
  return out;
}

UbcgLossTerms ubcg_loss(const Vector& v, const Vector& t, const UbcgModel& model,
                        const Vector& eps_node, const Vector& eps_text) {
  ad::Tape tape;
  return ubcg_loss(tape, model, v.transpose(), t.transpose(), eps_node.transpose(),
                   eps_text.transpose(), false)
      .terms;
}

UbcgTrainResult train_ubcg(const Matrix& nodes, const Matrix& texts, const UbcgConfig& config) {
  config.validate();
  if (nodes.rows() != texts.rows() || nodes.rows() == 0) {
    throw ContractError("train_ubcg: nodes and texts must be non-empty and row-aligned");
  }
  if (nodes.cols() != config.input_dim || texts.cols() != config.cond_dim) {
    throw ContractError("train_ubcg: embedding widths do not match the config");
  }
  UbcgTrainResult result{UbcgModel(config), {}};
  UbcgModel& model = result.model;
  ad::Adam optimizer(model.parameters(), {config.learning_rate});
  Rng order_rng(derive_seed(config.seed, 1));
  Rng noise_rng(derive_seed(config.seed, 2));
  const Eigen::Index n = nodes.rows();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double total = 0.0;
    int steps = 0;
    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const Eigen::Index count = std::min<Eigen::Index>(config.batch_size, n - start);
      Matrix v(count, nodes.cols());
      Matrix t(count, texts.cols());
      for (Eigen::Index i = 0; i < count; ++i) {
        v.row(i) = nodes.row(order[static_cast<std::size_t>(start + i)]);
        t.row(i) = texts.row(order[static_cast<std::size_t>(start + i)]);
      }
      const Matrix eps_node = normal_matrix(count, config.latent_dim, 1.0, noise_rng);
      const Matrix eps_text = normal_matrix(count, config.latent_dim, 1.0, noise_rng);
      optimizer.zero_grad();
      ad::Tape tape;
      UbcgLoss loss = ubcg_loss(tape, model, v, t, eps_node, eps_text, true, config.text_direction);
      if (!std::isfinite(loss.terms.total)) {
        throw TrainingError("train_ubcg: non-finite loss at epoch " + std::to_string(epoch) +
                            " step " + std::to_string(steps));
      }
      tape.backward(loss.total);
      optimizer.step();
      total += loss.terms.total;
      ++steps;
    }
    result.epoch_losses.push_back(total / steps);
  }
  model.set_trained(true);
  return result;
}

SyntheticSamples generate_class_samples(const Vector& condition, int count, const UbcgModel& model,
                                        std::uint64_t seed) {
  if (!model.trained()) throw StateError("generate_class_samples: model is not trained");
  if (count < 1) throw ContractError("generate_class_samples: count must be >= 1");
  if (condition.size() != model.config().cond_dim) {
    throw ContractError("generate_class_samples: condition width mismatch");
  }
  Rng rng(seed);
  const Matrix z = normal_matrix(count, model.config().latent_dim, 1.0, rng);
  Matrix cond(count, condition.size());
  cond.rowwise() = condition.transpose();
  ad::Tape tape;
  ad::Var zv = tape.constant(z);
  ad::Var v = model.decode(tape, zv, tape.constant(cond), false);
  ad::Var t = model.decode(tape, zv, v, false);
  return {v.value(), t.value()};
}

void write_samples_jsonl(const std::vector<LabeledSamples>& samples,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  for (const LabeledSamples& s : samples) {
    for (Eigen::Index i = 0; i < s.samples.nodes.rows(); ++i) {
      const auto& v = s.samples.nodes.row(i);
      const auto& t = s.samples.texts.row(i);
      nlohmann::json j{{"class", s.label},
                       {"v", std::vector<double>(v.data(), v.data() + v.size())},
                       {"t", std::vector<double>(t.data(), t.data() + t.size())}};
      out << j.dump() << '\n';
    }
  }
  if (!out) throw IoError(path.string() + ": write failed");
}

}  // namespace zpt::ubcg
