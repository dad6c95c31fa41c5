#pragma once

// Conditional VAE with one shared encoder/decoder pair trained in both
// conditional directions (node | text and text | node).

#include "zpt/ad/ops.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace zpt::ubcg {

using ad::Matrix;
using ad::Vector;

struct UbcgConfig {
  int input_dim = 128;
  int cond_dim = 128;
  std::vector<int> enc_hidden{128, 128};
  std::vector<int> dec_hidden{64};
  int latent_dim = 8;
  double learning_rate = 1e-3;
  int epochs = 100;
  int batch_size = 64;
  std::uint64_t seed = 0;
  // false trains the node | text direction only.
  bool text_direction = true;

  void validate() const;
};

struct LatentGaussian {
  Vector mu;
  Vector logvar;
};

class UbcgModel {
 public:
  UbcgModel() = default;
  // Randomly initialised from config.seed; not yet trained.
  explicit UbcgModel(const UbcgConfig& config);

  const UbcgConfig& config() const { return config_; }
  bool trained() const { return trained_; }
  void set_trained(bool trained) { trained_ = trained; }

  // Scalars across encoder and decoder, biases included.
  std::size_t parameter_count() const;

  struct Posterior {
    ad::Var mu;
    ad::Var logvar;
  };
  // Rows of x and c are paired; x is n x input_dim, c is n x cond_dim.
  Posterior encode(ad::Tape& tape, ad::Var x, ad::Var c, bool trainable) const;
  // z is n x latent_dim; returns n x input_dim.
  ad::Var decode(ad::Tape& tape, ad::Var z, ad::Var c, bool trainable) const;

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;

 private:
  struct Layer {
    ad::Parameter weight;
    ad::Parameter bias;
  };
  static ad::Var mlp(ad::Tape& tape, const std::vector<Layer>& layers, ad::Var x, bool trainable);

  UbcgConfig config_;
  std::vector<Layer> encoder_;
  std::vector<Layer> decoder_;
  bool trained_ = false;
};

LatentGaussian cvae_encode(const Vector& x, const Vector& c, const UbcgModel& model);
// z = mu + exp(logvar / 2) * eps
Vector reparameterize(const LatentGaussian& g, const Vector& eps);
Vector cvae_decode(const Vector& z, const Vector& c, const UbcgModel& model);
// KL(N(mu, diag exp(logvar)) || N(0, I)) in closed form.
double kl_standard_normal(const LatentGaussian& g);

struct UbcgLossTerms {
  double node_reconstruction = 0.0;
  double node_kl = 0.0;
  double text_reconstruction = 0.0;
  double text_kl = 0.0;
  double node() const { return node_reconstruction + node_kl; }
  double text() const { return text_reconstruction + text_kl; }
  double total = 0.0;
};

struct UbcgLoss {
  ad::Var total;
  UbcgLossTerms terms;
};

// Batch mean of L_node + L_text over row-aligned node embeddings V and text
// embeddings T. eps_node / eps_text are n x latent_dim standard-normal draws.
// With include_text false only the node direction contributes.
UbcgLoss ubcg_loss(ad::Tape& tape, const UbcgModel& model, const Matrix& nodes,
                   const Matrix& texts, const Matrix& eps_node, const Matrix& eps_text,
                   bool trainable, bool include_text = true);

// Single pair.
UbcgLossTerms ubcg_loss(const Vector& v, const Vector& t, const UbcgModel& model,
                        const Vector& eps_node, const Vector& eps_text);

struct UbcgTrainResult {
  UbcgModel model;
  std::vector<double> epoch_losses;
};

// Pairs are the rows of nodes / texts (raw encoder outputs).
UbcgTrainResult train_ubcg(const Matrix& nodes, const Matrix& texts, const UbcgConfig& config);

struct SyntheticSamples {
  Matrix nodes;  // count x input_dim
  Matrix texts;  // count x input_dim
};

// z ~ N(0, I); v = D(z, condition); t = D(z, v) with the same z.
SyntheticSamples generate_class_samples(const Vector& condition, int count, const UbcgModel& model,
                                        std::uint64_t seed);

struct LabeledSamples {
  std::string label;
  SyntheticSamples samples;
};

// One JSON object per line: {"class", "v", "t"}.
void write_samples_jsonl(const std::vector<LabeledSamples>& samples,
                         const std::filesystem::path& path);

}  // namespace zpt::ubcg
