#include "zpt/encoders/text_encoder.hpp"

#include "zpt/encoders/vocab.hpp"
#include "zpt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace zpt::enc {

void TextEncoderConfig::validate() const {
  if (layers < 1) throw ConfigError("text_encoder.layers must be >= 1");
  if (width < 1) throw ConfigError("text_encoder.width must be >= 1");
  if (heads < 1 || width % heads != 0) {
    throw ConfigError("text_encoder.width must be divisible by text_encoder.heads");
  }
  if (max_seq_len < 3) throw ConfigError("text_encoder.max_seq_len must be >= 3");
  if (output_dim != kEmbeddingDim) {
    throw ConfigError("text_encoder.output_dim must equal the shared embedding dim " +
                      std::to_string(kEmbeddingDim));
  }
  if (ffn_multiplier < 1) throw ConfigError("text_encoder.ffn_multiplier must be >= 1");
}

ad::Var bind(ad::Tape& tape, const ad::Parameter& p, bool trainable) {
  // Only trainable binding writes to the parameter (its grad, during backward).
  return trainable ? tape.param(const_cast<ad::Parameter&>(p)) : tape.constant(p.value);
}

namespace {

ad::Parameter init_param(std::string name, Eigen::Index rows, Eigen::Index cols, double stddev,
                         Rng& rng) {
  return {std::move(name), normal_matrix(rows, cols, stddev, rng)};
}

ad::Parameter const_param(std::string name, Eigen::Index rows, Eigen::Index cols, double value) {
  return {std::move(name), ad::Matrix::Constant(rows, cols, value)};
}

}  // namespace

TextEncoder::TextEncoder(const TextEncoderConfig& config, int vocab_size, Rng& rng)
    : config_(config) {
  config_.validate();
  if (vocab_size < Vocabulary::kReserved) throw ConfigError("text encoder: vocabulary too small");
  const int d = config_.width;
  const int ff = config_.width * config_.ffn_multiplier;
  token_embedding_ = init_param("text.token_embedding", vocab_size, d, 0.02, rng);
  position_embedding_ = init_param("text.position_embedding", config_.max_seq_len, d, 0.0, rng);
  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = "text.layers." + std::to_string(l) + ".";
    TransformerLayer layer;
    layer.ln1_gain = const_param(p + "ln1_gain", 1, d, 1.0);
    layer.ln1_bias = const_param(p + "ln1_bias", 1, d, 0.0);
    layer.qkv_weight = init_param(p + "qkv_weight", d, 3 * d, 0.02, rng);
    layer.qkv_bias = const_param(p + "qkv_bias", 1, 3 * d, 0.0);
    layer.out_weight = init_param(p + "out_weight", d, d, 0.02, rng);
    layer.out_bias = const_param(p + "out_bias", 1, d, 0.0);
    layer.ln2_gain = const_param(p + "ln2_gain", 1, d, 1.0);
    layer.ln2_bias = const_param(p + "ln2_bias", 1, d, 0.0);
    layer.ff1_weight = init_param(p + "ff1_weight", d, ff, 0.02, rng);
    layer.ff1_bias = const_param(p + "ff1_bias", 1, ff, 0.0);
    layer.ff2_weight = init_param(p + "ff2_weight", ff, d, 0.02, rng);
    layer.ff2_bias = const_param(p + "ff2_bias", 1, d, 0.0);
    layers_.push_back(std::move(layer));
  }
  final_gain_ = const_param("text.final_gain", 1, d, 1.0);
  final_bias_ = const_param("text.final_bias", 1, d, 0.0);
  projection_ = init_param("text.projection", d, config_.output_dim, 1.0 / std::sqrt(d), rng);
}

ad::Var TextEncoder::embed_tokens(ad::Tape& tape, std::span<const int> ids, bool trainable) const {
  for (int id : ids) {
    if (id < 0 || id >= vocab_size()) throw ContractError("text encoder: token id out of range");
  }
  return ad::gather_rows(bind(tape, token_embedding_, trainable), ids);
}

ad::Var TextEncoder::forward(ad::Tape& tape, const std::vector<std::vector<int>>& sequences,
                             bool trainable) const {
  if (sequences.empty()) throw ContractError("text encoder: empty batch");
  const std::size_t padded = sequences.front().size();
  std::vector<int> lengths;
  lengths.reserve(sequences.size());
  for (const auto& s : sequences) {
    if (s.size() != padded) throw ContractError("text encoder: sequences must share one length");
    if (s.size() > static_cast<std::size_t>(config_.max_seq_len)) {
      throw ContractError("text encoder: sequence length " + std::to_string(s.size()) +
                          " exceeds max_seq_len " + std::to_string(config_.max_seq_len));
    }
    int len = 0;
    while (len < static_cast<int>(s.size()) && s[len] != Vocabulary::kPad) ++len;
    if (len < 1) throw ContractError("text encoder: sequence has no tokens");
    lengths.push_back(len);
  }
  // Trailing all-PAD columns are masked for every sequence, so dropping
  // them leaves the pooled outputs unchanged.
  const int seq_len = *std::max_element(lengths.begin(), lengths.end());
  std::vector<int> flat;
  flat.reserve(sequences.size() * static_cast<std::size_t>(seq_len));
  for (const auto& s : sequences) flat.insert(flat.end(), s.begin(), s.begin() + seq_len);
  ad::Var x = embed_tokens(tape, flat, trainable);
  return forward_embedded(tape, x, lengths, seq_len, trainable);
}

ad::Var TextEncoder::forward_embedded(ad::Tape& tape, ad::Var embedded,
                                      std::span<const int> lengths, int seq_len,
                                      bool trainable) const {
  const int batch = static_cast<int>(lengths.size());
  const int d = config_.width;
  if (seq_len < 1 || seq_len > config_.max_seq_len) {
    throw ContractError("text encoder: sequence length " + std::to_string(seq_len) +
                        " exceeds max_seq_len " + std::to_string(config_.max_seq_len));
  }
  if (embedded.rows() != static_cast<Eigen::Index>(batch) * seq_len || embedded.cols() != d) {
    throw ContractError("text encoder: embedded input shape");
  }

  std::vector<int> positions(static_cast<std::size_t>(batch) * seq_len);
  std::vector<int> pool_rows(static_cast<std::size_t>(batch));
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < seq_len; ++i) positions[static_cast<std::size_t>(b) * seq_len + i] = i;
    pool_rows[b] = b * seq_len + lengths[b] - 1;
  }
  ad::Var x = ad::add(embedded, ad::gather_rows(bind(tape, position_embedding_, trainable), positions));

  for (const TransformerLayer& layer : layers_) {
    ad::Var h = ad::layer_norm(x, bind(tape, layer.ln1_gain, trainable),
                               bind(tape, layer.ln1_bias, trainable));
    ad::Var qkv = ad::linear(h, bind(tape, layer.qkv_weight, trainable),
                             bind(tape, layer.qkv_bias, trainable));
    ad::Var att = ad::attention(qkv, batch, seq_len, config_.heads, lengths);
    x = ad::add(x, ad::linear(att, bind(tape, layer.out_weight, trainable),
                              bind(tape, layer.out_bias, trainable)));
    ad::Var h2 = ad::layer_norm(x, bind(tape, layer.ln2_gain, trainable),
                                bind(tape, layer.ln2_bias, trainable));
    ad::Var f = ad::relu(ad::linear(h2, bind(tape, layer.ff1_weight, trainable),
                                    bind(tape, layer.ff1_bias, trainable)));
    f = ad::linear(f, bind(tape, layer.ff2_weight, trainable), bind(tape, layer.ff2_bias, trainable));
    x = ad::add(x, f);
  }
  ad::Var pooled = ad::gather_rows(x, pool_rows);
  pooled = ad::layer_norm(pooled, bind(tape, final_gain_, trainable), bind(tape, final_bias_, trainable));
  return ad::matmul(pooled, bind(tape, projection_, trainable));
}

ad::Matrix TextEncoder::encode(const std::vector<std::vector<int>>& sequences) const {
  ad::Tape tape;
  return forward(tape, sequences, false).value();
}

std::vector<ad::Parameter*> TextEncoder::parameters() {
  std::vector<ad::Parameter*> out{&token_embedding_, &position_embedding_};
  for (TransformerLayer& l : layers_) {
    for (ad::Parameter* p : {&l.ln1_gain, &l.ln1_bias, &l.qkv_weight, &l.qkv_bias, &l.out_weight,
                             &l.out_bias, &l.ln2_gain, &l.ln2_bias, &l.ff1_weight, &l.ff1_bias,
                             &l.ff2_weight, &l.ff2_bias}) {
      out.push_back(p);
    }
  }
  out.push_back(&final_gain_);
  out.push_back(&final_bias_);
  out.push_back(&projection_);
  return out;
}

std::vector<const ad::Parameter*> TextEncoder::parameters() const {
  auto mut = const_cast<TextEncoder*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

}  // namespace zpt::enc
