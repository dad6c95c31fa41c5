#pragma once

#include "zpt/ad/ops.hpp"
#include "zpt/ad/random.hpp"

#include <span>
#include <vector>

namespace zpt::enc {

inline constexpr int kEmbeddingDim = 128;

struct TextEncoderConfig {
  int layers = 2;
  int width = 64;
  int heads = 4;
  int max_seq_len = 32;
  int output_dim = kEmbeddingDim;
  // Hidden width of each feed-forward block, as a multiple of `width`.
  int ffn_multiplier = 2;

  void validate() const;
};

struct TransformerLayer {
  ad::Parameter ln1_gain, ln1_bias;
  ad::Parameter qkv_weight, qkv_bias;
  ad::Parameter out_weight, out_bias;
  ad::Parameter ln2_gain, ln2_bias;
  ad::Parameter ff1_weight, ff1_bias;
  ad::Parameter ff2_weight, ff2_bias;
};

// Bidirectional pre-LN Transformer. A sequence is pooled at its EOS
// position (the last non-PAD token) and projected to output_dim.
class TextEncoder {
 public:
  TextEncoder() = default;
  TextEncoder(const TextEncoderConfig& config, int vocab_size, Rng& rng);

  const TextEncoderConfig& config() const { return config_; }
  int vocab_size() const { return static_cast<int>(token_embedding_.value.rows()); }
  // vocab_size x width lookup table.
  const ad::Matrix& token_table() const { return token_embedding_.value; }

  // Token-table rows for `ids` as a tape variable.
  ad::Var embed_tokens(ad::Tape& tape, std::span<const int> ids, bool trainable) const;

  // Encodes equal-length token sequences (PAD-right-padded). Throws
  // ContractError when a sequence exceeds max_seq_len or lengths differ.
  ad::Var forward(ad::Tape& tape, const std::vector<std::vector<int>>& sequences,
                  bool trainable) const;

  // Encodes pre-embedded sequences: `embedded` packs `lengths.size()`
  // sequences of `seq_len` rows each (positions not yet added). Sequence b
  // occupies lengths[b] real rows followed by padding rows.
  ad::Var forward_embedded(ad::Tape& tape, ad::Var embedded, std::span<const int> lengths,
                           int seq_len, bool trainable) const;

  // Inference without gradient tracking.
  ad::Matrix encode(const std::vector<std::vector<int>>& sequences) const;

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;

 private:
  TextEncoderConfig config_;
  ad::Parameter token_embedding_;
  ad::Parameter position_embedding_;
  std::vector<TransformerLayer> layers_;
  ad::Parameter final_gain_, final_bias_;
  ad::Parameter projection_;
};

// Binds a parameter to the tape: trainable leaves accumulate into
// parameter.grad, frozen ones are plain constants.
ad::Var bind(ad::Tape& tape, const ad::Parameter& p, bool trainable);

}  // namespace zpt::enc
