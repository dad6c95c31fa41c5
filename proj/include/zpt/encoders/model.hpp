#pragma once

#include "zpt/encoders/graph_encoder.hpp"
#include "zpt/encoders/text_encoder.hpp"
#include "zpt/encoders/vocab.hpp"
#include "zpt/tag/graph.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace zpt::enc {

// Jointly trained graph encoder, text encoder and log-temperature.
struct PretrainedModel {
  Vocabulary vocab;
  TextEncoderConfig text_config;
  GraphEncoderConfig graph_config;
  TextEncoder text;
  GraphEncoder graph;
  ad::Parameter log_temperature{"log_temperature", ad::Matrix::Zero(1, 1)};

  static PretrainedModel create(Vocabulary vocab, const TextEncoderConfig& text_config,
                                const GraphEncoderConfig& graph_config, int feature_dim,
                                std::uint64_t seed, double log_temperature_init);

  // Tokenises with the model's vocabulary and max_seq_len.
  std::vector<int> tokenize(const std::string& text) const;

  // batch x 128. Sequences must already be tokenised to one length.
  ad::Matrix encode_text(const std::vector<std::vector<int>>& sequences) const;
  // Convenience: tokenise then encode, in chunks of `chunk` texts.
  ad::Matrix encode_texts(const std::vector<std::string>& texts, std::size_t chunk = 256) const;
  // |V| x 128.
  ad::Matrix encode_nodes(const tag::TextAttributedGraph& graph) const;

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
};

}  // namespace zpt::enc
