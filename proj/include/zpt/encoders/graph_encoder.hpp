#pragma once

#include "zpt/ad/ops.hpp"
#include "zpt/ad/random.hpp"
#include "zpt/encoders/text_encoder.hpp"
#include "zpt/tag/graph.hpp"

#include <memory>
#include <vector>

namespace zpt::enc {

struct GraphEncoderConfig {
  int layers = 2;
  // Width of every layer but the last; the last emits kEmbeddingDim.
  int hidden_dim = kEmbeddingDim;
  double negative_slope = 0.01;

  void validate() const;
};

// D^{-1/2} (A + I) D^{-1/2} over node rows.
std::shared_ptr<const ad::SparseMatrix> normalized_adjacency(const tag::TextAttributedGraph& graph);

// GCN: H_{l+1} = A_hat H_l W_l + b_l with LeakyReLU between layers.
class GraphEncoder {
 public:
  GraphEncoder() = default;
  GraphEncoder(const GraphEncoderConfig& config, int input_dim, Rng& rng);

  const GraphEncoderConfig& config() const { return config_; }
  int input_dim() const { return weights_.empty() ? 0 : static_cast<int>(weights_.front().value.rows()); }

  ad::Var forward(ad::Tape& tape, const std::shared_ptr<const ad::SparseMatrix>& adjacency,
                  ad::Var features, bool trainable) const;

  // |V| x 128 node embeddings, no gradient tracking.
  ad::Matrix encode(const tag::TextAttributedGraph& graph) const;

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;

 private:
  GraphEncoderConfig config_;
  std::vector<ad::Parameter> weights_;
  std::vector<ad::Parameter> biases_;
};

}  // namespace zpt::enc
