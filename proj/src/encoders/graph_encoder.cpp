#include "zpt/encoders/graph_encoder.hpp"

#include "zpt/errors.hpp"

#include <cmath>
#include <string>

namespace zpt::enc {

void GraphEncoderConfig::validate() const {
  if (layers < 1) throw ConfigError("graph_encoder.layers must be >= 1");
  if (hidden_dim < 1) throw ConfigError("graph_encoder.hidden_dim must be >= 1");
  if (!(negative_slope >= 0.0)) throw ConfigError("graph_encoder.negative_slope must be >= 0");
}

std::shared_ptr<const ad::SparseMatrix> normalized_adjacency(const tag::TextAttributedGraph& graph) {
  const auto n = static_cast<Eigen::Index>(graph.num_nodes());
  const auto& adj = graph.adjacency();
  Eigen::VectorXd inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    inv_sqrt(i) = 1.0 / std::sqrt(static_cast<double>(adj[i].size()) + 1.0);
  }
  std::vector<Eigen::Triplet<double>> trips;
  for (Eigen::Index i = 0; i < n; ++i) {
    trips.emplace_back(i, i, inv_sqrt(i) * inv_sqrt(i));
    for (int j : adj[i]) trips.emplace_back(i, j, inv_sqrt(i) * inv_sqrt(j));
  }
  auto a = std::make_shared<ad::SparseMatrix>(n, n);
  a->setFromTriplets(trips.begin(), trips.end());
  return a;
}

GraphEncoder::GraphEncoder(const GraphEncoderConfig& config, int input_dim, Rng& rng)
    : config_(config) {
  config_.validate();
  if (input_dim < 1) throw ConfigError("graph encoder: input_dim must be >= 1");
  int in = input_dim;
  for (int l = 0; l < config_.layers; ++l) {
    const int out = l + 1 == config_.layers ? kEmbeddingDim : config_.hidden_dim;
    const double stddev = std::sqrt(2.0 / static_cast<double>(in + out));
    weights_.emplace_back("graph.layers." + std::to_string(l) + ".weight", normal_matrix(in, out, stddev, rng));
    biases_.emplace_back("graph.layers." + std::to_string(l) + ".bias", ad::Matrix::Zero(1, out));
    in = out;
  }
}

ad::Var GraphEncoder::forward(ad::Tape& tape, const std::shared_ptr<const ad::SparseMatrix>& adjacency,
                              ad::Var features, bool trainable) const {
  if (features.cols() != input_dim()) {
    throw ContractError("graph encoder: feature dim " + std::to_string(features.cols()) +
                        " != " + std::to_string(input_dim()));
  }
  ad::Var h = features;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = ad::sparse_matmul(adjacency, ad::matmul(h, bind(tape, weights_[l], trainable)));
    h = ad::add_row(h, bind(tape, biases_[l], trainable));
    if (l + 1 < weights_.size()) h = ad::leaky_relu(h, config_.negative_slope);
  }
  return h;
}

ad::Matrix GraphEncoder::encode(const tag::TextAttributedGraph& graph) const {
  ad::Tape tape;
  return forward(tape, normalized_adjacency(graph), tape.constant(graph.features()), false).value();
}

std::vector<ad::Parameter*> GraphEncoder::parameters() {
  std::vector<ad::Parameter*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::vector<const ad::Parameter*> GraphEncoder::parameters() const {
  auto mut = const_cast<GraphEncoder*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

}  // namespace zpt::enc
