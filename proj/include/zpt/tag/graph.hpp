#pragma once

#include "zpt/ad/tape.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace zpt::tag {

using NodeId = std::int64_t;
using Matrix = ad::Matrix;

// G = {V, E, X, T} plus optional held-out labels. Immutable once built:
// the constructor validates every invariant and canonicalises edges to
// sorted (min, max) pairs with duplicates and self-loops removed.
class TextAttributedGraph {
 public:
  TextAttributedGraph() = default;
  TextAttributedGraph(std::vector<NodeId> node_ids, std::vector<std::pair<NodeId, NodeId>> edges,
                      Matrix features, std::vector<std::string> texts,
                      std::optional<std::vector<std::string>> labels = std::nullopt);

  std::size_t num_nodes() const { return node_ids_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  Eigen::Index feature_dim() const { return features_.cols(); }

  const std::vector<NodeId>& node_ids() const { return node_ids_; }
  const std::vector<std::pair<NodeId, NodeId>>& edges() const { return edges_; }
  const Matrix& features() const { return features_; }
  const std::vector<std::string>& texts() const { return texts_; }
  const std::optional<std::vector<std::string>>& labels() const { return labels_; }
  bool has_labels() const { return labels_.has_value(); }

  // Row index of a node id; throws ContractError for unknown ids.
  std::size_t index_of(NodeId id) const;
  bool contains(NodeId id) const { return index_.count(id) != 0; }

  // Neighbour row indices per node row, each list sorted ascending.
  const std::vector<std::vector<int>>& adjacency() const { return adjacency_; }

  friend bool operator==(const TextAttributedGraph& a, const TextAttributedGraph& b);

 private:
  std::vector<NodeId> node_ids_;
  std::vector<std::pair<NodeId, NodeId>> edges_;
  Matrix features_;
  std::vector<std::string> texts_;
  std::optional<std::vector<std::string>> labels_;
  std::unordered_map<NodeId, std::size_t> index_;
  std::vector<std::vector<int>> adjacency_;
};

// N_v for every node: symmetric, never containing v itself.
std::map<NodeId, std::set<NodeId>> neighbor_sets(const TextAttributedGraph& graph);

// Lowercased whitespace tokens.
std::vector<std::string> split_words(const std::string& text);

// Token counts folded into `dim` buckets with a fixed FNV-1a hash.
Matrix bag_of_words_features(const std::vector<std::string>& texts, Eigen::Index dim);

// Directory format: nodes.jsonl, edges.tsv, meta.json.
TextAttributedGraph load_tag(const std::filesystem::path& dir);
void save_tag(const TextAttributedGraph& graph, const std::filesystem::path& dir);

}  // namespace zpt::tag
