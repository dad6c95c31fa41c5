#pragma once

#include "zpt/tag/graph.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace zpt::tag {

// Planted-partition text-attributed graph. Class c owns the vocabulary slice
// [c * tokens_per_class, (c + 1) * tokens_per_class); its first token is the
// class name. Remaining vocabulary entries are shared background words.
struct SyntheticTagSpec {
  int num_classes = 5;
  int nodes_per_class = 100;
  std::vector<std::string> vocab;  // empty selects default_vocab()
  int tokens_per_class = 6;
  int text_len = 16;
  // Probability that a text position draws from the node's topic tokens
  // instead of the background words.
  double topic_prob = 0.4;
  double intra_edge_prob = 0.05;
  double inter_edge_prob = 0.002;
  int feature_dim = 64;
  double feature_noise = 0.1;
  std::uint64_t seed = 7;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// 48 topic words (8 groups of 6) followed by background words,
// including the template words "a", "an", "paper", "of", "research".
const std::vector<std::string>& default_vocab();

TextAttributedGraph generate_synthetic_tag(const SyntheticTagSpec& spec);

}  // namespace zpt::tag
