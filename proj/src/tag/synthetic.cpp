#include "zpt/tag/synthetic.hpp"

#include "zpt/ad/random.hpp"
#include "zpt/errors.hpp"

#include <random>
#include <set>

namespace zpt::tag {

void SyntheticTagSpec::validate() const {
  const auto& v = vocab.empty() ? default_vocab() : vocab;
  if (num_classes < 1) throw ConfigError("synthetic spec: num_classes must be >= 1");
  if (nodes_per_class < 1) throw ConfigError("synthetic spec: nodes_per_class must be >= 1");
  if (tokens_per_class < 1) throw ConfigError("synthetic spec: tokens_per_class must be >= 1");
  if (static_cast<long>(num_classes) * tokens_per_class > static_cast<long>(v.size())) {
    throw ConfigError("synthetic spec: tokens_per_class * num_classes exceeds vocab size " +
                      std::to_string(v.size()));
  }
  if (static_cast<long>(num_classes) * tokens_per_class == static_cast<long>(v.size()) &&
      topic_prob < 1.0) {
    throw ConfigError("synthetic spec: vocab has no background words but topic_prob < 1");
  }
  if (text_len < 1) throw ConfigError("synthetic spec: text_len must be >= 1");
  if (!(topic_prob >= 0.0 && topic_prob <= 1.0)) {
    throw ConfigError("synthetic spec: topic_prob must lie in [0, 1]");
  }
  if (!(intra_edge_prob >= 0.0 && intra_edge_prob <= 1.0)) {
    throw ConfigError("synthetic spec: intra_edge_prob must lie in [0, 1]");
  }
  if (!(inter_edge_prob >= 0.0 && inter_edge_prob <= 1.0)) {
    throw ConfigError("synthetic spec: inter_edge_prob must lie in [0, 1]");
  }
  if (!(intra_edge_prob > inter_edge_prob)) {
    throw ConfigError("synthetic spec: intra_edge_prob must exceed inter_edge_prob");
  }
  if (feature_dim < 1) throw ConfigError("synthetic spec: feature_dim must be >= 1");
  if (!(feature_noise >= 0.0)) throw ConfigError("synthetic spec: feature_noise must be >= 0");
  std::set<std::string> seen;
  for (const auto& w : v) {
    if (w.empty() || w.find_first_of(" \t\n\r") != std::string::npos) {
      throw ConfigError("synthetic spec: vocab entries must be single non-empty words");
    }
    if (!seen.insert(w).second) throw ConfigError("synthetic spec: duplicate vocab entry '" + w + "'");
  }
}

const std::vector<std::string>& default_vocab() {
  static const std::vector<std::string> words = {
      // topic words, 8 groups of 6
      "theory", "theorem", "lemma", "proof", "conjecture", "axiom",
      "algorithm", "heuristic", "runtime", "greedy", "approximation", "sorting",
      "network", "protocol", "routing", "packet", "bandwidth", "latency",
      "learning", "classifier", "training", "gradient", "regression", "kernel",
      "database", "query", "index", "transaction", "schema", "storage",
      "graphics", "rendering", "shading", "texture", "mesh", "pixel",
      "robotics", "actuator", "navigation", "manipulator", "odometry", "gripper",
      "security", "encryption", "malware", "firewall", "authentication", "exploit",
      // background words
      "a", "an", "the", "paper", "of", "research", "we", "this", "our", "study",
      "propose", "present", "method", "approach", "results", "show", "new", "model",
      "based", "using", "problem", "work", "data", "system", "analysis", "framework",
      "performance", "evaluation", "experiments", "novel", "efficient", "general",
      "several", "different", "first", "two", "large", "small", "simple", "also",
      "which", "can", "has", "been", "is", "are", "in", "on", "for", "with",
      "and", "to", "from", "by", "as", "that", "these", "its", "their", "more"};
  return words;
}

TextAttributedGraph generate_synthetic_tag(const SyntheticTagSpec& spec) {
  spec.validate();
  const auto& vocab = spec.vocab.empty() ? default_vocab() : spec.vocab;
  const int topic_total = spec.num_classes * spec.tokens_per_class;
  const int background = static_cast<int>(vocab.size()) - topic_total;
  const int n = spec.num_classes * spec.nodes_per_class;

  Rng rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick_topic(0, spec.tokens_per_class - 1);
  std::uniform_int_distribution<int> pick_background(0, std::max(background - 1, 0));

  std::vector<NodeId> ids(n);
  std::vector<std::string> texts(n);
  std::vector<std::string> labels(n);
  std::vector<int> cls(n);
  for (int i = 0; i < n; ++i) {
    const int c = i / spec.nodes_per_class;
    ids[i] = i;
    cls[i] = c;
    labels[i] = vocab[static_cast<std::size_t>(c) * spec.tokens_per_class];
    std::string text;
    for (int k = 0; k < spec.text_len; ++k) {
      int token;
      if (background == 0 || unit(rng) < spec.topic_prob) {
        token = c * spec.tokens_per_class + pick_topic(rng);
      } else {
        token = topic_total + pick_background(rng);
      }
      if (k > 0) text += ' ';
      text += vocab[token];
    }
    texts[i] = std::move(text);
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const double p = cls[u] == cls[v] ? spec.intra_edge_prob : spec.inter_edge_prob;
      if (unit(rng) < p) edges.emplace_back(u, v);
    }
  }

  Matrix x = bag_of_words_features(texts, spec.feature_dim);
  if (spec.feature_noise > 0.0) x += normal_matrix(x.rows(), x.cols(), spec.feature_noise, rng);

  return TextAttributedGraph(std::move(ids), std::move(edges), std::move(x), std::move(texts),
                             std::move(labels));
}

}  // namespace zpt::tag
