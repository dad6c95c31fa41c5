#include "zpt/encoders/model.hpp"

#include "zpt/errors.hpp"

#include <cmath>

namespace zpt::enc {

PretrainedModel PretrainedModel::create(Vocabulary vocab, const TextEncoderConfig& text_config,
                                        const GraphEncoderConfig& graph_config, int feature_dim,
                                        std::uint64_t seed, double log_temperature_init) {
  if (!std::isfinite(log_temperature_init)) throw ConfigError("tau_init must be finite");
  PretrainedModel m;
  m.vocab = std::move(vocab);
  m.text_config = text_config;
  m.graph_config = graph_config;
  Rng text_rng(derive_seed(seed, 0));
  Rng graph_rng(derive_seed(seed, 1));
  m.text = TextEncoder(text_config, static_cast<int>(m.vocab.size()), text_rng);
  m.graph = GraphEncoder(graph_config, feature_dim, graph_rng);
  m.log_temperature.value(0, 0) = log_temperature_init;
  return m;
}

std::vector<int> PretrainedModel::tokenize(const std::string& text) const {
  return enc::tokenize(text, vocab, text_config.max_seq_len);
}

ad::Matrix PretrainedModel::encode_text(const std::vector<std::vector<int>>& sequences) const {
  return text.encode(sequences);
}

ad::Matrix PretrainedModel::encode_texts(const std::vector<std::string>& texts, std::size_t chunk) const {
  ad::Matrix out(static_cast<Eigen::Index>(texts.size()), text_config.output_dim);
  if (chunk == 0) chunk = texts.size();
  for (std::size_t start = 0; start < texts.size(); start += chunk) {
    const std::size_t end = std::min(texts.size(), start + chunk);
    std::vector<std::vector<int>> seqs;
    for (std::size_t i = start; i < end; ++i) seqs.push_back(tokenize(texts[i]));
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(end - start)) =
        text.encode(seqs);
  }
  return out;
}

ad::Matrix PretrainedModel::encode_nodes(const tag::TextAttributedGraph& g) const {
  return graph.encode(g);
}

std::vector<ad::Parameter*> PretrainedModel::parameters() {
  std::vector<ad::Parameter*> out = text.parameters();
  for (ad::Parameter* p : graph.parameters()) out.push_back(p);
  out.push_back(&log_temperature);
  return out;
}

std::vector<const ad::Parameter*> PretrainedModel::parameters() const {
  auto mut = const_cast<PretrainedModel*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

}  // namespace zpt::enc
