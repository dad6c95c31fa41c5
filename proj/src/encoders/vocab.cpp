#include "zpt/encoders/vocab.hpp"

#include "zpt/errors.hpp"
#include "zpt/tag/graph.hpp"

#include <algorithm>
#include <map>

namespace zpt::enc {

Vocabulary::Vocabulary() {
  for (const char* w : {"<pad>", "<unk>", "<bos>", "<eos>"}) add(w);
}

void Vocabulary::add(const std::string& word) {
  if (ids_.count(word)) throw ConfigError("vocabulary: duplicate token '" + word + "'");
  ids_.emplace(word, static_cast<int>(tokens_.size()));
  tokens_.push_back(word);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, std::size_t max_size) {
  if (max_size < kReserved) throw ConfigError("vocabulary: max_size below reserved count");
  std::map<std::string, long> counts;
  for (const auto& t : texts) {
    for (auto& w : tag::split_words(t)) ++counts[w];
  }
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (const auto& [w, c] : ranked) {
    if (v.size() >= max_size) break;
    if (v.contains(w)) continue;
    v.add(w);
  }
  return v;
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
  Vocabulary v;
  for (const auto& w : words) v.add(w);
  return v;
}

int Vocabulary::id(const std::string& word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? kUnk : it->second;
}

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < tokens_.size(); ++i) j[tokens_[i]] = i;
  return j;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw LoadError("vocabulary: expected a JSON object");
  std::vector<std::string> by_id(j.size());
  std::vector<bool> seen(j.size(), false);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number_integer()) throw LoadError("vocabulary: ids must be integers");
    const long id = it.value().get<long>();
    if (id < 0 || id >= static_cast<long>(by_id.size()) || seen[id]) {
      throw LoadError("vocabulary: ids must be contiguous from 0");
    }
    seen[id] = true;
    by_id[id] = it.key();
  }
  const char* reserved[] = {"<pad>", "<unk>", "<bos>", "<eos>"};
  for (int i = 0; i < kReserved; ++i) {
    if (by_id.size() <= static_cast<std::size_t>(i) || by_id[i] != reserved[i]) {
      throw LoadError("vocabulary: reserved ids 0..3 must be <pad> <unk> <bos> <eos>");
    }
  }
  return from_words(std::vector<std::string>(by_id.begin() + kReserved, by_id.end()));
}

std::vector<int> word_ids(const std::string& text, const Vocabulary& vocab) {
  std::vector<int> ids;
  for (const auto& w : tag::split_words(text)) ids.push_back(vocab.id(w));
  return ids;
}

std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab, int max_len) {
  if (max_len < 3) throw ContractError("tokenize: max_len must be >= 3");
  std::vector<int> words = word_ids(text, vocab);
  const std::size_t keep = std::min(words.size(), static_cast<std::size_t>(max_len - 2));
  std::vector<int> seq;
  seq.reserve(static_cast<std::size_t>(max_len));
  seq.push_back(Vocabulary::kBos);
  seq.insert(seq.end(), words.begin(), words.begin() + static_cast<std::ptrdiff_t>(keep));
  seq.push_back(Vocabulary::kEos);
  seq.resize(static_cast<std::size_t>(max_len), Vocabulary::kPad);
  return seq;
}

}  // namespace zpt::enc
