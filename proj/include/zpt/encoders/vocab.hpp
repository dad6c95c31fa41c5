#pragma once

#include "json.hpp"

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace zpt::enc {

// Word-level vocabulary. Ids are contiguous from 0 with four reserved
// entries at the front.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kReserved = 4;

  Vocabulary();

  // Most frequent words first (ties alphabetical), capped at max_size
  // entries including the reserved ones.
  static Vocabulary build(const std::vector<std::string>& texts, std::size_t max_size = 5000);
  static Vocabulary from_words(const std::vector<std::string>& words);

  int id(const std::string& word) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  bool contains(const std::string& word) const { return ids_.count(word) != 0; }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // {"token": id, ...}
  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  void add(const std::string& word);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Word ids without BOS/EOS; unknown words map to UNK.
std::vector<int> word_ids(const std::string& text, const Vocabulary& vocab);

// [BOS] + ids + [EOS], truncated to max_len (EOS kept last), then padded
// with PAD to exactly max_len.
std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab, int max_len);

}  // namespace zpt::enc
