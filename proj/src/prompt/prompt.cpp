#include "zpt/prompt/prompt.hpp"

#include "zpt/ad/adam.hpp"
#include "zpt/ad/random.hpp"
#include "zpt/encoders/similarity.hpp"
#include "zpt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace zpt::prompt {

std::string instantiate(std::string_view templ, std::string_view class_name) {
  const std::size_t pos = templ.find(kClassSlot);
  if (pos == std::string_view::npos) {
    throw ConfigError("template \"" + std::string(templ) + "\" has no {class name} slot");
  }
  if (templ.find(kClassSlot, pos + 1) != std::string_view::npos) {
    throw ConfigError("template \"" + std::string(templ) + "\" repeats the {class name} slot");
  }
  std::string out(templ.substr(0, pos));
  out += class_name;
  out += templ.substr(pos + kClassSlot.size());
  return out;
}

void HybridConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("prompt.lambda must lie in [0, 1]");
  if (!(learning_rate > 0.0)) throw ConfigError("prompt.learning_rate must be > 0");
  if (epochs < 1) throw ConfigError("prompt.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("prompt.batch_size must be >= 1");
}

namespace {

void check_budget(int m, const std::vector<int>& tokens, const std::string& text, int max_seq_len) {
  const int needed = m + static_cast<int>(tokens.size()) + 2;
  if (tokens.empty()) throw ConfigError("prompt: class description \"" + text + "\" has no tokens");
  if (needed > max_seq_len) {
    throw ConfigError("prompt: \"" + text + "\" needs " + std::to_string(needed) +
                      " positions with M=" + std::to_string(m) + " but max_seq_len is " +
                      std::to_string(max_seq_len));
  }
}

}  // namespace

ContinuousPrompt init_prompt(const std::vector<std::string>& class_texts, int m,
                             const enc::PretrainedModel& model, std::uint64_t seed) {
  if (m < 0) throw ConfigError("prompt: M must be >= 0");
  if (class_texts.empty()) throw ConfigError("prompt: no classes");
  ContinuousPrompt p;
  Rng rng(seed);
  p.context = normal_matrix(m, model.text_config.width, 0.02, rng);
  p.class_texts = class_texts;
  for (const std::string& text : class_texts) {
    std::vector<int> ids = enc::word_ids(text, model.vocab);
    check_budget(m, ids, text, model.text_config.max_seq_len);
    p.class_tokens.push_back(std::move(ids));
  }
  return p;
}

ad::Var class_weights(ad::Tape& tape, ad::Var context, const ContinuousPrompt& prompt,
                      const enc::PretrainedModel& model) {
  const int m = prompt.length();
  const int width = model.text_config.width;
  if (context.rows() != m || context.cols() != width) {
    throw ContractError("class_weights: context must be M x width");
  }
  if (prompt.class_tokens.empty()) throw ContractError("class_weights: prompt has no classes");
  std::vector<int> lengths;
  for (std::size_t y = 0; y < prompt.class_tokens.size(); ++y) {
    check_budget(m, prompt.class_tokens[y], prompt.class_texts[y], model.text_config.max_seq_len);
    lengths.push_back(m + static_cast<int>(prompt.class_tokens[y].size()) + 2);
  }
  const int seq_len = *std::max_element(lengths.begin(), lengths.end());
  const int n = static_cast<int>(lengths.size());
  const Matrix& table = model.text.token_table();

  // Frozen rows in place; context slots left zero and filled by placement.
  Matrix fixed(static_cast<Eigen::Index>(n) * seq_len, width);
  std::vector<Eigen::Triplet<double>> slots;
  for (int y = 0; y < n; ++y) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(y) * seq_len;
    fixed.row(r0) = table.row(enc::Vocabulary::kBos);
    for (int i = 0; i < m; ++i) {
      fixed.row(r0 + 1 + i).setZero();
      slots.emplace_back(static_cast<int>(r0) + 1 + i, i, 1.0);
    }
    const auto& ids = prompt.class_tokens[static_cast<std::size_t>(y)];
    for (std::size_t k = 0; k < ids.size(); ++k) {
      fixed.row(r0 + 1 + m + static_cast<Eigen::Index>(k)) = table.row(ids[k]);
    }
    fixed.row(r0 + lengths[y] - 1) = table.row(enc::Vocabulary::kEos);
    for (int i = lengths[y]; i < seq_len; ++i) fixed.row(r0 + i) = table.row(enc::Vocabulary::kPad);
  }
  ad::Var embedded = tape.constant(std::move(fixed));
  if (m > 0) {
    auto placement = std::make_shared<ad::SparseMatrix>(static_cast<Eigen::Index>(n) * seq_len, m);
    placement->setFromTriplets(slots.begin(), slots.end());
    embedded = ad::add(embedded, ad::sparse_matmul(std::move(placement), context));
  }
  return model.text.forward_embedded(tape, embedded, lengths, seq_len, false);
}

Matrix class_weights(const ContinuousPrompt& prompt, const enc::PretrainedModel& model) {
  ad::Tape tape;
  return class_weights(tape, tape.constant(prompt.context), prompt, model).value();
}

Matrix discrete_class_weights(std::string_view templ, const std::vector<std::string>& class_names,
                              const enc::PretrainedModel& model) {
  std::vector<std::string> texts;
  texts.reserve(class_names.size());
  for (const std::string& name : class_names) texts.push_back(instantiate(templ, name));
  return model.encode_texts(texts);
}

namespace {

Matrix softmax_rows(const Matrix& z) {
  Matrix p(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    p.row(i) = (z.row(i).array() - z.row(i).maxCoeff()).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ContractError("lambda must lie in [0, 1]");
}

}  // namespace

Matrix hybrid_probabilities(const Matrix& weights, const Matrix& nodes, const Matrix& texts,
                            double lambda) {
  check_lambda(lambda);
  if (nodes.rows() != texts.rows()) throw ContractError("hybrid_probability: row mismatch");
  const Matrix pv = softmax_rows(enc::cosine_similarity_matrix(nodes, weights));
  const Matrix pt = softmax_rows(enc::cosine_similarity_matrix(texts, weights));
  return lambda * pv + (1.0 - lambda) * pt;
}

Vector hybrid_probability(const Matrix& weights, const Vector& v, const Vector& t, double lambda) {
  return hybrid_probabilities(weights, v.transpose(), t.transpose(), lambda).row(0).transpose();
}

int argmax_lowest(const Vector& p) {
  if (p.size() == 0) throw ContractError("argmax: empty vector");
  int best = 0;
  for (int i = 1; i < p.size(); ++i) {
    if (p(i) > p(best)) best = i;
  }
  return best;
}

int classify(const Matrix& weights, const Vector& v, const Vector& t, double lambda) {
  return argmax_lowest(hybrid_probability(weights, v, t, lambda));
}

std::vector<int> classify(const Matrix& weights, const Matrix& nodes, const Matrix& texts,
                          double lambda) {
  const Matrix p = hybrid_probabilities(weights, nodes, texts, lambda);
  std::vector<int> out(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) out[static_cast<std::size_t>(i)] = argmax_lowest(p.row(i));
  return out;
}

ad::Var tuning_loss(ad::Tape& tape, ad::Var context, const ContinuousPrompt& prompt,
                    const enc::PretrainedModel& model, const Matrix& nodes, const Matrix& texts,
                    const std::vector<int>& labels, double lambda) {
  check_lambda(lambda);
  if (nodes.rows() != texts.rows() || nodes.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw ContractError("tuning_loss: nodes, texts and labels must be row-aligned");
  }
  ad::Var w = ad::l2_normalize_rows(class_weights(tape, context, prompt, model));
  ad::Var pv = ad::softmax_rows(ad::matmul_nt(tape.constant(enc::l2_normalize(nodes)), w));
  ad::Var pt = ad::softmax_rows(ad::matmul_nt(tape.constant(enc::l2_normalize(texts)), w));
  return ad::nll_rows(ad::add(ad::scale(pv, lambda), ad::scale(pt, 1.0 - lambda)), labels);
}

TuneResult tune_prompt(const ContinuousPrompt& prompt, const Matrix& nodes, const Matrix& texts,
                       const std::vector<int>& labels, const enc::PretrainedModel& model,
                       const HybridConfig& config) {
  config.validate();
  const std::size_t n = labels.size();
  if (nodes.rows() != static_cast<Eigen::Index>(n) || texts.rows() != static_cast<Eigen::Index>(n)) {
    throw ContractError("tune_prompt: nodes, texts and labels must be row-aligned");
  }
  std::vector<int> per_class(prompt.num_classes(), 0);
  for (int y : labels) {
    if (y < 0 || y >= static_cast<int>(per_class.size())) throw ContractError("tune_prompt: label range");
    ++per_class[static_cast<std::size_t>(y)];
  }
  for (std::size_t y = 0; y < per_class.size(); ++y) {
    if (per_class[y] == 0) {
      throw ConfigError("tune_prompt: class \"" + prompt.class_texts[y] + "\" has no samples");
    }
  }

  TuneResult result{prompt, {}};
  ad::Parameter context{"prompt.context", prompt.context};
  const bool trainable = prompt.length() > 0;
  ad::Adam optimizer(trainable ? std::vector<ad::Parameter*>{&context} : std::vector<ad::Parameter*>{},
                     {config.learning_rate});
  Rng rng(derive_seed(config.seed, 0));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    int steps = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t count = std::min(n - start, static_cast<std::size_t>(config.batch_size));
      Matrix v(static_cast<Eigen::Index>(count), nodes.cols());
      Matrix t(static_cast<Eigen::Index>(count), texts.cols());
      std::vector<int> y(count);
      for (std::size_t i = 0; i < count; ++i) {
        const int src = order[start + i];
        v.row(static_cast<Eigen::Index>(i)) = nodes.row(src);
        t.row(static_cast<Eigen::Index>(i)) = texts.row(src);
        y[i] = labels[static_cast<std::size_t>(src)];
      }
      optimizer.zero_grad();
      ad::Tape tape;
      ad::Var ctx = trainable ? tape.param(context) : tape.constant(context.value);
      ad::Var loss = tuning_loss(tape, ctx, result.prompt, model, v, t, y, config.lambda);
      if (!std::isfinite(loss.scalar())) {
        throw TrainingError("tune_prompt: non-finite loss at epoch " + std::to_string(epoch) +
                            " step " + std::to_string(steps));
      }
      if (trainable) {
        tape.backward(loss);
        optimizer.step();
      }
      total += loss.scalar();
      ++steps;
    }
    result.epoch_losses.push_back(total / steps);
  }
  result.prompt.context = context.value;
  return result;
}

}  // namespace zpt::prompt
