#pragma once

// Class weights from discrete templates or tuned continuous prompts, the
// two-modality (hybrid) class probability and prompt tuning.

#include "zpt/ad/ops.hpp"
#include "zpt/encoders/model.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace zpt::prompt {

using ad::Matrix;
using ad::Vector;

inline constexpr std::string_view kClassSlot = "{class name}";

// Replaces the single `{class name}` slot. Throws ConfigError when the slot
// is missing or repeated.
std::string instantiate(std::string_view templ, std::string_view class_name);

struct HybridConfig {
  double lambda = 0.5;
  double learning_rate = 2e-5;
  int epochs = 1;
  int batch_size = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

// M context vectors shared by every class, followed per class by the frozen
// token ids of its description.
struct ContinuousPrompt {
  Matrix context;                             // M x text width
  std::vector<std::string> class_texts;       // one description per class
  std::vector<std::vector<int>> class_tokens; // word ids, no BOS/EOS

  int length() const { return static_cast<int>(context.rows()); }
  std::size_t num_classes() const { return class_tokens.size(); }
};

// Context drawn from N(0, 0.02^2) with `seed`. Throws ConfigError when
// M + |class tokens| + 2 exceeds the text encoder's max_seq_len.
ContinuousPrompt init_prompt(const std::vector<std::string>& class_texts, int m,
                             const enc::PretrainedModel& model, std::uint64_t seed);

// N x 128, row y = T([BOS, h_1..h_M, class tokens of y, EOS]).
Matrix class_weights(const ContinuousPrompt& prompt, const enc::PretrainedModel& model);
// Same on a tape, with `context` (M x width) as the only differentiable input.
ad::Var class_weights(ad::Tape& tape, ad::Var context, const ContinuousPrompt& prompt,
                      const enc::PretrainedModel& model);

Matrix discrete_class_weights(std::string_view templ, const std::vector<std::string>& class_names,
                              const enc::PretrainedModel& model);

// lambda softmax_y(cos(w_y, v)) + (1 - lambda) softmax_y(cos(w_y, t)).
Vector hybrid_probability(const Matrix& weights, const Vector& v, const Vector& t, double lambda);
// Row i uses nodes.row(i) and texts.row(i).
Matrix hybrid_probabilities(const Matrix& weights, const Matrix& nodes, const Matrix& texts,
                            double lambda);

// argmax with ties resolved to the lowest index.
int argmax_lowest(const Vector& p);
int classify(const Matrix& weights, const Vector& v, const Vector& t, double lambda);
std::vector<int> classify(const Matrix& weights, const Matrix& nodes, const Matrix& texts,
                          double lambda);

// Mean -log p(label | v, t) over the rows.
ad::Var tuning_loss(ad::Tape& tape, ad::Var context, const ContinuousPrompt& prompt,
                    const enc::PretrainedModel& model, const Matrix& nodes, const Matrix& texts,
                    const std::vector<int>& labels, double lambda);

struct TuneResult {
  ContinuousPrompt prompt;
  std::vector<double> epoch_losses;
};

// Updates only the context vectors. Throws ConfigError if any class has no
// sample.
TuneResult tune_prompt(const ContinuousPrompt& prompt, const Matrix& nodes, const Matrix& texts,
                       const std::vector<int>& labels, const enc::PretrainedModel& model,
                       const HybridConfig& config);

}  // namespace zpt::prompt
