#pragma once

#include "zpt/encoders/model.hpp"
#include "zpt/tag/graph.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

namespace zpt::pretrain {

struct PretrainConfig {
  double alpha = 0.1;
  double learning_rate = 2e-5;
  int epochs = 200;
  // At desk scale one batch covers the whole graph, so an epoch is one step.
  int batch_size = 512;
  std::uint64_t seed = 0;
  double tau_init = std::log(1.0 / 0.07);
  // exp(tau) is clamped to this value after every step.
  double max_logit_scale = 100.0;
  std::size_t max_vocab = 5000;

  void validate() const;
};

struct StepLog {
  int epoch = 0;
  int step = 0;
  double node_text = 0.0;
  double text_summary = 0.0;
  double node_summary = 0.0;
  double total = 0.0;
  double logit_scale = 0.0;
};

struct PretrainResult {
  enc::PretrainedModel model;
  std::vector<StepLog> log;
  // Mean total loss per epoch.
  std::vector<double> epoch_means;
};

using StepCallback = std::function<void(const StepLog&)>;

// Joint contrastive pre-training. Each step runs the GCN over the full
// graph, encodes the texts of the batch and of its neighbours, and applies
// the alignment loss to the batch rows. Deterministic given config.seed.
PretrainResult pretrain(const tag::TextAttributedGraph& graph, const PretrainConfig& config,
                        const enc::TextEncoderConfig& text_config,
                        const enc::GraphEncoderConfig& graph_config,
                        const StepCallback& on_step = {});

// One JSON object per step: epoch, step, l1, l2, l3, total, logit_scale.
void write_log_jsonl(const std::vector<StepLog>& log, const std::filesystem::path& path);

}  // namespace zpt::pretrain
