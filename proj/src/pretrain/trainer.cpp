#include "zpt/pretrain/trainer.hpp"

#include "zpt/ad/adam.hpp"
#include "zpt/ad/random.hpp"
#include "zpt/errors.hpp"
#include "zpt/pretrain/losses.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

namespace zpt::pretrain {

void PretrainConfig::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("pretrain.alpha must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("pretrain.learning_rate must be > 0");
  if (epochs < 1) throw ConfigError("pretrain.epochs must be >= 1");
  if (batch_size < 2) throw ConfigError("pretrain.batch_size must be >= 2");
  if (!std::isfinite(tau_init)) throw ConfigError("pretrain.tau_init must be finite");
  if (!(max_logit_scale > 0.0)) throw ConfigError("pretrain.max_logit_scale must be > 0");
  if (max_vocab < 5) throw ConfigError("pretrain.max_vocab must be >= 5");
}

namespace {

std::vector<std::vector<int>> make_batches(std::size_t n, int batch_size, Rng& rng) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<int>> batches;
  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(n, start + static_cast<std::size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  // A singleton batch has no negatives; fold it into its predecessor.
  if (batches.size() > 1 && batches.back().size() < 2) {
    auto last = std::move(batches.back());
    batches.pop_back();
    batches.back().insert(batches.back().end(), last.begin(), last.end());
  }
  return batches;
}

}  // namespace

PretrainResult pretrain(const tag::TextAttributedGraph& graph, const PretrainConfig& config,
                        const enc::TextEncoderConfig& text_config,
                        const enc::GraphEncoderConfig& graph_config, const StepCallback& on_step) {
  config.validate();
  if (graph.num_nodes() < 2) throw ConfigError("pretrain: graph needs at least two nodes");

  PretrainResult result{enc::PretrainedModel::create(enc::Vocabulary::build(graph.texts(), config.max_vocab),
                                                     text_config, graph_config,
                                                     static_cast<int>(graph.feature_dim()),
                                                     derive_seed(config.seed, 0), config.tau_init),
                        {},
                        {}};
  enc::PretrainedModel& model = result.model;
  const double max_tau = std::log(config.max_logit_scale);
  model.log_temperature.value(0, 0) = std::min(model.log_temperature.value(0, 0), max_tau);

  const auto adjacency = enc::normalized_adjacency(graph);
  std::vector<std::vector<int>> tokens;
  tokens.reserve(graph.num_nodes());
  for (const auto& t : graph.texts()) tokens.push_back(model.tokenize(t));
  const auto& adj = graph.adjacency();

  ad::Adam optimizer(model.parameters(), {config.learning_rate});
  Rng rng(derive_seed(config.seed, 1));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches = make_batches(graph.num_nodes(), config.batch_size, rng);
    double epoch_total = 0.0;
    for (std::size_t step = 0; step < batches.size(); ++step) {
      const auto& batch = batches[step];
      std::set<int> needed(batch.begin(), batch.end());
      for (int v : batch) needed.insert(adj[v].begin(), adj[v].end());
      const std::vector<int> columns(needed.begin(), needed.end());
      std::vector<int> batch_cols;
      batch_cols.reserve(batch.size());
      for (int v : batch) {
        batch_cols.push_back(static_cast<int>(std::lower_bound(columns.begin(), columns.end(), v) -
                                              columns.begin()));
      }
      std::vector<std::vector<int>> seqs;
      seqs.reserve(columns.size());
      for (int c : columns) seqs.push_back(tokens[c]);

      optimizer.zero_grad();
      ad::Tape tape;
      ad::Var all_nodes = model.graph.forward(tape, adjacency, tape.constant(graph.features()), true);
      ad::Var nodes = ad::gather_rows(all_nodes, batch);
      ad::Var texts_all = model.text.forward(tape, seqs, true);
      ad::Var texts = ad::gather_rows(texts_all, batch_cols);
      ad::Var summaries = ad::sparse_matmul(summary_operator(graph, batch, columns), texts_all);
      AlignmentLoss loss = alignment_loss(nodes, texts, summaries,
                                          tape.param(model.log_temperature), config.alpha);
      if (!std::isfinite(loss.terms.total)) {
        throw TrainingError("pretrain: non-finite loss at epoch " + std::to_string(epoch) +
                            " step " + std::to_string(step));
      }
      tape.backward(loss.total);
      optimizer.step();
      double& tau = model.log_temperature.value(0, 0);
      tau = std::min(tau, max_tau);

      StepLog entry{epoch,
                    static_cast<int>(step),
                    loss.terms.node_text,
                    loss.terms.text_summary,
                    loss.terms.node_summary,
                    loss.terms.total,
                    std::exp(tau)};
      result.log.push_back(entry);
      if (on_step) on_step(entry);
      epoch_total += loss.terms.total;
    }
    result.epoch_means.push_back(epoch_total / static_cast<double>(batches.size()));
  }
  return result;
}

void write_log_jsonl(const std::vector<StepLog>& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  for (const StepLog& s : log) {
    nlohmann::json j{{"epoch", s.epoch}, {"step", s.step},   {"l1", s.node_text},
                     {"l2", s.text_summary}, {"l3", s.node_summary}, {"total", s.total},
                     {"logit_scale", s.logit_scale}};
    out << j.dump() << '\n';
  }
  if (!out) throw IoError(path.string() + ": write failed");
}

}  // namespace zpt::pretrain
