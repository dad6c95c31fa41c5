#pragma once

// Orchestration shared by the command-line tool and the acceptance binary.

#include "zpt/cli/run_config.hpp"
#include "zpt/eval/harness.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace zpt::cli {

enum class Mode { Zpt, ZptContext, Discrete, NodeOnly, Simple, Pseudo };

const std::vector<std::string>& mode_names();
// Throws ConfigError listing the valid modes.
Mode parse_mode(const std::string& name);
std::string to_string(Mode mode);
bool needs_generator(Mode mode);

tag::TextAttributedGraph make_corpus(const RunConfig& config);

// Frozen model, its embeddings of every node and the sampled tasks.
struct EvalContext {
  const tag::TextAttributedGraph* graph = nullptr;
  const enc::PretrainedModel* model = nullptr;
  eval::EmbeddingCache cache;
  std::vector<eval::ZeroShotTask> tasks;
};
EvalContext make_context(const tag::TextAttributedGraph& graph, const enc::PretrainedModel& model,
                         const RunConfig& config);

// Generator trained on the frozen embeddings of every node.
ubcg::UbcgTrainResult train_generator(const EvalContext& ctx, const RunConfig& config, bool text_direction);

// Discrete prompts for every template, in prompt_templates() order.
struct TemplateSweep {
  std::vector<std::pair<std::string, eval::Metrics>> rows;
  // Ties resolve to the earlier template.
  const std::string& best() const;
  const std::string& worst() const;
  nlohmann::json to_json() const;
};
TemplateSweep template_sweep(const EvalContext& ctx, double lambda);

struct ModeResult {
  eval::Metrics metrics;
  nlohmann::json detail = nlohmann::json::object();
  std::vector<prompt::ContinuousPrompt> prompts;
};

// `templ` overrides the mode's template: the context template for zpt and
// zpt-context, the scoring template for discrete, the labelling template for
// pseudo ("best" and "worst" select from the template sweep). Modes zpt,
// zpt-context, simple and node-only require `generator`; node-only requires
// one trained without the text direction.
ModeResult run_mode(Mode mode, const RunConfig& config, const EvalContext& ctx,
                    const ubcg::UbcgModel* generator, const std::optional<std::string>& templ = {});

// Up to `per_class` real nodes of every label, in node order.
eval::LabeledEmbeddings real_pairs(const EvalContext& ctx, int per_class);
// `per_class` generated pairs for every label, conditioned on the label
// instantiated in zpt.context_template.
eval::LabeledEmbeddings synthetic_pairs(const RunConfig& config, const EvalContext& ctx,
                                        const ubcg::UbcgModel& generator, int per_class);

nlohmann::json seed_bundle(const RunConfig& config);

// Report skeleton shared by every command: run id, config echo, seeds.
nlohmann::json report_header(const std::string& command, const RunConfig& config);

struct SweepRow {
  std::string parameter;
  double value = 0.0;
  eval::Metrics metrics;
};

struct SensitivityReport {
  std::vector<SweepRow> rows;
  std::vector<const SweepRow*> of(const std::string& parameter) const;
  nlohmann::json to_json() const;
};

// latent_dim retrains the generator per value; samples_per_class and lambda
// reuse `generator`. Every other setting stays at `config`.
SensitivityReport sensitivity_sweep(const RunConfig& config, const EvalContext& ctx,
                                    const ubcg::UbcgModel& generator);

inline const std::vector<int>& latent_sweep_values() {
  static const std::vector<int> v{4, 8, 16, 32, 64};
  return v;
}
inline const std::vector<int>& samples_sweep_values() {
  static const std::vector<int> v{100, 200, 400, 800};
  return v;
}
inline const std::vector<double>& lambda_sweep_values() {
  static const std::vector<double> v{0.1, 0.3, 0.5, 0.7, 0.9};
  return v;
}

}  // namespace zpt::cli
