#include "zpt/cli/pipeline.hpp"

#include "zpt/ad/random.hpp"
#include "zpt/errors.hpp"
#include "zpt/tag/synthetic.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace zpt::cli {

using nlohmann::json;

const std::vector<std::string>& mode_names() {
  static const std::vector<std::string> names{"zpt", "zpt-context", "discrete", "node-only", "simple", "pseudo"};
  return names;
}

Mode parse_mode(const std::string& name) {
  const auto& names = mode_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) {
    std::string valid;
    for (const std::string& n : names) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown mode '" + name + "'; valid modes: " + valid);
  }
  return static_cast<Mode>(it - names.begin());
}

std::string to_string(Mode mode) { return mode_names()[static_cast<std::size_t>(mode)]; }

bool needs_generator(Mode mode) {
  return mode == Mode::Zpt || mode == Mode::ZptContext || mode == Mode::NodeOnly || mode == Mode::Simple;
}

tag::TextAttributedGraph make_corpus(const RunConfig& config) { return tag::generate_synthetic_tag(config.data); }

EvalContext make_context(const tag::TextAttributedGraph& graph, const enc::PretrainedModel& model,
                         const RunConfig& config) {
  EvalContext ctx;
  ctx.graph = &graph;
  ctx.model = &model;
  ctx.cache = eval::embed_graph(graph, model);
  ctx.tasks = eval::sample_tasks(graph, config.harness.n_way, config.harness.num_tasks,
                                 config.harness.queries_per_class, config.task_seed());
  return ctx;
}

ubcg::UbcgTrainResult train_generator(const EvalContext& ctx, const RunConfig& config, bool text_direction) {
  ubcg::UbcgConfig c = config.ubcg_config();
  c.text_direction = text_direction;
  return ubcg::train_ubcg(ctx.cache.nodes, ctx.cache.texts, c);
}

const std::string& TemplateSweep::best() const {
  if (rows.empty()) throw StateError("template sweep is empty");
  return std::max_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
           return a.second.accuracy.mean < b.second.accuracy.mean;
         })->first;
}

const std::string& TemplateSweep::worst() const {
  if (rows.empty()) throw StateError("template sweep is empty");
  return std::min_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
           return a.second.accuracy.mean < b.second.accuracy.mean;
         })->first;
}

json TemplateSweep::to_json() const {
  json out = json::array();
  for (const auto& [templ, m] : rows) {
    out.push_back({{"template", templ},
                   {"accuracy", {{"mean", m.accuracy.mean}, {"std", m.accuracy.std}}},
                   {"macro_f1", {{"mean", m.macro_f1.mean}, {"std", m.macro_f1.std}}}});
  }
  return out;
}

TemplateSweep template_sweep(const EvalContext& ctx, double lambda) {
  TemplateSweep sweep;
  for (const std::string& templ : eval::prompt_templates()) {
    sweep.rows.emplace_back(templ, eval::run_discrete(ctx.cache, *ctx.model, ctx.tasks, templ, lambda));
  }
  return sweep;
}

namespace {

const ubcg::UbcgModel& require_generator(Mode mode, const ubcg::UbcgModel* generator) {
  if (generator == nullptr) throw ConfigError("mode " + to_string(mode) + " needs a UBCG checkpoint");
  if (!generator->trained()) throw StateError("mode " + to_string(mode) + ": UBCG model is untrained");
  return *generator;
}

}  // namespace

ModeResult run_mode(Mode mode, const RunConfig& config, const EvalContext& ctx,
                    const ubcg::UbcgModel* generator, const std::optional<std::string>& templ) {
  ModeResult r;
  eval::ZptConfig zpt = config.zpt_config();
  const double lambda = zpt.hybrid.lambda;
  r.detail["lambda"] = lambda;
  switch (mode) {
    case Mode::Zpt:
    case Mode::ZptContext: {
      const ubcg::UbcgModel& g = require_generator(mode, generator);
      if (templ) {
        zpt.context_template = *templ;
      } else if (mode == Mode::ZptContext) {
        const TemplateSweep sweep = template_sweep(ctx, lambda);
        zpt.context_template = sweep.best();
        r.detail["template_sweep"] = sweep.to_json();
      }
      eval::RunOutput out = eval::run_zpt(ctx.cache, *ctx.model, g, ctx.tasks, zpt);
      r.metrics = std::move(out.metrics);
      r.prompts = std::move(out.prompts);
      r.detail["context_template"] = zpt.context_template;
      r.detail["context_length"] = zpt.context_length;
      r.detail["samples_per_class"] = zpt.samples_per_class;
      break;
    }
    case Mode::Discrete: {
      const std::string t = templ.value_or(config.harness.discrete_template);
      r.metrics = eval::run_discrete(ctx.cache, *ctx.model, ctx.tasks, t, lambda);
      r.detail["template"] = t;
      r.detail["template_sweep"] = template_sweep(ctx, lambda).to_json();
      break;
    }
    case Mode::NodeOnly: {
      const ubcg::UbcgModel& g = require_generator(mode, generator);
      if (g.config().text_direction) {
        throw ConfigError("mode node-only needs a UBCG trained with ubcg.text_direction = false");
      }
      if (templ) zpt.context_template = *templ;
      eval::RunOutput out = eval::run_node_only_ablation(ctx.cache, *ctx.model, g, ctx.tasks, zpt);
      r.metrics = std::move(out.metrics);
      r.prompts = std::move(out.prompts);
      r.detail["lambda"] = 1.0;
      r.detail["context_template"] = zpt.context_template;
      r.detail["samples_per_class"] = zpt.samples_per_class;
      break;
    }
    case Mode::Simple: {
      const ubcg::UbcgModel& g = require_generator(mode, generator);
      if (templ) zpt.context_template = *templ;
      eval::LinearClassifierConfig lc = config.harness.linear;
      lc.seed = derive_seed(config.seed, 6);
      r.metrics = eval::run_simple_classifier(ctx.cache, *ctx.model, g, ctx.tasks, zpt, lc);
      r.detail["context_template"] = zpt.context_template;
      r.detail["samples_per_class"] = zpt.samples_per_class;
      r.detail["linear"] = {{"learning_rate", lc.learning_rate}, {"epochs", lc.epochs}, {"batch_size", lc.batch_size}};
      break;
    }
    case Mode::Pseudo: {
      eval::PseudoLabelConfig pseudo;
      pseudo.max_per_class = config.harness.pseudo_max_per_class;
      pseudo.hybrid = zpt.hybrid;
      pseudo.hybrid.seed = derive_seed(config.seed, 7);
      const std::string choice = templ.value_or(config.harness.pseudo_template);
      if (choice == "best" || choice == "worst") {
        const TemplateSweep sweep = template_sweep(ctx, lambda);
        pseudo.label_template = choice == "best" ? sweep.best() : sweep.worst();
        r.detail["template_sweep"] = sweep.to_json();
      } else {
        pseudo.label_template = choice;
      }
      eval::RunOutput out = eval::run_pseudo_label(ctx.cache, *ctx.model, ctx.tasks, zpt, pseudo);
      r.metrics = std::move(out.metrics);
      r.prompts = std::move(out.prompts);
      r.detail["label_template"] = pseudo.label_template;
      r.detail["template_choice"] = choice;
      r.detail["max_per_class"] = pseudo.max_per_class;
      break;
    }
  }
  return r;
}

eval::LabeledEmbeddings real_pairs(const EvalContext& ctx, int per_class) {
  if (!ctx.graph->labels()) throw ConfigError("projection needs a labelled graph");
  const auto& labels = *ctx.graph->labels();
  std::map<std::string, int> taken;
  std::vector<int> rows;
  eval::LabeledEmbeddings out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (taken[labels[i]]++ < per_class) {
      rows.push_back(static_cast<int>(i));
      out.labels.push_back(labels[i]);
    }
  }
  out.nodes.resize(static_cast<Eigen::Index>(rows.size()), ctx.cache.nodes.cols());
  out.texts.resize(out.nodes.rows(), ctx.cache.texts.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.nodes.row(static_cast<Eigen::Index>(k)) = ctx.cache.nodes.row(rows[k]);
    out.texts.row(static_cast<Eigen::Index>(k)) = ctx.cache.texts.row(rows[k]);
  }
  return out;
}

eval::LabeledEmbeddings synthetic_pairs(const RunConfig& config, const EvalContext& ctx,
                                        const ubcg::UbcgModel& generator, int per_class) {
  if (!ctx.graph->labels()) throw ConfigError("projection needs a labelled graph");
  const std::set<std::string> classes(ctx.graph->labels()->begin(), ctx.graph->labels()->end());
  std::vector<std::string> names(classes.begin(), classes.end()), texts;
  for (const std::string& n : names) texts.push_back(prompt::instantiate(config.zpt.context_template, n));
  const ad::Matrix conditions = ctx.model->encode_texts(texts);
  const auto n = static_cast<Eigen::Index>(names.size()) * per_class;
  eval::LabeledEmbeddings out{ad::Matrix(n, conditions.cols()), ad::Matrix(n, conditions.cols()), {}};
  for (Eigen::Index k = 0; k < conditions.rows(); ++k) {
    const ubcg::SyntheticSamples g = ubcg::generate_class_samples(
        conditions.row(k).transpose(), per_class, generator,
        derive_seed(config.projection_seed(), static_cast<std::uint64_t>(k)));
    out.nodes.middleRows(k * per_class, per_class) = g.nodes;
    out.texts.middleRows(k * per_class, per_class) = g.texts;
    out.labels.insert(out.labels.end(), static_cast<std::size_t>(per_class), names[static_cast<std::size_t>(k)]);
  }
  return out;
}

json seed_bundle(const RunConfig& config) {
  return {{"seed", config.seed},
          {"data", config.data.seed},
          {"pretrain", config.pretrain_config().seed},
          {"ubcg", config.ubcg_config().seed},
          {"tasks", config.task_seed()},
          {"zpt", config.zpt_config().seed},
          {"projection", config.projection_seed()}};
}

json report_header(const std::string& command, const RunConfig& config) {
  return {{"command", command}, {"run_id", run_id(config)}, {"config", to_json(config)}, {"seeds", seed_bundle(config)}};
}

std::vector<const SweepRow*> SensitivityReport::of(const std::string& parameter) const {
  std::vector<const SweepRow*> out;
  for (const SweepRow& r : rows) {
    if (r.parameter == parameter) out.push_back(&r);
  }
  return out;
}

json SensitivityReport::to_json() const {
  json out = json::object();
  for (const SweepRow& r : rows) {
    out[r.parameter].push_back({{"value", r.value},
                                {"accuracy", {{"mean", r.metrics.accuracy.mean}, {"std", r.metrics.accuracy.std}}},
                                {"macro_f1", {{"mean", r.metrics.macro_f1.mean}, {"std", r.metrics.macro_f1.std}}}});
  }
  return out;
}

SensitivityReport sensitivity_sweep(const RunConfig& config, const EvalContext& ctx,
                                    const ubcg::UbcgModel& generator) {
  SensitivityReport report;
  const eval::ZptConfig base = config.zpt_config();
  for (int latent : latent_sweep_values()) {
    RunConfig c = config;
    c.ubcg.latent_dim = latent;
    const ubcg::UbcgTrainResult g = train_generator(ctx, c, true);
    report.rows.push_back({"latent_dim", static_cast<double>(latent),
                           eval::run_zpt(ctx.cache, *ctx.model, g.model, ctx.tasks, base).metrics});
  }
  for (int samples : samples_sweep_values()) {
    eval::ZptConfig z = base;
    z.samples_per_class = samples;
    report.rows.push_back({"samples_per_class", static_cast<double>(samples),
                           eval::run_zpt(ctx.cache, *ctx.model, generator, ctx.tasks, z).metrics});
  }
  for (double lambda : lambda_sweep_values()) {
    eval::ZptConfig z = base;
    z.hybrid.lambda = lambda;
    report.rows.push_back({"lambda", lambda, eval::run_zpt(ctx.cache, *ctx.model, generator, ctx.tasks, z).metrics});
  }
  return report;
}

}  // namespace zpt::cli
