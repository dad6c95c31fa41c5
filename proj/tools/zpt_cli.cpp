#include "zpt/cli/pipeline.hpp"
#include "zpt/errors.hpp"
#include "zpt/io/checkpoint.hpp"
#include "zpt/runtime.hpp"
#include "zpt/tag/graph.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace zpt;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data;
  std::string pretrained;
  std::string ubcg;
  std::string mode = "zpt";
  std::optional<std::string> templ;
  std::string projection;
};

cli::RunConfig load_config(const Options& o) {
  cli::RunConfig c = o.config_path.empty() ? cli::RunConfig{} : cli::load_run_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  c.validate();
  return c;
}

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw ConfigError(flag + " is required");
}

void write_json(const json& j, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError(path.string() + ": write failed");
}

enc::PretrainedModel load_pretrained(const std::string& path) {
  require(path, "--pretrained");
  if (!fs::exists(path)) throw ConfigError(path + ": pretrained checkpoint not found");
  return io::pretrained_from_checkpoint(io::load_checkpoint(path, "pretrained"));
}

ubcg::UbcgModel load_generator(const std::string& path) {
  require(path, "--ubcg");
  if (!fs::exists(path)) throw ConfigError(path + ": UBCG checkpoint not found");
  return io::ubcg_from_checkpoint(io::load_checkpoint(path, "ubcg"));
}

tag::TextAttributedGraph load_data(const std::string& dir) {
  require(dir, "--data");
  return tag::load_tag(dir);
}

int cmd_synth_data(const Options& o) {
  const cli::RunConfig c = load_config(o);
  require(o.out, "--out");
  const tag::TextAttributedGraph g = cli::make_corpus(c);
  tag::save_tag(g, o.out);
  std::cout << "wrote " << g.num_nodes() << " nodes, " << g.edges().size() << " edges to " << o.out << "\n";
  return 0;
}

int cmd_pretrain(const Options& o) {
  const cli::RunConfig c = load_config(o);
  require(o.out, "--out");
  const tag::TextAttributedGraph g = load_data(o.data);
  const pretrain::PretrainConfig pc = c.pretrain_config();
  std::cout << "pretrain: lr " << pc.learning_rate << ", epochs " << pc.epochs << ", alpha " << pc.alpha << "\n";
  pretrain::PretrainResult r = pretrain::pretrain(g, pc, c.text_encoder, c.graph_encoder);
  if (fs::path(o.out).has_parent_path()) fs::create_directories(fs::path(o.out).parent_path());
  const std::string digest = io::save_checkpoint(io::to_checkpoint(r.model, cli::to_json(c)), o.out);
  pretrain::write_log_jsonl(r.log, o.out + ".log.jsonl");
  std::cout << "final loss " << r.epoch_means.back() << "; checkpoint " << o.out << " sha256 " << digest << "\n";
  return 0;
}

int cmd_train_ubcg(const Options& o) {
  const cli::RunConfig c = load_config(o);
  require(o.out, "--out");
  const enc::PretrainedModel model = load_pretrained(o.pretrained);
  const tag::TextAttributedGraph g = load_data(o.data);
  const eval::EmbeddingCache cache = eval::embed_graph(g, model);
  const ubcg::UbcgConfig uc = c.ubcg_config();
  ubcg::UbcgTrainResult r = ubcg::train_ubcg(cache.nodes, cache.texts, uc);
  std::cout << "ubcg: lr " << uc.learning_rate << ", epochs " << uc.epochs << ", latent " << uc.latent_dim
            << ", text_direction " << (uc.text_direction ? "true" : "false") << "\n";
  std::cout << "parameter count " << r.model.parameter_count() << "\n";
  if (fs::path(o.out).has_parent_path()) fs::create_directories(fs::path(o.out).parent_path());
  const std::string digest = io::save_checkpoint(io::to_checkpoint(r.model, cli::to_json(c)), o.out);
  std::cout << "loss " << r.epoch_losses.front() << " -> " << r.epoch_losses.back() << "; checkpoint " << o.out
            << " sha256 " << digest << "\n";
  return 0;
}

int cmd_eval(const Options& o, bool visualize) {
  const cli::Mode mode = cli::parse_mode(o.mode);
  const cli::RunConfig c = load_config(o);
  const enc::PretrainedModel model = load_pretrained(o.pretrained);
  std::optional<ubcg::UbcgModel> generator;
  if (cli::needs_generator(mode) || visualize) generator = load_generator(o.ubcg);
  const tag::TextAttributedGraph g = load_data(o.data);
  const cli::EvalContext ctx = cli::make_context(g, model, c);

  const cli::ModeResult r = cli::run_mode(mode, c, ctx, generator ? &*generator : nullptr, o.templ);
  json report = cli::report_header(visualize ? "visualize" : "eval", c);
  report["mode"] = cli::to_string(mode);
  report["lambda"] = r.detail.value("lambda", c.zpt.hybrid.lambda);
  report["samples_per_class"] = c.zpt.samples_per_class;
  report["checkpoints"] = {{"pretrained", io::checkpoint_digest(o.pretrained)}};
  if (generator) report["checkpoints"]["ubcg"] = io::checkpoint_digest(o.ubcg);
  report["tasks"] = {{"n_way", c.harness.n_way},
                     {"num_tasks", c.harness.num_tasks},
                     {"queries_per_class", c.harness.queries_per_class}};
  report["detail"] = r.detail;
  report["metrics"] = eval::to_json(r.metrics);

  if (visualize) {
    std::string csv = o.projection;
    if (csv.empty()) csv = o.out.empty() ? "projection.csv" : fs::path(o.out).replace_extension(".projection.csv").string();
    const int per = c.harness.projection_samples_per_class;
    eval::TsneConfig tc = c.harness.tsne;
    tc.seed = c.projection_seed();
    const eval::CentroidReport cr = eval::export_projection(
        cli::real_pairs(ctx, per), cli::synthetic_pairs(c, ctx, *generator, per), csv, tc);
    report["projection"] = {{"csv", csv}, {"centroids", cr.to_json()}};
  }

  std::cout << "mode " << cli::to_string(mode) << ": accuracy " << r.metrics.accuracy.mean << " ± "
            << r.metrics.accuracy.std << ", macro-F1 " << r.metrics.macro_f1.mean << " ± " << r.metrics.macro_f1.std
            << " over " << r.metrics.per_task.size() << " tasks (lambda " << report["lambda"].get<double>()
            << ", samples " << c.zpt.samples_per_class << ", run " << report["run_id"].get<std::string>() << ")\n";
  for (const std::string& note : r.metrics.notes) std::cout << "note: " << note << "\n";
  if (o.out.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    write_json(report, o.out);
  }
  return 0;
}

int cmd_sensitivity(const Options& o) {
  const cli::RunConfig c = load_config(o);
  const enc::PretrainedModel model = load_pretrained(o.pretrained);
  const ubcg::UbcgModel generator = load_generator(o.ubcg);
  const tag::TextAttributedGraph g = load_data(o.data);
  const cli::EvalContext ctx = cli::make_context(g, model, c);
  const cli::SensitivityReport s = cli::sensitivity_sweep(c, ctx, generator);
  json report = cli::report_header("sensitivity", c);
  report["sweeps"] = s.to_json();
  for (const auto& [param, rows] : report["sweeps"].items()) {
    std::cout << param << ":";
    for (const auto& row : rows) std::cout << " " << row["value"].get<double>() << "=" << row["accuracy"]["mean"].get<double>();
    std::cout << "\n";
  }
  if (o.out.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    write_json(report, o.out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_runtime();
  CLI::App app{"Zero-shot node classification with generated prompts-tuning samples"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "TOML-like run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Global seed; overrides the config");
    sub->add_option("--out", o.out, "Output path");
  };
  auto* synth = app.add_subcommand("synth-data", "Write the planted synthetic corpus");
  common(synth);
  auto* pre = app.add_subcommand("pretrain", "Graph-text contrastive pre-training");
  common(pre);
  pre->add_option("--data", o.data, "Corpus directory");
  auto* ubcg_cmd = app.add_subcommand("train-ubcg", "Train the bimodal conditional generator");
  common(ubcg_cmd);
  ubcg_cmd->add_option("--data", o.data, "Corpus directory");
  ubcg_cmd->add_option("--pretrained", o.pretrained, "Pretrained checkpoint");
  std::vector<CLI::App*> evals;
  for (const char* name : {"eval", "visualize"}) {
    auto* e = app.add_subcommand(name, std::string(name) == "eval"
                                           ? "Zero-shot evaluation"
                                           : "Evaluation plus projection CSV and centroid report");
    common(e);
    e->add_option("--data", o.data, "Corpus directory");
    e->add_option("--pretrained", o.pretrained, "Pretrained checkpoint");
    e->add_option("--ubcg", o.ubcg, "UBCG checkpoint");
    e->add_option("--mode", o.mode, "zpt | zpt-context | discrete | node-only | simple | pseudo");
    e->add_option("--template", o.templ, "Template with a {class name} slot");
    e->add_option("--projection", o.projection, "Projection CSV path");
    evals.push_back(e);
  }
  auto* sens = app.add_subcommand("sensitivity", "Sweep latent_dim, samples per class and lambda");
  common(sens);
  sens->add_option("--data", o.data, "Corpus directory");
  sens->add_option("--pretrained", o.pretrained, "Pretrained checkpoint");
  sens->add_option("--ubcg", o.ubcg, "UBCG checkpoint");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth_data(o);
    if (pre->parsed()) return cmd_pretrain(o);
    if (ubcg_cmd->parsed()) return cmd_train_ubcg(o);
    if (evals[0]->parsed()) return cmd_eval(o, false);
    if (evals[1]->parsed()) return cmd_eval(o, true);
    if (sens->parsed()) return cmd_sensitivity(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const LoadError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
