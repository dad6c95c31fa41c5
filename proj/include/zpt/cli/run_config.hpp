#pragma once

#include "zpt/encoders/graph_encoder.hpp"
#include "zpt/encoders/text_encoder.hpp"
#include "zpt/eval/harness.hpp"
#include "zpt/pretrain/trainer.hpp"
#include "zpt/prompt/prompt.hpp"
#include "zpt/tag/synthetic.hpp"
#include "zpt/ubcg/ubcg.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace zpt::cli {

struct HarnessSettings {
  int n_way = 5;
  int num_tasks = 10;
  int queries_per_class = 20;
  std::string discrete_template = "{class name}";
  // Template that labels nodes in pseudo mode; "best" picks the best-of-sweep
  // discrete template on the evaluation tasks.
  std::string pseudo_template = "best";
  int pseudo_max_per_class = 200;
  eval::LinearClassifierConfig linear;
  eval::TsneConfig tsne;
  // Real nodes and synthetic samples per class in the projection export.
  int projection_samples_per_class = 100;

  void validate() const;
};

// Everything a command needs. Component seeds are derived from `seed`;
// the corpus keeps its own data.seed so that model seeds vary on a fixed graph.
struct RunConfig {
  std::uint64_t seed = 0;
  tag::SyntheticTagSpec data;
  enc::TextEncoderConfig text_encoder;
  enc::GraphEncoderConfig graph_encoder;
  pretrain::PretrainConfig pretrain;
  ubcg::UbcgConfig ubcg;
  eval::ZptConfig zpt;
  HarnessSettings harness;

  void validate() const;

  pretrain::PretrainConfig pretrain_config() const;
  ubcg::UbcgConfig ubcg_config() const;
  eval::ZptConfig zpt_config() const;
  std::uint64_t task_seed() const;
  std::uint64_t projection_seed() const;
};

// TOML subset: [section] headers, key = value with integers, reals,
// booleans, "strings" and [arrays] of integers, '#' comments.
// Unknown sections or keys raise ConfigError naming them.
RunConfig parse_run_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& config);
// First 12 hex digits of SHA-256 over the canonical JSON echo.
std::string run_id(const RunConfig& config);

}  // namespace zpt::cli
