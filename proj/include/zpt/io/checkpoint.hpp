#pragma once

// Checkpoint container: magic, little-endian u64 header length, JSON header,
// then a raw blob of little-endian float64 tensors. The header records each
// tensor's name, shape and byte offset plus the SHA-256 of the blob.

#include "zpt/ad/tape.hpp"
#include "zpt/encoders/model.hpp"
#include "zpt/prompt/prompt.hpp"
#include "zpt/ubcg/ubcg.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace zpt::io {

inline constexpr int kSchemaVersion = 1;

struct NamedTensor {
  std::string name;
  ad::Matrix value;
};

struct Checkpoint {
  int schema_version = kSchemaVersion;
  std::string stage;  // pretrained | ubcg | tuned
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  const ad::Matrix& tensor(const std::string& name) const;
};

std::string sha256_hex(const std::string& bytes);

// Returns the blob digest.
std::string save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
// Verifies magic, schema version, digest and, when given, the stage.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::string> expected_stage = std::nullopt);
// Digest recorded in the header, without reading tensors.
std::string checkpoint_digest(const std::filesystem::path& path);

nlohmann::json to_json(const enc::TextEncoderConfig& c);
nlohmann::json to_json(const enc::GraphEncoderConfig& c);
nlohmann::json to_json(const ubcg::UbcgConfig& c);
enc::TextEncoderConfig text_config_from_json(const nlohmann::json& j);
enc::GraphEncoderConfig graph_config_from_json(const nlohmann::json& j);
ubcg::UbcgConfig ubcg_config_from_json(const nlohmann::json& j);

Checkpoint to_checkpoint(const enc::PretrainedModel& model, nlohmann::json config = {});
enc::PretrainedModel pretrained_from_checkpoint(const Checkpoint& checkpoint);

Checkpoint to_checkpoint(const ubcg::UbcgModel& model, nlohmann::json config = {});
ubcg::UbcgModel ubcg_from_checkpoint(const Checkpoint& checkpoint);

Checkpoint to_checkpoint(const prompt::ContinuousPrompt& prompt, nlohmann::json config = {});
prompt::ContinuousPrompt prompt_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace zpt::io
