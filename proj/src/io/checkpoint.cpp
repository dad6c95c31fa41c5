#include "zpt/io/checkpoint.hpp"

#include "zpt/errors.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace zpt::io {

static_assert(std::endian::native == std::endian::little, "checkpoint blobs are little-endian");

namespace {

constexpr char kMagic[8] = {'Z', 'P', 'T', 'C', 'K', 'P', 'T', '1'};

using nlohmann::json;

}  // namespace

const ad::Matrix& Checkpoint::tensor(const std::string& name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return t.value;
  }
  throw LoadError("checkpoint (" + stage + "): missing tensor " + name);
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256: digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

std::string save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  std::string blob;
  json tensors = json::array();
  for (const NamedTensor& t : checkpoint.tensors) {
    const std::size_t bytes = static_cast<std::size_t>(t.value.size()) * sizeof(double);
    tensors.push_back({{"name", t.name},
                       {"shape", {t.value.rows(), t.value.cols()}},
                       {"dtype", "f64"},
                       {"offset", blob.size()},
                       {"bytes", bytes}});
    // Row-major storage, so the blob is row-major.
    blob.append(reinterpret_cast<const char*>(t.value.data()), bytes);
  }
  const std::string digest = sha256_hex(blob);
  const json header{{"schema_version", checkpoint.schema_version},
                    {"stage", checkpoint.stage},
                    {"config", checkpoint.config},
                    {"metadata", checkpoint.metadata},
                    {"tensors", tensors},
                    {"digest", digest}};
  const std::string head = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  const std::uint64_t head_len = head.size();
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw IoError(path.string() + ": write failed");
  return digest;
}

namespace {

json read_header(std::ifstream& in, const std::filesystem::path& path) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw LoadError(path.string() + ": not a checkpoint (bad magic)");
  }
  std::uint64_t head_len = 0;
  in.read(reinterpret_cast<char*>(&head_len), sizeof(head_len));
  if (!in || head_len > (1ULL << 30)) throw LoadError(path.string() + ": corrupt header length");
  std::string head(head_len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head_len));
  if (!in) throw LoadError(path.string() + ": truncated header");
  json header;
  try {
    header = json::parse(head);
  } catch (const json::exception& e) {
    throw LoadError(path.string() + ": header is not valid JSON: " + e.what());
  }
  const int version = header.value("schema_version", -1);
  if (version != kSchemaVersion) {
    throw LoadError(path.string() + ": schema version " + std::to_string(version) +
                    " does not match supported version " + std::to_string(kSchemaVersion));
  }
  return header;
}

}  // namespace

std::string checkpoint_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path.string() + ": cannot open checkpoint");
  return read_header(in, path).at("digest").get<std::string>();
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::string> expected_stage) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path.string() + ": cannot open checkpoint");
  const json header = read_header(in, path);
  std::ostringstream rest;
  rest << in.rdbuf();
  const std::string blob = rest.str();
  if (sha256_hex(blob) != header.at("digest").get<std::string>()) {
    throw LoadError(path.string() + ": digest mismatch, file is corrupt");
  }
  Checkpoint c;
  try {
    c.schema_version = header.at("schema_version").get<int>();
    c.stage = header.at("stage").get<std::string>();
    c.config = header.at("config");
    c.metadata = header.at("metadata");
    for (const json& t : header.at("tensors")) {
      if (t.at("dtype").get<std::string>() != "f64") {
        throw LoadError(path.string() + ": unsupported dtype for " + t.at("name").get<std::string>());
      }
      const auto rows = t.at("shape").at(0).get<Eigen::Index>();
      const auto cols = t.at("shape").at(1).get<Eigen::Index>();
      const auto offset = t.at("offset").get<std::size_t>();
      const std::size_t bytes = static_cast<std::size_t>(rows * cols) * sizeof(double);
      if (rows < 0 || cols < 0 || offset + bytes > blob.size()) {
        throw LoadError(path.string() + ": tensor " + t.at("name").get<std::string>() +
                        " lies outside the blob");
      }
      NamedTensor nt{t.at("name").get<std::string>(), ad::Matrix(rows, cols)};
      std::memcpy(nt.value.data(), blob.data() + offset, bytes);
      c.tensors.push_back(std::move(nt));
    }
  } catch (const json::exception& e) {
    throw LoadError(path.string() + ": malformed header: " + e.what());
  }
  if (expected_stage && c.stage != *expected_stage) {
    throw LoadError(path.string() + ": expected a " + *expected_stage + " checkpoint, found " +
                    c.stage);
  }
  return c;
}

json to_json(const enc::TextEncoderConfig& c) {
  return {{"layers", c.layers},           {"width", c.width},
          {"heads", c.heads},             {"max_seq_len", c.max_seq_len},
          {"output_dim", c.output_dim},   {"ffn_multiplier", c.ffn_multiplier}};
}

json to_json(const enc::GraphEncoderConfig& c) {
  return {{"layers", c.layers}, {"hidden_dim", c.hidden_dim}, {"negative_slope", c.negative_slope}};
}

json to_json(const ubcg::UbcgConfig& c) {
  return {{"input_dim", c.input_dim},   {"cond_dim", c.cond_dim},
          {"enc_hidden", c.enc_hidden}, {"dec_hidden", c.dec_hidden},
          {"latent_dim", c.latent_dim}, {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},         {"batch_size", c.batch_size},
          {"seed", c.seed},             {"text_direction", c.text_direction}};
}

enc::TextEncoderConfig text_config_from_json(const json& j) {
  enc::TextEncoderConfig c;
  c.layers = j.at("layers").get<int>();
  c.width = j.at("width").get<int>();
  c.heads = j.at("heads").get<int>();
  c.max_seq_len = j.at("max_seq_len").get<int>();
  c.output_dim = j.at("output_dim").get<int>();
  c.ffn_multiplier = j.at("ffn_multiplier").get<int>();
  return c;
}

enc::GraphEncoderConfig graph_config_from_json(const json& j) {
  enc::GraphEncoderConfig c;
  c.layers = j.at("layers").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.negative_slope = j.at("negative_slope").get<double>();
  return c;
}

ubcg::UbcgConfig ubcg_config_from_json(const json& j) {
  ubcg::UbcgConfig c;
  c.input_dim = j.at("input_dim").get<int>();
  c.cond_dim = j.at("cond_dim").get<int>();
  c.enc_hidden = j.at("enc_hidden").get<std::vector<int>>();
  c.dec_hidden = j.at("dec_hidden").get<std::vector<int>>();
  c.latent_dim = j.at("latent_dim").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.text_direction = j.at("text_direction").get<bool>();
  return c;
}

namespace {

template <typename Params>
std::vector<NamedTensor> collect(const Params& params) {
  std::vector<NamedTensor> out;
  for (const ad::Parameter* p : params) out.push_back({p->name, p->value});
  return out;
}

// Copies every tensor into the matching parameter; names and shapes must
// agree one to one.
void restore(const Checkpoint& c, const std::vector<ad::Parameter*>& params) {
  std::map<std::string, const ad::Matrix*> by_name;
  for (const NamedTensor& t : c.tensors) by_name[t.name] = &t.value;
  if (by_name.size() != params.size()) {
    throw LoadError("checkpoint (" + c.stage + "): expected " + std::to_string(params.size()) +
                    " tensors, found " + std::to_string(by_name.size()));
  }
  for (ad::Parameter* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw LoadError("checkpoint (" + c.stage + "): missing tensor " + p->name);
    if (it->second->rows() != p->value.rows() || it->second->cols() != p->value.cols()) {
      throw LoadError("checkpoint (" + c.stage + "): tensor " + p->name + " has the wrong shape");
    }
    p->value = *it->second;
  }
}

}  // namespace

Checkpoint to_checkpoint(const enc::PretrainedModel& model, json config) {
  Checkpoint c;
  c.stage = "pretrained";
  c.config = std::move(config);
  c.metadata = {{"vocab", model.vocab.to_json()},
                {"text_encoder", to_json(model.text_config)},
                {"graph_encoder", to_json(model.graph_config)},
                {"feature_dim", model.graph.input_dim()}};
  c.tensors = collect(model.parameters());
  return c;
}

enc::PretrainedModel pretrained_from_checkpoint(const Checkpoint& c) {
  if (c.stage != "pretrained") throw LoadError("expected a pretrained checkpoint, found " + c.stage);
  try {
    enc::PretrainedModel m = enc::PretrainedModel::create(
        enc::Vocabulary::from_json(c.metadata.at("vocab")),
        text_config_from_json(c.metadata.at("text_encoder")),
        graph_config_from_json(c.metadata.at("graph_encoder")),
        c.metadata.at("feature_dim").get<int>(), 0, 0.0);
    restore(c, m.parameters());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("pretrained checkpoint metadata: ") + e.what());
  }
}

Checkpoint to_checkpoint(const ubcg::UbcgModel& model, json config) {
  Checkpoint c;
  c.stage = "ubcg";
  c.config = std::move(config);
  c.metadata = {{"ubcg", to_json(model.config())},
                {"trained", model.trained()},
                {"parameter_count", model.parameter_count()}};
  c.tensors = collect(model.parameters());
  return c;
}

ubcg::UbcgModel ubcg_from_checkpoint(const Checkpoint& c) {
  if (c.stage != "ubcg") throw LoadError("expected a ubcg checkpoint, found " + c.stage);
  try {
    ubcg::UbcgModel m(ubcg_config_from_json(c.metadata.at("ubcg")));
    restore(c, m.parameters());
    m.set_trained(c.metadata.at("trained").get<bool>());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("ubcg checkpoint metadata: ") + e.what());
  }
}

Checkpoint to_checkpoint(const prompt::ContinuousPrompt& p, json config) {
  Checkpoint c;
  c.stage = "tuned";
  c.config = std::move(config);
  c.metadata = {{"class_texts", p.class_texts}, {"class_tokens", p.class_tokens}};
  c.tensors.push_back({"prompt.context", p.context});
  return c;
}

prompt::ContinuousPrompt prompt_from_checkpoint(const Checkpoint& c) {
  if (c.stage != "tuned") throw LoadError("expected a tuned checkpoint, found " + c.stage);
  try {
    prompt::ContinuousPrompt p;
    p.context = c.tensor("prompt.context");
    p.class_texts = c.metadata.at("class_texts").get<std::vector<std::string>>();
    p.class_tokens = c.metadata.at("class_tokens").get<std::vector<std::vector<int>>>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("tuned checkpoint metadata: ") + e.what());
  }
}

}  // namespace zpt::io
