#include "zpt/cli/run_config.hpp"

#include "zpt/ad/random.hpp"
#include "zpt/errors.hpp"
#include "zpt/io/checkpoint.hpp"

#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace zpt::cli {

using nlohmann::json;

void HarnessSettings::validate() const {
  if (n_way < 2) throw ConfigError("harness.n_way must be >= 2");
  if (num_tasks < 1) throw ConfigError("harness.num_tasks must be >= 1");
  if (queries_per_class < 1) throw ConfigError("harness.queries_per_class must be >= 1");
  if (pseudo_max_per_class < 1) throw ConfigError("harness.pseudo_max_per_class must be >= 1");
  if (projection_samples_per_class < 1) throw ConfigError("harness.projection_samples_per_class must be >= 1");
  if (!(linear.learning_rate > 0.0)) throw ConfigError("harness.linear_learning_rate must be > 0");
  if (linear.epochs < 1) throw ConfigError("harness.linear_epochs must be >= 1");
  if (linear.batch_size < 1) throw ConfigError("harness.linear_batch_size must be >= 1");
  if (!(tsne.perplexity > 0.0)) throw ConfigError("harness.tsne_perplexity must be > 0");
  if (tsne.iterations < 1) throw ConfigError("harness.tsne_iterations must be >= 1");
  if (!(tsne.learning_rate > 0.0)) throw ConfigError("harness.tsne_learning_rate must be > 0");
  prompt::instantiate(discrete_template, "x");
  if (pseudo_template != "best") prompt::instantiate(pseudo_template, "x");
}

void RunConfig::validate() const {
  data.validate();
  text_encoder.validate();
  graph_encoder.validate();
  pretrain.validate();
  ubcg.validate();
  zpt.hybrid.validate();
  if (zpt.samples_per_class < 1) throw ConfigError("prompt.samples_per_class must be >= 1");
  if (zpt.context_length < 0) throw ConfigError("prompt.context_length must be >= 0");
  prompt::instantiate(zpt.context_template, "x");
  harness.validate();
}

pretrain::PretrainConfig RunConfig::pretrain_config() const {
  pretrain::PretrainConfig c = pretrain;
  c.seed = derive_seed(seed, 1);
  return c;
}

ubcg::UbcgConfig RunConfig::ubcg_config() const {
  ubcg::UbcgConfig c = ubcg;
  c.seed = derive_seed(seed, 2);
  return c;
}

eval::ZptConfig RunConfig::zpt_config() const {
  eval::ZptConfig c = zpt;
  c.seed = derive_seed(seed, 4);
  return c;
}

std::uint64_t RunConfig::task_seed() const { return derive_seed(seed, 3); }
std::uint64_t RunConfig::projection_seed() const { return derive_seed(seed, 5); }

namespace {

struct Cursor {
  const std::string& line;
  std::size_t pos = 0;
  std::string where;

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(where + ": " + what); }
  void skip_ws() {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
  }
  bool done() {
    skip_ws();
    return pos >= line.size() || line[pos] == '#';
  }
};

json parse_value(Cursor& c) {
  c.skip_ws();
  if (c.pos >= c.line.size()) c.fail("missing value");
  const char ch = c.line[c.pos];
  if (ch == '"') {
    std::string out;
    for (++c.pos; c.pos < c.line.size(); ++c.pos) {
      char x = c.line[c.pos];
      if (x == '"') {
        ++c.pos;
        return out;
      }
      if (x == '\\') {
        if (++c.pos >= c.line.size()) break;
        x = c.line[c.pos];
        if (x == 'n') x = '\n';
        else if (x == 't') x = '\t';
        else if (x != '"' && x != '\\') c.fail(std::string("unsupported escape \\") + x);
      }
      out += x;
    }
    c.fail("unterminated string");
  }
  if (ch == '[') {
    json arr = json::array();
    ++c.pos;
    c.skip_ws();
    if (c.pos < c.line.size() && c.line[c.pos] == ']') {
      ++c.pos;
      return arr;
    }
    for (;;) {
      arr.push_back(parse_value(c));
      c.skip_ws();
      if (c.pos >= c.line.size()) c.fail("unterminated array");
      if (c.line[c.pos] == ']') {
        ++c.pos;
        return arr;
      }
      if (c.line[c.pos] != ',') c.fail("expected ',' or ']' in array");
      ++c.pos;
    }
  }
  std::size_t end = c.pos;
  while (end < c.line.size() && !std::isspace(static_cast<unsigned char>(c.line[end])) &&
         c.line[end] != ',' && c.line[end] != ']' && c.line[end] != '#') {
    ++end;
  }
  const std::string tok = c.line.substr(c.pos, end - c.pos);
  c.pos = end;
  if (tok == "true") return true;
  if (tok == "false") return false;
  try {
    std::size_t used = 0;
    if (tok.find_first_of(".eE") == std::string::npos && tok.find("inf") == std::string::npos &&
        tok.find("nan") == std::string::npos) {
      const long long v = std::stoll(tok, &used);
      if (used == tok.size()) return v;
    } else {
      const double v = std::stod(tok, &used);
      if (used == tok.size()) return v;
    }
  } catch (const std::exception&) {
  }
  c.fail("cannot parse value '" + tok + "'");
}

using Setter = std::function<void(const json&, const std::string&)>;

long long as_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError(key + ": expected an integer");
  return v.get<long long>();
}

int as_int32(const json& v, const std::string& key) {
  const long long x = as_int(v, key);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError(key + ": integer out of range");
  }
  return static_cast<int>(x);
}

double as_real(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key + ": expected a number");
  return v.get<double>();
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError(key + ": expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError(key + ": expected true or false");
  return v.get<bool>();
}

std::vector<int> as_int_list(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError(key + ": expected an array of integers");
  std::vector<int> out;
  for (const json& x : v) out.push_back(as_int32(x, key));
  return out;
}

std::uint64_t as_seed(const json& v, const std::string& key) {
  const long long x = as_int(v, key);
  if (x < 0) throw ConfigError(key + ": seed must be >= 0");
  return static_cast<std::uint64_t>(x);
}

#define ZPT_INT(field) [&](const json& v, const std::string& k) { field = as_int32(v, k); }
#define ZPT_REAL(field) [&](const json& v, const std::string& k) { field = as_real(v, k); }
#define ZPT_STR(field) [&](const json& v, const std::string& k) { field = as_string(v, k); }

std::map<std::string, std::map<std::string, Setter>> setters(RunConfig& c) {
  std::map<std::string, std::map<std::string, Setter>> s;
  s[""] = {{"seed", [&](const json& v, const std::string& k) { c.seed = as_seed(v, k); }}};
  s["data"] = {
      {"num_classes", ZPT_INT(c.data.num_classes)},
      {"nodes_per_class", ZPT_INT(c.data.nodes_per_class)},
      {"tokens_per_class", ZPT_INT(c.data.tokens_per_class)},
      {"text_len", ZPT_INT(c.data.text_len)},
      {"topic_prob", ZPT_REAL(c.data.topic_prob)},
      {"intra_edge_prob", ZPT_REAL(c.data.intra_edge_prob)},
      {"inter_edge_prob", ZPT_REAL(c.data.inter_edge_prob)},
      {"feature_dim", ZPT_INT(c.data.feature_dim)},
      {"feature_noise", ZPT_REAL(c.data.feature_noise)},
      {"seed", [&](const json& v, const std::string& k) { c.data.seed = as_seed(v, k); }},
  };
  s["text_encoder"] = {
      {"layers", ZPT_INT(c.text_encoder.layers)},
      {"width", ZPT_INT(c.text_encoder.width)},
      {"heads", ZPT_INT(c.text_encoder.heads)},
      {"max_seq_len", ZPT_INT(c.text_encoder.max_seq_len)},
      {"ffn_multiplier", ZPT_INT(c.text_encoder.ffn_multiplier)},
  };
  s["graph_encoder"] = {
      {"layers", ZPT_INT(c.graph_encoder.layers)},
      {"hidden_dim", ZPT_INT(c.graph_encoder.hidden_dim)},
      {"negative_slope", ZPT_REAL(c.graph_encoder.negative_slope)},
  };
  s["pretrain"] = {
      {"alpha", ZPT_REAL(c.pretrain.alpha)},
      {"learning_rate", ZPT_REAL(c.pretrain.learning_rate)},
      {"epochs", ZPT_INT(c.pretrain.epochs)},
      {"batch_size", ZPT_INT(c.pretrain.batch_size)},
      {"tau_init", ZPT_REAL(c.pretrain.tau_init)},
      {"max_logit_scale", ZPT_REAL(c.pretrain.max_logit_scale)},
      {"max_vocab", [&](const json& v, const std::string& k) {
         const long long x = as_int(v, k);
         if (x < 1) throw ConfigError(k + ": must be >= 1");
         c.pretrain.max_vocab = static_cast<std::size_t>(x);
       }},
  };
  s["ubcg"] = {
      {"enc_hidden", [&](const json& v, const std::string& k) { c.ubcg.enc_hidden = as_int_list(v, k); }},
      {"dec_hidden", [&](const json& v, const std::string& k) { c.ubcg.dec_hidden = as_int_list(v, k); }},
      {"latent_dim", ZPT_INT(c.ubcg.latent_dim)},
      {"learning_rate", ZPT_REAL(c.ubcg.learning_rate)},
      {"epochs", ZPT_INT(c.ubcg.epochs)},
      {"batch_size", ZPT_INT(c.ubcg.batch_size)},
      {"text_direction", [&](const json& v, const std::string& k) { c.ubcg.text_direction = as_bool(v, k); }},
  };
  s["prompt"] = {
      {"lambda", ZPT_REAL(c.zpt.hybrid.lambda)},
      {"learning_rate", ZPT_REAL(c.zpt.hybrid.learning_rate)},
      {"epochs", ZPT_INT(c.zpt.hybrid.epochs)},
      {"batch_size", ZPT_INT(c.zpt.hybrid.batch_size)},
      {"context_length", ZPT_INT(c.zpt.context_length)},
      {"samples_per_class", ZPT_INT(c.zpt.samples_per_class)},
      {"context_template", ZPT_STR(c.zpt.context_template)},
  };
  s["harness"] = {
      {"n_way", ZPT_INT(c.harness.n_way)},
      {"num_tasks", ZPT_INT(c.harness.num_tasks)},
      {"queries_per_class", ZPT_INT(c.harness.queries_per_class)},
      {"discrete_template", ZPT_STR(c.harness.discrete_template)},
      {"pseudo_template", ZPT_STR(c.harness.pseudo_template)},
      {"pseudo_max_per_class", ZPT_INT(c.harness.pseudo_max_per_class)},
      {"linear_learning_rate", ZPT_REAL(c.harness.linear.learning_rate)},
      {"linear_epochs", ZPT_INT(c.harness.linear.epochs)},
      {"linear_batch_size", ZPT_INT(c.harness.linear.batch_size)},
      {"tsne_perplexity", ZPT_REAL(c.harness.tsne.perplexity)},
      {"tsne_iterations", ZPT_INT(c.harness.tsne.iterations)},
      {"tsne_learning_rate", ZPT_REAL(c.harness.tsne.learning_rate)},
      {"projection_samples_per_class", ZPT_INT(c.harness.projection_samples_per_class)},
  };
  return s;
}

#undef ZPT_INT
#undef ZPT_REAL
#undef ZPT_STR

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  RunConfig config;
  auto table = setters(config);
  std::string section;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    Cursor c{line, 0, origin + ":" + std::to_string(lineno)};
    if (c.done()) continue;
    if (line[c.pos] == '[') {
      const std::size_t close = line.find(']', c.pos);
      if (close == std::string::npos) c.fail("unterminated section header");
      section = line.substr(c.pos + 1, close - c.pos - 1);
      if (!table.count(section) || section.empty()) c.fail("unknown section [" + section + "]");
      c.pos = close + 1;
      if (!c.done()) c.fail("trailing characters after section header");
      continue;
    }
    std::size_t eq = line.find('=', c.pos);
    if (eq == std::string::npos) c.fail("expected key = value");
    std::string key = line.substr(c.pos, eq - c.pos);
    while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
    const std::string full = section.empty() ? key : section + "." + key;
    const auto& keys = table.at(section);
    const auto it = keys.find(key);
    if (key.empty() || it == keys.end()) c.fail("unknown key '" + full + "'");
    if (!seen.insert(full).second) c.fail("duplicate key '" + full + "'");
    c.pos = eq + 1;
    const json value = parse_value(c);
    if (!c.done()) c.fail("trailing characters after value of '" + full + "'");
    try {
      it->second(value, full);
    } catch (const ConfigError& e) {
      throw ConfigError(c.where + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.string());
}

json to_json(const RunConfig& c) {
  const auto& d = c.data;
  const auto& p = c.pretrain;
  const auto& h = c.harness;
  return {
      {"seed", c.seed},
      {"data",
       {{"num_classes", d.num_classes},
        {"nodes_per_class", d.nodes_per_class},
        {"tokens_per_class", d.tokens_per_class},
        {"text_len", d.text_len},
        {"topic_prob", d.topic_prob},
        {"intra_edge_prob", d.intra_edge_prob},
        {"inter_edge_prob", d.inter_edge_prob},
        {"feature_dim", d.feature_dim},
        {"feature_noise", d.feature_noise},
        {"seed", d.seed}}},
      {"text_encoder", io::to_json(c.text_encoder)},
      {"graph_encoder", io::to_json(c.graph_encoder)},
      {"pretrain",
       {{"alpha", p.alpha},
        {"learning_rate", p.learning_rate},
        {"epochs", p.epochs},
        {"batch_size", p.batch_size},
        {"tau_init", p.tau_init},
        {"max_logit_scale", p.max_logit_scale},
        {"max_vocab", p.max_vocab}}},
      {"ubcg", io::to_json(c.ubcg)},
      {"prompt",
       {{"lambda", c.zpt.hybrid.lambda},
        {"learning_rate", c.zpt.hybrid.learning_rate},
        {"epochs", c.zpt.hybrid.epochs},
        {"batch_size", c.zpt.hybrid.batch_size},
        {"context_length", c.zpt.context_length},
        {"samples_per_class", c.zpt.samples_per_class},
        {"context_template", c.zpt.context_template}}},
      {"harness",
       {{"n_way", h.n_way},
        {"num_tasks", h.num_tasks},
        {"queries_per_class", h.queries_per_class},
        {"discrete_template", h.discrete_template},
        {"pseudo_template", h.pseudo_template},
        {"pseudo_max_per_class", h.pseudo_max_per_class},
        {"linear_learning_rate", h.linear.learning_rate},
        {"linear_epochs", h.linear.epochs},
        {"linear_batch_size", h.linear.batch_size},
        {"tsne_perplexity", h.tsne.perplexity},
        {"tsne_iterations", h.tsne.iterations},
        {"tsne_learning_rate", h.tsne.learning_rate},
        {"projection_samples_per_class", h.projection_samples_per_class}}},
  };
}

std::string run_id(const RunConfig& config) { return io::sha256_hex(to_json(config).dump()).substr(0, 12); }

}  // namespace zpt::cli
