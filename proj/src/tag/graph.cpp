#include "zpt/tag/graph.hpp"

#include "zpt/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace zpt::tag {

using json = nlohmann::json;

TextAttributedGraph::TextAttributedGraph(std::vector<NodeId> node_ids,
                                         std::vector<std::pair<NodeId, NodeId>> edges,
                                         Matrix features, std::vector<std::string> texts,
                                         std::optional<std::vector<std::string>> labels)
    : node_ids_(std::move(node_ids)),
      features_(std::move(features)),
      texts_(std::move(texts)),
      labels_(std::move(labels)) {
  const std::size_t n = node_ids_.size();
  if (texts_.size() != n) {
    throw ContractError("graph: " + std::to_string(texts_.size()) + " texts for " +
                        std::to_string(n) + " nodes");
  }
  if (static_cast<std::size_t>(features_.rows()) != n) {
    throw ContractError("graph: " + std::to_string(features_.rows()) + " feature rows for " +
                        std::to_string(n) + " nodes");
  }
  if (labels_) {
    if (labels_->size() != n) throw ContractError("graph: label count differs from node count");
    for (std::size_t i = 0; i < n; ++i) {
      if ((*labels_)[i].empty()) {
        throw ContractError("graph: empty label for node " + std::to_string(node_ids_[i]));
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!index_.emplace(node_ids_[i], i).second) {
      throw ContractError("graph: duplicate node id " + std::to_string(node_ids_[i]));
    }
  }

  std::vector<std::pair<NodeId, NodeId>> canon;
  canon.reserve(edges.size());
  for (const auto& [u, v] : edges) {
    if (!contains(u) || !contains(v)) {
      throw ContractError("graph: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                          ") has a dangling endpoint");
    }
    if (u == v) continue;
    canon.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(canon.begin(), canon.end());
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());
  edges_ = std::move(canon);

  adjacency_.assign(n, {});
  for (const auto& [u, v] : edges_) {
    const int iu = static_cast<int>(index_.at(u));
    const int iv = static_cast<int>(index_.at(v));
    adjacency_[iu].push_back(iv);
    adjacency_[iv].push_back(iu);
  }
  for (auto& list : adjacency_) std::sort(list.begin(), list.end());
}

std::size_t TextAttributedGraph::index_of(NodeId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw ContractError("graph: unknown node id " + std::to_string(id));
  return it->second;
}

bool operator==(const TextAttributedGraph& a, const TextAttributedGraph& b) {
  return a.node_ids_ == b.node_ids_ && a.edges_ == b.edges_ && a.texts_ == b.texts_ &&
         a.labels_ == b.labels_ && a.features_.rows() == b.features_.rows() &&
         a.features_.cols() == b.features_.cols() && a.features_ == b.features_;
}

std::map<NodeId, std::set<NodeId>> neighbor_sets(const TextAttributedGraph& graph) {
  std::map<NodeId, std::set<NodeId>> out;
  for (NodeId id : graph.node_ids()) out[id];
  for (const auto& [u, v] : graph.edges()) {
    out[u].insert(v);
    out[v].insert(u);
  }
  return out;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string w;
  while (in >> w) {
    std::transform(w.begin(), w.end(), w.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    words.push_back(std::move(w));
  }
  return words;
}

namespace {
std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}
}  // namespace

Matrix bag_of_words_features(const std::vector<std::string>& texts, Eigen::Index dim) {
  if (dim < 1) throw ConfigError("bag_of_words_features: feature_dim must be >= 1");
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(texts.size()), dim);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    for (const std::string& w : split_words(texts[i])) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(fnv1a(w) % static_cast<std::uint64_t>(dim))) += 1.0;
    }
  }
  return x;
}

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw LoadError(p.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TextAttributedGraph load_tag(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.json";
  const auto nodes_path = dir / "nodes.jsonl";
  const auto edges_path = dir / "edges.tsv";

  json meta;
  try {
    meta = json::parse(read_file(meta_path));
  } catch (const json::exception& e) {
    throw LoadError(meta_path.string() + ": " + e.what());
  }
  if (!meta.contains("feature_dim") || !meta.contains("num_nodes") ||
      !meta["feature_dim"].is_number_integer() || !meta["num_nodes"].is_number_integer()) {
    throw LoadError(meta_path.string() + ": requires integer feature_dim and num_nodes");
  }
  const long feature_dim = meta["feature_dim"].get<long>();
  const long num_nodes = meta["num_nodes"].get<long>();
  if (feature_dim < 1 || num_nodes < 0) throw LoadError(meta_path.string() + ": invalid sizes");

  std::vector<NodeId> ids;
  std::vector<std::string> texts;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> feats;
  int with_labels = 0, with_features = 0;
  {
    std::ifstream in(nodes_path);
    if (!in) throw LoadError(nodes_path.string() + ": cannot open");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const std::string where = nodes_path.string() + " line " + std::to_string(lineno);
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::exception& e) {
        throw LoadError(where + ": " + e.what());
      }
      if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_number_integer()) {
        throw LoadError(where + ": record needs an integer 'id'");
      }
      if (!rec.contains("text") || !rec["text"].is_string()) {
        throw LoadError(where + ": record needs a string 'text'");
      }
      ids.push_back(rec["id"].get<NodeId>());
      texts.push_back(rec["text"].get<std::string>());
      if (rec.contains("label")) {
        if (!rec["label"].is_string() || rec["label"].get<std::string>().empty()) {
          throw LoadError(where + ": 'label' must be a non-empty string");
        }
        labels.push_back(rec["label"].get<std::string>());
        ++with_labels;
      } else {
        labels.emplace_back();
      }
      if (rec.contains("features")) {
        const json& f = rec["features"];
        if (!f.is_array() || static_cast<long>(f.size()) != feature_dim) {
          throw LoadError(where + ": 'features' must be an array of " + std::to_string(feature_dim) +
                          " numbers");
        }
        std::vector<double> row;
        for (const json& x : f) {
          if (!x.is_number()) throw LoadError(where + ": non-numeric feature");
          row.push_back(x.get<double>());
        }
        feats.push_back(std::move(row));
        ++with_features;
      } else {
        feats.emplace_back();
      }
    }
  }
  const long n = static_cast<long>(ids.size());
  if (n != num_nodes) {
    throw LoadError(nodes_path.string() + ": " + std::to_string(n) + " records but meta.json says " +
                    std::to_string(num_nodes));
  }
  if (with_labels != 0 && with_labels != n) {
    throw LoadError(nodes_path.string() + ": labels must be present on all records or none");
  }
  if (with_features != 0 && with_features != n) {
    throw LoadError(nodes_path.string() + ": features must be present on all records or none");
  }

  Matrix x;
  if (with_features == 0) {
    x = bag_of_words_features(texts, feature_dim);
  } else {
    x.resize(n, feature_dim);
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j < feature_dim; ++j) x(i, j) = feats[i][j];
    }
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  {
    std::ifstream in(edges_path);
    if (!in) throw LoadError(edges_path.string() + ": cannot open");
    std::unordered_map<NodeId, bool> known;
    for (NodeId id : ids) known[id] = true;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const std::string where = edges_path.string() + " line " + std::to_string(lineno);
      const auto tab = line.find('\t');
      if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
        throw LoadError(where + ": expected two tab-separated ids");
      }
      NodeId u = 0, v = 0;
      try {
        std::size_t pu = 0, pv = 0;
        const std::string su = line.substr(0, tab), sv = line.substr(tab + 1);
        u = std::stoll(su, &pu);
        v = std::stoll(sv, &pv);
        if (pu != su.size() || pv != sv.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw LoadError(where + ": ids must be integers");
      }
      for (NodeId e : {u, v}) {
        if (!known.count(e)) {
          throw LoadError(where + ": dangling edge endpoint " + std::to_string(e));
        }
      }
      edges.emplace_back(u, v);
    }
  }

  std::optional<std::vector<std::string>> lab;
  if (with_labels == n && n > 0) lab = std::move(labels);
  try {
    return TextAttributedGraph(std::move(ids), std::move(edges), std::move(x), std::move(texts),
                               std::move(lab));
  } catch (const ContractError& e) {
    throw LoadError(dir.string() + ": " + e.what());
  }
}

void save_tag(const TextAttributedGraph& graph, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string() + ": " + ec.message());

  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(p.string() + ": cannot open for writing");
    return out;
  };

  {
    auto out = open(dir / "nodes.jsonl");
    const Matrix& x = graph.features();
    for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
      json rec;
      rec["id"] = graph.node_ids()[i];
      rec["text"] = graph.texts()[i];
      if (graph.labels()) rec["label"] = (*graph.labels())[i];
      json f = json::array();
      for (Eigen::Index j = 0; j < x.cols(); ++j) f.push_back(x(static_cast<Eigen::Index>(i), j));
      rec["features"] = std::move(f);
      out << rec.dump() << '\n';
    }
    if (!out) throw IoError((dir / "nodes.jsonl").string() + ": write failed");
  }
  {
    auto out = open(dir / "edges.tsv");
    for (const auto& [u, v] : graph.edges()) out << u << '\t' << v << '\n';
    if (!out) throw IoError((dir / "edges.tsv").string() + ": write failed");
  }
  {
    auto out = open(dir / "meta.json");
    json meta;
    meta["feature_dim"] = graph.feature_dim();
    meta["num_nodes"] = graph.num_nodes();
    out << meta.dump(2) << '\n';
    if (!out) throw IoError((dir / "meta.json").string() + ": write failed");
  }
}

}  // namespace zpt::tag
