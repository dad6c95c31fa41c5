#pragma once

// N-way zero-shot tasks, metrics, and the ZPT runner with its baselines.

#include "zpt/encoders/model.hpp"
#include "zpt/prompt/prompt.hpp"
#include "zpt/tag/graph.hpp"
#include "zpt/ubcg/ubcg.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace zpt::eval {

using ad::Matrix;

struct ZeroShotTask {
  std::vector<std::string> class_names;
  std::vector<int> query_rows;  // node rows in the graph
  std::vector<int> truth;       // index into class_names per query
};

// Each task draws N distinct classes; a coverage queue guarantees every
// label appears in some task. Throws ConfigError when that is impossible or
// a class has fewer than queries_per_class nodes.
std::vector<ZeroShotTask> sample_tasks(const tag::TextAttributedGraph& graph, int n_way, int num_tasks,
                                       int queries_per_class, std::uint64_t seed);

double accuracy(const std::vector<int>& preds, const std::vector<int>& truth);
// Unweighted mean of per-class F1 over classes 0..n_classes-1; a class with
// no predictions and no truth scores 0.
double macro_f1(const std::vector<int>& preds, const std::vector<int>& truth, int n_classes);

struct TaskMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation across tasks
};

struct Metrics {
  std::vector<TaskMetrics> per_task;
  Summary accuracy;
  Summary macro_f1;
  std::vector<std::string> notes;
};

Metrics aggregate(std::vector<TaskMetrics> per_task);

// Frozen-encoder embeddings of every node, computed once per model.
struct EmbeddingCache {
  Matrix nodes;  // |V| x 128
  Matrix texts;  // |V| x 128
};
EmbeddingCache embed_graph(const tag::TextAttributedGraph& graph, const enc::PretrainedModel& model);

// Predicts class indices for the task's queries given their embeddings.
using Classifier =
    std::function<std::vector<int>(std::size_t task_index, const ZeroShotTask& task,
                                   const Matrix& nodes, const Matrix& texts)>;
Metrics evaluate(const Classifier& classifier, const std::vector<ZeroShotTask>& tasks,
                 const EmbeddingCache& cache);

inline const std::vector<std::string>& prompt_templates() {
  static const std::vector<std::string> templates{
      "{class name}",          "a {class name}",          "an {class name}",
      "a paper of {class name}", "a research of {class name}", "a research paper of {class name}"};
  return templates;
}

struct ZptConfig {
  int samples_per_class = 200;
  int context_length = 4;  // M
  // Context words around the class name, used both for the generator
  // condition and the prompt's class tokens.
  std::string context_template = "{class name}";
  prompt::HybridConfig hybrid;
  std::uint64_t seed = 0;
};

struct RunOutput {
  Metrics metrics;
  std::vector<prompt::ContinuousPrompt> prompts;  // one per task
};

// Per-class synthetic pairs for one task, stacked class-major.
struct TaskSamples {
  Matrix nodes;
  Matrix texts;
  std::vector<int> labels;
};
TaskSamples generate_task_samples(const ZeroShotTask& task, const enc::PretrainedModel& model,
                                  const ubcg::UbcgModel& generator, const ZptConfig& config,
                                  std::uint64_t task_seed);

RunOutput run_zpt(const EmbeddingCache& cache, const enc::PretrainedModel& model,
                  const ubcg::UbcgModel& generator, const std::vector<ZeroShotTask>& tasks,
                  const ZptConfig& config);

// No tuning: class weights from the template, hybrid probability with lambda.
Metrics run_discrete(const EmbeddingCache& cache, const enc::PretrainedModel& model,
                     const std::vector<ZeroShotTask>& tasks, const std::string& templ, double lambda);

// Generator trained without the text direction; tuning and inference use
// the node term only (lambda = 1).
RunOutput run_node_only_ablation(const EmbeddingCache& cache, const enc::PretrainedModel& model,
                                 const ubcg::UbcgModel& node_only_generator,
                                 const std::vector<ZeroShotTask>& tasks, const ZptConfig& config);

struct LinearClassifierConfig {
  double learning_rate = 1e-2;
  int epochs = 50;
  int batch_size = 64;
  std::uint64_t seed = 0;
};

struct LinearClassifier {
  Matrix weight;  // features x classes
  Matrix bias;    // 1 x classes
  std::vector<int> predict(const Matrix& features) const;
};

// Softmax regression trained with Adam on cross-entropy.
LinearClassifier train_linear_classifier(const Matrix& features, const std::vector<int>& labels,
                                         int n_classes, const LinearClassifierConfig& config);

// Linear softmax on concat(v, t) trained on the synthetic samples.
Metrics run_simple_classifier(const EmbeddingCache& cache, const enc::PretrainedModel& model,
                              const ubcg::UbcgModel& generator, const std::vector<ZeroShotTask>& tasks,
                              const ZptConfig& config, const LinearClassifierConfig& classifier);

struct PseudoLabelConfig {
  int max_per_class = 200;
  // Template used to assign pseudo-labels.
  std::string label_template = "a paper of {class name}";
  prompt::HybridConfig hybrid;  // defaults: 1 epoch, batch 64, lr 2e-5
};

// Pseudo-labels every node with the discrete prompt, tunes the same prompt
// structure as ZPT on up to max_per_class real nodes per class, evaluates.
RunOutput run_pseudo_label(const EmbeddingCache& cache, const enc::PretrainedModel& model,
                           const std::vector<ZeroShotTask>& tasks, const ZptConfig& config,
                           const PseudoLabelConfig& pseudo);

// Centroid diagnostics for one modality.
struct CentroidRow {
  std::string label;
  double cosine_distance = 0.0;  // between real and synthetic centroids
  std::string nearest_real;      // real class whose centroid is closest to the synthetic one
  bool matches = false;
};

struct CentroidReport {
  std::vector<CentroidRow> nodes;
  std::vector<CentroidRow> texts;
  int node_matches() const;
  int text_matches() const;
  nlohmann::json to_json() const;
};

struct LabeledEmbeddings {
  Matrix nodes;
  Matrix texts;
  std::vector<std::string> labels;
};

CentroidReport centroid_report(const LabeledEmbeddings& real, const LabeledEmbeddings& synth);

struct TsneConfig {
  double perplexity = 30.0;
  int iterations = 300;
  double learning_rate = 200.0;
  std::uint64_t seed = 0;
};

// Exact t-SNE to 2-D.
Matrix tsne(const Matrix& points, const TsneConfig& config);

// Writes the CSV (modality,class,real_or_synth,x,y) and a JSON centroid
// report next to it (same stem, .centroids.json). Returns the report.
CentroidReport export_projection(const LabeledEmbeddings& real, const LabeledEmbeddings& synth,
                                 const std::filesystem::path& csv_path, const TsneConfig& config);

nlohmann::json to_json(const Metrics& m);

}  // namespace zpt::eval
