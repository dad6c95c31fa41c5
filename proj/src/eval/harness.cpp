#include "zpt/eval/harness.hpp"

#include "zpt/ad/adam.hpp"
#include "zpt/ad/random.hpp"
#include "zpt/encoders/similarity.hpp"
#include "zpt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace zpt::eval {

std::vector<ZeroShotTask> sample_tasks(const tag::TextAttributedGraph& graph, int n_way, int num_tasks,
                                       int queries_per_class, std::uint64_t seed) {
  if (!graph.labels()) throw ConfigError("sample_tasks: graph has no labels");
  if (n_way < 2) throw ConfigError("sample_tasks: N must be >= 2");
  if (num_tasks < 1) throw ConfigError("sample_tasks: num_tasks must be >= 1");
  if (queries_per_class < 1) throw ConfigError("sample_tasks: queries_per_class must be >= 1");
  std::map<std::string, std::vector<int>> rows_by_label;
  const auto& labels = *graph.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) rows_by_label[labels[i]].push_back(static_cast<int>(i));
  std::vector<std::string> classes;
  for (const auto& [label, rows] : rows_by_label) classes.push_back(label);
  const int c = static_cast<int>(classes.size());
  if (c < n_way) {
    throw ConfigError("sample_tasks: " + std::to_string(c) + " classes available, N=" +
                      std::to_string(n_way));
  }
  if (static_cast<long>(num_tasks) * n_way < c) {
    throw ConfigError("sample_tasks: " + std::to_string(num_tasks) + " tasks of " +
                      std::to_string(n_way) + " classes cannot cover " + std::to_string(c) + " classes");
  }

  Rng rng(seed);
  std::vector<int> queue;  // classes not yet covered, in random order
  std::vector<ZeroShotTask> tasks;
  for (int t = 0; t < num_tasks; ++t) {
    if (queue.empty()) {
      queue.resize(static_cast<std::size_t>(c));
      std::iota(queue.begin(), queue.end(), 0);
      std::shuffle(queue.begin(), queue.end(), rng);
    }
    std::vector<int> chosen;
    while (!queue.empty() && static_cast<int>(chosen.size()) < n_way) {
      chosen.push_back(queue.back());
      queue.pop_back();
    }
    std::vector<int> rest;
    for (int k = 0; k < c; ++k) {
      if (std::find(chosen.begin(), chosen.end(), k) == chosen.end()) rest.push_back(k);
    }
    std::shuffle(rest.begin(), rest.end(), rng);
    for (std::size_t k = 0; static_cast<int>(chosen.size()) < n_way; ++k) chosen.push_back(rest[k]);
    std::shuffle(chosen.begin(), chosen.end(), rng);

    ZeroShotTask task;
    for (int y = 0; y < n_way; ++y) {
      const std::string& name = classes[static_cast<std::size_t>(chosen[static_cast<std::size_t>(y)])];
      std::vector<int> pool = rows_by_label[name];
      if (static_cast<int>(pool.size()) < queries_per_class) {
        throw ConfigError("sample_tasks: class \"" + name + "\" has " + std::to_string(pool.size()) +
                          " nodes, need " + std::to_string(queries_per_class));
      }
      std::shuffle(pool.begin(), pool.end(), rng);
      task.class_names.push_back(name);
      for (int q = 0; q < queries_per_class; ++q) {
        task.query_rows.push_back(pool[static_cast<std::size_t>(q)]);
        task.truth.push_back(y);
      }
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

double accuracy(const std::vector<int>& preds, const std::vector<int>& truth) {
  if (preds.size() != truth.size()) throw ContractError("accuracy: length mismatch");
  if (preds.empty()) throw ContractError("accuracy: empty input");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) ok += preds[i] == truth[i];
  return static_cast<double>(ok) / static_cast<double>(preds.size());
}

double macro_f1(const std::vector<int>& preds, const std::vector<int>& truth, int n_classes) {
  if (preds.size() != truth.size()) throw ContractError("macro_f1: length mismatch");
  if (n_classes < 1) throw ContractError("macro_f1: n_classes must be >= 1");
  std::vector<double> tp(static_cast<std::size_t>(n_classes)), fp(tp.size()), fn(tp.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] < 0 || preds[i] >= n_classes || truth[i] < 0 || truth[i] >= n_classes) {
      throw ContractError("macro_f1: class index out of range");
    }
    if (preds[i] == truth[i]) {
      tp[static_cast<std::size_t>(preds[i])] += 1;
    } else {
      fp[static_cast<std::size_t>(preds[i])] += 1;
      fn[static_cast<std::size_t>(truth[i])] += 1;
    }
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < tp.size(); ++k) {
    const double denom = 2 * tp[k] + fp[k] + fn[k];
    sum += denom > 0 ? 2 * tp[k] / denom : 0.0;
  }
  return sum / n_classes;
}

namespace {

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  for (double x : xs) s.std += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(xs.size()));
  return s;
}

Matrix gather(const Matrix& m, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

std::vector<std::string> class_texts(const ZeroShotTask& task, const std::string& templ) {
  std::vector<std::string> out;
  for (const std::string& name : task.class_names) out.push_back(prompt::instantiate(templ, name));
  return out;
}

}  // namespace

Metrics aggregate(std::vector<TaskMetrics> per_task) {
  Metrics m;
  std::vector<double> acc, f1;
  for (const TaskMetrics& t : per_task) {
    acc.push_back(t.accuracy);
    f1.push_back(t.macro_f1);
  }
  m.per_task = std::move(per_task);
  m.accuracy = summarize(acc);
  m.macro_f1 = summarize(f1);
  return m;
}

EmbeddingCache embed_graph(const tag::TextAttributedGraph& graph, const enc::PretrainedModel& model) {
  return {model.encode_nodes(graph), model.encode_texts(graph.texts())};
}

Metrics evaluate(const Classifier& classifier, const std::vector<ZeroShotTask>& tasks,
                 const EmbeddingCache& cache) {
  std::vector<TaskMetrics> rows;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const ZeroShotTask& task = tasks[i];
    const std::vector<int> preds =
        classifier(i, task, gather(cache.nodes, task.query_rows), gather(cache.texts, task.query_rows));
    rows.push_back({accuracy(preds, task.truth),
                    macro_f1(preds, task.truth, static_cast<int>(task.class_names.size()))});
  }
  return aggregate(std::move(rows));
}

namespace {

// Stable across platforms, unlike std::hash.
std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) h = (h ^ ch) * 0x100000001b3ULL;
  return h;
}

}  // namespace

TaskSamples generate_task_samples(const ZeroShotTask& task, const enc::PretrainedModel& model,
                                  const ubcg::UbcgModel& generator, const ZptConfig& config,
                                  std::uint64_t task_seed) {
  const int per = config.samples_per_class;
  if (per < 1) throw ConfigError("zpt.samples_per_class must be >= 1");
  const Matrix conditions = model.encode_texts(class_texts(task, config.context_template));
  const auto n = static_cast<Eigen::Index>(task.class_names.size()) * per;
  TaskSamples s{Matrix(n, conditions.cols()), Matrix(n, conditions.cols()), {}};
  for (Eigen::Index y = 0; y < conditions.rows(); ++y) {
    // Each class has its own stream, so results do not depend on class order.
    ubcg::SyntheticSamples g = ubcg::generate_class_samples(
        conditions.row(y).transpose(), per, generator,
        derive_seed(task_seed, fnv1a(task.class_names[static_cast<std::size_t>(y)])));
    s.nodes.middleRows(y * per, per) = g.nodes;
    s.texts.middleRows(y * per, per) = g.texts;
    s.labels.insert(s.labels.end(), static_cast<std::size_t>(per), static_cast<int>(y));
  }
  return s;
}

namespace {

RunOutput run_tuned(const EmbeddingCache& cache, const enc::PretrainedModel& model,
                    const ubcg::UbcgModel& generator, const std::vector<ZeroShotTask>& tasks,
                    const ZptConfig& config, double lambda) {
  RunOutput out;
  prompt::HybridConfig hybrid = config.hybrid;
  hybrid.lambda = lambda;
  const Classifier classify = [&](std::size_t i, const ZeroShotTask& task, const Matrix& v,
                                  const Matrix& t) {
    const std::uint64_t task_seed = derive_seed(config.seed, i);
    const TaskSamples samples = generate_task_samples(task, model, generator, config, task_seed);
    const prompt::ContinuousPrompt init = prompt::init_prompt(
        class_texts(task, config.context_template), config.context_length, model,
        derive_seed(task_seed, 1));
    hybrid.seed = derive_seed(task_seed, 2);
    prompt::TuneResult tuned =
        prompt::tune_prompt(init, samples.nodes, samples.texts, samples.labels, model, hybrid);
    const Matrix w = prompt::class_weights(tuned.prompt, model);
    out.prompts.push_back(std::move(tuned.prompt));
    return prompt::classify(w, v, t, lambda);
  };
  out.metrics = evaluate(classify, tasks, cache);
  return out;
}

}  // namespace

RunOutput run_zpt(const EmbeddingCache& cache, const enc::PretrainedModel& model,
                  const ubcg::UbcgModel& generator, const std::vector<ZeroShotTask>& tasks,
                  const ZptConfig& config) {
  return run_tuned(cache, model, generator, tasks, config, config.hybrid.lambda);
}

Metrics run_discrete(const EmbeddingCache& cache, const enc::PretrainedModel& model,
                     const std::vector<ZeroShotTask>& tasks, const std::string& templ, double lambda) {
  return evaluate(
      [&](std::size_t, const ZeroShotTask& task, const Matrix& v, const Matrix& t) {
        return prompt::classify(prompt::discrete_class_weights(templ, task.class_names, model), v, t,
                                lambda);
      },
      tasks, cache);
}

RunOutput run_node_only_ablation(const EmbeddingCache& cache, const enc::PretrainedModel& model,
                                 const ubcg::UbcgModel& node_only_generator,
                                 const std::vector<ZeroShotTask>& tasks, const ZptConfig& config) {
  return run_tuned(cache, model, node_only_generator, tasks, config, 1.0);
}

std::vector<int> LinearClassifier::predict(const Matrix& features) const {
  Matrix logits = features * weight;
  logits.rowwise() += bias.row(0);
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = prompt::argmax_lowest(logits.row(i).transpose());
  }
  return out;
}

LinearClassifier train_linear_classifier(const Matrix& features, const std::vector<int>& labels,
                                         int n_classes, const LinearClassifierConfig& config) {
  if (features.rows() != static_cast<Eigen::Index>(labels.size()) || labels.empty()) {
    throw ContractError("train_linear_classifier: features and labels must be non-empty and aligned");
  }
  if (n_classes < 2) throw ContractError("train_linear_classifier: need >= 2 classes");
  if (config.epochs < 1 || config.batch_size < 1 || !(config.learning_rate > 0.0)) {
    throw ConfigError("linear classifier: epochs, batch_size and learning_rate must be positive");
  }
  ad::Parameter w{"linear.weight", Matrix::Zero(features.cols(), n_classes)};
  ad::Parameter b{"linear.bias", Matrix::Zero(1, n_classes)};
  ad::Adam optimizer({&w, &b}, {config.learning_rate});
  Rng rng(config.seed);
  std::vector<int> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t count = std::min(order.size() - start, static_cast<std::size_t>(config.batch_size));
      std::vector<int> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                            order.begin() + static_cast<std::ptrdiff_t>(start + count));
      std::vector<int> y;
      for (int r : rows) y.push_back(labels[static_cast<std::size_t>(r)]);
      optimizer.zero_grad();
      ad::Tape tape;
      ad::Var loss = ad::cross_entropy_rows(
          ad::linear(tape.constant(gather(features, rows)), tape.param(w), tape.param(b)), y);
      tape.backward(loss);
      optimizer.step();
    }
  }
  return {w.value, b.value};
}

Metrics run_simple_classifier(const EmbeddingCache& cache, const enc::PretrainedModel& model,
                              const ubcg::UbcgModel& generator, const std::vector<ZeroShotTask>& tasks,
                              const ZptConfig& config, const LinearClassifierConfig& classifier) {
  return evaluate(
      [&](std::size_t i, const ZeroShotTask& task, const Matrix& v, const Matrix& t) {
        const std::uint64_t task_seed = derive_seed(config.seed, i);
        const TaskSamples s = generate_task_samples(task, model, generator, config, task_seed);
        Matrix x(s.nodes.rows(), s.nodes.cols() + s.texts.cols());
        x << s.nodes, s.texts;
        LinearClassifierConfig c = classifier;
        c.seed = derive_seed(task_seed, 3);
        const LinearClassifier clf =
            train_linear_classifier(x, s.labels, static_cast<int>(task.class_names.size()), c);
        Matrix q(v.rows(), v.cols() + t.cols());
        q << v, t;
        return clf.predict(q);
      },
      tasks, cache);
}

RunOutput run_pseudo_label(const EmbeddingCache& cache, const enc::PretrainedModel& model,
                           const std::vector<ZeroShotTask>& tasks, const ZptConfig& config,
                           const PseudoLabelConfig& pseudo) {
  if (pseudo.max_per_class < 1) throw ConfigError("pseudo.max_per_class must be >= 1");
  RunOutput out;
  std::vector<std::string> notes;
  const Classifier classify = [&](std::size_t i, const ZeroShotTask& task, const Matrix& v,
                                  const Matrix& t) {
    const std::uint64_t task_seed = derive_seed(config.seed, i);
    const double lambda = pseudo.hybrid.lambda;
    const Matrix discrete = prompt::discrete_class_weights(pseudo.label_template, task.class_names, model);
    const std::vector<int> assigned = prompt::classify(discrete, cache.nodes, cache.texts, lambda);
    const int n = static_cast<int>(task.class_names.size());
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(n));
    for (std::size_t r = 0; r < assigned.size(); ++r) by_class[static_cast<std::size_t>(assigned[r])].push_back(static_cast<int>(r));
    Rng rng(derive_seed(task_seed, 4));
    std::vector<int> rows, labels;
    for (int y = 0; y < n; ++y) {
      auto& pool = by_class[static_cast<std::size_t>(y)];
      if (pool.empty()) {
        notes.push_back("task " + std::to_string(i) + ": no node pseudo-labelled \"" +
                        task.class_names[static_cast<std::size_t>(y)] +
                        "\"; used untuned discrete weights");
        out.prompts.emplace_back();
        return prompt::classify(discrete, v, t, lambda);
      }
      std::shuffle(pool.begin(), pool.end(), rng);
      const std::size_t take = std::min(pool.size(), static_cast<std::size_t>(pseudo.max_per_class));
      for (std::size_t k = 0; k < take; ++k) {
        rows.push_back(pool[k]);
        labels.push_back(y);
      }
    }
    const prompt::ContinuousPrompt init = prompt::init_prompt(
        class_texts(task, config.context_template), config.context_length, model,
        derive_seed(task_seed, 1));
    prompt::HybridConfig hybrid = pseudo.hybrid;
    hybrid.seed = derive_seed(task_seed, 2);
    prompt::TuneResult tuned = prompt::tune_prompt(init, gather(cache.nodes, rows),
                                                   gather(cache.texts, rows), labels, model, hybrid);
    const Matrix w = prompt::class_weights(tuned.prompt, model);
    out.prompts.push_back(std::move(tuned.prompt));
    return prompt::classify(w, v, t, lambda);
  };
  out.metrics = evaluate(classify, tasks, cache);
  out.metrics.notes = std::move(notes);
  return out;
}

int CentroidReport::node_matches() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const auto& r) { return r.matches; }));
}

int CentroidReport::text_matches() const {
  return static_cast<int>(std::count_if(texts.begin(), texts.end(), [](const auto& r) { return r.matches; }));
}

nlohmann::json CentroidReport::to_json() const {
  auto rows = [](const std::vector<CentroidRow>& rs) {
    nlohmann::json out = nlohmann::json::array();
    for (const CentroidRow& r : rs) {
      out.push_back({{"class", r.label},
                     {"cosine_distance", r.cosine_distance},
                     {"nearest_real_class", r.nearest_real},
                     {"matches", r.matches}});
    }
    return out;
  };
  return {{"node", rows(nodes)},
          {"text", rows(texts)},
          {"node_matches", node_matches()},
          {"text_matches", text_matches()},
          {"classes", nodes.size()}};
}

namespace {

std::vector<std::string> distinct(const std::vector<std::string>& labels) {
  std::set<std::string> s(labels.begin(), labels.end());
  return {s.begin(), s.end()};
}

Matrix centroids(const Matrix& m, const std::vector<std::string>& labels,
                 const std::vector<std::string>& classes) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(classes.size()), m.cols());
  std::vector<int> counts(classes.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto k = static_cast<std::size_t>(
        std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());
    out.row(static_cast<Eigen::Index>(k)) += m.row(static_cast<Eigen::Index>(i));
    ++counts[k];
  }
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (counts[k] == 0) throw ContractError("centroid_report: class \"" + classes[k] + "\" has no rows");
    out.row(static_cast<Eigen::Index>(k)) /= counts[k];
  }
  return out;
}

std::vector<CentroidRow> centroid_rows(const Matrix& real, const std::vector<std::string>& real_labels,
                                       const Matrix& synth, const std::vector<std::string>& synth_labels,
                                       const std::vector<std::string>& classes) {
  const Matrix cos = enc::cosine_similarity_matrix(centroids(synth, synth_labels, classes),
                                                   centroids(real, real_labels, classes));
  std::vector<CentroidRow> rows;
  for (Eigen::Index k = 0; k < cos.rows(); ++k) {
    const int nearest = prompt::argmax_lowest(cos.row(k).transpose());
    rows.push_back({classes[static_cast<std::size_t>(k)], 1.0 - cos(k, k),
                    classes[static_cast<std::size_t>(nearest)], nearest == k});
  }
  return rows;
}

}  // namespace

CentroidReport centroid_report(const LabeledEmbeddings& real, const LabeledEmbeddings& synth) {
  const std::vector<std::string> classes = distinct(synth.labels);
  if (classes.size() < 2) throw ContractError("centroid_report: need >= 2 classes");
  CentroidReport r;
  r.nodes = centroid_rows(real.nodes, real.labels, synth.nodes, synth.labels, classes);
  r.texts = centroid_rows(real.texts, real.labels, synth.texts, synth.labels, classes);
  return r;
}

Matrix tsne(const Matrix& x, const TsneConfig& config) {
  const Eigen::Index n = x.rows();
  if (n < 2) throw ContractError("tsne: need >= 2 points");
  if (!(config.perplexity > 0.0) || config.iterations < 1) throw ConfigError("tsne: invalid config");
  // Squared distances.
  const Eigen::VectorXd sq = x.rowwise().squaredNorm();
  Matrix d = -2.0 * x * x.transpose();
  d.colwise() += sq;
  d.rowwise() += sq.transpose();
  d = d.cwiseMax(0.0);

  // Conditional affinities matched to the perplexity by bisection on beta.
  const double target = std::log(std::min(config.perplexity, static_cast<double>(n - 1) / 3.0 + 1e-9));
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    Eigen::RowVectorXd row(n);
    for (int it = 0; it < 64; ++it) {
      row = (-beta * d.row(i).array()).exp();
      row(i) = 0.0;
      const double sum = std::max(row.sum(), 1e-300);
      const double h = std::log(sum) + beta * (d.row(i).dot(row)) / sum;
      if (std::abs(h - target) < 1e-6) break;
      if (h > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    p.row(i) = row / std::max(row.sum(), 1e-300);
  }
  p = (p + p.transpose()) / (2.0 * static_cast<double>(n));
  p = p.cwiseMax(1e-12);

  Rng rng(config.seed);
  Matrix y = normal_matrix(n, 2, 1e-4, rng);
  Matrix velocity = Matrix::Zero(n, 2);
  Matrix gains = Matrix::Ones(n, 2);
  const int exaggeration_iters = std::min(100, config.iterations / 4);
  for (int it = 0; it < config.iterations; ++it) {
    const double exaggeration = it < exaggeration_iters ? 12.0 : 1.0;
    const double momentum = it < exaggeration_iters ? 0.5 : 0.8;
    const Eigen::VectorXd ys = y.rowwise().squaredNorm();
    Matrix num = -2.0 * y * y.transpose();
    num.colwise() += ys;
    num.rowwise() += ys.transpose();
    num = (1.0 + num.array()).inverse().matrix();
    num.diagonal().setZero();
    const double z = std::max(num.sum(), 1e-300);
    // dC/dy_i = 4 sum_j (p_ij - q_ij) num_ij (y_i - y_j)
    Matrix w = ((exaggeration * p).array() - num.array() / z).matrix().cwiseProduct(num);
    w.diagonal().setZero();
    Matrix grad = 4.0 * (w.rowwise().sum().asDiagonal() * y - w * y);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < 2; ++k) {
        const bool same = (grad(i, k) > 0) == (velocity(i, k) > 0);
        gains(i, k) = std::max(same ? gains(i, k) * 0.8 : gains(i, k) + 0.2, 0.01);
      }
    }
    velocity = momentum * velocity - config.learning_rate * gains.cwiseProduct(grad);
    y += velocity;
    y.rowwise() -= y.colwise().mean();
  }
  return y;
}

CentroidReport export_projection(const LabeledEmbeddings& real, const LabeledEmbeddings& synth,
                                 const std::filesystem::path& csv_path, const TsneConfig& config) {
  CentroidReport report = centroid_report(real, synth);
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw IoError(csv_path.string() + ": cannot open for writing");
  csv << "modality,class,real_or_synth,x,y\n";
  csv << std::setprecision(17);
  for (const char* modality : {"node", "text"}) {
    const bool node = std::string(modality) == "node";
    const Matrix& r = node ? real.nodes : real.texts;
    const Matrix& s = node ? synth.nodes : synth.texts;
    Matrix all(r.rows() + s.rows(), r.cols());
    all << r, s;
    TsneConfig c = config;
    c.seed = derive_seed(config.seed, node ? 0 : 1);
    const Matrix y = tsne(all, c);
    for (Eigen::Index i = 0; i < all.rows(); ++i) {
      const bool is_real = i < r.rows();
      const std::string& label = is_real ? real.labels[static_cast<std::size_t>(i)]
                                         : synth.labels[static_cast<std::size_t>(i - r.rows())];
      csv << modality << ',' << label << ',' << (is_real ? "real" : "synth") << ',' << y(i, 0) << ','
          << y(i, 1) << '\n';
    }
  }
  if (!csv) throw IoError(csv_path.string() + ": write failed");
  std::filesystem::path report_path = csv_path;
  report_path.replace_extension(".centroids.json");
  std::ofstream rep(report_path, std::ios::trunc);
  if (!rep) throw IoError(report_path.string() + ": cannot open for writing");
  rep << report.to_json().dump(2) << '\n';
  if (!rep) throw IoError(report_path.string() + ": write failed");
  return report;
}

nlohmann::json to_json(const Metrics& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.per_task.size(); ++i) {
    rows.push_back({{"task", i}, {"accuracy", m.per_task[i].accuracy}, {"macro_f1", m.per_task[i].macro_f1}});
  }
  return {{"per_task", rows},
          {"accuracy", {{"mean", m.accuracy.mean}, {"std", m.accuracy.std}}},
          {"macro_f1", {{"mean", m.macro_f1.mean}, {"std", m.macro_f1.std}}},
          {"notes", m.notes}};
}

}  // namespace zpt::eval
