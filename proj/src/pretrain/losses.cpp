#include "zpt/pretrain/losses.hpp"

#include "zpt/errors.hpp"

#include <numeric>
#include <unordered_map>
#include <vector>

namespace zpt::pretrain {

Matrix summary_embeddings(const tag::TextAttributedGraph& graph, const Matrix& text_embeddings) {
  if (static_cast<std::size_t>(text_embeddings.rows()) != graph.num_nodes()) {
    throw ContractError("summary_embeddings: one text embedding per node required");
  }
  const auto& adj = graph.adjacency();
  Matrix s(text_embeddings.rows(), text_embeddings.cols());
  for (Eigen::Index v = 0; v < s.rows(); ++v) {
    const auto& nb = adj[v];
    if (nb.empty()) {
      s.row(v) = text_embeddings.row(v);
      continue;
    }
    s.row(v).setZero();
    for (int u : nb) s.row(v) += text_embeddings.row(u);
    s.row(v) /= static_cast<double>(nb.size());
  }
  return s;
}

std::shared_ptr<const ad::SparseMatrix> summary_operator(const tag::TextAttributedGraph& graph,
                                                         std::span<const int> rows,
                                                         std::span<const int> columns) {
  std::unordered_map<int, int> col_of;
  for (std::size_t c = 0; c < columns.size(); ++c) col_of[columns[c]] = static_cast<int>(c);
  auto lookup = [&](int node) {
    auto it = col_of.find(node);
    if (it == col_of.end()) throw ContractError("summary_operator: neighbour missing from columns");
    return it->second;
  };
  const auto& adj = graph.adjacency();
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& nb = adj[rows[r]];
    if (nb.empty()) {
      trips.emplace_back(static_cast<int>(r), lookup(rows[r]), 1.0);
      continue;
    }
    const double w = 1.0 / static_cast<double>(nb.size());
    for (int u : nb) trips.emplace_back(static_cast<int>(r), lookup(u), w);
  }
  auto op = std::make_shared<ad::SparseMatrix>(static_cast<Eigen::Index>(rows.size()),
                                               static_cast<Eigen::Index>(columns.size()));
  op->setFromTriplets(trips.begin(), trips.end());
  return op;
}

ad::Var symmetric_contrastive_loss(ad::Var logits) {
  if (logits.rows() != logits.cols()) {
    throw ContractError("symmetric_contrastive_loss: logits must be square");
  }
  std::vector<int> diag(static_cast<std::size_t>(logits.rows()));
  std::iota(diag.begin(), diag.end(), 0);
  ad::Var rows = ad::cross_entropy_rows(logits, diag);
  ad::Var cols = ad::cross_entropy_rows(ad::transpose(logits), diag);
  return ad::scale(ad::add(rows, cols), 0.5);
}

double symmetric_contrastive_loss(const Matrix& logits) {
  ad::Tape tape;
  return symmetric_contrastive_loss(tape.constant(logits)).scalar();
}

AlignmentLoss alignment_loss(ad::Var nodes, ad::Var texts, ad::Var summaries,
                             ad::Var log_temperature, double alpha) {
  if (nodes.rows() != texts.rows() || nodes.rows() != summaries.rows() ||
      nodes.cols() != texts.cols() || nodes.cols() != summaries.cols()) {
    throw ContractError("alignment_loss: V, T, S must be row-aligned with equal widths");
  }
  if (!(alpha >= 0.0)) throw ConfigError("alignment_loss: alpha must be >= 0");
  ad::Var v = ad::l2_normalize_rows(nodes);
  ad::Var t = ad::l2_normalize_rows(texts);
  ad::Var s = ad::l2_normalize_rows(summaries);
  ad::Var logit_scale = ad::exp(log_temperature);
  ad::Var l1 = symmetric_contrastive_loss(ad::scale(ad::matmul_nt(v, t), logit_scale));
  ad::Var l2 = symmetric_contrastive_loss(ad::scale(ad::matmul_nt(s, t), logit_scale));
  ad::Var l3 = symmetric_contrastive_loss(ad::scale(ad::matmul_nt(v, s), logit_scale));
  ad::Var total = ad::add(l1, ad::scale(ad::add(l2, l3), alpha));
  AlignmentTerms terms{l1.scalar(), l2.scalar(), l3.scalar(), total.scalar()};
  return {total, terms};
}

AlignmentTerms alignment_loss(const Matrix& nodes, const Matrix& texts, const Matrix& summaries,
                              double log_temperature, double alpha) {
  ad::Tape tape;
  Matrix tau(1, 1);
  tau(0, 0) = log_temperature;
  return alignment_loss(tape.constant(nodes), tape.constant(texts), tape.constant(summaries),
                        tape.constant(tau), alpha)
      .terms;
}

}  // namespace zpt::pretrain
