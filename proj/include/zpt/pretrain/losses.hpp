#pragma once

#include "zpt/ad/ops.hpp"
#include "zpt/tag/graph.hpp"

#include <memory>
#include <span>

namespace zpt::pretrain {

using ad::Matrix;

// s_v = mean of neighbours' text embeddings; an isolated node falls back to
// its own text embedding.
Matrix summary_embeddings(const tag::TextAttributedGraph& graph, const Matrix& text_embeddings);

// Sparse |rows| x |columns| averaging operator. Row r averages the columns
// holding the neighbours of node rows[r]; `columns` lists node rows and must
// contain every neighbour of every entry in `rows` (and the node itself when
// it is isolated).
std::shared_ptr<const ad::SparseMatrix> summary_operator(const tag::TextAttributedGraph& graph,
                                                         std::span<const int> rows,
                                                         std::span<const int> columns);

// 1/2 (CE(L, y) + CE(L^T, y)) with targets on the diagonal.
ad::Var symmetric_contrastive_loss(ad::Var logits);
double symmetric_contrastive_loss(const Matrix& logits);

struct AlignmentTerms {
  double node_text = 0.0;      // L1
  double text_summary = 0.0;   // L2
  double node_summary = 0.0;   // L3
  double total = 0.0;
};

struct AlignmentLoss {
  ad::Var total;
  AlignmentTerms terms;
};

// L1 + alpha (L2 + L3) over row-aligned V, T, S with logits scaled by
// exp(log_temperature).
AlignmentLoss alignment_loss(ad::Var nodes, ad::Var texts, ad::Var summaries,
                             ad::Var log_temperature, double alpha);
AlignmentTerms alignment_loss(const Matrix& nodes, const Matrix& texts, const Matrix& summaries,
                              double log_temperature, double alpha);

}  // namespace zpt::pretrain
