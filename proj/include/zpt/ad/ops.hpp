#pragma once

// Differentiable operations recorded on a Tape. Every op reads its inputs'
// values, computes the forward result eagerly and registers the matching
// vector-Jacobian product.

#include "zpt/ad/tape.hpp"

#include <Eigen/SparseCore>

#include <memory>
#include <span>
#include <vector>

namespace zpt::ad {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

Var matmul(Var a, Var b);
// a * b^T
Var matmul_nt(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var a, double s);
// Multiplies every entry of `a` by the 1x1 variable `s`.
Var scale(Var a, Var s);
// Adds a 1 x cols row vector to every row of `a`.
Var add_row(Var a, Var bias);
// x * w + b with b broadcast over rows.
Var linear(Var x, Var w, Var b);

Var relu(Var a);
Var leaky_relu(Var a, double negative_slope);
Var exp(Var a);

// Row-wise layer normalisation with affine gamma/beta (each 1 x cols).
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var gather_rows(Var a, std::span<const int> rows);

// s * a for a fixed sparse left operand.
Var sparse_matmul(std::shared_ptr<const SparseMatrix> s, Var a);

// Throws NumericalDomainError if any row has zero norm.
Var l2_normalize_rows(Var a);
Var softmax_rows(Var a);

// mean_i [ logsumexp(z_i) - z_i[target_i] ]
Var cross_entropy_rows(Var logits, std::span<const int> targets);
// mean_i [ -log p_i[target_i] ] for rows that are already probabilities.
Var nll_rows(Var probs, std::span<const int> targets);

Var sum(Var a);
Var mean(Var a);
// rows x 1 vector of per-row sums.
Var row_sums(Var a);
Var square(Var a);

// Multi-head scaled dot-product attention over `batch` sequences packed as
// consecutive blocks of `seq_len` rows. `qkv` is (batch*seq_len) x 3*width
// with query, key and value columns side by side. Keys at positions
// >= lengths[b] are masked out for sequence b.
Var attention(Var qkv, int batch, int seq_len, int heads, std::span<const int> lengths);

}  // namespace zpt::ad
