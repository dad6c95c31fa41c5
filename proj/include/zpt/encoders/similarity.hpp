#pragma once

#include "zpt/ad/tape.hpp"

namespace zpt::enc {

// Rows scaled to unit Euclidean norm. Throws NumericalDomainError on a
// zero-norm row.
ad::Matrix l2_normalize(const ad::Matrix& m);

// (i, j) = cos(a_i, b_j). Throws NumericalDomainError on a zero-norm row.
ad::Matrix cosine_similarity_matrix(const ad::Matrix& a, const ad::Matrix& b);

}  // namespace zpt::enc
