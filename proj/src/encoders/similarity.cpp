#include "zpt/encoders/similarity.hpp"

#include "zpt/errors.hpp"

#include <string>

namespace zpt::enc {

ad::Matrix l2_normalize(const ad::Matrix& m) {
  ad::Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (!(n > 0.0)) throw NumericalDomainError("l2_normalize: row " + std::to_string(i) + " has zero norm");
    out.row(i) = m.row(i) / n;
  }
  return out;
}

ad::Matrix cosine_similarity_matrix(const ad::Matrix& a, const ad::Matrix& b) {
  if (a.cols() != b.cols()) throw ContractError("cosine_similarity_matrix: dimension mismatch");
  ad::Matrix s = l2_normalize(a) * l2_normalize(b).transpose();
  return s.cwiseMax(-1.0).cwiseMin(1.0);
}

}  // namespace zpt::enc
