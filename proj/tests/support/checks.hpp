#pragma once

// Independent oracles shared by the unit tests and the acceptance binary.

#include "zpt/ad/tape.hpp"
#include "zpt/encoders/model.hpp"
#include "zpt/tag/graph.hpp"
#include "zpt/ubcg/ubcg.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace zpt::testing {

struct TensorError {
  std::string name;
  double rel_error = 0.0;
};

// ||g_a - g_n|| / max(||g_a||, ||g_n||, 1e-10) per tensor, where g_n is the
// central difference with step h.
using Objective = std::function<ad::Var(ad::Tape&)>;
std::vector<TensorError> gradient_check(const Objective& f, const std::vector<ad::Parameter*>& params,
                                        double h = 1e-5);
double max_error(const std::vector<TensorError>& errs);

// 6 nodes, two triangles joined by one edge, one isolated node.
tag::TextAttributedGraph micro_graph();
// Tiny encoders over micro_graph's vocabulary.
enc::PretrainedModel micro_model(std::uint64_t seed);

// L_align through both encoders and the temperature.
std::vector<TensorError> check_alignment_gradients(std::uint64_t seed);
// L_gen through every UBCG tensor, both directions.
std::vector<TensorError> check_ubcg_gradients(std::uint64_t seed);
// Tuning cross-entropy with respect to the context vectors.
std::vector<TensorError> check_tuning_gradients(std::uint64_t seed);

// Mean of log q(z) - log p(z) over `samples` draws z ~ q.
double kl_monte_carlo(const ubcg::LatentGaussian& g, long samples, std::uint64_t seed);

// Closed-form values of lambda softmax(a) + (1 - lambda) softmax(b).
std::vector<double> reference_hybrid(const std::vector<double>& node_cos, const std::vector<double>& text_cos,
                                     double lambda);

}  // namespace zpt::testing
