#pragma once

#include "zpt/ad/tape.hpp"

#include <vector>

namespace zpt::ad {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over a fixed set of parameters. Parameters must outlive the optimiser.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamOptions options);

  void zero_grad();
  // Applies one update from the gradients currently held by the parameters.
  // Parameters whose grad was never populated are skipped.
  void step();

  long steps() const { return step_; }
  const AdamOptions& options() const { return options_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  AdamOptions options_;
  long step_ = 0;
};

}  // namespace zpt::ad
