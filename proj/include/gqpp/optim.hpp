#pragma once

#include <cstddef>
#include <vector>

#include "gqpp/autodiff.hpp"

namespace gqpp::ad {

/// Adam with linear warmup over the first ceil(warmup_fraction * T) steps
/// followed by linear decay to zero at step T.
struct OptimizerState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::size_t t = 0;
  double base_lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t total_steps = 1;
  std::size_t warmup_steps = 1;
};

OptimizerState make_optimizer_state(const ParameterSet& params, double base_lr, std::size_t total_steps,
                                    double warmup_fraction = 0.10);

/// Learning rate used by the update numbered t (1-based).
double scheduled_lr(const OptimizerState& state, std::size_t t);

/// Advances t and applies one bias-corrected Adam update from the gradients
/// stored on the parameters. Requires state.t < total_steps.
void adam_step(OptimizerState& state, ParameterSet& params);

}  // namespace gqpp::ad
