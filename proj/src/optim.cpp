#include "gqpp/optim.hpp"

#include <cmath>

#include "gqpp/error.hpp"

namespace gqpp::ad {

OptimizerState make_optimizer_state(const ParameterSet& params, double base_lr, std::size_t total_steps,
                                    double warmup_fraction) {
  if (total_steps == 0) throw ContractError("optimizer: total_steps must be positive");
  if (!(warmup_fraction > 0.0 && warmup_fraction < 1.0)) throw ContractError("optimizer: warmup fraction must lie in (0, 1)");
  OptimizerState s;
  s.base_lr = base_lr;
  s.total_steps = total_steps;
  s.warmup_steps = static_cast<std::size_t>(std::ceil(warmup_fraction * static_cast<double>(total_steps)));
  for (const auto& [name, t] : params.entries()) {
    s.first_moment.emplace_back(t.size(), 0.0);
    s.second_moment.emplace_back(t.size(), 0.0);
  }
  return s;
}

double scheduled_lr(const OptimizerState& s, std::size_t t) {
  if (t <= s.warmup_steps) return s.base_lr * static_cast<double>(t) / static_cast<double>(s.warmup_steps);
  if (t >= s.total_steps) return 0.0;
  return s.base_lr * static_cast<double>(s.total_steps - t) / static_cast<double>(s.total_steps - s.warmup_steps);
}

void adam_step(OptimizerState& s, ParameterSet& params) {
  if (s.t >= s.total_steps) throw ContractError("adam_step: schedule exhausted (t >= total_steps)");
  if (s.first_moment.size() != params.entries().size()) throw ContractError("adam_step: state/parameter mismatch");
  ++s.t;
  const double lr = scheduled_lr(s, s.t);
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t p = 0; p < params.entries().size(); ++p) {
    auto& tensor = params.entries()[p].second;
    if (!tensor.requires_grad()) continue;
    auto values = tensor.mutable_data();
    auto grads = tensor.grad();
    auto& m = s.first_moment[p];
    auto& v = s.second_moment[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grads[i];
      m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
      v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      values[i] -= lr * mhat / (std::sqrt(vhat) + s.eps);
    }
  }
}

}  // namespace gqpp::ad
