#include "doctest.h"

#include <cmath>

#include "gqpp/autodiff.hpp"
#include "gqpp/error.hpp"
#include "gqpp/optim.hpp"

using namespace gqpp;
using namespace gqpp::ad;

TEST_CASE("one Adam step from zero moments") {
  ParameterSet p;
  auto w = p.add("w", Tensor::from(1, 1, {2.0}, true));
  // warmup 1 step of 10: lr(1) = base.
  auto state = make_optimizer_state(p, 0.1, 10, 0.1);
  CHECK(state.warmup_steps == 1);
  w.mutable_grad()[0] = 1.0;
  adam_step(state, p);
  CHECK(w.data()[0] - 2.0 == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-12));
  CHECK(state.t == 1);
}

TEST_CASE("zero gradients leave parameters unchanged") {
  ParameterSet p;
  auto w = p.add("w", Tensor::from(2, 2, {1, -2, 3, 4}, true));
  auto state = make_optimizer_state(p, 0.5, 5, 0.1);
  for (int i = 0; i < 5; ++i) adam_step(state, p);
  CHECK(std::vector<double>(w.data().begin(), w.data().end()) == std::vector<double>{1, -2, 3, 4});
  CHECK_THROWS_AS(adam_step(state, p), ContractError);
}

TEST_CASE("warmup then linear decay") {
  ParameterSet p;
  p.add("w", Tensor::zeros(1, 1, true));
  auto s = make_optimizer_state(p, 1e-3, 100, 0.1);
  CHECK(s.warmup_steps == 10);
  CHECK(scheduled_lr(s, 1) == doctest::Approx(1e-4));
  CHECK(scheduled_lr(s, 10) == 1e-3);
  CHECK(scheduled_lr(s, 55) == doctest::Approx(0.5e-3));
  CHECK(scheduled_lr(s, 100) == 0.0);
  for (std::size_t t = 1; t < 100; ++t) {
    if (t < 10) CHECK(scheduled_lr(s, t + 1) > scheduled_lr(s, t));
    if (t >= 10) CHECK(scheduled_lr(s, t + 1) < scheduled_lr(s, t));
  }
  // ceil(0.1 * 7) = 1
  CHECK(make_optimizer_state(p, 1.0, 7, 0.1).warmup_steps == 1);
}

TEST_CASE("Adam minimises a quadratic") {
  ParameterSet p;
  auto w = p.add("w", Tensor::from(1, 3, {5, -4, 2}, true));
  auto s = make_optimizer_state(p, 0.1, 400, 0.1);
  for (int i = 0; i < 400; ++i) {
    p.zero_grad();
    Tape tape;
    tape.backward(mean(tape, mul(tape, w, w)));
    adam_step(s, p);
  }
  for (double v : w.data()) CHECK(std::abs(v) < 0.05);
}
