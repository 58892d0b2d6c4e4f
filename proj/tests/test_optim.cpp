#include <doctest.h>

#include <cmath>
#include <random>

#include "taskmix/optim.hpp"
#include "taskmix/rng.hpp"

using namespace taskmix;

namespace {

AdamConfig tiny_lr() {
  AdamConfig cfg;
  cfg.base_lr = 1e-3;
  return cfg;
}

}  // namespace

TEST_CASE("the first Adam step matches the hand-computed example") {
  // g = 0.5, lr 1e-3: m-hat = g, v-hat = g^2, step = lr * g / (|g| + eps).
  AdamState state(1);
  std::vector<double> theta{0.0};
  std::vector<double> grad{0.5};
  adam_step(state, std::span<double>(theta), std::span<const double>(grad), tiny_lr());
  CHECK(theta[0] == doctest::Approx(-0.00099999998).epsilon(1e-12));

  // Independent recomputation with the same expression shapes.
  const double m = 0.1 * 0.5, v = 0.001 * 0.25;
  const double expected = -(1e-3 * (m / (1.0 - 0.9)) / (std::sqrt(v / (1.0 - 0.999)) + 1e-8));
  CHECK(theta[0] == doctest::Approx(expected).epsilon(1e-15));
  CHECK(state.t == 1);
}

TEST_CASE("fresh-state updates barely notice a 1000x gradient rescale") {
  std::mt19937_64 rng(17);
  for (int draw = 0; draw < 200; ++draw) {
    const double g = (0.1 + 0.9 * uniform_unit(rng)) * ((rng() & 1) ? 1.0 : -1.0);
    AdamState a(1), b(1);
    std::vector<double> theta_a{0.0}, theta_b{0.0};
    std::vector<double> grad_a{g}, grad_b{1000.0 * g};
    adam_step(a, std::span<double>(theta_a), std::span<const double>(grad_a), tiny_lr());
    adam_step(b, std::span<double>(theta_b), std::span<const double>(grad_b), tiny_lr());
    CHECK(std::abs(theta_a[0] - theta_b[0]) <= 1e-6 * std::abs(theta_a[0]));
  }
}

TEST_CASE("bias correction recovers a constant gradient exactly") {
  AdamState state(1);
  std::vector<double> theta{0.0};
  const std::vector<double> grad{0.3};
  AdamConfig cfg = tiny_lr();
  for (int i = 0; i < 100; ++i)
    adam_step(state, std::span<double>(theta), std::span<const double>(grad), cfg);
  const double bias1 = 1.0 - std::pow(cfg.beta1, 100.0);
  const double bias2 = 1.0 - std::pow(cfg.beta2, 100.0);
  CHECK(state.m[0] / bias1 == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(state.v[0] / bias2 == doctest::Approx(0.09).epsilon(1e-12));
  // Every step is then lr * g / (|g| + eps), i.e. ~lr toward the minimum.
  CHECK(theta[0] == doctest::Approx(-100.0 * 1e-3).epsilon(1e-4));
}

TEST_CASE("lr_scale multiplies the base step size") {
  AdamState a(1), b(1);
  std::vector<double> theta_a{0.0}, theta_b{0.0};
  const std::vector<double> grad{1.0};
  adam_step(a, std::span<double>(theta_a), std::span<const double>(grad), tiny_lr(), 1.0);
  adam_step(b, std::span<double>(theta_b), std::span<const double>(grad), tiny_lr(), 0.25);
  CHECK(theta_b[0] == doctest::Approx(0.25 * theta_a[0]).epsilon(1e-12));
}

TEST_CASE("adam rejects broken inputs before touching state") {
  AdamState state(2);
  std::vector<double> theta{0.0, 0.0};
  std::vector<double> grad{1.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_WITH_AS(
      adam_step(state, std::span<double>(theta), std::span<const double>(grad), tiny_lr()),
      "non-finite gradient at index 1", std::invalid_argument);
  CHECK(state.t == 0);
  CHECK(state.m[0] == 0.0);
  CHECK(theta[0] == 0.0);

  grad[1] = 1.0;
  AdamConfig bad = tiny_lr();
  bad.beta1 = 1.0;
  CHECK_THROWS_AS(adam_step(state, std::span<double>(theta), std::span<const double>(grad), bad),
                  std::invalid_argument);
  bad = tiny_lr();
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(adam_step(state, std::span<double>(theta), std::span<const double>(grad), bad),
                  std::invalid_argument);
  CHECK_THROWS_AS(adam_step(state, std::span<double>(theta), std::span<const double>(grad),
                            tiny_lr(), 0.0),
                  std::invalid_argument);
  std::vector<double> short_grad{1.0};
  CHECK_THROWS_AS(
      adam_step(state, std::span<double>(theta), std::span<const double>(short_grad), tiny_lr()),
      std::invalid_argument);
}

TEST_CASE("gradient scaling helpers scale in place and by value") {
  std::vector<double> grads{1.0, -2.0, 0.5};
  scale_gradients(std::span<double>(grads), 2.0);
  CHECK(grads[0] == 2.0);
  CHECK(grads[1] == -4.0);
  const std::vector<double> scaled = scaled_gradients({1.0, 1.0}, 0.5);
  CHECK(scaled[0] == 0.5);
  CHECK_THROWS_AS(scale_gradients(std::span<double>(grads),
                                  std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
}

TEST_CASE("the learning-rate schedule warms up linearly then decays as 1/sqrt") {
  CHECK(lr_at({1.5, 40000}, 40000) == doctest::Approx(0.0075).epsilon(1e-15));
  CHECK(lr_at({1.5, 40000}, 1) == doctest::Approx(1.875e-7).epsilon(1e-15));
  CHECK(lr_at({1.0, 1}, 100) == doctest::Approx(0.1).epsilon(1e-15));
  // Monotone up through warmup, monotone down after.
  CHECK(lr_at({1.0, 1000}, 500) < lr_at({1.0, 1000}, 1000));
  CHECK(lr_at({1.0, 1000}, 4000) < lr_at({1.0, 1000}, 1000));
  CHECK_THROWS_AS(lr_at({1.0, 1000}, 0), std::invalid_argument);
  CHECK_THROWS_AS(lr_at({0.0, 1000}, 1), std::invalid_argument);
  CHECK_THROWS_AS(lr_at({1.0, 0}, 1), std::invalid_argument);
}

TEST_CASE("the optimizer bank's state count tracks the topology") {
  const MlpSpec spec{3, 4, 2};
  const ParamLayout layout(spec, 2);
  const OptimizerBank per_task({AccumulatorMode::PerTask, ScalingMode::ScaleLearningRate}, 2,
                               layout);
  CHECK(per_task.state_count() == 4);  // two encoder views + two heads
  const OptimizerBank shared({AccumulatorMode::Shared, ScalingMode::ScaleGradients}, 2, layout);
  CHECK(shared.state_count() == 3);  // one encoder + two heads
  CHECK_THROWS_AS(OptimizerBank({}, 2, ParamLayout(spec, 3)), std::invalid_argument);
}

TEST_CASE("per-task accumulators never touch the other task's head") {
  const MlpSpec spec{2, 3, 1};
  const ParamLayout layout(spec, 2);
  ParamVector params{layout};
  for (std::size_t i = 0; i < params.values.size(); ++i)
    params.values[i] = 0.01 * static_cast<double>(i + 1);

  OptimizerBank bank({AccumulatorMode::PerTask, ScalingMode::ScaleLearningRate}, 2, layout);
  std::vector<double> grads(params.values.size(), 0.0);
  for (std::size_t i = 0; i < layout.encoder().length; ++i) grads[i] = 0.1;
  for (std::size_t i = 0; i < layout.head(0).length; ++i) grads[layout.head(0).offset + i] = 0.2;

  const std::vector<double> before = params.values;
  bank.apply(0, params, grads, tiny_lr());
  for (std::size_t i = 0; i < layout.head(1).length; ++i)
    CHECK(params.values[layout.head(1).offset + i] == before[layout.head(1).offset + i]);
  CHECK(params.values[layout.encoder().offset] != before[layout.encoder().offset]);
  CHECK(params.values[layout.head(0).offset] != before[layout.head(0).offset]);
  CHECK(bank.head_state(1).t == 0);
}

TEST_CASE("shared accumulators leak momentum into idle heads") {
  const MlpSpec spec{2, 3, 1};
  const ParamLayout layout(spec, 2);
  ParamVector params{layout};
  OptimizerBank bank({AccumulatorMode::Shared, ScalingMode::ScaleGradients}, 2, layout);

  // First, task 1 builds momentum in its own head.
  std::vector<double> grads_t1(params.values.size(), 0.0);
  for (std::size_t i = 0; i < layout.head(1).length; ++i) grads_t1[layout.head(1).offset + i] = 0.3;
  bank.apply(1, params, grads_t1, tiny_lr());

  // A later task-0 step carries zero head-1 gradient, yet head 1 still moves.
  std::vector<double> grads_t0(params.values.size(), 0.0);
  for (std::size_t i = 0; i < layout.head(0).length; ++i) grads_t0[layout.head(0).offset + i] = 0.3;
  const std::vector<double> before = params.values;
  bank.apply(0, params, grads_t0, tiny_lr());
  bool head1_moved = false;
  for (std::size_t i = 0; i < layout.head(1).length; ++i)
    head1_moved = head1_moved ||
                  params.values[layout.head(1).offset + i] != before[layout.head(1).offset + i];
  CHECK(head1_moved);
}

TEST_CASE("the bank validates its inputs") {
  const MlpSpec spec{2, 3, 1};
  const ParamLayout layout(spec, 2);
  ParamVector params{layout};
  OptimizerBank bank = build_optimizers({}, 2, layout);
  std::vector<double> grads(params.values.size(), 0.0);
  CHECK_THROWS_AS(bank.apply(2, params, grads, tiny_lr()), std::out_of_range);
  std::vector<double> short_grads(3, 0.0);
  CHECK_THROWS_AS(bank.apply(0, params, short_grads, tiny_lr()), std::invalid_argument);
  ParamVector other{ParamLayout(spec, 3)};
  std::vector<double> other_grads(other.values.size(), 0.0);
  CHECK_THROWS_AS(bank.apply(0, other, other_grads, tiny_lr()), std::invalid_argument);
}
