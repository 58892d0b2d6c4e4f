#include "taskmix/optim.hpp"

#include <cmath>
#include <string>

namespace taskmix {

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               const AdamConfig& cfg, double lr_scale) {
  if (params.size() != grads.size() || state.m.size() != params.size())
    throw std::invalid_argument("adam_step: parameter, gradient and state sizes must match");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0))
    throw std::invalid_argument("adam betas must lie in [0, 1)");
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("adam epsilon must be positive");
  if (!(lr_scale > 0.0) || !std::isfinite(lr_scale))
    throw std::invalid_argument("lr_scale must be positive and finite");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(grads[i]))
      throw std::invalid_argument("non-finite gradient at index " + std::to_string(i));

  state.t += 1;
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  const double step_size = lr_scale * cfg.base_lr;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / bias1;
    const double v_hat = state.v[i] / bias2;
    params[i] -= step_size * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

void scale_gradients(std::span<double> grads, double factor) {
  if (!std::isfinite(factor)) throw std::invalid_argument("gradient scale must be finite");
  for (double& g : grads) g *= factor;
}

std::vector<double> scaled_gradients(std::vector<double> grads, double factor) {
  scale_gradients(std::span<double>(grads), factor);
  return grads;
}

double lr_at(const LrSchedule& schedule, long step) {
  if (step < 1) throw std::invalid_argument("learning-rate steps start at 1");
  if (schedule.warmup_steps < 1) throw std::invalid_argument("warmup_steps must be positive");
  if (!(schedule.base > 0.0)) throw std::invalid_argument("schedule base must be positive");
  const double t = static_cast<double>(step);
  const double w = static_cast<double>(schedule.warmup_steps);
  return schedule.base * std::min(1.0 / std::sqrt(t), t / (w * std::sqrt(w)));
}

OptimizerBank::OptimizerBank(const OptimizerTopology& topology, int n_tasks,
                             const ParamLayout& layout)
    : topology_(topology), layout_(layout) {
  if (n_tasks < 1) throw std::invalid_argument("optimizer bank needs at least one task");
  if (layout.n_tasks() != n_tasks)
    throw std::invalid_argument("optimizer bank: layout task count mismatch");
  const int encoder_copies = topology.accumulators == AccumulatorMode::PerTask ? n_tasks : 1;
  encoder_states_.reserve(static_cast<std::size_t>(encoder_copies));
  for (int i = 0; i < encoder_copies; ++i) encoder_states_.emplace_back(layout.encoder().length);
  head_states_.reserve(static_cast<std::size_t>(n_tasks));
  for (int t = 0; t < n_tasks; ++t) head_states_.emplace_back(layout.head(t).length);
}

AdamState& OptimizerBank::encoder_state(int task) {
  if (topology_.accumulators == AccumulatorMode::Shared) return encoder_states_.front();
  if (task < 0 || task >= layout_.n_tasks())
    throw std::out_of_range("no encoder state for that task");
  return encoder_states_[static_cast<std::size_t>(task)];
}

AdamState& OptimizerBank::head_state(int task) {
  if (task < 0 || task >= layout_.n_tasks()) throw std::out_of_range("no head state for that task");
  return head_states_[static_cast<std::size_t>(task)];
}

void OptimizerBank::apply(int task, ParamVector& params, std::span<const double> grads,
                          const AdamConfig& cfg, double lr_scale) {
  if (params.layout != layout_)
    throw std::invalid_argument("optimizer bank: parameter layout mismatch");
  if (grads.size() != params.values.size())
    throw std::invalid_argument("optimizer bank: gradient length mismatch");
  if (task < 0 || task >= layout_.n_tasks()) throw std::out_of_range("no such task");

  auto param_span = [&](const Segment& s) {
    return std::span<double>(params.values).subspan(s.offset, s.length);
  };
  auto grad_span = [&](const Segment& s) { return grads.subspan(s.offset, s.length); };

  if (topology_.accumulators == AccumulatorMode::Shared) {
    adam_step(encoder_states_.front(), param_span(layout_.encoder()), grad_span(layout_.encoder()),
              cfg, lr_scale);
    for (int t = 0; t < layout_.n_tasks(); ++t)
      adam_step(head_states_[static_cast<std::size_t>(t)], param_span(layout_.head(t)),
                grad_span(layout_.head(t)), cfg, lr_scale);
  } else {
    adam_step(encoder_states_[static_cast<std::size_t>(task)], param_span(layout_.encoder()),
              grad_span(layout_.encoder()), cfg, lr_scale);
    adam_step(head_states_[static_cast<std::size_t>(task)], param_span(layout_.head(task)),
              grad_span(layout_.head(task)), cfg, lr_scale);
  }
}

OptimizerBank build_optimizers(const OptimizerTopology& topology, int n_tasks,
                               const ParamLayout& layout) {
  return OptimizerBank(topology, n_tasks, layout);
}

}  // namespace taskmix
