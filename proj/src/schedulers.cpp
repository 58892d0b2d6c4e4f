#include "taskmix/schedulers.hpp"

#include <algorithm>
#include <cmath>

#include "taskmix/rng.hpp"

namespace taskmix {

bool is_sampling_scheduler(const SchedulerConfig& config) {
  return std::holds_alternative<UniformConfig>(config) ||
         std::holds_alternative<ConstantConfig>(config) ||
         std::holds_alternative<ExplicitConfig>(config);
}

const char* scheduler_kind_name(const SchedulerConfig& config) {
  if (std::holds_alternative<UniformConfig>(config)) return "uniform";
  if (std::holds_alternative<ConstantConfig>(config)) return "constant";
  if (std::holds_alternative<ExplicitConfig>(config)) return "explicit";
  if (std::holds_alternative<ImplicitConfig>(config)) return "implicit";
  return "loss_progress";
}

std::vector<double> explicit_weights(const RelativeScores& scores, const ExplicitConfig& cfg) {
  if (cfg.alpha < 0.0) throw std::invalid_argument("explicit alpha must be non-negative");
  if (cfg.epsilon < 0.0) throw std::invalid_argument("explicit epsilon must be non-negative");
  std::vector<double> weights;
  weights.reserve(scores.values.size());
  for (double s : scores.values) {
    if (!(s >= 0.0)) throw std::invalid_argument("relative scores must be non-negative");
    const double clamped = std::min(1.0, s);
    weights.push_back(1.0 / (std::pow(clamped, cfg.alpha) + cfg.epsilon));
  }
  return weights;
}

ScheduleDecision explicit_probabilities(const std::vector<double>& weights, long step) {
  if (weights.empty()) throw std::invalid_argument("cannot normalize an empty weight vector");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::invalid_argument("weights must be positive and finite");
    sum += w;
  }
  ScheduleDecision decision{DecisionKind::SamplingProbabilities, weights, step};
  for (double& v : decision.values) v /= sum;
  return decision;
}

ScheduleDecision implicit_weights(const RelativeScores& scores, const ImplicitConfig& cfg,
                                  long step) {
  if (cfg.alpha < 0.0) throw std::invalid_argument("implicit alpha must be non-negative");
  if (!(cfg.beta > 0.0)) throw std::invalid_argument("implicit beta must be positive");
  if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0))
    throw std::invalid_argument("implicit gamma must lie in [0, 1)");
  const std::size_t n = scores.values.size();
  if (n == 0) throw std::invalid_argument("implicit weights need at least one task");
  for (double s : scores.values)
    if (!(s >= 0.0)) throw std::invalid_argument("relative scores must be non-negative");

  // Relative scores are deliberately not clamped at 1 here: overshooting the
  // baseline keeps pushing the weight below 1 instead of saturating.
  const double ramp = std::pow(scores.max, cfg.alpha);

  if (n == 2) {
    // Two tasks deviate from their mean by the same magnitude, so one
    // deviation serves both. Rounding it through 1 + d first makes 1 - d
    // exactly representable as well, keeping the raw pair summing to exactly
    // 2 in floating point, which the renormalization then leaves untouched.
    std::vector<double> weights(2, 1.0);
    const double gap = 0.5 * std::abs(scores.values[0] - scores.values[1]);
    if (gap != 0.0) {
      const double deviation =
          (1.0 + std::min(cfg.gamma, ramp * std::pow(gap, cfg.beta))) - 1.0;
      const std::size_t low = scores.values[0] < scores.values[1] ? 0 : 1;
      weights[low] = 1.0 + deviation;
      weights[1 - low] = 1.0 - deviation;
    }
    return {DecisionKind::WeightMultipliers, std::move(weights), step};
  }

  std::vector<double> weights(n, 1.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double gap = scores.values[i] - scores.mean;
    if (gap != 0.0) {
      const double deviation = std::min(cfg.gamma, ramp * std::pow(std::abs(gap), cfg.beta));
      weights[i] = gap < 0.0 ? 1.0 + deviation : 1.0 - deviation;
    }
    sum += weights[i];
  }
  const double scale = static_cast<double>(n) / sum;
  for (double& w : weights) w *= scale;
  return {DecisionKind::WeightMultipliers, std::move(weights), step};
}

ScheduleDecision constant_probabilities(const ConstantConfig& cfg, long step) {
  if (cfg.probabilities.empty())
    throw std::invalid_argument("constant schedule needs at least one probability");
  double sum = 0.0;
  for (double p : cfg.probabilities) {
    if (!(p >= 0.0)) throw std::invalid_argument("probabilities must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("constant probabilities must sum to 1");
  return {DecisionKind::SamplingProbabilities, cfg.probabilities, step};
}

ScheduleDecision loss_progress_weights(const std::vector<double>& recent_losses,
                                       const std::vector<double>& past_losses,
                                       const LossProgressConfig& cfg, long step) {
  if (recent_losses.size() != past_losses.size())
    throw std::invalid_argument("loss snapshots must have matching lengths");
  if (recent_losses.empty()) throw std::invalid_argument("loss snapshots must be non-empty");
  if (!(cfg.temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  const std::size_t n = recent_losses.size();
  std::vector<double> logits(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(past_losses[i] > 0.0))
      throw std::invalid_argument("past losses must be positive to form ratios");
    logits[i] = (recent_losses[i] / past_losses[i]) / cfg.temperature;
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double& l : logits) {
    l = std::exp(l - peak);
    denom += l;
  }
  ScheduleDecision decision{DecisionKind::WeightMultipliers, std::move(logits), step};
  const double scale = static_cast<double>(n) / denom;
  for (double& v : decision.values) v *= scale;
  return decision;
}

int sample_task(const ScheduleDecision& decision, std::mt19937_64& rng) {
  if (decision.kind != DecisionKind::SamplingProbabilities)
    throw std::invalid_argument("sample_task needs sampling probabilities");
  if (decision.values.empty()) throw std::invalid_argument("cannot sample from an empty decision");
  const double u = uniform_unit(rng);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < decision.values.size(); ++i) {
    cumulative += decision.values[i];
    if (u < cumulative) return static_cast<int>(i);
  }
  return static_cast<int>(decision.values.size() - 1);
}

ScheduleDecision decide_from_scores(const SchedulerConfig& config,
                                    const std::vector<TaskState>& tasks, long step) {
  const std::size_t n = tasks.size();
  if (std::holds_alternative<UniformConfig>(config)) return uniform_probabilities(n, step);
  if (const auto* constant = std::get_if<ConstantConfig>(&config)) {
    if (constant->probabilities.size() != n)
      throw std::invalid_argument("constant schedule length does not match the task count");
    return constant_probabilities(*constant, step);
  }
  if (const auto* adaptive = std::get_if<ExplicitConfig>(&config)) {
    try {
      return explicit_probabilities(explicit_weights(compute_relative_scores(tasks), *adaptive),
                                    step);
    } catch (const ScoresUnavailable&) {
      return uniform_probabilities(n, step);
    }
  }
  if (const auto* adaptive = std::get_if<ImplicitConfig>(&config)) {
    try {
      return implicit_weights(compute_relative_scores(tasks), *adaptive, step);
    } catch (const ScoresUnavailable&) {
      return uniform_multipliers(n, step);
    }
  }
  throw std::invalid_argument("loss-progress schedules are driven by loss snapshots, not scores");
}

void LossProgressTracker::record(long step, std::vector<double> losses) {
  if (!snapshots_.empty() && snapshots_.back().first >= step)
    throw std::invalid_argument("loss snapshots must arrive in increasing step order");
  snapshots_.emplace_back(step, std::move(losses));
}

ScheduleDecision LossProgressTracker::decide(const LossProgressConfig& cfg, std::size_t n_tasks,
                                             long step) const {
  if (cfg.window < 1) throw std::invalid_argument("loss-progress window must be positive");
  if (snapshots_.empty()) return uniform_multipliers(n_tasks, step);
  const auto& recent = snapshots_.back();
  const std::vector<double>* past = nullptr;
  for (auto it = snapshots_.rbegin(); it != snapshots_.rend(); ++it) {
    if (it->first <= recent.first - cfg.window) {
      past = &it->second;
      break;
    }
  }
  if (past == nullptr) return uniform_multipliers(n_tasks, step);
  if (recent.second.size() != n_tasks || past->size() != n_tasks)
    throw std::invalid_argument("loss snapshot length does not match the task count");
  // A task that already hit zero loss has no meaningful ratio; stay uniform.
  for (double p : *past)
    if (!(p > 0.0)) return uniform_multipliers(n_tasks, step);
  return loss_progress_weights(recent.second, *past, cfg, step);
}

}  // namespace taskmix
