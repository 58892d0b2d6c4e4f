#pragma once

#include <random>
#include <utility>
#include <variant>
#include <vector>

#include "taskmix/core.hpp"

namespace taskmix {

// Validation-driven sampling schedule: tasks below their baseline are
// oversampled, tasks at or past it fall back to the 1/(1+epsilon) floor.
struct ExplicitConfig {
  double alpha = 1.0;     // oversampling aggressiveness
  double epsilon = 0.05;  // guard keeping the oversampling ratio finite
};

// Validation-driven learning-rate multipliers around a fixed task rotation.
struct ImplicitConfig {
  double alpha = 16.0;  // ramp-in exponent on max_j S_j: keeps early weights near 1
  double beta = 0.1;    // emphasis on the per-task deviation from the mean
  double gamma = 0.05;  // cap; raw weights stay inside [1-gamma, 1+gamma]
};

// Fixed sampling mixture.
struct ConstantConfig {
  std::vector<double> probabilities;
};

// Loss-ratio weighting: tasks whose training loss fell the least get the
// largest multipliers (softmax over recent/past ratios).
struct LossProgressConfig {
  long window = 200;  // steps between the two loss snapshots
  double temperature = 1.0;
};

struct UniformConfig {};

using SchedulerConfig =
    std::variant<UniformConfig, ConstantConfig, ExplicitConfig, ImplicitConfig, LossProgressConfig>;

// True when decisions are sampling probabilities; false for weight-multiplier
// schedulers that drive a fixed uniform task rotation.
bool is_sampling_scheduler(const SchedulerConfig& config);
const char* scheduler_kind_name(const SchedulerConfig& config);

// w_i = 1 / (min(1, S_i)^alpha + epsilon). epsilon = 0 is accepted here so the
// guard can be studied in isolation; config validation demands epsilon > 0.
std::vector<double> explicit_weights(const RelativeScores& scores, const ExplicitConfig& cfg);
ScheduleDecision explicit_probabilities(const std::vector<double>& weights, long step);

// raw_i = 1 + sign(mean - S_i) * min(gamma, max_j(S_j)^alpha * |S_i - mean|^beta),
// then multiplicatively renormalized so the values sum to the task count.
ScheduleDecision implicit_weights(const RelativeScores& scores, const ImplicitConfig& cfg,
                                  long step);

ScheduleDecision constant_probabilities(const ConstantConfig& cfg, long step);

// w = N * softmax((recent_i / past_i) / temperature).
ScheduleDecision loss_progress_weights(const std::vector<double>& recent_losses,
                                       const std::vector<double>& past_losses,
                                       const LossProgressConfig& cfg, long step);

int sample_task(const ScheduleDecision& decision, std::mt19937_64& rng);

// Decision for the score-driven kinds, with the uniform fallback while any
// task is missing a score. LossProgress is driven by loss snapshots, not
// scores, and is rejected here.
ScheduleDecision decide_from_scores(const SchedulerConfig& config,
                                    const std::vector<TaskState>& tasks, long step);

// Collects training-loss snapshots and produces loss-progress decisions once
// two snapshots at least `window` steps apart exist; uniform until then.
class LossProgressTracker {
 public:
  void record(long step, std::vector<double> losses);
  ScheduleDecision decide(const LossProgressConfig& cfg, std::size_t n_tasks, long step) const;

 private:
  std::vector<std::pair<long, std::vector<double>>> snapshots_;
};

}  // namespace taskmix
