#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace taskmix {

// Raised when a scheduler is asked for a decision before every task has a
// validation score. Callers fall back to the uniform decision.
struct ScoresUnavailable : std::runtime_error {
  explicit ScoresUnavailable(const std::string& what) : std::runtime_error(what) {}
};

// One trainable objective: identity, baseline reference and latest measurement.
struct TaskState {
  int task_id = 0;
  std::string name;
  double baseline_score = 1.0;         // b_i, must stay positive
  std::optional<double> latest_score;  // s_i, absent until the first validation
  std::size_t dataset_size = 0;
};

// Relative validation performance S_i = s_i / b_i for every task. mean and max
// are always derived from `values`, never cached independently.
struct RelativeScores {
  std::vector<double> values;
  double mean = 0.0;
  double max = 0.0;
};

RelativeScores make_relative_scores(std::vector<double> values);
RelativeScores compute_relative_scores(const std::vector<TaskState>& tasks);

enum class DecisionKind {
  SamplingProbabilities,  // values sum to 1
  WeightMultipliers,      // values sum to the task count
};

// Per-task allocation produced by a scheduler at one step.
struct ScheduleDecision {
  DecisionKind kind = DecisionKind::SamplingProbabilities;
  std::vector<double> values;
  long step = 0;
};

ScheduleDecision uniform_probabilities(std::size_t n_tasks, long step);
ScheduleDecision uniform_multipliers(std::size_t n_tasks, long step);

// One validation event for one task.
struct MetricRecord {
  long step = 0;
  int task_id = 0;
  double raw_score = 0.0;
  double relative_score = 0.0;
  double weight = 0.0;
  double effective_lr = 0.0;
  double train_loss = 0.0;
};

}  // namespace taskmix
