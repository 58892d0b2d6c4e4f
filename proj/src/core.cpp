#include "taskmix/core.hpp"

#include <algorithm>

namespace taskmix {

RelativeScores make_relative_scores(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("relative scores need at least one task");
  RelativeScores out;
  out.values = std::move(values);
  double sum = 0.0;
  double max = out.values.front();
  for (double v : out.values) {
    sum += v;
    max = std::max(max, v);
  }
  out.mean = sum / static_cast<double>(out.values.size());
  out.max = max;
  return out;
}

RelativeScores compute_relative_scores(const std::vector<TaskState>& tasks) {
  if (tasks.empty()) throw std::invalid_argument("relative scores need at least one task");
  std::vector<double> values;
  values.reserve(tasks.size());
  for (const TaskState& task : tasks) {
    if (!(task.baseline_score > 0.0))
      throw std::invalid_argument("baseline score must be positive for task '" + task.name + "'");
    if (!task.latest_score.has_value())
      throw ScoresUnavailable("no validation score yet for task '" + task.name + "'");
    values.push_back(*task.latest_score / task.baseline_score);
  }
  return make_relative_scores(std::move(values));
}

ScheduleDecision uniform_probabilities(std::size_t n_tasks, long step) {
  if (n_tasks == 0) throw std::invalid_argument("a decision needs at least one task");
  return {DecisionKind::SamplingProbabilities,
          std::vector<double>(n_tasks, 1.0 / static_cast<double>(n_tasks)), step};
}

ScheduleDecision uniform_multipliers(std::size_t n_tasks, long step) {
  if (n_tasks == 0) throw std::invalid_argument("a decision needs at least one task");
  return {DecisionKind::WeightMultipliers, std::vector<double>(n_tasks, 1.0), step};
}

}  // namespace taskmix
