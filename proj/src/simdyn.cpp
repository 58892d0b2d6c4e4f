#include "taskmix/simdyn.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace taskmix {
namespace {

void check_dynamics(const DynamicsSpec& spec) {
  if (spec.tasks.empty()) throw std::invalid_argument("dynamics need at least one task");
  for (const TaskDynamics& task : spec.tasks) {
    if (!(task.ceiling > 0.0)) throw std::invalid_argument("ceiling must be positive");
    if (!(task.learn_rate > 0.0 && task.learn_rate < 1.0))
      throw std::invalid_argument("learn_rate must lie in (0, 1)");
    if (!(task.forget_rate >= 0.0 && task.forget_rate < 1.0))
      throw std::invalid_argument("forget_rate must lie in [0, 1)");
    if (!(task.initial_score >= 0.0 && task.initial_score <= task.ceiling))
      throw std::invalid_argument("initial_score must lie in [0, ceiling]");
  }
}

std::vector<double> allocation_from(const ScheduleDecision& decision) {
  std::vector<double> allocation = decision.values;
  if (decision.kind == DecisionKind::WeightMultipliers) {
    const double n = static_cast<double>(allocation.size());
    for (double& a : allocation) a /= n;
  }
  return allocation;
}

}  // namespace

std::vector<double> step_dynamics(const std::vector<double>& scores,
                                  const std::vector<double>& allocation,
                                  const DynamicsSpec& spec) {
  check_dynamics(spec);
  const std::size_t n = spec.tasks.size();
  if (scores.size() != n || allocation.size() != n)
    throw std::invalid_argument("step_dynamics: score/allocation length mismatch");
  double total = 0.0;
  for (double a : allocation) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("allocations must lie in [0, 1]");
    total += a;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("allocations must sum to 1");

  std::vector<double> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    const TaskDynamics& task = spec.tasks[i];
    const double s = scores[i];
    const double a = allocation[i];
    const double moved =
        s + task.learn_rate * a * (task.ceiling - s) - task.forget_rate * (1.0 - a) * s;
    next[i] = std::clamp(moved, 0.0, task.ceiling);
  }
  return next;
}

SimResult run_sim(const DynamicsSpec& spec, const SimConfig& cfg) {
  check_dynamics(spec);
  if (cfg.total_steps < 1) throw std::invalid_argument("total_steps must be positive");
  if (cfg.validation_every < 1) throw std::invalid_argument("validation_every must be positive");

  const std::size_t n = spec.tasks.size();
  std::vector<double> scores(n);
  std::vector<TaskState> states(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = spec.tasks[i].initial_score;
    states[i].task_id = static_cast<int>(i);
    states[i].name = "task" + std::to_string(i);
    states[i].baseline_score = spec.tasks[i].ceiling;
  }

  const bool sampling = is_sampling_scheduler(cfg.scheduler);
  const auto* loss_progress = std::get_if<LossProgressConfig>(&cfg.scheduler);
  LossProgressTracker tracker;
  ScheduleDecision decision =
      sampling ? uniform_probabilities(n, 0) : uniform_multipliers(n, 0);
  std::vector<double> allocation = allocation_from(decision);

  SimResult result;
  for (long step = 1; step <= cfg.total_steps; ++step) {
    scores = step_dynamics(scores, allocation, spec);
    if (step % cfg.validation_every != 0) continue;

    std::vector<double> gaps(n);
    for (std::size_t i = 0; i < n; ++i) {
      states[i].latest_score = scores[i];
      // The tracker's loss stand-in: the normalized remaining gap, floored so
      // a task parked at its ceiling still has a usable ratio.
      gaps[i] = std::max(spec.tasks[i].ceiling - scores[i], 1e-9) / spec.tasks[i].ceiling;
    }
    tracker.record(step, gaps);
    decision = loss_progress != nullptr ? tracker.decide(*loss_progress, n, step)
                                        : decide_from_scores(cfg.scheduler, states, step);
    allocation = allocation_from(decision);
    for (std::size_t i = 0; i < n; ++i) {
      MetricRecord record;
      record.step = step;
      record.task_id = static_cast<int>(i);
      record.raw_score = scores[i];
      record.relative_score = scores[i] / spec.tasks[i].ceiling;
      record.weight = decision.values[i];
      record.effective_lr = allocation[i];  // the applied effort share
      record.train_loss = gaps[i];
      result.records.push_back(record);
    }
  }
  result.final_scores = scores;
  return result;
}

OscillationReport detect_oscillation(const std::vector<MetricRecord>& trajectory, int window,
                                     double amplitude_threshold) {
  if (window < 3) throw std::invalid_argument("oscillation window must cover at least 3 events");
  if (!(amplitude_threshold >= 0.0))
    throw std::invalid_argument("amplitude threshold must be non-negative");

  std::map<int, std::vector<double>> series;
  for (const MetricRecord& record : trajectory) series[record.task_id].push_back(record.weight);

  OscillationReport report;
  report.amplitudes.assign(series.size(), 0.0);
  std::size_t slot = 0;
  for (const auto& [task_id, weights] : series) {
    (void)task_id;
    // Collapse plateaus, then find strict direction changes (local extrema).
    std::vector<std::pair<std::size_t, double>> points;
    for (std::size_t i = 0; i < weights.size(); ++i)
      if (points.empty() || points.back().second != weights[i]) points.emplace_back(i, weights[i]);
    std::vector<std::pair<std::size_t, double>> extrema;
    for (std::size_t i = 1; i + 1 < points.size(); ++i) {
      const double before = points[i].second - points[i - 1].second;
      const double after = points[i + 1].second - points[i].second;
      if ((before > 0.0 && after < 0.0) || (before < 0.0 && after > 0.0))
        extrema.push_back(points[i]);
    }
    double amplitude = 0.0;
    bool oscillating = false;
    for (std::size_t i = 0; i + 1 < extrema.size(); ++i)
      amplitude = std::max(amplitude, std::abs(extrema[i + 1].second - extrema[i].second));
    for (std::size_t i = 0; i + 2 < extrema.size(); ++i) {
      const bool inside_window =
          extrema[i + 2].first - extrema[i].first + 1 <= static_cast<std::size_t>(window);
      const bool strong_swings =
          std::abs(extrema[i + 1].second - extrema[i].second) > amplitude_threshold &&
          std::abs(extrema[i + 2].second - extrema[i + 1].second) > amplitude_threshold;
      if (inside_window && strong_swings) {
        oscillating = true;
        break;
      }
    }
    report.amplitudes[slot++] = amplitude;
    report.oscillating = report.oscillating || oscillating;
  }
  return report;
}

}  // namespace taskmix
