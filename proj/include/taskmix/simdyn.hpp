#pragma once

#include "taskmix/core.hpp"
#include "taskmix/schedulers.hpp"

namespace taskmix {

// Closed-form learning curve for one task: effort pulls the score toward the
// ceiling, withheld effort lets it decay.
struct TaskDynamics {
  double ceiling = 1.0;       // asymptotic score under full effort
  double learn_rate = 0.1;    // fraction of the remaining gap closed per unit effort
  double forget_rate = 0.0;   // fraction of the score lost per unit withheld effort
  double initial_score = 0.0;
};

struct DynamicsSpec {
  std::vector<TaskDynamics> tasks;
};

struct SimConfig {
  long total_steps = 1000;
  long validation_every = 1;
  SchedulerConfig scheduler;
  long seed = 0;
};

// s_i <- clamp(s_i + eta_i * a_i * (c_i - s_i) - phi_i * (1 - a_i) * s_i, 0, c_i).
// The allocation must sum to 1 (checked on every call).
std::vector<double> step_dynamics(const std::vector<double>& scores,
                                  const std::vector<double>& allocation,
                                  const DynamicsSpec& spec);

struct SimResult {
  std::vector<MetricRecord> records;  // one per task per validation event
  std::vector<double> final_scores;
};

// Closed-loop run: the scheduler only sees scores refreshed every
// validation_every steps, so decisions act on stale information in between.
// Baselines for relative scores are the ceilings (the single-task asymptote).
SimResult run_sim(const DynamicsSpec& spec, const SimConfig& cfg);

struct OscillationReport {
  bool oscillating = false;
  std::vector<double> amplitudes;  // per task: largest alternating peak-to-trough swing
};

// Flags a trajectory when any task's logged weight shows at least three
// alternating extrema inside `window` consecutive validation events with
// every swing larger than `amplitude_threshold`.
OscillationReport detect_oscillation(const std::vector<MetricRecord>& trajectory, int window,
                                     double amplitude_threshold);

}  // namespace taskmix
