#pragma once

#include <optional>
#include <string>
#include <vector>

#include "taskmix/config.hpp"
#include "taskmix/core.hpp"
#include "taskmix/model.hpp"

namespace taskmix {

// Thrown when a training loss stops being finite. Carries everything logged
// up to the failing step so partial artifacts can still be written.
struct TrainingDiverged : std::runtime_error {
  TrainingDiverged(long step_, int task_id_, std::vector<MetricRecord> partial)
      : std::runtime_error("training diverged at step " + std::to_string(step_) + " on task " +
                           std::to_string(task_id_)),
        step(step_),
        task_id(task_id_),
        partial_metrics(std::move(partial)) {}

  long step;
  int task_id;
  std::vector<MetricRecord> partial_metrics;
};

struct BaselineResult {
  int task_id = 0;
  std::string task_name;
  double baseline_score = 0.0;  // dev score of the averaged checkpoint
  double test_score = 0.0;
  double final_val_mse = 0.0;
  long steps = 0;
};

struct RunResult {
  std::vector<double> final_dev_scores;   // averaged checkpoint, validation split
  std::vector<double> final_test_scores;  // averaged checkpoint, held-out test split
  std::vector<double> best_dev_scores;    // best per task over validation events
  std::vector<MetricRecord> metrics;
  nlohmann::json config_echo;
  ParamVector averaged_params;
};

// Single-task training with the uniform trivial schedule. The config must
// already be restricted to exactly one task; its step budget is
// baseline_steps[0].
BaselineResult run_baseline(const RunConfig& single_task_cfg);

// Restriction keeping the task's resolved l2/baseline budget from the full config.
RunConfig restrict_to_task(const RunConfig& cfg, std::size_t task_index);
std::vector<BaselineResult> run_all_baselines(const RunConfig& cfg);

// The multi-task trainer. Sampling schedulers pick the task per step;
// multiplier schedulers visit tasks round-robin and scale either the task's
// gradients or its learning rate, per the optimizer topology.
RunResult run_multitask(const RunConfig& cfg, const std::vector<double>& baselines);

// Element-wise mean; layouts must match.
ParamVector average_checkpoints(const std::vector<ParamVector>& checkpoints);

nlohmann::json run_result_to_json(const std::string& name, const RunResult& result);
nlohmann::json baselines_to_json(const std::string& name,
                                 const std::vector<BaselineResult>& baselines);

// Baseline scores for a run config: inline values win, otherwise the
// baselines_file (resolved against `config_dir` when relative) is read.
std::vector<double> resolve_baselines(const RunConfig& cfg,
                                      const std::filesystem::path& config_dir);

struct SweepRow {
  std::size_t index = 0;
  std::vector<std::pair<std::string, nlohmann::json>> params;
  std::optional<RunResult> result;
  std::string error;  // empty on success; failures don't stop the sweep
};

struct SweepResult {
  std::vector<std::string> param_names;
  std::vector<std::string> task_names;
  std::vector<SweepRow> rows;
};

SweepResult run_sweep(const SweepConfig& sweep, const std::filesystem::path& config_dir);

// CSV with one row per grid point: index, grid parameters, per-task dev/test
// scores, the dev average, and a status column recording failures.
std::string sweep_to_csv(const SweepResult& sweep);

}  // namespace taskmix
