#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "taskmix/model.hpp"
#include "taskmix/optim.hpp"
#include "taskmix/schedulers.hpp"
#include "taskmix/simdyn.hpp"

namespace taskmix {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct TaskConfig {
  std::string name;
  SyntheticTaskSpec data;
};

// Fully resolved description of one training run. Parsing materializes every
// default so the config echo always shows what actually ran.
struct RunConfig {
  std::string name = "run";
  long seed = 0;
  std::vector<TaskConfig> tasks;
  MlpSpec model;
  SchedulerConfig scheduler;
  OptimizerTopology topology;
  AdamConfig adam;
  LrSchedule lr_schedule;
  long total_steps = 20000;
  long validation_every = 200;
  long checkpoint_every = 200;
  int checkpoints_to_average = 20;
  int batch_size = 32;
  std::vector<double> l2_per_task;    // resolved: 1e-3 below the largest task, else 0
  std::vector<long> baseline_steps;   // resolved: total_steps unless given
  std::size_t test_size = 0;          // resolved: per-task val_size unless given
  bool allow_pathological_topology = false;
  std::vector<double> baselines;      // optional inline baseline scores
  std::string baselines_file;         // optional path to a baselines result file
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
void validate_run_config(const RunConfig& cfg);
nlohmann::json run_config_to_json(const RunConfig& cfg);

// Applies "--override key=value": `dotted` walks objects ('.') and array
// indices (numeric components); `raw_value` is parsed as JSON when possible,
// else taken as a string.
void apply_override(nlohmann::json& config, const std::string& dotted, const std::string& raw_value);
void apply_override_arg(nlohmann::json& config, const std::string& key_equals_value);

// FNV-1a over the canonical (sorted-key) serialization.
std::uint64_t config_hash(const nlohmann::json& config);
std::string config_hash_hex(const nlohmann::json& config);

// Simulator experiment file: dynamics + closed-loop settings + detector knobs.
struct SimExperimentConfig {
  std::string name = "sim";
  DynamicsSpec dynamics;
  SimConfig sim;
  int oscillation_window = 20;
  double oscillation_threshold = 0.3;
};

SimExperimentConfig parse_sim_config(const nlohmann::json& j);
SimExperimentConfig load_sim_config(const std::filesystem::path& path);
nlohmann::json sim_config_to_json(const SimExperimentConfig& cfg);

// Sweep file: a base run config (inline or by path) plus named value lists
// addressed by override paths; runs cover the cartesian product.
struct SweepConfig {
  std::string name = "sweep";
  nlohmann::json base;
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> grid;  // sorted by key
  std::size_t max_runs = 256;
};

SweepConfig parse_sweep_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
SweepConfig load_sweep_config(const std::filesystem::path& path);

}  // namespace taskmix
