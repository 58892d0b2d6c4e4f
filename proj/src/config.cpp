#include "taskmix/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "taskmix/io.hpp"

namespace taskmix {
namespace {

using nlohmann::json;

void expect_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
}

// Unknown keys are hard errors: a typo must never silently fall back to a default.
void expect_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  expect_object(j, where);
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (allowed.find(key) == allowed.end())
      throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

double get_number(const json& j, const std::string& key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(where + "." + key + " must be a number");
  return j.at(key).get<double>();
}

double require_number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + " is missing required key '" + key + "'");
  if (!j.at(key).is_number()) throw ConfigError(where + "." + key + " must be a number");
  return j.at(key).get<double>();
}

long get_integer(const json& j, const std::string& key, long fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  return j.at(key).get<long>();
}

long require_integer(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + " is missing required key '" + key + "'");
  if (!j.at(key).is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  return j.at(key).get<long>();
}

std::string get_string(const json& j, const std::string& key, const std::string& fallback,
                       const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw ConfigError(where + "." + key + " must be a string");
  return j.at(key).get<std::string>();
}

std::vector<double> get_number_array(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + " must be an array of numbers");
  std::vector<double> values;
  values.reserve(j.size());
  for (const auto& entry : j) {
    if (!entry.is_number()) throw ConfigError(where + " must contain only numbers");
    values.push_back(entry.get<double>());
  }
  return values;
}

SchedulerConfig parse_scheduler(const json& j) {
  expect_object(j, "scheduler");
  const std::string kind = get_string(j, "kind", "", "scheduler");
  if (kind.empty()) throw ConfigError("scheduler is missing required key 'kind'");
  if (kind == "uniform") {
    expect_keys(j, {"kind"}, "scheduler(uniform)");
    return UniformConfig{};
  }
  if (kind == "constant") {
    expect_keys(j, {"kind", "probabilities"}, "scheduler(constant)");
    if (!j.contains("probabilities"))
      throw ConfigError("constant scheduler needs 'probabilities'");
    return ConstantConfig{get_number_array(j.at("probabilities"), "scheduler.probabilities")};
  }
  if (kind == "explicit") {
    expect_keys(j, {"kind", "alpha", "epsilon"}, "scheduler(explicit)");
    ExplicitConfig cfg;
    cfg.alpha = get_number(j, "alpha", cfg.alpha, "scheduler");
    cfg.epsilon = get_number(j, "epsilon", cfg.epsilon, "scheduler");
    return cfg;
  }
  if (kind == "implicit") {
    expect_keys(j, {"kind", "alpha", "beta", "gamma"}, "scheduler(implicit)");
    ImplicitConfig cfg;
    cfg.alpha = get_number(j, "alpha", cfg.alpha, "scheduler");
    cfg.beta = get_number(j, "beta", cfg.beta, "scheduler");
    cfg.gamma = get_number(j, "gamma", cfg.gamma, "scheduler");
    return cfg;
  }
  if (kind == "loss_progress") {
    expect_keys(j, {"kind", "window", "temperature"}, "scheduler(loss_progress)");
    LossProgressConfig cfg;
    cfg.window = get_integer(j, "window", cfg.window, "scheduler");
    cfg.temperature = get_number(j, "temperature", cfg.temperature, "scheduler");
    return cfg;
  }
  throw ConfigError("unknown scheduler kind '" + kind + "'");
}

json scheduler_to_json(const SchedulerConfig& scheduler) {
  json j;
  j["kind"] = scheduler_kind_name(scheduler);
  if (const auto* constant = std::get_if<ConstantConfig>(&scheduler))
    j["probabilities"] = constant->probabilities;
  if (const auto* adaptive = std::get_if<ExplicitConfig>(&scheduler)) {
    j["alpha"] = adaptive->alpha;
    j["epsilon"] = adaptive->epsilon;
  }
  if (const auto* adaptive = std::get_if<ImplicitConfig>(&scheduler)) {
    j["alpha"] = adaptive->alpha;
    j["beta"] = adaptive->beta;
    j["gamma"] = adaptive->gamma;
  }
  if (const auto* progress = std::get_if<LossProgressConfig>(&scheduler)) {
    j["window"] = progress->window;
    j["temperature"] = progress->temperature;
  }
  return j;
}

OptimizerTopology parse_topology(const json& j) {
  expect_keys(j, {"accumulators", "scaling"}, "topology");
  OptimizerTopology topology;
  const std::string acc = get_string(j, "accumulators", "per_task", "topology");
  if (acc == "shared")
    topology.accumulators = AccumulatorMode::Shared;
  else if (acc == "per_task")
    topology.accumulators = AccumulatorMode::PerTask;
  else
    throw ConfigError("topology.accumulators must be 'shared' or 'per_task'");
  const std::string scaling = get_string(j, "scaling", "scale_learning_rate", "topology");
  if (scaling == "scale_gradients")
    topology.scaling = ScalingMode::ScaleGradients;
  else if (scaling == "scale_learning_rate")
    topology.scaling = ScalingMode::ScaleLearningRate;
  else
    throw ConfigError("topology.scaling must be 'scale_gradients' or 'scale_learning_rate'");
  return topology;
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  expect_keys(j,
              {"name", "seed", "tasks", "model", "scheduler", "topology", "adam", "lr_schedule",
               "total_steps", "validation_every", "checkpoint_every", "checkpoints_to_average",
               "batch_size", "l2_per_task", "baseline_steps", "test_size",
               "allow_pathological_topology", "baselines", "baselines_file"},
              "run config");
  RunConfig cfg;
  cfg.name = get_string(j, "name", cfg.name, "run config");
  cfg.seed = get_integer(j, "seed", cfg.seed, "run config");

  if (!j.contains("tasks") || !j.at("tasks").is_array() || j.at("tasks").empty())
    throw ConfigError("run config needs a non-empty 'tasks' array");
  for (std::size_t i = 0; i < j.at("tasks").size(); ++i) {
    const json& tj = j.at("tasks").at(i);
    const std::string where = "tasks[" + std::to_string(i) + "]";
    expect_keys(tj, {"name", "teacher_seed", "train_size", "val_size", "noise_std"}, where);
    TaskConfig task;
    task.name = get_string(tj, "name", "task" + std::to_string(i), where);
    task.data.teacher_seed = require_integer(tj, "teacher_seed", where);
    task.data.train_size = static_cast<std::size_t>(require_integer(tj, "train_size", where));
    task.data.val_size = static_cast<std::size_t>(require_integer(tj, "val_size", where));
    task.data.noise_std = get_number(tj, "noise_std", 0.0, where);
    cfg.tasks.push_back(std::move(task));
  }

  if (!j.contains("model")) throw ConfigError("run config is missing required key 'model'");
  expect_keys(j.at("model"), {"input_dim", "hidden_dim", "output_dim"}, "model");
  cfg.model.input_dim = static_cast<int>(require_integer(j.at("model"), "input_dim", "model"));
  cfg.model.hidden_dim = static_cast<int>(require_integer(j.at("model"), "hidden_dim", "model"));
  cfg.model.output_dim = static_cast<int>(require_integer(j.at("model"), "output_dim", "model"));

  if (!j.contains("scheduler")) throw ConfigError("run config is missing required key 'scheduler'");
  cfg.scheduler = parse_scheduler(j.at("scheduler"));
  if (j.contains("topology")) cfg.topology = parse_topology(j.at("topology"));

  if (j.contains("adam")) {
    expect_keys(j.at("adam"), {"beta1", "beta2", "epsilon", "base_lr"}, "adam");
    cfg.adam.beta1 = get_number(j.at("adam"), "beta1", cfg.adam.beta1, "adam");
    cfg.adam.beta2 = get_number(j.at("adam"), "beta2", cfg.adam.beta2, "adam");
    cfg.adam.epsilon = get_number(j.at("adam"), "epsilon", cfg.adam.epsilon, "adam");
    cfg.adam.base_lr = get_number(j.at("adam"), "base_lr", cfg.adam.base_lr, "adam");
  }
  if (j.contains("lr_schedule")) {
    expect_keys(j.at("lr_schedule"), {"base", "warmup_steps"}, "lr_schedule");
    cfg.lr_schedule.base = require_number(j.at("lr_schedule"), "base", "lr_schedule");
    cfg.lr_schedule.warmup_steps =
        get_integer(j.at("lr_schedule"), "warmup_steps", cfg.lr_schedule.warmup_steps,
                    "lr_schedule");
  }

  cfg.total_steps = get_integer(j, "total_steps", cfg.total_steps, "run config");
  cfg.validation_every = get_integer(j, "validation_every", cfg.validation_every, "run config");
  cfg.checkpoint_every = get_integer(j, "checkpoint_every", cfg.checkpoint_every, "run config");
  cfg.checkpoints_to_average = static_cast<int>(
      get_integer(j, "checkpoints_to_average", cfg.checkpoints_to_average, "run config"));
  cfg.batch_size = static_cast<int>(get_integer(j, "batch_size", cfg.batch_size, "run config"));

  if (j.contains("l2_per_task")) {
    cfg.l2_per_task = get_number_array(j.at("l2_per_task"), "l2_per_task");
  } else {
    // Default regularization mirrors the reference setup: only tasks smaller
    // than the largest one carry a penalty.
    std::size_t largest = 0;
    for (const TaskConfig& task : cfg.tasks) largest = std::max(largest, task.data.train_size);
    for (const TaskConfig& task : cfg.tasks)
      cfg.l2_per_task.push_back(task.data.train_size < largest ? 1e-3 : 0.0);
  }

  if (j.contains("baseline_steps")) {
    for (const auto& entry : j.at("baseline_steps")) {
      if (!entry.is_number_integer())
        throw ConfigError("baseline_steps must contain only integers");
      cfg.baseline_steps.push_back(entry.get<long>());
    }
  } else {
    cfg.baseline_steps.assign(cfg.tasks.size(), cfg.total_steps);
  }

  cfg.test_size = static_cast<std::size_t>(get_integer(j, "test_size", 0, "run config"));
  if (j.contains("allow_pathological_topology")) {
    if (!j.at("allow_pathological_topology").is_boolean())
      throw ConfigError("allow_pathological_topology must be a boolean");
    cfg.allow_pathological_topology = j.at("allow_pathological_topology").get<bool>();
  }
  if (j.contains("baselines")) cfg.baselines = get_number_array(j.at("baselines"), "baselines");
  cfg.baselines_file = get_string(j, "baselines_file", "", "run config");

  validate_run_config(cfg);
  return cfg;
}

void validate_run_config(const RunConfig& cfg) {
  const std::size_t n = cfg.tasks.size();
  if (n == 0) throw ConfigError("run config needs at least one task");
  for (const TaskConfig& task : cfg.tasks) {
    if (task.data.train_size < 1) throw ConfigError("train_size must be positive");
    if (task.data.val_size < 32) throw ConfigError("val_size must be at least 32");
    if (task.data.noise_std < 0.0) throw ConfigError("noise_std must be non-negative");
  }
  if (cfg.model.input_dim < 1 || cfg.model.hidden_dim < 1 || cfg.model.output_dim < 1)
    throw ConfigError("model dimensions must be positive");

  if (const auto* constant = std::get_if<ConstantConfig>(&cfg.scheduler)) {
    if (constant->probabilities.size() != n)
      throw ConfigError("constant probabilities must match the task count");
    try {
      constant_probabilities(*constant, 0);  // range and sum checks
    } catch (const std::invalid_argument& err) {
      throw ConfigError(err.what());
    }
  }
  if (const auto* adaptive = std::get_if<ExplicitConfig>(&cfg.scheduler)) {
    if (!(adaptive->epsilon > 0.0))
      throw ConfigError("explicit epsilon must be positive in run configs");
    if (adaptive->alpha < 0.0) throw ConfigError("explicit alpha must be non-negative");
  }
  if (const auto* adaptive = std::get_if<ImplicitConfig>(&cfg.scheduler)) {
    if (!(adaptive->gamma >= 0.0 && adaptive->gamma < 1.0))
      throw ConfigError("implicit gamma must lie in [0, 1)");
    if (!(adaptive->beta > 0.0)) throw ConfigError("implicit beta must be positive");
    if (adaptive->alpha < 0.0) throw ConfigError("implicit alpha must be non-negative");
  }
  if (const auto* progress = std::get_if<LossProgressConfig>(&cfg.scheduler)) {
    if (progress->window < 1) throw ConfigError("loss-progress window must be positive");
    if (!(progress->temperature > 0.0))
      throw ConfigError("loss-progress temperature must be positive");
  }

  if (!(cfg.adam.beta1 >= 0.0 && cfg.adam.beta1 < 1.0) ||
      !(cfg.adam.beta2 >= 0.0 && cfg.adam.beta2 < 1.0))
    throw ConfigError("adam betas must lie in [0, 1)");
  if (!(cfg.adam.epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
  if (!(cfg.adam.base_lr > 0.0)) throw ConfigError("adam base_lr must be positive");
  if (!(cfg.lr_schedule.base > 0.0)) throw ConfigError("lr_schedule.base must be positive");
  if (cfg.lr_schedule.warmup_steps < 1) throw ConfigError("warmup_steps must be positive");

  if (cfg.total_steps < 1) throw ConfigError("total_steps must be positive");
  if (cfg.validation_every < 1) throw ConfigError("validation_every must be positive");
  if (cfg.checkpoint_every < 1) throw ConfigError("checkpoint_every must be positive");
  if (cfg.checkpoint_every % cfg.validation_every != 0)
    throw ConfigError("checkpoint_every must be a multiple of validation_every");
  if (cfg.checkpoints_to_average < 1) throw ConfigError("checkpoints_to_average must be positive");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be positive");

  if (cfg.l2_per_task.size() != n) throw ConfigError("l2_per_task must match the task count");
  for (double l2 : cfg.l2_per_task)
    if (l2 < 0.0) throw ConfigError("l2 penalties must be non-negative");
  if (cfg.baseline_steps.size() != n)
    throw ConfigError("baseline_steps must match the task count");
  for (long steps : cfg.baseline_steps)
    if (steps < 1) throw ConfigError("baseline_steps entries must be positive");
  if (!cfg.baselines.empty()) {
    if (cfg.baselines.size() != n) throw ConfigError("baselines must match the task count");
    for (double b : cfg.baselines)
      if (!(b > 0.0)) throw ConfigError("baseline scores must be positive");
  }

  // Sharing one set of accumulators while scaling per-task learning rates lets
  // one task's momentum replay into the other's steps; refuse unless the
  // config says it wants exactly that.
  if (cfg.topology.accumulators == AccumulatorMode::Shared &&
      cfg.topology.scaling == ScalingMode::ScaleLearningRate &&
      !cfg.allow_pathological_topology)
    throw ConfigError(
        "shared accumulators with scaled learning rates blur tasks through momentum; set "
        "allow_pathological_topology to run it anyway");
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& err) {
    throw ConfigError("cannot parse '" + path.string() + "': " + err.what());
  }
  return parse_run_config(j);
}

json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["seed"] = cfg.seed;
  j["tasks"] = json::array();
  for (const TaskConfig& task : cfg.tasks) {
    json tj;
    tj["name"] = task.name;
    tj["teacher_seed"] = task.data.teacher_seed;
    tj["train_size"] = task.data.train_size;
    tj["val_size"] = task.data.val_size;
    tj["noise_std"] = task.data.noise_std;
    j["tasks"].push_back(tj);
  }
  j["model"] = {{"input_dim", cfg.model.input_dim},
                {"hidden_dim", cfg.model.hidden_dim},
                {"output_dim", cfg.model.output_dim}};
  j["scheduler"] = scheduler_to_json(cfg.scheduler);
  j["topology"] = {
      {"accumulators",
       cfg.topology.accumulators == AccumulatorMode::Shared ? "shared" : "per_task"},
      {"scaling", cfg.topology.scaling == ScalingMode::ScaleGradients ? "scale_gradients"
                                                                      : "scale_learning_rate"}};
  j["adam"] = {{"beta1", cfg.adam.beta1},
               {"beta2", cfg.adam.beta2},
               {"epsilon", cfg.adam.epsilon},
               {"base_lr", cfg.adam.base_lr}};
  j["lr_schedule"] = {{"base", cfg.lr_schedule.base},
                      {"warmup_steps", cfg.lr_schedule.warmup_steps}};
  j["total_steps"] = cfg.total_steps;
  j["validation_every"] = cfg.validation_every;
  j["checkpoint_every"] = cfg.checkpoint_every;
  j["checkpoints_to_average"] = cfg.checkpoints_to_average;
  j["batch_size"] = cfg.batch_size;
  j["l2_per_task"] = cfg.l2_per_task;
  j["baseline_steps"] = cfg.baseline_steps;
  j["test_size"] = cfg.test_size;
  j["allow_pathological_topology"] = cfg.allow_pathological_topology;
  if (!cfg.baselines.empty()) j["baselines"] = cfg.baselines;
  if (!cfg.baselines_file.empty()) j["baselines_file"] = cfg.baselines_file;
  return j;
}

void apply_override(json& config, const std::string& dotted, const std::string& raw_value) {
  if (dotted.empty()) throw ConfigError("override key must be non-empty");
  json value;
  try {
    value = json::parse(raw_value);
  } catch (const json::parse_error&) {
    value = raw_value;  // bare strings (e.g. kind names) need no quoting
  }

  json* node = &config;
  std::size_t begin = 0;
  std::vector<std::string> parts;
  while (begin <= dotted.size()) {
    const std::size_t end = dotted.find('.', begin);
    parts.push_back(dotted.substr(begin, end == std::string::npos ? end : end - begin));
    if (end == std::string::npos) break;
    begin = end + 1;
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    const std::string& part = parts[i];
    if (part.empty()) throw ConfigError("override key '" + dotted + "' has an empty component");
    if (node->is_array()) {
      std::size_t index = 0;
      try {
        index = static_cast<std::size_t>(std::stoul(part));
      } catch (const std::exception&) {
        throw ConfigError("override key '" + dotted + "' indexes an array with '" + part + "'");
      }
      if (index >= node->size())
        throw ConfigError("override key '" + dotted + "' is out of range");
      node = &(*node)[index];
    } else {
      if (!node->is_object() && !node->is_null())
        throw ConfigError("override key '" + dotted + "' walks through a scalar");
      node = &(*node)[part];
    }
  }
  const std::string& last = parts.back();
  if (last.empty()) throw ConfigError("override key '" + dotted + "' has an empty component");
  if (node->is_array()) {
    std::size_t index = 0;
    try {
      index = static_cast<std::size_t>(std::stoul(last));
    } catch (const std::exception&) {
      throw ConfigError("override key '" + dotted + "' indexes an array with '" + last + "'");
    }
    if (index >= node->size()) throw ConfigError("override key '" + dotted + "' is out of range");
    (*node)[index] = value;
  } else {
    if (!node->is_object() && !node->is_null())
      throw ConfigError("override key '" + dotted + "' walks through a scalar");
    (*node)[last] = value;
  }
}

void apply_override_arg(json& config, const std::string& key_equals_value) {
  const std::size_t split = key_equals_value.find('=');
  if (split == std::string::npos)
    throw ConfigError("override '" + key_equals_value + "' must look like key=value");
  apply_override(config, key_equals_value.substr(0, split), key_equals_value.substr(split + 1));
}

std::uint64_t config_hash(const json& config) {
  const std::string canonical = config.dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string config_hash_hex(const json& config) {
  static const char* digits = "0123456789abcdef";
  std::uint64_t hash = config_hash(config);
  std::string hex(16, '0');
  for (int i = 15; i >= 0; --i) {
    hex[static_cast<std::size_t>(i)] = digits[hash & 0xf];
    hash >>= 4;
  }
  return hex;
}

SimExperimentConfig parse_sim_config(const json& j) {
  expect_keys(j, {"name", "dynamics", "sim", "oscillation"}, "sim config");
  SimExperimentConfig cfg;
  cfg.name = get_string(j, "name", cfg.name, "sim config");

  if (!j.contains("dynamics")) throw ConfigError("sim config is missing required key 'dynamics'");
  expect_keys(j.at("dynamics"), {"tasks"}, "dynamics");
  if (!j.at("dynamics").contains("tasks") || !j.at("dynamics").at("tasks").is_array() ||
      j.at("dynamics").at("tasks").empty())
    throw ConfigError("dynamics needs a non-empty 'tasks' array");
  for (std::size_t i = 0; i < j.at("dynamics").at("tasks").size(); ++i) {
    const json& tj = j.at("dynamics").at("tasks").at(i);
    const std::string where = "dynamics.tasks[" + std::to_string(i) + "]";
    expect_keys(tj, {"ceiling", "learn_rate", "forget_rate", "initial_score"}, where);
    TaskDynamics task;
    task.ceiling = require_number(tj, "ceiling", where);
    task.learn_rate = require_number(tj, "learn_rate", where);
    task.forget_rate = get_number(tj, "forget_rate", 0.0, where);
    task.initial_score = get_number(tj, "initial_score", 0.0, where);
    cfg.dynamics.tasks.push_back(task);
  }

  if (!j.contains("sim")) throw ConfigError("sim config is missing required key 'sim'");
  expect_keys(j.at("sim"), {"total_steps", "validation_every", "scheduler", "seed"}, "sim");
  cfg.sim.total_steps = require_integer(j.at("sim"), "total_steps", "sim");
  cfg.sim.validation_every = get_integer(j.at("sim"), "validation_every", 1, "sim");
  cfg.sim.seed = get_integer(j.at("sim"), "seed", 0, "sim");
  if (!j.at("sim").contains("scheduler")) throw ConfigError("sim is missing 'scheduler'");
  cfg.sim.scheduler = parse_scheduler(j.at("sim").at("scheduler"));

  if (j.contains("oscillation")) {
    expect_keys(j.at("oscillation"), {"window", "amplitude_threshold"}, "oscillation");
    cfg.oscillation_window = static_cast<int>(
        get_integer(j.at("oscillation"), "window", cfg.oscillation_window, "oscillation"));
    cfg.oscillation_threshold = get_number(j.at("oscillation"), "amplitude_threshold",
                                           cfg.oscillation_threshold, "oscillation");
  }
  return cfg;
}

SimExperimentConfig load_sim_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& err) {
    throw ConfigError("cannot parse '" + path.string() + "': " + err.what());
  }
  return parse_sim_config(j);
}

json sim_config_to_json(const SimExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["dynamics"]["tasks"] = json::array();
  for (const TaskDynamics& task : cfg.dynamics.tasks)
    j["dynamics"]["tasks"].push_back({{"ceiling", task.ceiling},
                                      {"learn_rate", task.learn_rate},
                                      {"forget_rate", task.forget_rate},
                                      {"initial_score", task.initial_score}});
  j["sim"] = {{"total_steps", cfg.sim.total_steps},
              {"validation_every", cfg.sim.validation_every},
              {"seed", cfg.sim.seed},
              {"scheduler", scheduler_to_json(cfg.sim.scheduler)}};
  j["oscillation"] = {{"window", cfg.oscillation_window},
                      {"amplitude_threshold", cfg.oscillation_threshold}};
  return j;
}

SweepConfig parse_sweep_config(const json& j, const std::filesystem::path& base_dir) {
  expect_keys(j, {"name", "base", "base_config", "grid", "max_runs"}, "sweep config");
  SweepConfig cfg;
  cfg.name = get_string(j, "name", cfg.name, "sweep config");
  const bool has_inline = j.contains("base");
  const bool has_path = j.contains("base_config");
  if (has_inline == has_path)
    throw ConfigError("sweep config needs exactly one of 'base' and 'base_config'");
  if (has_inline) {
    cfg.base = j.at("base");
  } else {
    std::filesystem::path base_path = j.at("base_config").get<std::string>();
    if (base_path.is_relative()) base_path = base_dir / base_path;
    try {
      cfg.base = json::parse(read_text_file(base_path));
    } catch (const json::parse_error& err) {
      throw ConfigError("cannot parse '" + base_path.string() + "': " + err.what());
    }
  }
  parse_run_config(cfg.base);  // fail early if the base itself is broken

  if (!j.contains("grid") || !j.at("grid").is_object() || j.at("grid").empty())
    throw ConfigError("sweep config needs a non-empty 'grid' object");
  for (const auto& [key, values] : j.at("grid").items()) {
    if (!values.is_array() || values.empty())
      throw ConfigError("grid entry '" + key + "' must be a non-empty array");
    cfg.grid.emplace_back(key, std::vector<json>(values.begin(), values.end()));
  }
  std::sort(cfg.grid.begin(), cfg.grid.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  const long max_runs = get_integer(j, "max_runs", static_cast<long>(cfg.max_runs), "sweep config");
  if (max_runs < 1) throw ConfigError("max_runs must be positive");
  cfg.max_runs = static_cast<std::size_t>(max_runs);

  std::size_t points = 1;
  for (const auto& [key, values] : cfg.grid) {
    (void)key;
    points *= values.size();
    if (points > cfg.max_runs)
      throw ConfigError("sweep grid exceeds max_runs (" + std::to_string(cfg.max_runs) + ")");
  }
  return cfg;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& err) {
    throw ConfigError("cannot parse '" + path.string() + "': " + err.what());
  }
  return parse_sweep_config(j, path.parent_path());
}

}  // namespace taskmix
