#include "taskmix/harness.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "taskmix/io.hpp"
#include "taskmix/optim.hpp"
#include "taskmix/rng.hpp"

namespace taskmix {
namespace {

using nlohmann::json;

struct TrainLossWindow {
  double sum = 0.0;
  long count = 0;
  double last_mean = 0.0;

  void add(double loss) {
    sum += loss;
    count += 1;
  }
  // Mean of the window just ended; falls back to the previous window's mean
  // for tasks that were never visited.
  double close() {
    if (count > 0) {
      last_mean = sum / static_cast<double>(count);
      sum = 0.0;
      count = 0;
    }
    return last_mean;
  }
};

ScheduleDecision next_decision(const RunConfig& cfg, const std::vector<TaskState>& states,
                               const LossProgressTracker& tracker, long step) {
  if (const auto* progress = std::get_if<LossProgressConfig>(&cfg.scheduler))
    return tracker.decide(*progress, states.size(), step);
  return decide_from_scores(cfg.scheduler, states, step);
}

}  // namespace

RunConfig restrict_to_task(const RunConfig& cfg, std::size_t task_index) {
  if (task_index >= cfg.tasks.size()) throw std::out_of_range("no such task to restrict to");
  RunConfig restricted = cfg;
  restricted.name = cfg.name + "-baseline-" + cfg.tasks[task_index].name;
  restricted.tasks = {cfg.tasks[task_index]};
  restricted.l2_per_task = {cfg.l2_per_task[task_index]};
  restricted.baseline_steps = {cfg.baseline_steps[task_index]};
  restricted.baselines.clear();
  restricted.baselines_file.clear();
  restricted.scheduler = UniformConfig{};
  return restricted;
}

RunResult run_multitask(const RunConfig& cfg, const std::vector<double>& baselines) {
  validate_run_config(cfg);
  const std::size_t n = cfg.tasks.size();
  if (baselines.size() != n)
    throw std::invalid_argument("baseline scores must match the task count");
  for (double b : baselines)
    if (!(b > 0.0)) throw std::invalid_argument("baseline scores must be positive");

  std::vector<TaskData> data;
  data.reserve(n);
  std::vector<TaskState> states(n);
  for (std::size_t i = 0; i < n; ++i) {
    const TaskConfig& task = cfg.tasks[i];
    const std::size_t test_size = cfg.test_size > 0 ? cfg.test_size : task.data.val_size;
    data.push_back(generate_task(task.data, cfg.model, test_size));
    states[i].task_id = static_cast<int>(i);
    states[i].name = task.name;
    states[i].baseline_score = baselines[i];
    states[i].dataset_size = task.data.train_size;
  }

  const ParamLayout layout(cfg.model, static_cast<int>(n));
  ParamVector params = init_params(cfg.model, static_cast<int>(n),
                                   static_cast<std::uint64_t>(cfg.seed));
  OptimizerBank bank(cfg.topology, static_cast<int>(n), layout);
  std::mt19937_64 sample_rng(mix_seed(static_cast<std::uint64_t>(cfg.seed), seeds::kTaskSampling));

  const bool sampling = is_sampling_scheduler(cfg.scheduler);
  ScheduleDecision decision =
      sampling ? uniform_probabilities(n, 0) : uniform_multipliers(n, 0);
  LossProgressTracker tracker;
  std::vector<std::size_t> cursors(n, 0);
  std::vector<TrainLossWindow> loss_windows(n);
  std::deque<ParamVector> snapshots;
  const bool check_rotation_budget = !sampling && cfg.validation_every % static_cast<long>(n) == 0;
  double window_scale_sum = 0.0;

  RunResult result;
  std::vector<double> best(n, 0.0);
  for (long step = 1; step <= cfg.total_steps; ++step) {
    const int task =
        sampling ? sample_task(decision, sample_rng) : static_cast<int>((step - 1) % n);
    const double weight = sampling ? 1.0 : decision.values[static_cast<std::size_t>(task)];

    const Dataset& train = data[static_cast<std::size_t>(task)].train;
    const Batch batch =
        train.slice(cursors[static_cast<std::size_t>(task)],
                    static_cast<std::size_t>(cfg.batch_size), task);
    cursors[static_cast<std::size_t>(task)] =
        (cursors[static_cast<std::size_t>(task)] + static_cast<std::size_t>(cfg.batch_size)) %
        train.rows;

    LossGrad lg = loss_and_grad(params, cfg.model, batch,
                                 cfg.l2_per_task[static_cast<std::size_t>(task)]);
    if (!std::isfinite(lg.loss)) throw TrainingDiverged(step, task, std::move(result.metrics));
    loss_windows[static_cast<std::size_t>(task)].add(lg.loss);

    // The schedule's per-step rate enters through the multiplier so the
    // optimizer's contract (step size = lr_scale * base_lr) stays intact.
    double lr_scale = lr_at(cfg.lr_schedule, step) / cfg.adam.base_lr;
    if (!sampling) {
      if (cfg.topology.scaling == ScalingMode::ScaleGradients)
        scale_gradients(std::span<double>(lg.grads), weight);
      else
        lr_scale *= weight;
      window_scale_sum += weight;
    }
    bank.apply(task, params, lg.grads, cfg.adam, lr_scale);

    if (step % cfg.validation_every == 0) {
      if (check_rotation_budget &&
          std::abs(window_scale_sum - static_cast<double>(cfg.validation_every)) > 1e-9)
        throw std::logic_error("internal: rotation multipliers failed to conserve effort");
      window_scale_sum = 0.0;

      std::vector<double> train_losses(n, 0.0);
      std::vector<double> scores(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double mse = mean_squared_error(params, cfg.model, data[i].val, static_cast<int>(i));
        if (!std::isfinite(mse))
          throw TrainingDiverged(step, static_cast<int>(i), std::move(result.metrics));
        scores[i] = score_from_loss(mse);
        states[i].latest_score = scores[i];
        best[i] = std::max(best[i], scores[i]);
        train_losses[i] = loss_windows[i].close();
      }
      tracker.record(step, train_losses);
      decision = next_decision(cfg, states, tracker, step);

      const double lr_now = lr_at(cfg.lr_schedule, step);
      for (std::size_t i = 0; i < n; ++i) {
        MetricRecord record;
        record.step = step;
        record.task_id = static_cast<int>(i);
        record.raw_score = scores[i];
        record.relative_score = scores[i] / baselines[i];
        record.weight = decision.values[i];
        record.effective_lr = sampling ? lr_now : lr_now * decision.values[i];
        record.train_loss = train_losses[i];
        result.metrics.push_back(record);
      }
    }

    if (step % cfg.checkpoint_every == 0) {
      snapshots.push_back(params);
      if (snapshots.size() > static_cast<std::size_t>(cfg.checkpoints_to_average))
        snapshots.pop_front();
    }
  }

  if (snapshots.empty()) snapshots.push_back(params);  // shorter runs than one checkpoint period
  result.averaged_params =
      average_checkpoints(std::vector<ParamVector>(snapshots.begin(), snapshots.end()));

  result.final_dev_scores.resize(n);
  result.final_test_scores.resize(n);
  result.best_dev_scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.final_dev_scores[i] = score_from_loss(
        mean_squared_error(result.averaged_params, cfg.model, data[i].val, static_cast<int>(i)));
    result.final_test_scores[i] = score_from_loss(
        mean_squared_error(result.averaged_params, cfg.model, data[i].test, static_cast<int>(i)));
    result.best_dev_scores[i] = std::max(best[i], result.final_dev_scores[i]);
  }
  result.config_echo = run_config_to_json(cfg);
  return result;
}

BaselineResult run_baseline(const RunConfig& single_task_cfg) {
  if (single_task_cfg.tasks.size() != 1)
    throw std::invalid_argument("run_baseline needs a config restricted to exactly one task");
  RunConfig cfg = single_task_cfg;
  cfg.total_steps = cfg.baseline_steps.at(0);
  cfg.scheduler = UniformConfig{};
  cfg.baselines.clear();
  cfg.baselines_file.clear();

  const RunResult result = run_multitask(cfg, {1.0});
  BaselineResult baseline;
  baseline.task_id = 0;
  baseline.task_name = cfg.tasks[0].name;
  baseline.baseline_score = result.final_dev_scores[0];
  baseline.test_score = result.final_test_scores[0];
  baseline.final_val_mse = 100.0 / result.final_dev_scores[0] - 1.0;
  baseline.steps = cfg.total_steps;
  return baseline;
}

std::vector<BaselineResult> run_all_baselines(const RunConfig& cfg) {
  validate_run_config(cfg);
  std::vector<BaselineResult> baselines;
  baselines.reserve(cfg.tasks.size());
  for (std::size_t i = 0; i < cfg.tasks.size(); ++i) {
    BaselineResult baseline = run_baseline(restrict_to_task(cfg, i));
    baseline.task_id = static_cast<int>(i);
    baselines.push_back(std::move(baseline));
  }
  return baselines;
}

ParamVector average_checkpoints(const std::vector<ParamVector>& checkpoints) {
  if (checkpoints.empty()) throw std::invalid_argument("cannot average zero checkpoints");
  const ParamLayout& layout = checkpoints.front().layout;
  for (const ParamVector& checkpoint : checkpoints)
    if (checkpoint.layout != layout || checkpoint.values.size() != layout.total_size())
      throw std::invalid_argument("checkpoint layouts must match to average");
  ParamVector mean{layout};
  const double scale = 1.0 / static_cast<double>(checkpoints.size());
  for (const ParamVector& checkpoint : checkpoints)
    for (std::size_t i = 0; i < mean.values.size(); ++i)
      mean.values[i] += scale * checkpoint.values[i];
  return mean;
}

json run_result_to_json(const std::string& name, const RunResult& result) {
  json j;
  j["kind"] = "run";
  j["name"] = name;
  j["config"] = result.config_echo;
  j["final_dev_scores"] = result.final_dev_scores;
  j["final_test_scores"] = result.final_test_scores;
  j["best_dev_scores"] = result.best_dev_scores;
  j["metrics"] = json::array();
  for (const MetricRecord& record : result.metrics)
    j["metrics"].push_back({{"step", record.step},
                            {"task", record.task_id},
                            {"score", record.raw_score},
                            {"relative_score", record.relative_score},
                            {"weight", record.weight},
                            {"lr", record.effective_lr},
                            {"train_loss", record.train_loss}});
  return j;
}

json baselines_to_json(const std::string& name, const std::vector<BaselineResult>& baselines) {
  json j;
  j["kind"] = "baselines";
  j["name"] = name;
  j["baselines"] = json::array();
  for (const BaselineResult& baseline : baselines)
    j["baselines"].push_back({{"task_id", baseline.task_id},
                              {"name", baseline.task_name},
                              {"baseline_score", baseline.baseline_score},
                              {"test_score", baseline.test_score},
                              {"final_val_mse", baseline.final_val_mse},
                              {"steps", baseline.steps}});
  return j;
}

std::vector<double> resolve_baselines(const RunConfig& cfg,
                                      const std::filesystem::path& config_dir) {
  if (!cfg.baselines.empty()) return cfg.baselines;
  if (cfg.baselines_file.empty())
    throw ConfigError(
        "training needs baseline scores: set 'baselines' or 'baselines_file' (produced by the "
        "baseline command)");
  std::filesystem::path path = cfg.baselines_file;
  if (path.is_relative()) path = config_dir / path;
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& err) {
    throw ConfigError("cannot parse '" + path.string() + "': " + err.what());
  }
  if (!j.contains("baselines") || !j.at("baselines").is_array())
    throw ConfigError("'" + path.string() + "' does not hold a baselines array");
  std::vector<double> scores(cfg.tasks.size(), 0.0);
  std::vector<bool> seen(cfg.tasks.size(), false);
  for (const auto& entry : j.at("baselines")) {
    const long task_id = entry.at("task_id").get<long>();
    if (task_id < 0 || static_cast<std::size_t>(task_id) >= scores.size())
      throw ConfigError("baselines file mentions an unknown task id");
    scores[static_cast<std::size_t>(task_id)] = entry.at("baseline_score").get<double>();
    seen[static_cast<std::size_t>(task_id)] = true;
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i])
      throw ConfigError("baselines file is missing task " + std::to_string(i));
  for (double score : scores)
    if (!(score > 0.0)) throw ConfigError("baseline scores must be positive");
  return scores;
}

SweepResult run_sweep(const SweepConfig& sweep, const std::filesystem::path& config_dir) {
  SweepResult result;
  for (const auto& [key, values] : sweep.grid) {
    (void)values;
    result.param_names.push_back(key);
  }
  const RunConfig base_cfg = parse_run_config(sweep.base);
  for (const TaskConfig& task : base_cfg.tasks) result.task_names.push_back(task.name);

  std::size_t points = 1;
  for (const auto& [key, values] : sweep.grid) {
    (void)key;
    points *= values.size();
  }

  for (std::size_t index = 0; index < points; ++index) {
    SweepRow row;
    row.index = index;
    // Row-major enumeration over the sorted grid keys, last key fastest.
    std::size_t remainder = index;
    std::vector<std::size_t> choice(sweep.grid.size(), 0);
    for (std::size_t k = sweep.grid.size(); k-- > 0;) {
      choice[k] = remainder % sweep.grid[k].second.size();
      remainder /= sweep.grid[k].second.size();
    }
    json point = sweep.base;
    for (std::size_t k = 0; k < sweep.grid.size(); ++k) {
      const auto& [key, values] = sweep.grid[k];
      row.params.emplace_back(key, values[choice[k]]);
      apply_override(point, key, values[choice[k]].dump());
    }
    try {
      RunConfig cfg = parse_run_config(point);
      cfg.name = sweep.name + "-" + std::to_string(index);
      row.result = run_multitask(cfg, resolve_baselines(cfg, config_dir));
    } catch (const std::exception& err) {
      row.error = err.what();
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string sweep_to_csv(const SweepResult& sweep) {
  auto csv_field = [](std::string text) {
    std::replace(text.begin(), text.end(), '\n', ' ');
    if (text.find_first_of(",\"") == std::string::npos) return text;
    std::string quoted = "\"";
    for (char c : text) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    quoted += '"';
    return quoted;
  };

  std::string csv = "index";
  for (const std::string& name : sweep.param_names) csv += "," + csv_field(name);
  for (const std::string& task : sweep.task_names)
    csv += "," + csv_field(task + "_dev") + "," + csv_field(task + "_test");
  csv += ",avg_dev,status\n";

  for (const SweepRow& row : sweep.rows) {
    csv += std::to_string(row.index);
    for (const auto& [key, value] : row.params) {
      (void)key;
      csv += "," + csv_field(value.is_string() ? value.get<std::string>() : value.dump());
    }
    if (row.result.has_value()) {
      double total = 0.0;
      for (std::size_t i = 0; i < sweep.task_names.size(); ++i) {
        csv += "," + fmt_double(row.result->final_dev_scores[i]);
        csv += "," + fmt_double(row.result->final_test_scores[i]);
        total += row.result->final_dev_scores[i];
      }
      csv += "," + fmt_double(total / static_cast<double>(sweep.task_names.size()));
      csv += ",ok\n";
    } else {
      for (std::size_t i = 0; i < sweep.task_names.size(); ++i) csv += ",,";
      csv += ",," + csv_field(row.error.empty() ? "failed" : row.error) + "\n";
    }
  }
  return csv;
}

}  // namespace taskmix
