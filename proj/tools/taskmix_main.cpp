// Command-line workbench around the taskmix library:
//   taskmix baseline <config>   single-task reference scores for every task
//   taskmix train <config>      one multi-task training run
//   taskmix simulate <config>   closed-loop scheduler dynamics, no training
//   taskmix sweep <config>      grid of training runs, CSV summary
//   taskmix report <files...>   comparison table + trajectory CSVs
// Failures print one machine-readable JSON line to stderr and exit non-zero.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "taskmix/config.hpp"
#include "taskmix/harness.hpp"
#include "taskmix/io.hpp"
#include "taskmix/report.hpp"
#include "taskmix/simdyn.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct CommonOptions {
  std::string config_path;
  std::string out_dir;  // empty: out/<config name>
  std::optional<long> seed;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool with_seed = true) {
  cmd->add_option("config", opt.config_path, "JSON config file")->required();
  cmd->add_option("--out-dir", opt.out_dir, "output directory (default out/<name>)");
  if (with_seed) cmd->add_option("--seed", opt.seed, "replace the config's seed");
  cmd->add_option("--override", opt.overrides,
                  "key=value applied to the config JSON; dotted keys walk objects and "
                  "array indices (repeatable)");
}

json load_config_json(const CommonOptions& opt) {
  json j;
  try {
    j = json::parse(taskmix::read_text_file(opt.config_path));
  } catch (const json::parse_error& err) {
    throw taskmix::ConfigError("cannot parse '" + opt.config_path + "': " + err.what());
  }
  for (const std::string& override_arg : opt.overrides)
    taskmix::apply_override_arg(j, override_arg);
  return j;
}

fs::path resolve_out_dir(const CommonOptions& opt, const std::string& name) {
  const fs::path dir = opt.out_dir.empty() ? fs::path("out") / name : fs::path(opt.out_dir);
  fs::create_directories(dir);
  return dir;
}

int fail(const std::string& what, json extra = json::object()) {
  extra["error"] = what;
  std::cerr << extra.dump() << "\n";
  return 1;
}

int cmd_baseline(const CommonOptions& opt) {
  json j = load_config_json(opt);
  if (opt.seed.has_value()) j["seed"] = *opt.seed;
  const taskmix::RunConfig cfg = taskmix::parse_run_config(j);
  const std::vector<taskmix::BaselineResult> baselines = taskmix::run_all_baselines(cfg);

  const fs::path out = resolve_out_dir(opt, cfg.name);
  taskmix::write_text_file(out / "baselines.json",
                           taskmix::baselines_to_json(cfg.name, baselines).dump(2) + "\n");
  for (const taskmix::BaselineResult& b : baselines)
    std::cout << "task " << b.task_name << ": baseline " << taskmix::fmt_double(b.baseline_score)
              << " test " << taskmix::fmt_double(b.test_score) << " (" << b.steps << " steps)\n";
  std::cout << "wrote " << (out / "baselines.json").string() << "\n";
  return 0;
}

int cmd_train(const CommonOptions& opt) {
  json j = load_config_json(opt);
  if (opt.seed.has_value()) j["seed"] = *opt.seed;
  const taskmix::RunConfig cfg = taskmix::parse_run_config(j);
  const fs::path config_dir = fs::path(opt.config_path).parent_path();
  const std::vector<double> baselines = taskmix::resolve_baselines(cfg, config_dir);
  const fs::path out = resolve_out_dir(opt, cfg.name);

  taskmix::RunResult result;
  try {
    result = taskmix::run_multitask(cfg, baselines);
  } catch (const taskmix::TrainingDiverged& diverged) {
    // Keep what the run logged so the failure can be inspected.
    taskmix::write_metrics_jsonl(out / "metrics.jsonl", diverged.partial_metrics);
    return fail(diverged.what(),
                json{{"step", diverged.step}, {"task", diverged.task_id}});
  }

  taskmix::write_metrics_jsonl(out / "metrics.jsonl", result.metrics);
  taskmix::write_text_file(out / "result.json",
                           taskmix::run_result_to_json(cfg.name, result).dump(2) + "\n");
  taskmix::save_params(out / "checkpoint.bin", result.averaged_params, cfg.seed);
  taskmix::write_text_file(
      out / "checkpoint.meta.json",
      json{{"name", cfg.name},
           {"step", cfg.total_steps},
           {"parameters", result.averaged_params.values.size()},
           {"config_hash", taskmix::config_hash_hex(taskmix::run_config_to_json(cfg))}}
              .dump(2) +
          "\n");

  for (std::size_t i = 0; i < cfg.tasks.size(); ++i)
    std::cout << "task " << cfg.tasks[i].name << ": dev "
              << taskmix::fmt_double(result.final_dev_scores[i]) << " (relative "
              << taskmix::fmt_double(result.final_dev_scores[i] / baselines[i]) << ") test "
              << taskmix::fmt_double(result.final_test_scores[i]) << "\n";
  std::cout << "wrote " << (out / "result.json").string() << "\n";
  return 0;
}

int cmd_simulate(const CommonOptions& opt) {
  json j = load_config_json(opt);
  if (opt.seed.has_value()) j["sim"]["seed"] = *opt.seed;
  const taskmix::SimExperimentConfig cfg = taskmix::parse_sim_config(j);
  const taskmix::SimResult result = taskmix::run_sim(cfg.dynamics, cfg.sim);
  const taskmix::OscillationReport report = taskmix::detect_oscillation(
      result.records, cfg.oscillation_window, cfg.oscillation_threshold);

  const fs::path out = resolve_out_dir(opt, cfg.name);
  taskmix::write_metrics_jsonl(out / "metrics.jsonl", result.records);
  json result_json;
  result_json["kind"] = "sim";
  result_json["name"] = cfg.name;
  result_json["config"] = taskmix::sim_config_to_json(cfg);
  result_json["oscillating"] = report.oscillating;
  result_json["amplitudes"] = report.amplitudes;
  result_json["final_scores"] = result.final_scores;
  taskmix::write_text_file(out / "sim_result.json", result_json.dump(2) + "\n");

  std::cout << "oscillating: " << (report.oscillating ? "yes" : "no") << "\n";
  for (std::size_t i = 0; i < result.final_scores.size(); ++i)
    std::cout << "task " << i << ": final " << taskmix::fmt_double(result.final_scores[i])
              << " amplitude " << taskmix::fmt_double(report.amplitudes[i]) << "\n";
  std::cout << "wrote " << (out / "sim_result.json").string() << "\n";
  return 0;
}

int cmd_sweep(const CommonOptions& opt) {
  json j = load_config_json(opt);
  const fs::path config_dir = fs::path(opt.config_path).parent_path();
  const taskmix::SweepConfig cfg = taskmix::parse_sweep_config(j, config_dir);
  const taskmix::SweepResult result = taskmix::run_sweep(cfg, config_dir);

  const fs::path out = resolve_out_dir(opt, cfg.name);
  taskmix::write_text_file(out / "sweep.csv", taskmix::sweep_to_csv(result));

  std::size_t failed = 0;
  for (const taskmix::SweepRow& row : result.rows)
    if (!row.result.has_value()) ++failed;
  std::cout << result.rows.size() << " grid points, " << failed << " failed\n";
  std::cout << "wrote " << (out / "sweep.csv").string() << "\n";
  return failed == 0 ? 0 : 1;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_dir) {
  std::vector<fs::path> paths(inputs.begin(), inputs.end());
  const fs::path out = out_dir.empty() ? fs::path("out") / "report" : fs::path(out_dir);
  taskmix::emit_report(paths, out);
  std::cout << "wrote " << (out / "comparison.txt").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-task training schedule workbench"};
  app.require_subcommand(1);

  CommonOptions baseline_opt, train_opt, sim_opt, sweep_opt;
  std::vector<std::string> report_inputs;
  std::string report_out;

  CLI::App* baseline = app.add_subcommand("baseline", "train every task alone for its budget");
  add_common(baseline, baseline_opt);
  CLI::App* train = app.add_subcommand("train", "run the multi-task trainer");
  add_common(train, train_opt);
  CLI::App* simulate = app.add_subcommand("simulate", "closed-loop schedule dynamics");
  add_common(simulate, sim_opt);
  CLI::App* sweep = app.add_subcommand("sweep", "grid of training runs");
  add_common(sweep, sweep_opt, /*with_seed=*/false);
  CLI::App* report = app.add_subcommand("report", "comparison table from result files");
  report->add_option("results", report_inputs, "result.json / baselines.json files")->required();
  report->add_option("--out-dir", report_out, "output directory (default out/report)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (baseline->parsed()) return cmd_baseline(baseline_opt);
    if (train->parsed()) return cmd_train(train_opt);
    if (simulate->parsed()) return cmd_simulate(sim_opt);
    if (sweep->parsed()) return cmd_sweep(sweep_opt);
    if (report->parsed()) return cmd_report(report_inputs, report_out);
  } catch (const std::exception& err) {
    return fail(err.what());
  }
  return 0;
}
