#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace taskmix {

// One table row: a training run or a baselines reference set.
struct ReportEntry {
  std::string name;
  std::vector<double> dev;   // per task, same order as task_names
  std::vector<double> test;  // per task
  bool is_baseline = false;
};

struct ComparisonReport {
  std::vector<std::string> task_names;
  std::vector<ReportEntry> entries;  // input order
};

// Collects result documents ("kind" is "run" or "baselines") into one table.
// Every document must cover the same tasks in the same order.
ComparisonReport collect_report(const std::vector<nlohmann::json>& documents);

// Fixed-width text table; the best value in every score column is starred.
std::string render_comparison(const ComparisonReport& report);

// Validation-event trajectory of one run document as CSV with the header
// step,task,score,relative_score,weight,lr,train_loss.
std::string trajectory_csv(const nlohmann::json& run_document);

// Reads the given result files and writes comparison.txt plus one
// <name>-trajectory.csv per run document into out_dir.
void emit_report(const std::vector<std::filesystem::path>& inputs,
                 const std::filesystem::path& out_dir);

}  // namespace taskmix
