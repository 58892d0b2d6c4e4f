#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "taskmix/core.hpp"

namespace taskmix {

// Shortest round-trip decimal form of a double. Every artifact number goes
// through this one formatter so repeated runs emit byte-identical files.
std::string fmt_double(double value);

// One metric record as a single JSONL line (no trailing newline), fixed key
// order: step, task, score, relative_score, weight, lr, train_loss.
std::string metric_to_jsonl(const MetricRecord& record);

void write_metrics_jsonl(const std::filesystem::path& path,
                         const std::vector<MetricRecord>& records);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace taskmix
