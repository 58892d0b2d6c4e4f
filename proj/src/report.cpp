#include "taskmix/report.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <stdexcept>

#include "taskmix/io.hpp"

namespace taskmix {
namespace {

using nlohmann::json;

std::string fixed4(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.4f", value);
  return buffer;
}

std::vector<std::string> document_tasks(const json& doc) {
  std::vector<std::string> names;
  if (doc.at("kind") == "run") {
    for (const auto& task : doc.at("config").at("tasks")) names.push_back(task.at("name"));
  } else {
    for (const auto& entry : doc.at("baselines")) names.push_back(entry.at("name"));
  }
  return names;
}

std::string sanitize_filename(const std::string& name) {
  std::string clean;
  for (char c : name)
    clean += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-')
                 ? c
                 : '-';
  return clean.empty() ? std::string("unnamed") : clean;
}

}  // namespace

ComparisonReport collect_report(const std::vector<json>& documents) {
  if (documents.empty()) throw std::invalid_argument("no result documents to report on");
  ComparisonReport report;
  for (const json& doc : documents) {
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind != "run" && kind != "baselines")
      throw std::runtime_error("unknown result kind '" + kind + "'");

    const std::vector<std::string> tasks = document_tasks(doc);
    if (report.task_names.empty())
      report.task_names = tasks;
    else if (tasks != report.task_names)
      throw std::runtime_error("result '" + doc.at("name").get<std::string>() +
                               "' covers different tasks than the first result");

    ReportEntry entry;
    entry.name = doc.at("name").get<std::string>();
    if (kind == "run") {
      entry.dev = doc.at("final_dev_scores").get<std::vector<double>>();
      entry.test = doc.at("final_test_scores").get<std::vector<double>>();
    } else {
      entry.is_baseline = true;
      for (const auto& b : doc.at("baselines")) {
        entry.dev.push_back(b.at("baseline_score").get<double>());
        entry.test.push_back(b.at("test_score").get<double>());
      }
    }
    if (entry.dev.size() != report.task_names.size() ||
        entry.test.size() != report.task_names.size())
      throw std::runtime_error("result '" + entry.name + "' has a score count mismatch");
    report.entries.push_back(std::move(entry));
  }
  return report;
}

std::string render_comparison(const ComparisonReport& report) {
  const std::size_t n = report.task_names.size();
  const std::size_t columns = 2 + 2 * n;  // run, per-task dev/test, avg dev

  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"run"};
  for (const std::string& task : report.task_names) {
    header.push_back(task + " dev");
    header.push_back(task + " test");
  }
  header.push_back("avg dev");
  cells.push_back(std::move(header));

  // Column-wise maxima over all entries; ties all get the star.
  std::vector<double> column_best(columns - 1, -1.0);
  for (const ReportEntry& entry : report.entries) {
    double avg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      column_best[2 * i] = std::max(column_best[2 * i], entry.dev[i]);
      column_best[2 * i + 1] = std::max(column_best[2 * i + 1], entry.test[i]);
      avg += entry.dev[i];
    }
    column_best[columns - 2] = std::max(column_best[columns - 2], avg / static_cast<double>(n));
  }

  for (const ReportEntry& entry : report.entries) {
    std::vector<std::string> row{entry.is_baseline ? entry.name + " (baseline)" : entry.name};
    double avg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      row.push_back(fixed4(entry.dev[i]) + (entry.dev[i] == column_best[2 * i] ? "*" : ""));
      row.push_back(fixed4(entry.test[i]) + (entry.test[i] == column_best[2 * i + 1] ? "*" : ""));
      avg += entry.dev[i];
    }
    avg /= static_cast<double>(n);
    row.push_back(fixed4(avg) + (avg == column_best[columns - 2] ? "*" : ""));
    cells.push_back(std::move(row));
  }

  std::vector<std::size_t> widths(columns, 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < columns; ++c) widths[c] = std::max(widths[c], row[c].size());

  std::string out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < columns; ++c) {
      const std::string& cell = row[c];
      if (c == 0) {
        out += cell;
        out.append(widths[c] - cell.size(), ' ');
      } else {
        out.append(widths[c] - cell.size(), ' ');
        out += cell;
      }
      if (c + 1 < columns) out += "  ";
    }
    out += '\n';
  }
  return out;
}

std::string trajectory_csv(const json& run_document) {
  if (run_document.at("kind") != "run")
    throw std::runtime_error("trajectories exist only for run results");
  std::string csv = "step,task,score,relative_score,weight,lr,train_loss\n";
  for (const auto& record : run_document.at("metrics")) {
    csv += std::to_string(record.at("step").get<long>());
    csv += "," + std::to_string(record.at("task").get<int>());
    csv += "," + fmt_double(record.at("score").get<double>());
    csv += "," + fmt_double(record.at("relative_score").get<double>());
    csv += "," + fmt_double(record.at("weight").get<double>());
    csv += "," + fmt_double(record.at("lr").get<double>());
    csv += "," + fmt_double(record.at("train_loss").get<double>());
    csv += '\n';
  }
  return csv;
}

void emit_report(const std::vector<std::filesystem::path>& inputs,
                 const std::filesystem::path& out_dir) {
  std::vector<json> documents;
  documents.reserve(inputs.size());
  for (const std::filesystem::path& path : inputs) {
    try {
      documents.push_back(json::parse(read_text_file(path)));
    } catch (const json::parse_error& err) {
      throw std::runtime_error("cannot parse '" + path.string() + "': " + err.what());
    }
  }
  const ComparisonReport report = collect_report(documents);
  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir / "comparison.txt", render_comparison(report));
  for (const json& doc : documents)
    if (doc.at("kind") == "run")
      write_text_file(out_dir / (sanitize_filename(doc.at("name").get<std::string>()) +
                                 "-trajectory.csv"),
                      trajectory_csv(doc));
}

}  // namespace taskmix
