#include "taskmix/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace taskmix {

std::string fmt_double(double value) {
  if (!std::isfinite(value))
    throw std::invalid_argument("artifact numbers must be finite");
  std::array<char, 64> buffer{};
  const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  if (result.ec != std::errc())
    throw std::runtime_error("failed to format a double");
  return std::string(buffer.data(), result.ptr);
}

std::string metric_to_jsonl(const MetricRecord& record) {
  std::string line;
  line.reserve(160);
  line += "{\"step\":" + std::to_string(record.step);
  line += ",\"task\":" + std::to_string(record.task_id);
  line += ",\"score\":" + fmt_double(record.raw_score);
  line += ",\"relative_score\":" + fmt_double(record.relative_score);
  line += ",\"weight\":" + fmt_double(record.weight);
  line += ",\"lr\":" + fmt_double(record.effective_lr);
  line += ",\"train_loss\":" + fmt_double(record.train_loss);
  line += "}";
  return line;
}

void write_metrics_jsonl(const std::filesystem::path& path,
                         const std::vector<MetricRecord>& records) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  for (const MetricRecord& record : records) out << metric_to_jsonl(record) << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream content;
  content << in.rdbuf();
  return content.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace taskmix
