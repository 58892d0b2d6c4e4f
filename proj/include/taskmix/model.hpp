#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "taskmix/core.hpp"

namespace taskmix {

// Shared tanh encoder followed by one linear head per task.
struct MlpSpec {
  int input_dim = 1;
  int hidden_dim = 1;
  int output_dim = 1;
  bool operator==(const MlpSpec&) const = default;
};

struct Segment {
  std::size_t offset = 0;
  std::size_t length = 0;
  bool operator==(const Segment&) const = default;
};

// Ordered parameter segments: encoder first, then one head per task. Each
// segment packs the layer's weight matrix (row-major) followed by its bias.
class ParamLayout {
 public:
  ParamLayout() = default;
  ParamLayout(const MlpSpec& spec, int n_tasks);

  std::size_t total_size() const { return total_; }
  int n_tasks() const { return n_tasks_; }
  std::size_t segment_count() const { return segments_.size(); }
  const Segment& segment(std::size_t index) const;
  const Segment& encoder() const { return segment(0); }
  const Segment& head(int task) const;
  bool operator==(const ParamLayout&) const = default;

 private:
  std::vector<Segment> segments_;
  std::size_t total_ = 0;
  int n_tasks_ = 0;
};

// Flat parameter vector carrying its own layout.
struct ParamVector {
  ParamLayout layout;
  std::vector<double> values;

  ParamVector() = default;
  explicit ParamVector(ParamLayout l) : layout(std::move(l)), values(layout.total_size(), 0.0) {}

  std::span<double> segment_span(std::size_t index) {
    const Segment& s = layout.segment(index);
    return std::span<double>(values).subspan(s.offset, s.length);
  }
  std::span<const double> segment_span(std::size_t index) const {
    const Segment& s = layout.segment(index);
    return std::span<const double>(values).subspan(s.offset, s.length);
  }
};

struct Batch {
  int task_id = 0;
  std::size_t rows = 0;
  std::vector<double> inputs;   // rows x input_dim, row-major
  std::vector<double> targets;  // rows x output_dim, row-major
};

struct Dataset {
  std::size_t rows = 0;
  int input_dim = 0;
  int output_dim = 0;
  std::vector<double> inputs;
  std::vector<double> targets;

  // Contiguous slice starting at `begin`, wrapping around the end.
  Batch slice(std::size_t begin, std::size_t count, int task_id) const;
};

// Recipe for one synthetic regression task. Teacher seeds that share their
// upper bits (seed >> 8) share the base teacher encoder; the low byte selects
// the per-task encoder perturbation and head, so related tasks are built by
// giving them adjacent seeds inside one 256-seed block.
struct SyntheticTaskSpec {
  long teacher_seed = 0;
  std::size_t train_size = 1;
  std::size_t val_size = 32;
  double noise_std = 0.0;
};

struct TaskData {
  Dataset train;
  Dataset val;
  Dataset test;  // empty unless a test split was requested
};

struct ForwardResult {
  std::vector<double> predictions;  // rows x output_dim
  std::vector<double> hidden;       // rows x hidden_dim (tanh outputs)
};

ForwardResult forward(const ParamVector& params, const MlpSpec& spec, const Batch& batch);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grads;  // same length and layout as params.values
};

// Mean squared error over the batch plus an optional L2 penalty
// l2 * (|encoder|^2 + |head|^2) on the segments the batch's task trains.
// Gradients outside the encoder and the batch's head are exactly zero.
LossGrad loss_and_grad(const ParamVector& params, const MlpSpec& spec, const Batch& batch,
                       double l2 = 0.0);

// Draws train/val(/test) splits from one deterministic stream: same spec,
// same bits. Targets are teacher(x) plus N(0, noise_std^2) noise.
TaskData generate_task(const SyntheticTaskSpec& spec, const MlpSpec& dims,
                       std::size_t test_size = 0);

// Monotone map from validation MSE to a bounded 0..100 score.
double score_from_loss(double val_mse);

double mean_squared_error(const ParamVector& params, const MlpSpec& spec, const Dataset& data,
                          int task_id);

ParamVector init_params(const MlpSpec& spec, int n_tasks, std::uint64_t seed);

// Binary container: four little-endian int64 fields {rows, input_dim,
// output_dim, seed} followed by rows*input_dim input reals and
// rows*output_dim target reals, all 64-bit little-endian.
void save_dataset(const std::filesystem::path& path, const Dataset& data, long seed);
Dataset load_dataset(const std::filesystem::path& path, long* seed_out = nullptr);

// Parameter vectors reuse the container with rows = total size and one value
// column; the layout is supplied on load and checked against the header.
void save_params(const std::filesystem::path& path, const ParamVector& params, long seed);
ParamVector load_params(const std::filesystem::path& path, const ParamLayout& layout,
                        long* seed_out = nullptr);

}  // namespace taskmix
