#pragma once

#include <span>
#include <vector>

#include "taskmix/model.hpp"

namespace taskmix {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double base_lr = 1.0;  // the nominal step size; lr_scale multiplies it
};

// First/second-moment accumulators for one parameter segment.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;

  explicit AdamState(std::size_t size) : m(size, 0.0), v(size, 0.0) {}
};

// One bias-corrected moment update:
//   theta <- theta - (lr_scale * base_lr) * m_hat / (sqrt(v_hat) + epsilon).
// Rejects non-finite gradients before touching any state, naming the first
// offending index.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               const AdamConfig& cfg, double lr_scale = 1.0);

void scale_gradients(std::span<double> grads, double factor);
std::vector<double> scaled_gradients(std::vector<double> grads, double factor);

// Inverse-square-root decay with linear warmup:
//   lr(step) = base * min(step^-1/2, step * warmup_steps^-3/2).
struct LrSchedule {
  double base = 1.0;
  long warmup_steps = 1;
};

double lr_at(const LrSchedule& schedule, long step);

enum class AccumulatorMode { Shared, PerTask };
enum class ScalingMode { ScaleGradients, ScaleLearningRate };

struct OptimizerTopology {
  AccumulatorMode accumulators = AccumulatorMode::PerTask;
  ScalingMode scaling = ScalingMode::ScaleLearningRate;
};

// Adam accumulators arranged per the topology. Shared mode keeps one state
// per parameter segment and every step updates all segments, so one task's
// momentum keeps moving every head. Per-task mode keeps a separate encoder
// state per task plus one state per head, and a step touches only the
// stepping task's encoder view and its own head.
class OptimizerBank {
 public:
  OptimizerBank(const OptimizerTopology& topology, int n_tasks, const ParamLayout& layout);

  // One optimizer step for `task`; grads spans the full parameter vector.
  void apply(int task, ParamVector& params, std::span<const double> grads, const AdamConfig& cfg,
             double lr_scale = 1.0);

  std::size_t state_count() const { return encoder_states_.size() + head_states_.size(); }
  const OptimizerTopology& topology() const { return topology_; }
  AdamState& encoder_state(int task);
  AdamState& head_state(int task);

 private:
  OptimizerTopology topology_;
  ParamLayout layout_;
  std::vector<AdamState> encoder_states_;  // one (shared) or one per task
  std::vector<AdamState> head_states_;     // one per head in both modes
};

OptimizerBank build_optimizers(const OptimizerTopology& topology, int n_tasks,
                               const ParamLayout& layout);

}  // namespace taskmix
