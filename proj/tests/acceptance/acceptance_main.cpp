// Release gate. Each criterion prints exactly one [PASS]/[FAIL] line; the
// process exits nonzero if any fail. Tolerances and budgets are pinned here,
// next to the check they govern, so a green run is a complete statement of
// what this library promises.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "taskmix/config.hpp"
#include "taskmix/core.hpp"
#include "taskmix/harness.hpp"
#include "taskmix/io.hpp"
#include "taskmix/model.hpp"
#include "taskmix/optim.hpp"
#include "taskmix/report.hpp"
#include "taskmix/schedulers.hpp"
#include "taskmix/simdyn.hpp"

using namespace taskmix;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double rel_gap(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

std::string sci(double v) {
  std::ostringstream out;
  out.precision(2);
  out << std::scientific << v;
  return out.str();
}

double unit(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Scores drawn on a coarse grid: adjacent values are either bit-identical or
// at least one grid step apart. pow(|gap|, beta) near gap = 0 would otherwise
// turn the last-ulp difference between two algebraically equal gap
// computations into an error far above any reasonable tolerance.
std::vector<double> grid_scores(std::mt19937_64& rng, std::size_t n, double step, int lo_tick,
                                int hi_tick, double tie_chance) {
  std::vector<int> ticks;
  std::vector<double> values;
  while (values.size() < n) {
    if (!values.empty() && unit(rng) < tie_chance) {
      values.push_back(values[rng() % values.size()]);
      continue;
    }
    const int span = hi_tick - lo_tick + 1;
    int tick = lo_tick + static_cast<int>(rng() % static_cast<unsigned long>(span));
    if (std::find(ticks.begin(), ticks.end(), tick) != ticks.end()) continue;
    ticks.push_back(tick);
    values.push_back(step * tick);
  }
  return values;
}

// --- criterion 1 -----------------------------------------------------------
// Every schedule formula against an independent re-evaluation: pow via
// exp/log, sums accumulated back to front, softmax without the peak shift.
// The shared ingredient is the library-derived mean/max, because the
// comparison is about the formulas, not about summation order.
Outcome criterion_formulas() {
  std::mt19937_64 rng(41);
  const double tol = 1e-12;
  const int draws = 1000;
  double worst = 0.0;

  const auto ipow = [](double base, double exponent) {
    if (exponent == 0.0 || base == 1.0) return 1.0;
    return std::exp(exponent * std::log(base));
  };

  for (int draw = 0; draw < draws; ++draw) {
    const std::size_t n = 1 + rng() % 6;
    // 0.05 .. 2.00 in 0.01 steps, all distinct
    const std::vector<double> values = grid_scores(rng, n, 0.01, 5, 200, 0.0);
    const RelativeScores scores = make_relative_scores(values);

    ExplicitConfig ec{0.25 + 7.75 * unit(rng), 0.5 * unit(rng)};
    if (draw % 5 == 0) ec.epsilon = 0.0;  // the guard-free law must match too
    const std::vector<double> w = explicit_weights(scores, ec);
    const ScheduleDecision probs = explicit_probabilities(w, draw);
    std::vector<double> ref_w(n);
    for (std::size_t i = 0; i < n; ++i)
      ref_w[i] = 1.0 / (ipow(std::min(1.0, values[i]), ec.alpha) + ec.epsilon);
    double ref_sum = 0.0;
    for (std::size_t i = n; i-- > 0;) ref_sum += ref_w[i];
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max(worst, rel_gap(w[i], ref_w[i]));
      worst = std::max(worst, rel_gap(probs.values[i], ref_w[i] / ref_sum));
    }

    const ImplicitConfig ic{12.0 * unit(rng), 0.05 + 0.95 * unit(rng), 0.05 + 0.75 * unit(rng)};
    const ScheduleDecision imp = implicit_weights(scores, ic, draw);
    std::vector<double> ref_raw(n, 1.0);
    const double ramp = ipow(scores.max, ic.alpha);
    for (std::size_t i = 0; i < n; ++i) {
      const double gap = std::abs(values[i] - scores.mean);
      if (gap == 0.0) continue;
      const double deviation = std::min(ic.gamma, ramp * ipow(gap, ic.beta));
      ref_raw[i] = values[i] < scores.mean ? 1.0 + deviation : 1.0 - deviation;
    }
    double raw_sum = 0.0;
    for (std::size_t i = n; i-- > 0;) raw_sum += ref_raw[i];
    for (std::size_t i = 0; i < n; ++i)
      worst = std::max(worst, rel_gap(imp.values[i], ref_raw[i] * static_cast<double>(n) / raw_sum));

    const LossProgressConfig lc{200, 0.5 + 1.5 * unit(rng)};
    std::vector<double> recent(n), past(n);
    for (std::size_t i = 0; i < n; ++i) {
      recent[i] = 0.2 + 4.8 * unit(rng);
      past[i] = 0.2 + 4.8 * unit(rng);
    }
    const ScheduleDecision lp = loss_progress_weights(recent, past, lc, draw);
    std::vector<double> ref_exp(n);
    double denom = 0.0;
    for (std::size_t i = n; i-- > 0;) {
      ref_exp[i] = std::exp((recent[i] / past[i]) / lc.temperature);
      denom += ref_exp[i];
    }
    for (std::size_t i = 0; i < n; ++i)
      worst = std::max(worst, rel_gap(lp.values[i], static_cast<double>(n) * ref_exp[i] / denom));
  }

  Outcome out;
  out.pass = worst < tol;
  out.detail = std::to_string(draws) + " draws, max rel err " + sci(worst);
  return out;
}

// --- criterion 2 -----------------------------------------------------------
// Capped-weight range and conservation over random draws, ties included. The
// two-task raw sum must land on 2.0 exactly, not merely close.
Outcome criterion_weight_bounds() {
  std::mt19937_64 rng(42);
  const int draws = 10000;
  const double sum_tol = 1e-9;
  int exact_pairs = 0;
  double worst_sum = 0.0;
  double worst_tie = 0.0;

  for (int draw = 0; draw < draws; ++draw) {
    const std::size_t n = 2 + rng() % 7;
    // 0.0005 .. 2.0 in 0.0005 steps, 15% exact ties
    const std::vector<double> values = grid_scores(rng, n, 0.0005, 1, 4000, 0.15);
    const ImplicitConfig ic{16.0 * unit(rng), 0.05 + 0.95 * unit(rng), 0.99 * unit(rng)};
    const RelativeScores scores = make_relative_scores(values);
    const ScheduleDecision d = implicit_weights(scores, ic, draw);

    // Raw weights straight from the published law; the decision must be their
    // exact renormalization and, for two tasks, the raws themselves.
    std::vector<double> raw(n, 1.0);
    if (n == 2) {
      const double gap = 0.5 * std::abs(values[0] - values[1]);
      if (gap != 0.0) {
        const double deviation =
            (1.0 + std::min(ic.gamma, std::pow(scores.max, ic.alpha) * std::pow(gap, ic.beta))) -
            1.0;
        const std::size_t low = values[0] < values[1] ? 0 : 1;
        raw[low] = 1.0 + deviation;
        raw[1 - low] = 1.0 - deviation;
      }
    } else {
      const double ramp = std::pow(scores.max, ic.alpha);
      for (std::size_t i = 0; i < n; ++i) {
        const double gap = values[i] - scores.mean;
        if (gap == 0.0) continue;
        const double deviation = std::min(ic.gamma, ramp * std::pow(std::abs(gap), ic.beta));
        raw[i] = gap < 0.0 ? 1.0 + deviation : 1.0 - deviation;
      }
    }
    // The pair path rounds its deviation through the grid above 1.0 so both
    // weights stay exactly representable; the binding cap is that rounded
    // gamma, at most one ulp from gamma itself.
    const double cap = n == 2 ? (1.0 + ic.gamma) - 1.0 : ic.gamma;
    double raw_sum = 0.0;
    for (double r : raw) {
      if (r < 1.0 - cap || r > 1.0 + cap)
        return {false, "raw weight " + std::to_string(r) + " escaped [1-gamma, 1+gamma]"};
      raw_sum += r;
    }
    double decision_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      decision_sum += d.values[i];
      worst_tie =
          std::max(worst_tie, rel_gap(d.values[i], raw[i] * static_cast<double>(n) / raw_sum));
    }
    worst_sum = std::max(worst_sum, std::abs(decision_sum - static_cast<double>(n)));

    if (n == 2) {
      if (d.values[0] + d.values[1] != 2.0)
        return {false, "two-task raw sum " + sci(d.values[0] + d.values[1] - 2.0) + " off 2.0"};
      ++exact_pairs;
      for (double v : d.values)
        if (v < 1.0 - cap || v > 1.0 + cap)
          return {false, "two-task weight " + std::to_string(v) + " escaped the cap"};
    }
  }

  Outcome out;
  out.pass = worst_sum < sum_tol && worst_tie < sum_tol;
  out.detail = std::to_string(draws) + " draws, sum err " + sci(worst_sum) + ", formula err " +
               sci(worst_tie) + ", " + std::to_string(exact_pairs) + " exact pair sums";
  return out;
}

// --- criterion 3 -----------------------------------------------------------
Outcome criterion_adam() {
  const AdamConfig cfg{0.9, 0.999, 1e-8, 1e-3};

  AdamState first(1);
  std::vector<double> theta{0.0};
  const std::vector<double> g{0.5};
  adam_step(first, theta, g, cfg);
  const double expected = -(1e-3 * 0.5) / (0.5 + 1e-8);
  const double first_err = std::abs(theta[0] - expected);
  if (first_err > 1e-12)
    return {false, "first-step update off by " + sci(first_err)};

  const std::vector<double> base_g{0.5, -1.2, 3.0, -0.07};
  std::vector<double> big_g(base_g);
  for (double& v : big_g) v *= 1000.0;
  AdamState sa(4), sb(4);
  std::vector<double> ta(4, 0.0), tb(4, 0.0);
  adam_step(sa, ta, base_g, cfg);
  adam_step(sb, tb, big_g, cfg);
  double scale_err = 0.0;
  for (std::size_t i = 0; i < 4; ++i) scale_err = std::max(scale_err, rel_gap(ta[i], tb[i]));
  if (scale_err > 1e-6)
    return {false, "1000x gradient rescale moved an update by " + sci(scale_err) + " relative"};

  AdamState bias(2);
  std::vector<double> tc(2, 0.0);
  const std::vector<double> constant_g{0.3, -0.9};
  for (int step = 0; step < 100; ++step) adam_step(bias, tc, constant_g, cfg);
  double bias_err = 0.0;
  const double m_corr = 1.0 - std::pow(cfg.beta1, 100);
  const double v_corr = 1.0 - std::pow(cfg.beta2, 100);
  for (std::size_t i = 0; i < 2; ++i) {
    bias_err = std::max(bias_err, rel_gap(bias.m[i] / m_corr, constant_g[i]));
    bias_err = std::max(bias_err, rel_gap(bias.v[i] / v_corr, constant_g[i] * constant_g[i]));
  }
  if (bias_err > 1e-12)
    return {false, "bias-corrected moments off a constant gradient by " + sci(bias_err)};

  return {true, "first step " + sci(first_err) + ", rescale " + sci(scale_err) + ", bias " +
                    sci(bias_err)};
}

// --- criterion 4 -----------------------------------------------------------
// Trains the same two-task model three times for 100 alternating steps.
// Scaling one task's gradients under per-task accumulators must not move the
// trajectory; scaling its learning rate must. Adam's epsilon is set tiny so
// the update floor does not blur the accumulator identity being tested.
Outcome criterion_topology() {
  const MlpSpec spec{4, 6, 2};
  const ParamLayout layout(spec, 2);
  const AdamConfig cfg{0.9, 0.999, 1e-15, 2e-3};
  const double factor = 10.0;
  const int steps = 100;
  const int batch_rows = 16;

  std::vector<TaskData> data;
  data.push_back(generate_task({300, 64, 32, 0.05}, spec));
  data.push_back(generate_task({301, 64, 32, 0.05}, spec));

  enum class Variant { Reference, ScaledGradients, ScaledLr };
  const auto train = [&](Variant variant) {
    ParamVector params = init_params(spec, 2, 7);
    OptimizerBank bank({AccumulatorMode::PerTask, ScalingMode::ScaleLearningRate}, 2, layout);
    for (int step = 0; step < steps; ++step) {
      const int task = step % 2;
      const std::size_t begin = (static_cast<std::size_t>(step / 2) * batch_rows) % 64;
      const Batch batch = data[task].train.slice(begin, batch_rows, task);
      LossGrad lg = loss_and_grad(params, spec, batch);
      double lr_scale = 1.0;
      if (task == 0 && variant == Variant::ScaledGradients) scale_gradients(lg.grads, factor);
      if (task == 0 && variant == Variant::ScaledLr) lr_scale = factor;
      bank.apply(task, params, lg.grads, cfg, lr_scale);
    }
    return params;
  };

  const ParamVector ref = train(Variant::Reference);
  const ParamVector grad_scaled = train(Variant::ScaledGradients);
  const ParamVector lr_scaled = train(Variant::ScaledLr);

  double grad_drift = 0.0;
  double lr_distance = 0.0;
  for (std::size_t i = 0; i < ref.values.size(); ++i) {
    grad_drift = std::max(grad_drift, std::abs(grad_scaled.values[i] - ref.values[i]) /
                                          std::max(1.0, std::abs(ref.values[i])));
    const double dv = lr_scaled.values[i] - ref.values[i];
    lr_distance += dv * dv;
  }
  lr_distance = std::sqrt(lr_distance);
  if (grad_drift > 1e-9)
    return {false, "gradient scaling moved the trajectory by " + sci(grad_drift)};
  if (lr_distance < 1e-3)
    return {false, "lr scaling only moved the trajectory by " + sci(lr_distance)};

  // Momentum leakage: prime head 1, then take a task-0 step with zero head-1
  // gradient. Shared accumulators keep head 1 moving; per-task ones may not
  // touch it at all.
  const auto leak_probe = [&](AccumulatorMode mode) {
    ParamVector params{layout};
    OptimizerBank bank({mode, ScalingMode::ScaleGradients}, 2, layout);
    std::vector<double> grads_t1(params.values.size(), 0.0);
    for (std::size_t i = 0; i < layout.head(1).length; ++i)
      grads_t1[layout.head(1).offset + i] = 0.3;
    bank.apply(1, params, grads_t1, cfg);
    std::vector<double> grads_t0(params.values.size(), 0.0);
    for (std::size_t i = 0; i < layout.head(0).length; ++i)
      grads_t0[layout.head(0).offset + i] = 0.3;
    const std::vector<double> before = params.values;
    bank.apply(0, params, grads_t0, cfg);
    double moved = 0.0;
    for (std::size_t i = 0; i < layout.head(1).length; ++i)
      moved = std::max(moved,
                       std::abs(params.values[layout.head(1).offset + i] -
                                before[layout.head(1).offset + i]));
    return moved;
  };
  const double shared_leak = leak_probe(AccumulatorMode::Shared);
  const double per_task_leak = leak_probe(AccumulatorMode::PerTask);
  if (shared_leak == 0.0) return {false, "shared accumulators showed no momentum leakage"};
  if (per_task_leak != 0.0)
    return {false, "per-task accumulators leaked " + sci(per_task_leak) + " into an idle head"};

  return {true, "grad-scale drift " + sci(grad_drift) + ", lr-scale distance " +
                    sci(lr_distance) + ", shared leak " + sci(shared_leak) + ", per-task leak 0"};
}

// --- criterion 5 -----------------------------------------------------------
Outcome criterion_gradcheck() {
  std::mt19937_64 rng(45);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double h = 1e-5;
  const double tol = 1e-5;
  const int draws = 100;
  double worst = 0.0;

  for (int draw = 0; draw < draws; ++draw) {
    const MlpSpec spec{1 + static_cast<int>(rng() % 5), 1 + static_cast<int>(rng() % 6),
                       1 + static_cast<int>(rng() % 3)};
    const int n_tasks = 1 + static_cast<int>(rng() % 3);
    ParamVector params = init_params(spec, n_tasks, rng());
    for (double& p : params.values) p += 0.3 * normal(rng);

    Batch batch;
    batch.task_id = static_cast<int>(rng() % static_cast<unsigned long>(n_tasks));
    batch.rows = 1 + rng() % 4;
    batch.inputs.resize(batch.rows * spec.input_dim);
    batch.targets.resize(batch.rows * spec.output_dim);
    for (double& v : batch.inputs) v = normal(rng);
    for (double& v : batch.targets) v = normal(rng);
    const double l2 = std::vector<double>{0.0, 1e-3, 0.01}[draw % 3];

    const LossGrad lg = loss_and_grad(params, spec, batch, l2);
    for (std::size_t j = 0; j < params.values.size(); ++j) {
      const double keep = params.values[j];
      params.values[j] = keep + h;
      const double up = loss_and_grad(params, spec, batch, l2).loss;
      params.values[j] = keep - h;
      const double down = loss_and_grad(params, spec, batch, l2).loss;
      params.values[j] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double err = std::abs(numeric - lg.grads[j]) /
                         std::max({std::abs(numeric), std::abs(lg.grads[j]), 1e-8});
      worst = std::max(worst, err);
    }
  }

  Outcome out;
  out.pass = worst < tol;
  out.detail = std::to_string(draws) + " draws, max rel err " + sci(worst);
  return out;
}

// The 1:40 pair the training criteria run on. The small task's 64 rows carry
// heavy target noise, so oversampling it pollutes the shared encoder; the
// teacher seeds share one family block, so the big task's encoder transfers.
const char* const kPairBase = R"({
  "name": "pair",
  "seed": 1,
  "tasks": [
    {"name": "large", "teacher_seed": 768, "train_size": 4000, "val_size": 256, "noise_std": 0.05},
    {"name": "small", "teacher_seed": 769, "train_size": 64, "val_size": 256, "noise_std": 0.6}
  ],
  "model": {"input_dim": 8, "hidden_dim": 32, "output_dim": 4},
  "scheduler": {"kind": "uniform"},
  "lr_schedule": {"base": 0.08, "warmup_steps": 500},
  "total_steps": 6000,
  "validation_every": 200,
  "checkpoint_every": 200,
  "checkpoints_to_average": 5,
  "batch_size": 32
})";

// --- criterion 6 -----------------------------------------------------------
// Five seeds of the full experiment: solo baselines, then the four mixes.
// Uniform must lift the small task while costing the large one more than 1%
// of its baseline; the 75/25, score-driven-sampling, and lr-multiplier mixes
// must hold the large task within 1% without giving the small task's gain
// back. Each direction must hold on at least 4 of the 5 seeds.
Outcome criterion_pair_experiment() {
  const json variants = {
      {{"kind", "uniform"}},
      {{"kind", "constant"}, {"probabilities", {0.75, 0.25}}},
      {{"kind", "explicit"}, {"alpha", 128.0}, {"epsilon", 0.0005}},
      {{"kind", "implicit"}, {"alpha", 16.0}, {"beta", 0.1}, {"gamma", 0.8}},
  };
  int uniform_ok = 0, constant_ok = 0, explicit_ok = 0, implicit_ok = 0;

  for (long seed = 1; seed <= 5; ++seed) {
    json base = json::parse(kPairBase);
    base["seed"] = seed;
    const std::vector<BaselineResult> solo = run_all_baselines(parse_run_config(base));
    const std::vector<double> baselines{solo[0].baseline_score, solo[1].baseline_score};

    std::vector<std::array<double, 2>> rels;
    for (const json& sched : variants) {
      json run = base;
      run["scheduler"] = sched;
      const RunResult result = run_multitask(parse_run_config(run), baselines);
      rels.push_back({result.final_dev_scores[0] / baselines[0],
                      result.final_dev_scores[1] / baselines[1]});
    }
    uniform_ok += rels[0][1] > 1.0 && rels[0][0] < 0.99;
    constant_ok += rels[1][0] >= 0.99 && rels[1][1] >= 1.0;
    explicit_ok += rels[2][0] >= 0.99 && rels[2][1] >= 1.0;
    implicit_ok += rels[3][0] >= 0.99 && rels[3][1] >= 1.0;
  }

  Outcome out;
  out.pass = uniform_ok >= 4 && constant_ok >= 4 && explicit_ok >= 4 && implicit_ok >= 4;
  out.detail = "seeds agreeing: uniform trade " + std::to_string(uniform_ok) + "/5, 75-25 " +
               std::to_string(constant_ok) + "/5, score-sampling " + std::to_string(explicit_ok) +
               "/5, lr-multiplier " + std::to_string(implicit_ok) + "/5";
  return out;
}

// Two equal tasks, aggressive oversampling, deep forgetting and a coarse
// validation cadence: textbook conditions for feedback-driven seesawing.
const char* const kOscillationSim = R"({
  "name": "oscillation",
  "dynamics": {
    "tasks": [
      {"ceiling": 20.0, "learn_rate": 0.1, "forget_rate": 0.02, "initial_score": 12.0},
      {"ceiling": 20.0, "learn_rate": 0.1, "forget_rate": 0.02, "initial_score": 18.0}
    ]
  },
  "sim": {
    "total_steps": 2000,
    "validation_every": 25,
    "scheduler": {"kind": "explicit", "alpha": 8.0, "epsilon": 0.001}
  },
  "oscillation": {"window": 20, "amplitude_threshold": 0.5}
})";

// --- criterion 7 -----------------------------------------------------------
Outcome criterion_oscillation() {
  const auto detect = [](const json& doc) {
    const SimExperimentConfig cfg = parse_sim_config(doc);
    const SimResult sim = run_sim(cfg.dynamics, cfg.sim);
    return detect_oscillation(sim.records, cfg.oscillation_window, cfg.oscillation_threshold);
  };

  const json aggressive = json::parse(kOscillationSim);
  const OscillationReport wild = detect(aggressive);
  const double amplitude = *std::max_element(wild.amplitudes.begin(), wild.amplitudes.end());
  if (!wild.oscillating || amplitude <= 0.5)
    return {false, "aggressive settings failed to oscillate (amplitude " + sci(amplitude) + ")"};

  json damped = json::parse(kOscillationSim);
  damped["sim"]["scheduler"]["epsilon"] = 0.5;
  if (detect(damped).oscillating)
    return {false, "raising the oversampling guard to 0.5 did not calm the loop"};

  json fresh = json::parse(kOscillationSim);
  fresh["sim"]["validation_every"] = 1;
  if (detect(fresh).oscillating)
    return {false, "per-step validation did not calm the loop"};

  return {true, "amplitude " + sci(amplitude) + " under stale feedback, calm under either fix"};
}

// The sweep pair: same sizes and budget as the training pair, but the tasks
// come from unrelated teacher families and the small task's targets are
// clean, so each task's score genuinely follows its share of the steps.
const char* const kRatioBase = R"({
  "name": "ratio-pair",
  "seed": 1,
  "tasks": [
    {"name": "large", "teacher_seed": 768, "train_size": 4000, "val_size": 256, "noise_std": 0.05},
    {"name": "small", "teacher_seed": 1025, "train_size": 100, "val_size": 256, "noise_std": 0.05}
  ],
  "model": {"input_dim": 8, "hidden_dim": 32, "output_dim": 4},
  "scheduler": {"kind": "constant", "probabilities": [0.5, 0.5]},
  "lr_schedule": {"base": 0.08, "warmup_steps": 500},
  "total_steps": 6000,
  "validation_every": 200,
  "checkpoint_every": 200,
  "checkpoints_to_average": 5,
  "batch_size": 32
})";

// --- criterion 8 -----------------------------------------------------------
// Fixed-mix sweep from 10% to 90% on the large task: its score may never
// fall as its share grows, the small task's may never rise, and at most one
// adjacent pair in total may break rank.
Outcome criterion_ratio_sweep() {
  json base = json::parse(kRatioBase);
  const std::vector<BaselineResult> solo = run_all_baselines(parse_run_config(base));
  base["baselines"] = {solo[0].baseline_score, solo[1].baseline_score};

  SweepConfig sweep;
  sweep.name = "ratio";
  sweep.base = base;
  std::vector<json> mixes;
  for (int tick = 1; tick <= 9; ++tick)
    mixes.push_back(json::array({0.1 * tick, 1.0 - 0.1 * tick}));
  sweep.grid = {{"scheduler.probabilities", mixes}};

  const SweepResult result = run_sweep(sweep, std::filesystem::current_path());
  std::vector<double> large, small;
  for (const SweepRow& row : result.rows) {
    if (!row.result) return {false, "grid point " + std::to_string(row.index) + ": " + row.error};
    large.push_back(row.result->final_dev_scores[0]);
    small.push_back(row.result->final_dev_scores[1]);
  }
  int inversions = 0;
  for (std::size_t i = 1; i < large.size(); ++i) {
    inversions += large[i] < large[i - 1];
    inversions += small[i] > small[i - 1];
  }

  Outcome out;
  out.pass = inversions <= 1;
  out.detail = "large " + sci(large.front()) + " -> " + sci(large.back()) + ", small " +
               sci(small.front()) + " -> " + sci(small.back()) + ", " +
               std::to_string(inversions) + " inversions over 9 mixes";
  return out;
}

// --- criterion 9 -----------------------------------------------------------
// Every artifact a run can emit, generated twice from scratch, compared as
// bytes: metric lines, the result document, its trajectory table, the
// simulator's records, and a small sweep's table.
Outcome criterion_determinism() {
  const auto training_artifacts = []() {
    json cfg_json = json::parse(kPairBase);
    cfg_json["total_steps"] = 600;
    cfg_json["validation_every"] = 100;
    cfg_json["checkpoint_every"] = 100;
    cfg_json["checkpoints_to_average"] = 3;
    cfg_json["seed"] = 9;
    cfg_json["scheduler"] = {{"kind", "explicit"}, {"alpha", 8.0}, {"epsilon", 0.05}};
    const RunResult result = run_multitask(parse_run_config(cfg_json), {90.0, 50.0});
    std::string blob;
    for (const MetricRecord& record : result.metrics) blob += metric_to_jsonl(record) + "\n";
    const json doc = run_result_to_json("tiny", result);
    blob += doc.dump(2);
    blob += trajectory_csv(doc);
    return blob;
  };

  const auto sim_artifacts = []() {
    const SimExperimentConfig cfg = parse_sim_config(json::parse(kOscillationSim));
    const SimResult sim = run_sim(cfg.dynamics, cfg.sim);
    std::string blob;
    for (const MetricRecord& record : sim.records) blob += metric_to_jsonl(record) + "\n";
    for (double score : sim.final_scores) blob += fmt_double(score) + "\n";
    return blob;
  };

  const auto sweep_artifacts = []() {
    json base = json::parse(kRatioBase);
    base["total_steps"] = 600;
    base["validation_every"] = 100;
    base["checkpoint_every"] = 100;
    base["checkpoints_to_average"] = 3;
    base["baselines"] = {90.0, 50.0};
    SweepConfig sweep;
    sweep.name = "determinism";
    sweep.base = base;
    sweep.grid = {{"scheduler.probabilities",
                   {json::array({0.3, 0.7}), json::array({0.7, 0.3})}}};
    return sweep_to_csv(run_sweep(sweep, std::filesystem::current_path()));
  };

  if (training_artifacts() != training_artifacts())
    return {false, "two identical training runs serialized differently"};
  if (sim_artifacts() != sim_artifacts())
    return {false, "two identical simulator runs serialized differently"};
  if (sweep_artifacts() != sweep_artifacts())
    return {false, "two identical sweeps serialized differently"};
  return {true, "training, simulator, and sweep artifacts byte-stable across reruns"};
}

struct Criterion {
  int id;
  const char* label;
  double budget_seconds;  // 0 means no pinned budget
  Outcome (*check)();
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "schedule formulas match an independent re-evaluation", 1.0, criterion_formulas},
      {2, "capped weights stay in bounds and the two-task raw sum is exact", 1.0,
       criterion_weight_bounds},
      {3, "first step, 1000x rescale, and bias correction of the optimizer are exact", 0.0,
       criterion_adam},
      {4, "per-task accumulators absorb gradient scaling but not lr scaling; shared ones leak",
       5.0, criterion_topology},
      {5, "analytic gradients match central finite differences", 5.0, criterion_gradcheck},
      {6, "adaptive and 75-25 mixes protect the large task; uniform trades it away", 600.0,
       criterion_pair_experiment},
      {7, "stale feedback plus an aggressive schedule oscillates; damping stops it", 1.0,
       criterion_oscillation},
      {8, "constant-ratio sweep moves each task monotonically with its share", 900.0,
       criterion_ratio_sweep},
      {9, "repeated runs serialize byte-identical artifacts", 0.0, criterion_determinism},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    const auto started = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criterion.check();
    } catch (const std::exception& err) {
      outcome = {false, std::string("threw: ") + err.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (criterion.budget_seconds > 0.0 && seconds >= criterion.budget_seconds) {
      outcome.pass = false;
      outcome.detail += "; over the " + std::to_string(criterion.budget_seconds) + " s budget";
    }
    failures += !outcome.pass;
    std::printf("[%s] criterion %d: %s (%s) [%.2f s]\n", outcome.pass ? "PASS" : "FAIL",
                criterion.id, criterion.label, outcome.detail.c_str(), seconds);
  }
  std::printf("%d/9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}
