#include "taskmix/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "taskmix/rng.hpp"

namespace taskmix {
namespace {

// How far each task's teacher encoder strays from the shared family encoder,
// relative to the init scale. Large enough that tasks compete for encoder
// capacity, small enough that encoder features still transfer.
constexpr double kTeacherPerturb = 0.25;

void check_spec(const MlpSpec& spec) {
  if (spec.input_dim < 1 || spec.hidden_dim < 1 || spec.output_dim < 1)
    throw std::invalid_argument("model dimensions must be positive");
}

ParamVector make_teacher(const SyntheticTaskSpec& spec, const MlpSpec& dims) {
  ParamVector teacher{ParamLayout(dims, 1)};
  const auto seed_bits = static_cast<std::uint64_t>(spec.teacher_seed);
  Rng family_rng(mix_seed(seed_bits >> 8, seeds::kTeacherBase));
  Rng task_rng(mix_seed(seed_bits, seeds::kTeacherTask));
  const double enc_scale = 1.0 / std::sqrt(static_cast<double>(dims.input_dim));
  const double head_scale = 1.0 / std::sqrt(static_cast<double>(dims.hidden_dim));
  for (double& p : teacher.segment_span(0)) p = enc_scale * family_rng.normal();
  for (double& p : teacher.segment_span(0)) p += kTeacherPerturb * enc_scale * task_rng.normal();
  for (double& p : teacher.segment_span(1)) p = head_scale * task_rng.normal();
  return teacher;
}

Dataset draw_split(const ParamVector& teacher, const MlpSpec& dims, std::size_t rows,
                   double noise_std, Rng& rng) {
  Dataset data;
  data.rows = rows;
  data.input_dim = dims.input_dim;
  data.output_dim = dims.output_dim;
  data.inputs.resize(rows * dims.input_dim);
  data.targets.resize(rows * dims.output_dim);
  if (rows == 0) return data;
  for (double& x : data.inputs) x = rng.normal();

  Batch all;
  all.task_id = 0;
  all.rows = rows;
  all.inputs = data.inputs;
  all.targets.assign(rows * dims.output_dim, 0.0);
  data.targets = forward(teacher, dims, all).predictions;
  if (noise_std > 0.0)
    for (double& t : data.targets) t += noise_std * rng.normal();
  return data;
}

void write_doubles(std::ofstream& out, const std::vector<double>& values) {
  static_assert(std::endian::native == std::endian::little,
                "binary containers are little-endian");
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

void read_doubles(std::ifstream& in, std::vector<double>& values) {
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw std::runtime_error("binary container truncated");
}

}  // namespace

ParamLayout::ParamLayout(const MlpSpec& spec, int n_tasks) : n_tasks_(n_tasks) {
  check_spec(spec);
  if (n_tasks < 1) throw std::invalid_argument("layout needs at least one task");
  const std::size_t enc_len =
      static_cast<std::size_t>(spec.input_dim) * spec.hidden_dim + spec.hidden_dim;
  const std::size_t head_len =
      static_cast<std::size_t>(spec.hidden_dim) * spec.output_dim + spec.output_dim;
  segments_.push_back({0, enc_len});
  std::size_t offset = enc_len;
  for (int t = 0; t < n_tasks; ++t) {
    segments_.push_back({offset, head_len});
    offset += head_len;
  }
  total_ = offset;
}

const Segment& ParamLayout::segment(std::size_t index) const {
  if (index >= segments_.size()) throw std::out_of_range("no such parameter segment");
  return segments_[index];
}

const Segment& ParamLayout::head(int task) const {
  if (task < 0 || task >= n_tasks_) throw std::out_of_range("no head for that task");
  return segments_[static_cast<std::size_t>(task) + 1];
}

Batch Dataset::slice(std::size_t begin, std::size_t count, int task_id) const {
  if (rows == 0) throw std::invalid_argument("cannot slice an empty dataset");
  Batch batch;
  batch.task_id = task_id;
  batch.rows = count;
  batch.inputs.resize(count * input_dim);
  batch.targets.resize(count * output_dim);
  for (std::size_t r = 0; r < count; ++r) {
    const std::size_t src = (begin + r) % rows;
    std::copy_n(inputs.begin() + static_cast<std::ptrdiff_t>(src * input_dim), input_dim,
                batch.inputs.begin() + static_cast<std::ptrdiff_t>(r * input_dim));
    std::copy_n(targets.begin() + static_cast<std::ptrdiff_t>(src * output_dim), output_dim,
                batch.targets.begin() + static_cast<std::ptrdiff_t>(r * output_dim));
  }
  return batch;
}

ForwardResult forward(const ParamVector& params, const MlpSpec& spec, const Batch& batch) {
  check_spec(spec);
  const int task = batch.task_id;
  const std::size_t rows = batch.rows;
  if (batch.inputs.size() != rows * static_cast<std::size_t>(spec.input_dim))
    throw std::invalid_argument("batch input size does not match the model spec");
  const auto enc = params.segment_span(0);
  const auto head = params.segment_span(static_cast<std::size_t>(task) + 1);
  const int in = spec.input_dim, hid = spec.hidden_dim, out = spec.output_dim;
  const double* w_enc = enc.data();                                  // in x hid
  const double* b_enc = enc.data() + static_cast<std::size_t>(in) * hid;
  const double* w_head = head.data();                                // hid x out
  const double* b_head = head.data() + static_cast<std::size_t>(hid) * out;

  ForwardResult result;
  result.hidden.resize(rows * static_cast<std::size_t>(hid));
  result.predictions.resize(rows * static_cast<std::size_t>(out));
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = batch.inputs.data() + r * static_cast<std::size_t>(in);
    double* h = result.hidden.data() + r * static_cast<std::size_t>(hid);
    for (int j = 0; j < hid; ++j) {
      double z = b_enc[j];
      for (int i = 0; i < in; ++i) z += x[i] * w_enc[static_cast<std::size_t>(i) * hid + j];
      h[j] = std::tanh(z);
    }
    double* y = result.predictions.data() + r * static_cast<std::size_t>(out);
    for (int o = 0; o < out; ++o) {
      double z = b_head[o];
      for (int j = 0; j < hid; ++j) z += h[j] * w_head[static_cast<std::size_t>(j) * out + o];
      y[o] = z;
    }
  }
  return result;
}

LossGrad loss_and_grad(const ParamVector& params, const MlpSpec& spec, const Batch& batch,
                       double l2) {
  if (batch.rows == 0) throw std::invalid_argument("cannot take gradients on an empty batch");
  if (l2 < 0.0) throw std::invalid_argument("l2 penalty must be non-negative");
  if (batch.targets.size() != batch.rows * static_cast<std::size_t>(spec.output_dim))
    throw std::invalid_argument("batch target size does not match the model spec");
  const ForwardResult fwd = forward(params, spec, batch);

  const int task = batch.task_id;
  const int in = spec.input_dim, hid = spec.hidden_dim, out = spec.output_dim;
  const Segment& enc_seg = params.layout.encoder();
  const Segment& head_seg = params.layout.head(task);
  const auto enc = params.segment_span(0);
  const auto head = params.segment_span(static_cast<std::size_t>(task) + 1);
  const double* w_head = head.data();

  LossGrad result;
  result.grads.assign(params.values.size(), 0.0);
  double* g_enc_w = result.grads.data() + enc_seg.offset;
  double* g_enc_b = g_enc_w + static_cast<std::size_t>(in) * hid;
  double* g_head_w = result.grads.data() + head_seg.offset;
  double* g_head_b = g_head_w + static_cast<std::size_t>(hid) * out;

  const double norm = 1.0 / (static_cast<double>(batch.rows) * out);
  double loss = 0.0;
  std::vector<double> d_hidden(static_cast<std::size_t>(hid));
  for (std::size_t r = 0; r < batch.rows; ++r) {
    const double* x = batch.inputs.data() + r * static_cast<std::size_t>(in);
    const double* h = fwd.hidden.data() + r * static_cast<std::size_t>(hid);
    const double* y = fwd.predictions.data() + r * static_cast<std::size_t>(out);
    const double* t = batch.targets.data() + r * static_cast<std::size_t>(out);
    std::fill(d_hidden.begin(), d_hidden.end(), 0.0);
    for (int o = 0; o < out; ++o) {
      const double err = y[o] - t[o];
      loss += err * err * norm;
      const double dy = 2.0 * err * norm;
      g_head_b[o] += dy;
      for (int j = 0; j < hid; ++j) {
        g_head_w[static_cast<std::size_t>(j) * out + o] += h[j] * dy;
        d_hidden[static_cast<std::size_t>(j)] += dy * w_head[static_cast<std::size_t>(j) * out + o];
      }
    }
    for (int j = 0; j < hid; ++j) {
      const double dz = d_hidden[static_cast<std::size_t>(j)] * (1.0 - h[j] * h[j]);
      g_enc_b[j] += dz;
      for (int i = 0; i < in; ++i) g_enc_w[static_cast<std::size_t>(i) * hid + j] += x[i] * dz;
    }
  }

  if (l2 > 0.0) {
    double penalty = 0.0;
    for (std::size_t i = 0; i < enc.size(); ++i) {
      penalty += enc[i] * enc[i];
      result.grads[enc_seg.offset + i] += 2.0 * l2 * enc[i];
    }
    for (std::size_t i = 0; i < head.size(); ++i) {
      penalty += head[i] * head[i];
      result.grads[head_seg.offset + i] += 2.0 * l2 * head[i];
    }
    loss += l2 * penalty;
  }
  result.loss = loss;
  return result;
}

TaskData generate_task(const SyntheticTaskSpec& spec, const MlpSpec& dims,
                       std::size_t test_size) {
  check_spec(dims);
  if (spec.train_size < 1) throw std::invalid_argument("train_size must be positive");
  if (spec.val_size < 32)
    throw std::invalid_argument("val_size must be at least 32 for stable validation scores");
  if (spec.noise_std < 0.0) throw std::invalid_argument("noise_std must be non-negative");

  const ParamVector teacher = make_teacher(spec, dims);
  Rng data_rng(mix_seed(static_cast<std::uint64_t>(spec.teacher_seed), seeds::kDataStream));
  TaskData data;
  data.train = draw_split(teacher, dims, spec.train_size, spec.noise_std, data_rng);
  data.val = draw_split(teacher, dims, spec.val_size, spec.noise_std, data_rng);
  data.test = draw_split(teacher, dims, test_size, spec.noise_std, data_rng);
  return data;
}

double score_from_loss(double val_mse) {
  if (!(val_mse >= 0.0) || !std::isfinite(val_mse))
    throw std::invalid_argument("validation MSE must be finite and non-negative");
  return 100.0 / (1.0 + val_mse);
}

double mean_squared_error(const ParamVector& params, const MlpSpec& spec, const Dataset& data,
                          int task_id) {
  if (data.rows == 0) throw std::invalid_argument("cannot evaluate an empty dataset");
  constexpr std::size_t kChunk = 512;
  double total = 0.0;
  for (std::size_t begin = 0; begin < data.rows; begin += kChunk) {
    const std::size_t count = std::min(kChunk, data.rows - begin);
    const Batch batch = data.slice(begin, count, task_id);
    const ForwardResult fwd = forward(params, spec, batch);
    for (std::size_t i = 0; i < batch.targets.size(); ++i) {
      const double err = fwd.predictions[i] - batch.targets[i];
      total += err * err;
    }
  }
  return total / (static_cast<double>(data.rows) * spec.output_dim);
}

ParamVector init_params(const MlpSpec& spec, int n_tasks, std::uint64_t seed) {
  ParamVector params{ParamLayout(spec, n_tasks)};
  Rng rng(mix_seed(seed, seeds::kParamsInit));
  const double enc_scale = 1.0 / std::sqrt(static_cast<double>(spec.input_dim));
  const double head_scale = 1.0 / std::sqrt(static_cast<double>(spec.hidden_dim));
  auto enc = params.segment_span(0);
  const std::size_t enc_weights = static_cast<std::size_t>(spec.input_dim) * spec.hidden_dim;
  for (std::size_t i = 0; i < enc_weights; ++i) enc[i] = enc_scale * rng.normal();
  for (int t = 0; t < n_tasks; ++t) {
    auto head = params.segment_span(static_cast<std::size_t>(t) + 1);
    const std::size_t head_weights = static_cast<std::size_t>(spec.hidden_dim) * spec.output_dim;
    for (std::size_t i = 0; i < head_weights; ++i) head[i] = head_scale * rng.normal();
  }
  return params;
}

void save_dataset(const std::filesystem::path& path, const Dataset& data, long seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  const std::int64_t header[4] = {static_cast<std::int64_t>(data.rows), data.input_dim,
                                  data.output_dim, seed};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  write_doubles(out, data.inputs);
  write_doubles(out, data.targets);
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Dataset load_dataset(const std::filesystem::path& path, long* seed_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::int64_t header[4] = {};
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) throw std::runtime_error("binary container truncated");
  if (header[0] < 0 || header[1] < 1 || header[2] < 0)
    throw std::runtime_error("binary container header is malformed");
  Dataset data;
  data.rows = static_cast<std::size_t>(header[0]);
  data.input_dim = static_cast<int>(header[1]);
  data.output_dim = static_cast<int>(header[2]);
  data.inputs.resize(data.rows * static_cast<std::size_t>(data.input_dim));
  data.targets.resize(data.rows * static_cast<std::size_t>(data.output_dim));
  read_doubles(in, data.inputs);
  read_doubles(in, data.targets);
  if (seed_out != nullptr) *seed_out = static_cast<long>(header[3]);
  return data;
}

void save_params(const std::filesystem::path& path, const ParamVector& params, long seed) {
  Dataset shim;
  shim.rows = params.values.size();
  shim.input_dim = 1;
  shim.output_dim = 0;
  shim.inputs = params.values;
  save_dataset(path, shim, seed);
}

ParamVector load_params(const std::filesystem::path& path, const ParamLayout& layout,
                        long* seed_out) {
  const Dataset shim = load_dataset(path, seed_out);
  if (shim.rows != layout.total_size() || shim.input_dim != 1)
    throw std::runtime_error("parameter container does not match the expected layout");
  ParamVector params{layout};
  params.values = shim.inputs;
  return params;
}

}  // namespace taskmix
