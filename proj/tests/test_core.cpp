#include <doctest.h>

#include <cstdlib>
#include <random>

#include "taskmix/core.hpp"
#include "taskmix/io.hpp"
#include "taskmix/rng.hpp"

using namespace taskmix;

TEST_CASE("relative scores derive mean and max from the values") {
  const RelativeScores scores = make_relative_scores({0.5, 1.5, 1.0});
  CHECK(scores.values.size() == 3);
  CHECK(scores.mean == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(scores.max == 1.5);
  CHECK_THROWS_AS(make_relative_scores({}), std::invalid_argument);
}

TEST_CASE("relative scores divide latest by baseline") {
  std::vector<TaskState> tasks(2);
  tasks[0].name = "a";
  tasks[0].baseline_score = 50.0;
  tasks[0].latest_score = 40.0;
  tasks[1].name = "b";
  tasks[1].baseline_score = 25.0;
  tasks[1].latest_score = 30.0;
  const RelativeScores scores = compute_relative_scores(tasks);
  CHECK(scores.values[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(scores.values[1] == doctest::Approx(1.2).epsilon(1e-15));
}

TEST_CASE("a missing validation score raises ScoresUnavailable") {
  std::vector<TaskState> tasks(2);
  tasks[0].latest_score = 10.0;
  CHECK_THROWS_AS(compute_relative_scores(tasks), ScoresUnavailable);
}

TEST_CASE("non-positive baselines are rejected") {
  std::vector<TaskState> tasks(1);
  tasks[0].baseline_score = 0.0;
  tasks[0].latest_score = 1.0;
  CHECK_THROWS_AS(compute_relative_scores(tasks), std::invalid_argument);
}

TEST_CASE("uniform decisions") {
  const ScheduleDecision p = uniform_probabilities(4, 7);
  CHECK(p.kind == DecisionKind::SamplingProbabilities);
  CHECK(p.step == 7);
  for (double v : p.values) CHECK(v == 0.25);

  const ScheduleDecision m = uniform_multipliers(3, 2);
  CHECK(m.kind == DecisionKind::WeightMultipliers);
  for (double v : m.values) CHECK(v == 1.0);

  CHECK_THROWS_AS(uniform_probabilities(0, 0), std::invalid_argument);
  CHECK_THROWS_AS(uniform_multipliers(0, 0), std::invalid_argument);
}

TEST_CASE("fmt_double emits the shortest round-trip form") {
  CHECK(fmt_double(1.0) == "1");
  CHECK(fmt_double(0.1) == "0.1");
  CHECK(fmt_double(-2.5) == "-2.5");
  CHECK(fmt_double(0.0) == "0");
  CHECK_THROWS_AS(fmt_double(std::numeric_limits<double>::infinity()), std::invalid_argument);
  CHECK_THROWS_AS(fmt_double(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
}

TEST_CASE("fmt_double round-trips random doubles exactly") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double magnitude = std::ldexp(uniform_unit(rng) + 0.5, static_cast<int>(rng() % 120) - 60);
    const double value = (rng() & 1) ? magnitude : -magnitude;
    const std::string text = fmt_double(value);
    CHECK(std::strtod(text.c_str(), nullptr) == value);
  }
}

TEST_CASE("metric records serialize with a fixed key order") {
  MetricRecord record;
  record.step = 200;
  record.task_id = 1;
  record.raw_score = 42.5;
  record.relative_score = 0.85;
  record.weight = 0.75;
  record.effective_lr = 0.001;
  record.train_loss = 0.25;
  CHECK(metric_to_jsonl(record) ==
        "{\"step\":200,\"task\":1,\"score\":42.5,\"relative_score\":0.85,"
        "\"weight\":0.75,\"lr\":0.001,\"train_loss\":0.25}");
}

TEST_CASE("text files round-trip through the io helpers") {
  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / "taskmix_io_roundtrip.txt";
  write_text_file(path, "line one\nline two\n");
  CHECK(read_text_file(path) == "line one\nline two\n");
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_text_file(path), std::runtime_error);
}

TEST_CASE("seed mixing separates streams and uniform draws stay in range") {
  CHECK(mix_seed(1, seeds::kParamsInit) != mix_seed(1, seeds::kTaskSampling));
  CHECK(mix_seed(1, seeds::kParamsInit) != mix_seed(2, seeds::kParamsInit));
  std::mt19937_64 rng(99);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform_unit(rng);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("the normal generator has unit moments") {
  Rng rng(5);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum_sq += x * x;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02).scale(1.0));
  CHECK(sum_sq / n == doctest::Approx(1.0).epsilon(0.02));
}
