#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace taskmix {

// Derives decorrelated seeds for independent random streams (splitmix64 step).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 0x632be59bd9b4e019ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream tags so every consumer of a run seed draws from its own sequence.
namespace seeds {
inline constexpr std::uint64_t kTeacherBase = 1;
inline constexpr std::uint64_t kTeacherTask = 2;
inline constexpr std::uint64_t kDataStream = 3;
inline constexpr std::uint64_t kParamsInit = 4;
inline constexpr std::uint64_t kTaskSampling = 5;
}  // namespace seeds

// 53-bit uniform in [0, 1). mt19937_64 output is fully specified by the
// standard, so the draw sequence is identical on every platform.
inline double uniform_unit(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

// Uniform/normal generator with a hand-rolled Box-Muller transform;
// std::normal_distribution's sequence is implementation-defined and would tie
// artifacts to one standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return uniform_unit(engine_); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]: keeps the log finite
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace taskmix
