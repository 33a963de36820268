#pragma once

#include <cmath>
#include <cstdint>

namespace specattn {

// Counter-based pseudo-random generator built on the SplitMix64 finalizer:
// the i-th draw of a stream is mix64(key + (i+1) * golden), so every value is
// addressable by (key, counter) alone and the sequence is identical on any
// platform with 64-bit integers. Streams are split by deriving child keys
// from (parent key, label); derived streams do not overlap in practice
// because the finalizer is a bijection driven by distinct constants.
//
// Gaussian draws use Box-Muller on two 53-bit uniforms. The integer stream
// is exactly portable; the transform inherits the platform's libm rounding.
class CounterRng {
 public:
  CounterRng() = default;
  explicit CounterRng(uint64_t key) : key_(key) {}

  static CounterRng seeded(uint64_t seed) { return CounterRng(mix64(seed ^ kSeedTag)); }

  // Child stream for a label (tensor index, position, stream tag, ...).
  CounterRng derive(uint64_t label) const {
    return CounterRng(mix64(key_ ^ mix64(label + kChildTag)));
  }

  uint64_t key() const { return key_; }

  // Random access: value of the stream at counter i, independent of state.
  uint64_t at(uint64_t i) const { return mix64(key_ + (i + 1) * kGolden); }

  uint64_t next_u64() { return at(counter_++); }

  // Uniform on [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; consumes two uniforms per call.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

 private:
  static constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;
  static constexpr uint64_t kSeedTag = 0x537065634174746Eull;   // "SpecAttn"
  static constexpr uint64_t kChildTag = 0xA5A5A5A5DEADBEEFull;
  static constexpr double kPi = 3.14159265358979323846;

  static uint64_t mix64(uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  uint64_t key_ = 0;
  uint64_t counter_ = 0;
};

}  // namespace specattn
