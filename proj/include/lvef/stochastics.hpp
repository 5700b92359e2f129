#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace lvef {

// Counter-based random stream (Philox4x64-10). The key is (seed, stream_index)
// and the 128-bit counter advances by one per block of four 64-bit outputs, so
// every substream is addressed directly without discarding draws. Each
// substream has a period of 2^66 outputs.
//
// A stream is not thread-safe; create one per task.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_index) noexcept;

  std::uint64_t seed() const noexcept { return key_[0]; }
  std::uint64_t stream_index() const noexcept { return key_[1]; }

  std::uint64_t next_u64() noexcept;
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  // Uniform on the open interval (0, 1).
  double uniform_open() noexcept;

  // UniformRandomBitGenerator surface.
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  result_type operator()() noexcept { return next_u64(); }

  // One Philox4x64-10 block; exposed for known-answer tests.
  static std::array<std::uint64_t, 4> philox_block(std::array<std::uint64_t, 4> counter,
                                                   std::array<std::uint64_t, 2> key) noexcept;

 private:
  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 2> counter_{0, 0};
  std::array<std::uint64_t, 4> buffer_{};
  unsigned position_ = 4;
};

RngStream make_stream(std::uint64_t seed, std::uint64_t stream_index) noexcept;

// Normal(mean, sd^2). sd == 0 returns mean exactly.
double sample_normal(RngStream& stream, double mean, double sd);
// Gamma with the given shape and rate (mean shape / rate).
double sample_gamma(RngStream& stream, double shape, double rate);
// Exponential with the given rate.
double sample_exponential(RngStream& stream, double rate);

struct SampleSummary {
  double mean = 0.0;
  double sd = 0.0;
  std::map<double, double> quantiles;
  std::size_t n = 0;

  // Quantile at a level passed to summarize(); throws if it was not requested.
  double quantile(double level) const;
};

// Mean, sd (n - 1 denominator; 0 for a single value) and quantiles by linear
// interpolation between order statistics: position h = (n - 1) * p.
SampleSummary summarize(std::span<const double> values, std::span<const double> levels);

// Single linear-interpolation quantile of already sorted data.
double quantile_sorted(std::span<const double> sorted, double level);

}  // namespace lvef
