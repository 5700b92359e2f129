#include "lvef/stochastics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "lvef/errors.hpp"

namespace lvef {

namespace {

constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kPhiloxW0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kPhiloxW1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  const unsigned __int128 product = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(product >> 64);
  lo = static_cast<std::uint64_t>(product);
}

}  // namespace

std::array<std::uint64_t, 4> RngStream::philox_block(std::array<std::uint64_t, 4> ctr,
                                                     std::array<std::uint64_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_index) noexcept
    : key_{seed, stream_index} {}

std::uint64_t RngStream::next_u64() noexcept {
  if (position_ == 4) {
    buffer_ = philox_block({counter_[0], counter_[1], 0, 0}, key_);
    if (++counter_[0] == 0) ++counter_[1];
    position_ = 0;
  }
  return buffer_[position_++];
}

double RngStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

RngStream make_stream(std::uint64_t seed, std::uint64_t stream_index) noexcept {
  return RngStream(seed, stream_index);
}

double sample_normal(RngStream& stream, double mean, double sd) {
  if (!(sd >= 0.0) || !std::isfinite(sd)) {
    throw Error(ErrorCode::invalid_parameter, "normal sd must be finite and >= 0");
  }
  if (sd == 0.0) return mean;
  // Box-Muller, one variate per call so the stream position depends only on
  // the number of calls.
  const double u1 = stream.uniform_open();
  const double u2 = stream.uniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return mean + sd * z;
}

double sample_gamma(RngStream& stream, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
    throw Error(ErrorCode::invalid_parameter, "gamma shape and rate must be finite and > 0");
  }
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a + 1) * U^(1/a)
    const double boosted = sample_gamma(stream, shape + 1.0, 1.0);
    const double u = stream.uniform_open();
    double draw = boosted * std::exp(std::log(u) / shape) / rate;
    // Very small shapes can underflow; keep the support strictly positive.
    return std::max(draw, std::numeric_limits<double>::denorm_min());
  }
  // Marsaglia & Tsang (2000).
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = sample_normal(stream, 0.0, 1.0);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = stream.uniform_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double sample_exponential(RngStream& stream, double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw Error(ErrorCode::invalid_parameter, "exponential rate must be finite and > 0");
  }
  return -std::log(stream.uniform_open()) / rate;
}

double SampleSummary::quantile(double level) const {
  const auto it = quantiles.find(level);
  if (it == quantiles.end()) {
    throw Error(ErrorCode::invalid_parameter,
                "quantile level " + std::to_string(level) + " was not summarized");
  }
  return it->second;
}

double quantile_sorted(std::span<const double> sorted, double level) {
  if (sorted.empty()) throw Error(ErrorCode::empty_input, "quantile of empty sequence");
  if (!(level >= 0.0 && level <= 1.0)) {
    throw Error(ErrorCode::invalid_parameter, "quantile level outside [0, 1]");
  }
  const double h = static_cast<double>(sorted.size() - 1) * level;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

SampleSummary summarize(std::span<const double> values, std::span<const double> levels) {
  if (values.empty()) throw Error(ErrorCode::empty_input, "cannot summarize an empty sequence");
  for (double p : levels) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::invalid_parameter, "probability level outside [0, 1]");
    }
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  SampleSummary out;
  out.n = sorted.size();
  // Summing the sorted copy makes the result independent of input order.
  out.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(out.n);
  if (out.n > 1) {
    double ss = 0.0;
    for (double v : sorted) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(out.n - 1));
  }
  for (double p : levels) out.quantiles[p] = quantile_sorted(sorted, p);
  return out;
}

}  // namespace lvef
