#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "lvef/errors.hpp"
#include "lvef/stochastics.hpp"

using namespace lvef;

namespace {

struct Moments {
  double mean;
  double sd;
};

template <class Draw>
Moments moments(int n, Draw draw) {
  std::vector<double> v(n);
  for (auto& x : v) x = draw();
  double m = 0.0;
  for (double x : v) m += x;
  m /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1))};
}

}  // namespace

TEST_CASE("philox4x64-10 known-answer vectors") {
  // Random123 kat_vectors.
  using B = std::array<std::uint64_t, 4>;
  CHECK(RngStream::philox_block({0, 0, 0, 0}, {0, 0}) ==
        B{0x16554d9eca36314cULL, 0xdb20fe9d672d0fdcULL, 0xd7e772cee186176bULL,
          0x7e68b68aec7ba23bULL});
  const std::uint64_t f = ~0ULL;
  CHECK(RngStream::philox_block({f, f, f, f}, {f, f}) ==
        B{0x87b092c3013fe90bULL, 0x438c3c67be8d0224ULL, 0x9cc7d7c69cd777b6ULL,
          0xa09caebf594f0ba0ULL});
  CHECK(RngStream::philox_block({0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL,
                                 0xa4093822299f31d0ULL, 0x082efa98ec4e6c89ULL},
                                {0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL}) ==
        B{0xa528f45403e61d95ULL, 0x38c72dbd566e9788ULL, 0xa5a1610e72fd18b5ULL,
          0x57bd43b5e52b7fe6ULL});
}

TEST_CASE("make_stream is deterministic and substreams are separated") {
  auto a = make_stream(42, 0);
  auto b = make_stream(42, 0);
  CHECK(a.next_u64() == b.next_u64());

  auto s0 = make_stream(42, 0);
  auto s1 = make_stream(42, 1);
  bool differs = false;
  for (int i = 0; i < 10000; ++i) differs = differs || (s0.uniform() != s1.uniform());
  CHECK(differs);

  auto r1 = make_stream(42, 7);
  std::vector<std::uint64_t> first(1000);
  for (auto& x : first) x = r1.next_u64();
  auto r2 = make_stream(42, 7);
  for (auto x : first) REQUIRE(r2.next_u64() == x);
}

TEST_CASE("uniform draws stay inside their intervals") {
  auto s = make_stream(1, 2);
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform();
    const double o = s.uniform_open();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(o > 0.0);
    REQUIRE(o < 1.0);
  }
}

TEST_CASE("sample_normal") {
  auto s = make_stream(3, 0);
  CHECK(sample_normal(s, 10.0, 0.0) == 10.0);
  CHECK_THROWS_AS(sample_normal(s, 0.0, -1.0), Error);

  const auto std_normal = moments(100000, [&] { return sample_normal(s, 0.0, 1.0); });
  CHECK(std_normal.mean >= -0.02);
  CHECK(std_normal.mean <= 0.02);
  CHECK(std_normal.sd >= 0.99);
  CHECK(std_normal.sd <= 1.01);

  const auto lvef = moments(100000, [&] { return sample_normal(s, 55.78, 11.37); });
  CHECK(std::abs(lvef.mean - 55.78) < 0.15);
}

TEST_CASE("sample_gamma") {
  auto s = make_stream(4, 0);
  CHECK_THROWS_AS(sample_gamma(s, 0.0, 1.0), Error);
  CHECK_THROWS_AS(sample_gamma(s, 1.0, -2.0), Error);

  // Exponential(1): sd of the mean over 1e5 draws is 1/sqrt(1e5) ~ 0.0032.
  const auto e = moments(100000, [&] { return sample_gamma(s, 1.0, 1.0); });
  CHECK(std::abs(e.mean - 1.0) < 4.0 * 1.0 / std::sqrt(1e5));

  const auto g = moments(100000, [&] { return sample_gamma(s, 8.0, 8.0 / 17.68); });
  CHECK(std::abs(g.mean - 17.68) < 0.25);
  // sd = sqrt(shape) / rate = 17.68 / sqrt(8) = 6.251
  CHECK(std::abs(g.sd - 17.68 / std::sqrt(8.0)) < 0.06);

  SUBCASE("support is positive for small and large shapes") {
    for (double shape : {0.001, 0.3, 0.999, 1.0, 2.5, 1e6}) {
      for (int i = 0; i < 2000; ++i) REQUIRE(sample_gamma(s, shape, 1.3) > 0.0);
    }
  }
  SUBCASE("boosted small-shape mean") {
    // Gamma(0.5, 2): mean 0.25, sd 0.3536; 4 SE over 1e5 draws = 0.0045
    const auto h = moments(100000, [&] { return sample_gamma(s, 0.5, 2.0); });
    CHECK(std::abs(h.mean - 0.25) < 0.0045);
  }
}

TEST_CASE("sample_exponential mean") {
  auto s = make_stream(5, 0);
  const auto e = moments(100000, [&] { return sample_exponential(s, 0.5); });
  CHECK(std::abs(e.mean - 2.0) < 4.0 * 2.0 / std::sqrt(1e5));
  CHECK_THROWS_AS(sample_exponential(s, 0.0), Error);
}

TEST_CASE("summarize") {
  const std::array<double, 2> levels{0.025, 0.975};

  const std::array<double, 1> single{5.0};
  const auto one = summarize(single, levels);
  CHECK(one.mean == 5.0);
  CHECK(one.sd == 0.0);
  CHECK(one.n == 1);
  CHECK(one.quantile(0.025) == 5.0);

  const std::array<double, 5> odd{1, 2, 3, 4, 5};
  const std::array<double, 1> median{0.5};
  CHECK(summarize(odd, median).quantile(0.5) == 3.0);

  const std::array<double, 4> four{1, 2, 3, 4};
  const auto q = summarize(four, levels);
  CHECK(q.quantile(0.025) == doctest::Approx(1.075).epsilon(1e-12));
  CHECK(q.quantile(0.975) == doctest::Approx(3.925).epsilon(1e-12));
  CHECK(q.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));

  CHECK_THROWS_AS(summarize(std::span<const double>{}, levels), Error);
  const std::array<double, 1> bad{1.5};
  CHECK_THROWS_AS(summarize(four, bad), Error);
  CHECK_THROWS_AS(q.quantile(0.5), Error);
}

TEST_CASE("summarize is permutation invariant with monotone quantiles") {
  auto s = make_stream(6, 0);
  const std::array<double, 5> levels{0.0, 0.1, 0.5, 0.9, 1.0};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + s.next_u64() % 200);
    for (auto& x : v) x = sample_normal(s, 0.0, 10.0);
    const auto a = summarize(v, levels);
    std::reverse(v.begin(), v.end());
    std::rotate(v.begin(), v.begin() + static_cast<long>(v.size() / 3), v.end());
    const auto b = summarize(v, levels);
    REQUIRE(a.mean == b.mean);
    REQUIRE(a.sd == b.sd);
    REQUIRE(a.quantiles == b.quantiles);
    REQUIRE(a.sd >= 0.0);
    double prev = -INFINITY;
    for (const auto& [level, value] : a.quantiles) {
      REQUIRE(value >= prev);
      prev = value;
    }
  }
}
