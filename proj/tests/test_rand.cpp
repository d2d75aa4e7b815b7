#include <cmath>
#include <set>

#include "doctest.h"
#include "sgdm/error.hpp"
#include "sgdm/rand.hpp"
#include "sgdm/stats.hpp"

using namespace sgdm;

TEST_CASE("philox known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("same seed and stream reproduce the sequence") {
  RngStream a(42, 7);
  RngStream b(42, 7);
  for (int i = 0; i < 5; ++i) CHECK(a.normal() == b.normal());
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  const auto ia = batch_indices(a, 1000, 50);
  const auto ib = batch_indices(b, 1000, 50);
  CHECK(ia == ib);
}

TEST_CASE("distinct streams and seeds differ") {
  RngStream a(1, 0);
  RngStream b(1, 1);
  RngStream c(2, 0);
  int same_ab = 0;
  int same_ac = 0;
  for (int i = 0; i < 64; ++i) {
    const auto x = a.next_u32();
    same_ab += x == b.next_u32();
    same_ac += x == c.next_u32();
  }
  CHECK(same_ab < 2);
  CHECK(same_ac < 2);
  CHECK(a.child(3).next_u64() == RngStream(1, 0).child(3).next_u64());
  CHECK(a.child(3).stream_id() != a.child(4).stream_id());
}

TEST_CASE("uniform ranges") {
  RngStream r(9, 0);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    CHECK_UNARY(u >= 0.0);
    CHECK_UNARY(u < 1.0);
    const double v = r.uniform_open_low();
    CHECK_UNARY(v > 0.0);
    CHECK_UNARY(v <= 1.0);
  }
  for (int i = 0; i < 1000; ++i) CHECK(r.below(1) == 0);
}

TEST_CASE("normal sample moments over 1e6 draws") {
  RngStream r(2024, streams::kProblem);
  const auto v = normal_vector(r, 1000000);
  stats::RunningMoments m;
  for (double x : v) m.add(x);
  CHECK(std::abs(m.mean()) < 0.005);
  CHECK(m.variance() > 0.995);
  CHECK(m.variance() < 1.005);
}

TEST_CASE("normal draws pass a KS test") {
  RngStream r(77, 0);
  const auto v = normal_vector(r, 5000);
  CHECK(stats::ks_normality(v).pass);
}

TEST_CASE("batch indices are uniform: chi-square over 1e6 draws and 100 bins") {
  RngStream r(5, streams::kSampling);
  std::vector<std::uint64_t> counts(100, 0);
  const auto idx = batch_indices(r, 100, 1000000);
  for (auto i : idx) {
    REQUIRE(i < 100u);
    ++counts[i];
  }
  const double stat = stats::chi_square_uniform_statistic(counts);
  CHECK(stat < stats::chi_square_quantile(99, 0.01));
}

TEST_CASE("batch indices with a non power-of-two range stay in range and hit every value") {
  RngStream r(11, 3);
  std::set<std::uint32_t> seen;
  for (auto i : batch_indices(r, 37, 5000)) {
    CHECK(i < 37u);
    seen.insert(i);
  }
  CHECK(seen.size() == 37);
  CHECK(batch_indices(r, 5, 1).size() == 1);
}

TEST_CASE("bernoulli frequency") {
  RngStream r(3, 3);
  int hits = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) hits += r.bernoulli(0.3);
  CHECK(std::abs(hits / double(n) - 0.3) < 4.0 * std::sqrt(0.21 / n));
}

TEST_CASE("invalid sizes") {
  RngStream r(1, 1);
  CHECK_THROWS_AS(normal_vector(r, 0), InvalidInput);
  CHECK_THROWS_AS(batch_indices(r, 0, 3), InvalidInput);
}
