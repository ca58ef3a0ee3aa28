#include "glyco/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

using namespace glyco;

namespace {

// Independent restatement of the documented stream definitions; the library
// must agree with these bit for bit.
std::uint64_t ref_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t ref_splitmix_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  return ref_mix(state);
}

std::uint64_t ref_lcg_next(std::uint64_t& state) {
  state = state * 6364136223846793005ULL + 1442695040888963407ULL;
  return state;
}

} // namespace

TEST_CASE("SplitMix64 follows the documented recurrence") {
  rng::SplitMix64 rng(0xDEADBEEFULL);
  std::uint64_t state = 0xDEADBEEFULL;
  for (int i = 0; i < 100; ++i) CHECK(rng.next() == ref_splitmix_next(state));
}

TEST_CASE("Lcg64 follows the documented recurrence") {
  rng::Lcg64 rng(42);
  std::uint64_t state = 42;
  for (int i = 0; i < 100; ++i) CHECK(rng.next() == ref_lcg_next(state));
}

TEST_CASE("derive_seed is the documented mix of seed and salt") {
  CHECK(rng::derive_seed(7, 3) == ref_mix(7 + 0x9E3779B97F4A7C15ULL * 4));
  CHECK(rng::derive_seed(7, 3) != rng::derive_seed(7, 4));
  CHECK(rng::derive_seed(7, 3) != rng::derive_seed(8, 3));
}

TEST_CASE("u01 uses the top 53 bits") {
  rng::SplitMix64 a(99), b(99);
  const std::uint64_t raw = b.next();
  CHECK(a.u01() == static_cast<double>(raw >> 11) * 0x1.0p-53);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.u01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal consumes exactly two raw draws per call") {
  rng::SplitMix64 a(123), b(123);
  a.normal();
  b.next();
  b.next();
  CHECK(a.next() == b.next());
}

TEST_CASE("normal matches the documented Box-Muller mapping") {
  rng::SplitMix64 a(456);
  std::uint64_t state = 456;
  for (int i = 0; i < 10; ++i) {
    const double u1 = static_cast<double>(ref_splitmix_next(state) >> 11) * 0x1.0p-53;
    const double u2 = static_cast<double>(ref_splitmix_next(state) >> 11) * 0x1.0p-53;
    const double expect =
        std::sqrt(-2.0 * std::log(u1 <= 0.0 ? 0x1.0p-53 : u1)) *
        std::cos(2.0 * std::numbers::pi * u2);
    CHECK(a.normal() == expect);
  }
}

TEST_CASE("bounded stays in range and matches the multiply-shift rule") {
  rng::SplitMix64 a(31), b(31);
  for (int i = 0; i < 200; ++i) {
    const std::uint64_t raw = b.next();
    const std::uint64_t expect =
        static_cast<std::uint64_t>((static_cast<unsigned __int128>(raw) * 10) >> 64);
    const std::uint64_t got = a.bounded(10);
    CHECK(got == expect);
    CHECK(got < 10);
  }
}

TEST_CASE("shuffle is a pure function of the stream seed") {
  std::vector<int> v1 = {1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> v2 = v1;
  rng::Lcg64 s1(1001), s2(1001);
  rng::shuffle(v1, s1);
  rng::shuffle(v2, s2);
  CHECK(v1 == v2);

  // distinct seeds give a different order eventually
  std::vector<int> v3 = {1, 2, 3, 4, 5, 6, 7, 8};
  rng::Lcg64 s3(1002);
  rng::shuffle(v3, s3);
  CHECK(v1 != v3);
}

TEST_CASE("shuffle implements descending-index Fisher-Yates") {
  std::vector<int> got = {10, 20, 30, 40};
  rng::Lcg64 stream(5);
  rng::shuffle(got, stream);

  std::vector<int> expect = {10, 20, 30, 40};
  std::uint64_t state = 5;
  for (std::size_t i = expect.size(); i > 1; --i) {
    const std::uint64_t raw = ref_lcg_next(state);
    const auto j = static_cast<std::size_t>(
        (static_cast<unsigned __int128>(raw) * i) >> 64);
    std::swap(expect[i - 1], expect[j]);
  }
  CHECK(got == expect);
}
