#include <doctest.h>

#include <cmath>
#include <set>

#include "nlform/rng.hpp"
#include "nlform/stats.hpp"

using nlform::RngStream;
using nlform::RunningStat;

TEST_CASE("identical seeds replay identical sequences") {
  RngStream a = RngStream::root(42);
  RngStream b = RngStream::root(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("substreams are distinct and order-free") {
  RngStream root = RngStream::root(7);
  RngStream s3_first = root.substream(3);
  RngStream s5 = root.substream(5);
  RngStream s3_again = root.substream(3);
  CHECK(s3_first.next_u64() == s3_again.next_u64());
  CHECK(s3_first.next_u64() != s5.next_u64());

  std::set<std::uint64_t> firsts;
  for (std::uint64_t i = 0; i < 4096; ++i) firsts.insert(root.substream(i).next_u64());
  CHECK(firsts.size() == 4096);
}

TEST_CASE("uniform01 stays inside the open interval") {
  RngStream r = RngStream::root(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform01();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal moments match the standard law") {
  RngStream r = RngStream::root(11);
  RunningStat m, v;
  for (int i = 0; i < 200000; ++i) {
    const double z = r.normal();
    m.add(z);
    v.add(z * z);
  }
  CHECK(std::fabs(m.mean()) <= 3.0 * m.stderr_mean());
  CHECK(std::fabs(v.mean() - 1.0) <= 3.0 * v.stderr_mean());
}

TEST_CASE("exponential has the requested rate") {
  RngStream r = RngStream::root(13);
  RunningStat s;
  for (int i = 0; i < 100000; ++i) s.add(r.exponential(4.0));
  CHECK(std::fabs(s.mean() - 0.25) <= 3.0 * s.stderr_mean());
}

TEST_CASE("running stat merge is exact") {
  RngStream r = RngStream::root(17);
  RunningStat whole, left, right;
  for (int i = 0; i < 1000; ++i) {
    const double x = r.uniform(-2.0, 5.0);
    whole.add(x);
    (i < 400 ? left : right).add(x);
  }
  left.merge(right);
  CHECK(left.n() == whole.n());
  CHECK(left.mean() == doctest::Approx(whole.mean()).epsilon(1e-13));
  CHECK(left.variance() == doctest::Approx(whole.variance()).epsilon(1e-12));
}
