#include <doctest.h>

#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "chaosbench/parallel.hpp"
#include "chaosbench/rng.hpp"
#include "chaosbench/stats.hpp"

using namespace chaosbench;

TEST_SUITE("rng") {
  TEST_CASE("equal keys give equal streams, distinct fields give distinct streams") {
    const StreamKey base{42, StreamRole::particle_noise, 3, 7};
    Stream a(base), b(base);
    for (int i = 0; i < 100; ++i) CHECK(a.engine()() == b.engine()());

    std::set<std::uint64_t> seeds;
    seeds.insert(derive_stream_seed(base));
    seeds.insert(derive_stream_seed({43, StreamRole::particle_noise, 3, 7}));
    seeds.insert(derive_stream_seed({42, StreamRole::limit_noise, 3, 7}));
    seeds.insert(derive_stream_seed({42, StreamRole::particle_noise, 4, 7}));
    seeds.insert(derive_stream_seed({42, StreamRole::particle_noise, 3, 8}));
    seeds.insert(derive_stream_seed({42, StreamRole::particle_noise, 7, 3}));
    CHECK(seeds.size() == 6);
  }

  TEST_CASE("uniform lies in the open unit interval with mean 1/2") {
    Stream s(StreamKey{1, StreamRole::generic, 0, 0});
    std::vector<double> u(200000);
    for (auto& x : u) {
      x = s.uniform();
      REQUIRE(x > 0.0);
      REQUIRE(x < 1.0);
    }
    const auto mv = stats::mean_var(u);
    CHECK(std::abs(mv.mean - 0.5) < 4.0 * mv.mean_stderr);
    CHECK(std::abs(mv.variance - 1.0 / 12.0) < 4.0 * mv.variance_stderr);
  }

  TEST_CASE("normal, exponential and Poisson moments") {
    Stream s(StreamKey{2, StreamRole::generic, 0, 0});
    std::vector<double> g(200000), e(200000), p(200000);
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] = s.normal();
      e[i] = s.exponential();
      p[i] = static_cast<double>(s.poisson(3.5));
    }
    const auto mg = stats::mean_var(g), me = stats::mean_var(e), mp = stats::mean_var(p);
    CHECK(std::abs(mg.mean) < 4.0 * mg.mean_stderr);
    CHECK(std::abs(mg.variance - 1.0) < 4.0 * mg.variance_stderr);
    CHECK(std::abs(me.mean - 1.0) < 4.0 * me.mean_stderr);
    CHECK(std::abs(mp.mean - 3.5) < 4.0 * mp.mean_stderr);
    CHECK(std::abs(mp.variance - 3.5) < 4.0 * mp.variance_stderr);
  }

  TEST_CASE("Poisson with a large mean") {
    Stream s(StreamKey{3, StreamRole::generic, 0, 0});
    std::vector<double> p(50000);
    for (auto& x : p) x = static_cast<double>(s.poisson(5000.0));
    const auto mp = stats::mean_var(p);
    CHECK(std::abs(mp.mean - 5000.0) < 4.0 * mp.mean_stderr);
    CHECK(std::abs(mp.variance - 5000.0) < 4.0 * mp.variance_stderr);
    CHECK(s.poisson(0.0) == 0);
  }

  TEST_CASE("parallel_for visits every index once for any worker count") {
    for (int workers : {1, 2, 3, 8, 64}) {
      std::vector<std::atomic<int>> hits(1000);
      parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i]++; });
      for (const auto& h : hits) REQUIRE(h.load() == 1);
    }
    parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
  }

  TEST_CASE("parallel_for rethrows a worker exception") {
    CHECK_THROWS_AS(parallel_for(100, 4,
                                 [](std::size_t i) {
                                   if (i == 57) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
  }

  TEST_CASE("per-index streams make parallel sums worker-count invariant") {
    auto run = [](int workers) {
      std::vector<double> out(257);
      parallel_for(out.size(), workers, [&](std::size_t i) {
        Stream s(StreamKey{9, StreamRole::generic, 0, i});
        for (int k = 0; k < 10; ++k) out[i] += s.normal();
      });
      return out;
    };
    CHECK(run(1) == run(5));
  }
}
