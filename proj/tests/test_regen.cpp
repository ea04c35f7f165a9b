#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "rcwalk/parallel.hpp"
#include "rcwalk/regen.hpp"

using namespace rcwalk;

namespace {

WalkPath path_of(std::vector<std::uint8_t> steps) {
  WalkPath p;
  p.start = LatticePoint(2);
  p.steps = std::move(steps);
  return p;
}

}  // namespace

TEST_SUITE("regen") {
  TEST_CASE("first hitting times") {
    auto p = path_of({0, 0});
    auto r0 = first_hitting_time(p, 0.0);
    REQUIRE(r0.time);
    CHECK(*r0.time == 0);
    auto r2 = first_hitting_time(p, 2.0);
    REQUIRE(r2.time);
    CHECK(*r2.time == 2);
    CHECK(first_hitting_time(p, 5.0).censored());
    CHECK(*first_hitting_time(p, 1.7).time == 1);

    BiasedKernel k(ConductanceField(UniformElliptic{0.3}, 2, 1), 0.4);
    CounterRng rng(3);
    for (int t = 0; t < 20; ++t) {
      auto path = run_path(k, LatticePoint(2), 400, rng, false);
      auto e1 = path.e1_trace();
      for (std::int64_t h = -5; h <= 30; h += 5) {
        std::optional<std::int64_t> scan;
        for (std::size_t n = 0; n < e1.size() && !scan; ++n)
          if (e1[n] == h) scan = static_cast<std::int64_t>(n);
        CHECK(first_hitting_time(path, static_cast<double>(h)).time == scan);
      }
    }
  }

  TEST_CASE("fresh epochs") {
    auto up = path_of({0, 0, 0, 0});
    CHECK(detect_fresh_epochs(up.e1_trace()) == std::vector<std::int64_t>{1, 2, 3, 4});
    // e1-coordinates 0, 1, 1, 0
    auto p = path_of({0, 1, 2});
    CHECK(detect_fresh_epochs(p.e1_trace()) == std::vector<std::int64_t>{1});
    std::vector<std::int64_t> single = {0};
    CHECK(detect_fresh_epochs(single).empty());
  }

  TEST_CASE("regenerations against brute force") {
    auto up = path_of(std::vector<std::uint8_t>(10, 0));
    auto log = detect_regenerations(up, 0);
    CHECK(log.regenerations.size() == 10);
    auto logm = detect_regenerations(up, 3);
    CHECK(logm.regenerations.size() == 7);
    CHECK(logm.censored_tail);

    // fresh at 1, revisited at 3
    auto back = path_of({0, 1, 2, 0, 0, 0});
    auto lb = detect_regenerations(back, 0);
    CHECK(lb.fresh_epochs == std::vector<std::int64_t>{1, 5, 6});
    CHECK(lb.regenerations == std::vector<std::int64_t>{5, 6});

    BiasedKernel k(ConductanceField(UniformElliptic{0.3}, 2, 8), 0.5);
    CounterRng rng(5);
    for (int t = 0; t < 50; ++t) {
      auto path = run_path(k, LatticePoint(2), 300, rng, false);
      auto e1 = path.e1_trace();
      CHECK(detect_fresh_epochs(e1) == testutil::brute_fresh(e1));
      CHECK(detect_regenerations(path, 0).regenerations == testutil::brute_regenerations(e1));
      auto confirmed = detect_regenerations(path, 10);
      for (auto r : confirmed.regenerations) {
        auto mx = *std::max_element(e1.begin() + r, e1.end());
        CHECK(mx >= e1[r] + 10);
        for (std::size_t j = r + 1; j < e1.size(); ++j) CHECK(e1[j] > e1[r]);
      }
    }
  }

  TEST_CASE("hyperplane regeneration speed, homogeneous d=2, lambda=1") {
    BiasedKernel k(ConductanceField(Homogeneous{}, 2, 1), 1.0);
    auto rng = make_stream(3, StreamTag::Walk, 0);
    auto path = run_path(k, LatticePoint(2), 2000000, rng, false);
    auto log = detect_regenerations(path);
    auto est = regeneration_speed(path, log);
    CHECK(std::fabs(est.estimate[0] - homogeneous_speed(1.0, 2)) < 3 * est.std_error[0]);
    auto inc = hyperplane_increments(path, log);
    CHECK(*std::min_element(inc.displacement[0].begin(), inc.displacement[0].end()) >= 1.0);
    // stationarity: first half against second half
    const std::size_t h = inc.size() / 2;
    std::vector<double> a(inc.duration.begin(), inc.duration.begin() + h), b(inc.duration.begin() + h, inc.duration.end());
    CHECK(welch_test(a, b).pvalue > 1e-3);

    RegenerationLog empty;
    CHECK_THROWS_AS(regeneration_speed(path, empty), InsufficientData);
  }

  TEST_CASE("plain and hyperplane estimators agree") {
    const std::size_t R = 40;
    const std::int64_t n = 100000;
    std::vector<double> plain(R);
    std::vector<RegenerationIncrements> inc(R);
    parallel_for(R, [&](std::size_t r) {
      BiasedKernel k(ConductanceField(UniformElliptic{0.2}, 2, derive_seed(2, StreamTag::Field, r)), 1.0);
      auto rng = make_stream(2, StreamTag::Walk, r);
      auto path = run_path(k, LatticePoint(2), n, rng, false);
      plain[r] = static_cast<double>(path.end()[0]) / n;
      inc[r] = hyperplane_increments(path, detect_regenerations(path));
    });
    auto p = mean_stderr(plain);
    auto h = pooled_increment_ratio(inc);
    CHECK(std::fabs(p.mean - h.estimate[0]) < 3 * std::hypot(p.se, h.std_error[0]));
  }

  TEST_CASE("inter-regeneration moments") {
    std::vector<double> scaled_means;
    for (double lambda : {0.25, 0.5, 1.0}) {
      std::vector<RegenerationLog> logs;
      for (std::uint64_t r = 0; r < 20; ++r) {
        BiasedKernel k(ConductanceField(Homogeneous{}, 2, 1), lambda);
        auto rng = make_stream(r, StreamTag::Walk, 0);
        logs.push_back(detect_regenerations(run_path(k, LatticePoint(2), 40000, rng, false)));
      }
      auto rep = inter_regeneration_moments(logs, lambda, 0.05);
      REQUIRE(rep.increments > 10);
      scaled_means.push_back(rep.scaled_mean.mean);
      CHECK(std::isfinite(rep.exp_moment.mean));
    }
    CHECK(*std::min_element(scaled_means.begin(), scaled_means.end()) > 0.05);

    // horizon doubling leaves the exponential moment stable
    std::vector<double> em;
    for (std::int64_t n : {100000, 200000}) {
      std::vector<RegenerationLog> logs;
      for (std::uint64_t r = 0; r < 10; ++r) {
        BiasedKernel k(ConductanceField(Homogeneous{}, 2, 1), 1.0);
        auto rng = make_stream(r, StreamTag::Walk, 1);
        logs.push_back(detect_regenerations(run_path(k, LatticePoint(2), n, rng, false)));
      }
      em.push_back(inter_regeneration_moments(logs, 1.0, 0.05).exp_moment.mean);
    }
    CHECK(std::fabs(em[1] - em[0]) / em[0] < 0.05);

    BiasedKernel k(ConductanceField(Homogeneous{}, 2, 1), 1.0);
    CounterRng rng(4);
    auto single = inter_regeneration_moments({detect_regenerations(run_path(k, LatticePoint(2), 50, rng, false))}, 1.0,
                                             0.1);
    CHECK(single.scaled_mean.se >= 0.0);
  }

  TEST_CASE("ladder decomposition on an all-open field") {
    auto f = testutil::pinned_field(0.1, 120, [](const Edge&) { return false; });
    BiasedKernel k(f, 1.0);
    CounterRng rng(7);
    auto path = run_path(k, LatticePoint(2), 90, rng, false);
    auto log = ladder_decomposition(path, f, LadderOptions{20});
    auto fresh = detect_fresh_epochs(path.e1_trace());
    REQUIRE(log.ladder_times.size() == fresh.size() + 1);
    for (std::size_t i = 1; i < log.ladder_times.size(); ++i) CHECK(log.ladder_times[i] == fresh[i - 1]);
    for (auto d : log.depths) CHECK(d == 0);
  }

  TEST_CASE("hand-built dead end of depth 2") {
    const LatticePoint p1{1, 0}, p2{2, 0}, o{0, 0};
    auto f = testutil::pinned_field(0.1, 150, [&](const Edge& e) {
      if (testutil::same_edge(e, o, p1) || testutil::same_edge(e, p1, p2)) return false;
      if (testutil::touches(e, p1) || testutil::touches(e, p2)) return true;
      return testutil::same_edge(e, o, LatticePoint{0, 1}) || testutil::same_edge(e, o, LatticePoint{0, -1});
    });
    auto de = dead_end_at(f, o, Box::around(o, 30));
    REQUIRE(de.is_dead_end_start);
    CHECK(de.depth == 2);
    CHECK(de.dead_end_sites.size() == 3);

    BiasedKernel k(f, 2.0);
    int checked = 0;
    for (std::uint64_t s = 0; s < 30; ++s) {
      CounterRng rng(s);
      auto path = run_path(k, o, 400, rng, false);
      auto log = ladder_decomposition(path, f, LadderOptions{30});
      REQUIRE(!log.depths.empty());
      CHECK(log.depths[0] == 2);
      // closed edges have conductance kappa > 0, so the walk may also leave A to the right
      auto pos = path.positions();
      std::int64_t exit = -1;
      for (std::size_t n = 1; n < pos.size(); ++n)
        if (pos[n] != p1 && pos[n] != p2) {
          exit = static_cast<std::int64_t>(n);
          break;
        }
      CHECK(log.occupation_times[0] == exit);
      if (exit > 0) ++checked;
      for (std::size_t i = 0; i + 1 < log.ladder_times.size(); ++i) {
        CHECK(log.ladder_times[i + 1] - log.ladder_times[i] >= log.occupation_times[i]);
        CHECK(pos[log.ladder_times[i + 1]][0] > pos[log.ladder_times[i]][0] + log.depths[i]);
      }
    }
    CHECK(checked > 20);
  }

  TEST_CASE("ladder speed bound on a two-point field") {
    const TwoPoint law{0.9, 0.05};
    const double lambda = 1.5;
    const std::size_t R = 20;
    std::vector<double> v(R), depth_sum(R), ta_sum(R), count(R);
    parallel_for(R, [&](std::size_t r) {
      ConductanceField f(law, 2, derive_seed(6, StreamTag::Field, r));
      BiasedKernel k(f, lambda);
      auto rng = make_stream(6, StreamTag::Walk, r);
      auto path = run_path(k, LatticePoint(2), 20000, rng, false);
      v[r] = static_cast<double>(path.end()[0]) / 20000.0;
      auto log = ladder_decomposition(path, f, LadderOptions{32});
      for (std::size_t i = 0; i < log.depths.size(); ++i) {
        if (log.occupation_times[i] < 0) continue;
        depth_sum[r] += static_cast<double>(log.depths[i]);
        ta_sum[r] += static_cast<double>(log.occupation_times[i]);
        count[r] += 1;
      }
    });
    // ladder increments per unit T_A: each ladder step advances at least d(A)+1
    double D = 0, T = 0;
    for (std::size_t r = 0; r < R; ++r) {
      D += depth_sum[r] + count[r];
      T += ta_sum[r];
    }
    auto vm = mean_stderr(v);
    CHECK(T > 0);
    if (T > 0) CHECK(vm.mean <= (D / T) * 1.05 + 3 * vm.se);
  }

  TEST_CASE("CSV exports") {
    auto p = path_of({0, 0, 0});
    auto log = detect_regenerations(p, 0);
    std::ostringstream os;
    auto e1 = p.e1_trace();
    write_regeneration_csv(os, 3, log, e1, true);
    CHECK(os.str() == "replica,r_n,x_r_n_e1\n3,1,1\n3,2,2\n3,3,3\n");
  }
}
