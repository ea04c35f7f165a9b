#include <cmath>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "rcwalk/traps.hpp"

using namespace rcwalk;

namespace {

// Staircase search by memoised DFS over sites; failed (site, k) pairs are remembered.
bool staircase_dfs(const ConductanceField& f, const LatticePoint& z, int k, int H,
                   std::set<std::pair<LatticePoint, int>>& dead) {
  if (k == H) return true;
  if (dead.count({z, k})) return false;
  LatticePoint mid = z.neighbor(0);
  if (f.is_open_toward(z, 0)) {
    for (int dir : {1, 3}) {
      if (f.is_open_toward(mid, dir) && staircase_dfs(f, mid.neighbor(dir), k + 1, H, dead)) return true;
    }
  }
  dead.insert({z, k});
  return false;
}

// corridor (-3,0)-(-2,0)-(-1,0); everything else at (-2,0), (-1,0) closed
ConductanceField corridor_field() {
  const LatticePoint a{-2, 0}, b{-1, 0};
  return testutil::pinned_field(0.1, 70, [&](const Edge& e) {
    if (testutil::same_edge(e, LatticePoint{-3, 0}, a) || testutil::same_edge(e, a, b)) return false;
    return testutil::touches(e, a) || testutil::touches(e, b);
  });
}

}  // namespace

TEST_SUITE("traps") {
  TEST_CASE("all-open field has only good points") {
    auto f = testutil::pinned_field(0.1, 60, [](const Edge&) { return false; });
    for (std::int64_t i = -5; i <= 5; ++i) {
      auto g = is_good_point(f, LatticePoint{i, i}, 20);
      CHECK(g.good);
      CHECK(g.reached == 20);
      auto t = trap_of(f, LatticePoint{i, i}, Box::around(LatticePoint{0, 0}, 30), TrapOptions{20});
      CHECK(t.in_infinite_cluster);
      CHECK(t.is_good);
      CHECK(t.length == 0);
      CHECK(t.width == 0);
    }
  }

  TEST_CASE("closed column blocks the staircase") {
    // every edge (4,y)-(5,y) closed
    auto f = testutil::pinned_field(0.1, 60, [](const Edge& e) { return e.axis == 0 && e.base[0] == 4; });
    auto g = is_good_point(f, LatticePoint{0, 0}, 20);
    CHECK_FALSE(g.good);
    CHECK(g.reached == 4);
    CHECK(is_good_point(f, LatticePoint{0, 0}, 4).good);
    CHECK(is_good_point(f, LatticePoint{5, 0}, 20).good);
    auto t = trap_of(f, LatticePoint{0, 0}, Box::around(LatticePoint{0, 0}, 20), TrapOptions{20});
    CHECK_FALSE(t.is_good);
    CHECK(t.inconclusive);
  }

  TEST_CASE("staircase recursion against a site DFS") {
    for (double p : {0.55, 0.7, 0.9}) {
      ConductanceField f(TwoPoint{p, 0.2}, 2, 19);
      int goods = 0;
      for (std::int64_t i = 0; i < 150; ++i) {
        LatticePoint x{i * 3, -i};
        std::set<std::pair<LatticePoint, int>> dead;
        bool oracle = staircase_dfs(f, x, 0, 30, dead);
        CHECK(is_good_point(f, x, 30).good == oracle);
        goods += oracle;
      }
      if (p == 0.9) CHECK(goods > 0);
    }
    CHECK_THROWS_AS(is_good_point(ConductanceField(TwoPoint{0.5, 0.1}, 3, 1), LatticePoint{0, 0, 0}, 4),
                    InvalidArgument);
  }

  TEST_CASE("hand-built trap of length 2") {
    auto f = corridor_field();
    const Box box = Box::around(LatticePoint{0, 0}, 40);
    auto t = trap_of(f, LatticePoint{-1, 0}, box, TrapOptions{20});
    REQUIRE(t.in_infinite_cluster);
    CHECK_FALSE(t.is_good);
    CHECK_FALSE(t.inconclusive);
    CHECK(t.trap_sites.size() == 3);
    CHECK(t.length == 2);
    CHECK(t.width == 0);
    for (const auto& z : {LatticePoint{-4, 0}, LatticePoint{-3, 1}, LatticePoint{0, 0}})
      CHECK(is_good_point(f, z, 20).good);
    auto t2 = trap_of(f, LatticePoint{-3, 0}, box, TrapOptions{20});
    CHECK(t2.trap_sites.size() == 3);
  }

  TEST_CASE("isolated site is in a finite cluster") {
    const LatticePoint o{0, 0};
    auto f = testutil::pinned_field(0.1, 40, [&](const Edge& e) { return testutil::touches(e, o); });
    auto t = trap_of(f, o, Box::around(o, 20));
    CHECK_FALSE(t.in_infinite_cluster);
    CHECK_FALSE(reaches_box_boundary(f, o, Box::around(o, 20)));
    CHECK(reaches_box_boundary(f, LatticePoint{1, 1}, Box::around(o, 20)));
    auto kc = kappa_component(f, o, Box::around(o, 20));
    CHECK(kc.sites.size() == 1);
    CHECK(kc.diameter == 0);
    CHECK_FALSE(kc.inconclusive);
  }

  TEST_CASE("two-site kappa component") {
    const LatticePoint a{0, 0}, b{1, 0};
    auto f = testutil::pinned_field(0.1, 40, [&](const Edge& e) { return testutil::touches(e, a) || testutil::touches(e, b); });
    auto kc = kappa_component(f, a, Box::around(a, 20));
    CHECK(kc.sites.size() == 2);
    CHECK(kc.diameter == 1);
    CHECK(kappa_component(f, LatticePoint{5, 5}, Box::around(a, 20)).sites.empty());
  }

  TEST_CASE("dead end of depth 3") {
    const LatticePoint o{0, 0};
    std::vector<LatticePoint> chain = {LatticePoint{1, 0}, LatticePoint{2, 0}, LatticePoint{3, 0}};
    auto f = testutil::pinned_field(0.1, 60, [&](const Edge& e) {
      if (testutil::same_edge(e, o, chain[0]) || testutil::same_edge(e, chain[0], chain[1]) ||
          testutil::same_edge(e, chain[1], chain[2]))
        return false;
      for (const auto& z : chain)
        if (testutil::touches(e, z)) return true;
      return testutil::same_edge(e, o, LatticePoint{0, 1}) || testutil::same_edge(e, o, LatticePoint{0, -1});
    });
    auto de = dead_end_at(f, o, Box::around(o, 30));
    REQUIRE(de.is_dead_end_start);
    CHECK(de.left_reaches_left_face);
    CHECK(de.right_interior);
    CHECK(de.depth == 3);
    CHECK(de.dead_end_sites.size() == 4);
    CHECK(de.certification_radius == 30);
    // one step left the right component is unbounded
    CHECK_FALSE(dead_end_at(f, LatticePoint{-1, 0}, Box::around(o, 30)).is_dead_end_start);
    CHECK_THROWS_AS(dead_end_at(f, LatticePoint{30, 0}, Box::around(o, 30)), InvalidArgument);
  }

  TEST_CASE("trap tails at p = 0.9 decay") {
    TrapTailOptions opt;
    opt.horizon = 24;
    opt.box_radius = 20;
    opt.n_max = 6;
    auto t = trap_tail_statistics(TwoPoint{0.9, 0.1}, 4000, 3, opt);
    CHECK(t.samples == 4000);
    CHECK(t.in_cluster > 3000);
    for (std::size_t i = 1; i < t.length_tail.size(); ++i) {
      CHECK(t.length_tail[i].count <= t.length_tail[i - 1].count);
      CHECK(t.width_tail[i].count <= t.width_tail[i - 1].count);
    }
    if (t.length_fit.valid) CHECK(t.length_fit.alpha < 1.0);
    auto again = trap_tail_statistics(TwoPoint{0.9, 0.1}, 4000, 3, opt);
    CHECK(again.bad == t.bad);
    CHECK(again.length_tail[0].count == t.length_tail[0].count);
  }

  TEST_CASE("depth tail") {
    auto t = dead_end_depth_tail(TwoPoint{0.7, 0.1}, 2000, 4, 20, 6);
    CHECK(t.samples == 2000);
    CHECK(t.depth_tail.size() == 6);
    CHECK(t.depth_tail[0].count <= t.dead_ends);
    for (std::size_t i = 1; i < t.depth_tail.size(); ++i) CHECK(t.depth_tail[i].count <= t.depth_tail[i - 1].count);
  }

  TEST_CASE("decay fit recovers a geometric tail") {
    std::vector<TailRow> rows;
    for (int n = 1; n <= 8; ++n) {
      TailRow r;
      r.n = n;
      r.count = 10;
      r.prob = std::pow(0.4, n);
      rows.push_back(r);
    }
    auto fit = fit_decay(rows);
    REQUIRE(fit.valid);
    CHECK(fit.alpha == doctest::Approx(0.4).epsilon(1e-12));
    rows.resize(2);
    CHECK_FALSE(fit_decay(rows).valid);
  }

  TEST_CASE("box parsing") {
    auto b = Box::parse("-3:4,0:10");
    CHECK(b.x_lo == -3);
    CHECK(b.x_hi == 4);
    CHECK(b.y_hi == 10);
    CHECK(Box::parse(b.to_string()).to_string() == b.to_string());
    for (const char* bad : {"", "1:2", "0:10;0:10", "0:10,0:10x", "0:1,0:10", "a:b,c:d"})
      CHECK_THROWS_AS(Box::parse(bad), InvalidArgument);
    CHECK_THROWS_AS(Box::around(LatticePoint{0, 0}, 0), InvalidArgument);
  }

  TEST_CASE("census JSON") {
    auto f = corridor_field();
    auto j = trap_census(f, Box::parse("-4:0,-2:2"), 20, 30);
    CHECK(j["box"] == "-4:0,-2:2");
    CHECK(j["sites"].size() == 25);
    CHECK(j["summary"]["bad"] == 3);
    CHECK(j["summary"]["good"] == 22);
    for (const auto& s : j["sites"]) {
      if (s["x"] == -2 && s["y"] == 0) {
        CHECK(s["class"] == "bad");
        CHECK(s["trap_length"] == 2);
        CHECK(s["trap_size"] == 3);
      }
    }
    CHECK_THROWS_AS(trap_census(f, Box::parse("-4:0,-2:2"), 20, 0), InvalidArgument);
  }
}
