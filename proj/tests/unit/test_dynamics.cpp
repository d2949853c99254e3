#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "traffic/config.hpp"
#include "traffic/dynamics.hpp"

using namespace traffic;

namespace {

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

Configuration random_ring(std::mt19937_64& rng, std::size_t n, double r, double spread) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(n);
  double pos = 0.0;
  for (auto& xi : x) {
    xi = pos;
    pos += 2.0 * r + spread * u(rng) + 1e-9;
  }
  return Configuration::ring(pos, x, r);
}

}  // namespace

TEST_CASE("coin stream is reproducible and order independent") {
  const CoinStream a(42), b(42), c(43);
  int differ = 0;
  for (std::uint64_t t = 0; t < 50; ++t)
    for (std::uint64_t i = 0; i < 50; ++i) {
      CHECK(a.uniform(i, t) == b.uniform(i, t));
      CHECK(a.uniform(i, t) >= 0.0);
      CHECK(a.uniform(i, t) < 1.0);
      differ += a.uniform(i, t) != c.uniform(i, t);
    }
  CHECK(differ == 2500);
  CHECK(a.uniform(7, 3) != a.uniform(3, 7));
}

TEST_CASE("coin frequencies and neighbour correlations") {
  const CoinStream coins(1234);
  const double p = 0.3;
  const int n = 400, steps = 500;
  double hits = 0.0, both_space = 0.0, both_time = 0.0;
  for (int t = 0; t < steps; ++t)
    for (int i = 0; i < n; ++i) {
      const bool c = coins.coin(i, t, p);
      hits += c;
      both_space += c && coins.coin(i + 1, t, p);
      both_time += c && coins.coin(i, t + 1, p);
    }
  const double total = double(n) * steps;
  const double se = std::sqrt(p * (1 - p) / total);
  CHECK(std::abs(hits / total - p) < 4.0 * se);
  const double se2 = std::sqrt(p * p * (1 - p * p) / total);
  CHECK(std::abs(both_space / total - p * p) < 4.0 * se2);
  CHECK(std::abs(both_time / total - p * p) < 4.0 * se2);
}

TEST_CASE("derived seeds differ") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(9, 9) == derive_seed(9, 9));
}

TEST_CASE("step examples") {
  const CoinStream coins(0);
  const auto out = step(Configuration::ring(10.0, {0.0, 0.5, 3.0}, 0.0), ProcessParams(1.0, 1.0), coins, 0);
  CHECK(vec(out.positions()) == std::vector<double>{0.5, 1.5, 4.0});

  const auto free = step(Configuration::line({0.0}, 0.0), ProcessParams(1.0, 2.5), coins, 0);
  CHECK(free.position(0) == 2.5);

  std::mt19937_64 rng(1);
  const auto cfg = random_ring(rng, 30, 0.3, 2.0);
  auto frozen = step(cfg, ProcessParams(0.0, 1.7), coins, 5);
  CHECK(vec(frozen.positions()) == vec(cfg.positions()));
}

TEST_CASE("step matches a direct evaluation of the update rule") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 15;
    std::vector<double> radii(n), x(n);
    for (auto& r : radii) r = 0.4 * u(rng);
    double pos = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = pos;
      pos += radii[i] + radii[(i + 1) % n] + 2.0 * u(rng) + 1e-9;
    }
    const bool ring = trial % 2 == 0;
    const auto cfg = ring ? Configuration::ring(pos, x, radii) : Configuration::line(x, radii);
    const ProcessParams params(u(rng), 3.0 * u(rng) + 0.01);
    const CoinStream coins(rng());
    const std::uint64_t t = rng() % 1000;
    const auto out = step(cfg, params, coins, t);
    for (std::size_t i = 0; i < n; ++i) {
      double limit = std::numeric_limits<double>::infinity();
      if (i + 1 < n)
        limit = x[i + 1] - (radii[i] + radii[i + 1]);
      else if (ring)
        limit = (x[0] + pos) - (radii[i] + radii[0]);
      const double expected = coins.uniform(i, t) < params.p() ? std::min(x[i] + params.v(), limit) : x[i];
      CHECK(out.position(i) == expected);
    }
  }
}

TEST_CASE("step_obstacles examples") {
  const CoinStream coins(0);
  const ProcessParams params(1.0, 2.0);
  const ObstacleField field(Geometry::line(), {1.0});
  auto x = step_obstacles(Configuration::line({0.2}, 0.0), field, params, coins, 0);
  CHECK(x.position(0) == 1.0);
  x = step_obstacles(x, field, params, coins, 1);
  CHECK(x.position(0) == 3.0);

  const ObstacleField two(Geometry::line(), {0.5, 0.7});
  auto y = Configuration::line({0.0}, 0.0);
  std::vector<double> seen;
  for (std::uint64_t t = 0; t < 3; ++t) {
    y = step_obstacles(y, two, ProcessParams(1.0, 1.0), coins, t);
    seen.push_back(y.position(0));
  }
  CHECK(seen == std::vector<double>{0.5, 0.7, 1.7});

  CHECK_THROWS_AS(step_obstacles(Configuration::line({0.0}, 0.5), field, params, coins, 0), DomainError);
}

TEST_CASE("empty obstacle field reduces to step") {
  std::mt19937_64 rng(4);
  const auto cfg = random_ring(rng, 40, 0.0, 3.0);
  const ObstacleField none(cfg.geometry(), {});
  const CoinStream coins(99);
  const ProcessParams params(0.6, 1.3);
  for (std::uint64_t t = 0; t < 20; ++t)
    CHECK(step_obstacles(cfg, none, params, coins, t) == step(cfg, params, coins, t));
}

TEST_CASE("obstacle field lookup on rings uses lifted coordinates") {
  CHECK_THROWS_AS(ObstacleField(Geometry::line(), {1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(ObstacleField(Geometry::ring(5.0), {0.0, 5.0}), DomainError);
  const ObstacleField field(Geometry::ring(5.0), {0.0, 3.5});
  CHECK(field.next_beyond(0.0) == 3.5);
  CHECK(field.next_beyond(3.5) == 5.0);
  CHECK(field.next_beyond(4.0) == 5.0);
  CHECK(field.next_beyond(12.0) == 13.5);
  CHECK(field.next_beyond(13.5) == 15.0);
  CHECK(field.density() == 0.4);
  CHECK(ObstacleField(Geometry::line(), {1.0}).next_beyond(1.0) == std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(ObstacleField(Geometry::line(), {1.0}).density(), DomainError);
}

TEST_CASE("run examples") {
  SUBCASE("free flow at p = 1") {
    std::vector<double> x;
    for (int i = 0; i < 10; ++i) x.push_back(5.0 * i);
    RunOptions opt;
    opt.steps = 50;
    opt.seed = 3;
    const auto s = run(Configuration::ring(50.0, x, 0.0), ProcessParams(1.0, 2.0), opt);
    for (double d : s.displacement) CHECK(d == 100.0);
    for (double d : s.step_displacement) CHECK(d == 20.0);
  }
  SUBCASE("packed ring is jammed") {
    std::vector<double> x;
    for (int i = 0; i < 20; ++i) x.push_back(i);
    RunOptions opt;
    opt.steps = 100;
    const auto s = run(Configuration::ring(20.0, x, 0.5), ProcessParams(1.0, 1.0, Space::Lattice), opt);
    for (double d : s.displacement) CHECK(d == 0.0);
  }
  SUBCASE("same seed reproduces the summary") {
    std::mt19937_64 rng(6);
    const auto cfg = random_ring(rng, 50, 0.2, 1.0);
    RunOptions opt;
    opt.steps = 200;
    opt.seed = 77;
    opt.snapshot_stride = 10;
    const auto a = run(cfg, ProcessParams(0.4, 1.5), opt);
    const auto b = run(cfg, ProcessParams(0.4, 1.5), opt);
    CHECK(a.displacement == b.displacement);
    CHECK(a.step_displacement == b.step_displacement);
    CHECK(a.final_state == b.final_state);
    REQUIRE(a.snapshots.size() == 21);
    for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
      CHECK(a.snapshots[k].positions == b.snapshots[k].positions);
      CHECK(a.snapshots[k].t == 10 * k);
    }
    for (double rho : a.density_series) CHECK(rho == density(cfg));
  }
  SUBCASE("errors") {
    RunOptions opt;
    opt.steps = 0;
    CHECK_THROWS_AS(run(Configuration::line({0.0}, 0.0), ProcessParams(0.5, 1.0), opt), DomainError);
    opt.steps = 1;
    CHECK_THROWS_AS(run(Configuration::line({0.0, 0.5}, 0.5), ProcessParams(0.5, 1.0), opt), AdmissibilityError);
    CHECK_THROWS_AS(run(Configuration::line({0.0, 1.5}, 0.0), ProcessParams(0.5, 1.0, Space::Lattice), opt),
                    DomainError);
  }
}

TEST_CASE("dynamics invariants over random runs") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const double r = trial % 3 == 0 ? 0.0 : 0.5 * u(rng);
    const auto cfg = random_ring(rng, 2 + rng() % 40, r, 2.0 * u(rng));
    const ProcessParams params(u(rng), 0.1 + 2.0 * u(rng));
    Configuration prev = cfg;
    bool ok = true;
    RunOptions opt;
    opt.steps = 100;
    opt.seed = rng();
    opt.observer = [&](std::uint64_t, const Configuration& now) {
      ok = ok && check_admissible(now).ok && now.size() == cfg.size();
      for (std::size_t i = 0; i < now.size(); ++i) {
        ok = ok && now.position(i) >= prev.position(i) && now.position(i) <= prev.position(i) + params.v();
        ok = ok && now.winding()[i] >= prev.winding()[i];
      }
      prev = now;
    };
    run(cfg, params, opt);
    CHECK(ok);
  }
}

TEST_CASE("sub-lattice and lattice embeddings are invariant") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 40; ++trial) {
    const double v = 1.0 + static_cast<double>(rng() % 3);
    const double w = 0.25 * static_cast<double>(rng() % 4);
    std::vector<double> x(25);
    double pos = w;
    for (auto& xi : x) {
      xi = pos;
      pos += v * static_cast<double>(rng() % 3);
    }
    const auto cfg = Configuration::ring(pos - w + v, x, 0.0);
    RunOptions opt;
    opt.steps = 100;
    opt.seed = rng();
    bool ok = true;
    opt.observer = [&](std::uint64_t, const Configuration& now) {
      for (double xi : now.positions()) ok = ok && std::floor((xi - w) / v) == (xi - w) / v;
    };
    run(cfg, ProcessParams(0.7, v), opt);
    CHECK(ok);

    std::vector<std::uint8_t> word(30);
    for (auto& b : word) b = rng() % 2;
    const auto lattice = decode_word(word);
    bool integral = true;
    opt.observer = [&](std::uint64_t, const Configuration& now) {
      for (double xi : now.positions()) integral = integral && std::floor(xi) == xi;
    };
    if (lattice.size() > 0) {
      run(lattice, ProcessParams(0.5, v, Space::Lattice), opt);
      CHECK(integral);
    }
  }
}

TEST_CASE("coupled runs") {
  SUBCASE("radius conjugate has identical gaps") {
    std::mt19937_64 rng(12);
    const auto cfg = random_ring(rng, 200, 0.5, 2.0);
    const auto out = coupled_run(cfg, radius_conjugate(cfg, 0.0), ProcessParams(0.5, 1.5), ProcessParams(0.5, 1.5),
                                 300, 5);
    CHECK(out.max_gap_difference <= 1e-9);
    CHECK(out.max_displacement_difference <= 1e-9);
  }
  SUBCASE("heterogeneous radii against the mean radius") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> radii(100), x(100);
    double pos = 0.0;
    for (auto& r : radii) r = 0.4 * u(rng);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = pos;
      pos += radii[i] + radii[(i + 1) % x.size()] + u(rng);
    }
    const auto het = Configuration::ring(pos, x, radii);
    const auto out = coupled_run(het, radius_conjugate(het, het.mean_radius()), ProcessParams(0.8, 1.0),
                                 ProcessParams(0.8, 1.0), 300, 6);
    CHECK(out.max_displacement_difference <= 1e-9);
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(out.a.displacement[i] == doctest::Approx(out.b.displacement[i]).epsilon(1e-12));
  }
  SUBCASE("identical inputs give identical trajectories") {
    std::mt19937_64 rng(14);
    const auto cfg = random_ring(rng, 50, 0.1, 1.0);
    const auto out = coupled_run(cfg, cfg, ProcessParams(0.5, 1.0), ProcessParams(0.5, 1.0), 100, 7);
    CHECK(out.a.final_state == out.b.final_state);
    CHECK(out.max_gap_difference == 0.0);
  }
  SUBCASE("coupled run consumes the same coins as run") {
    std::mt19937_64 rng(15);
    const auto cfg = random_ring(rng, 50, 0.1, 1.0);
    RunOptions opt;
    opt.steps = 100;
    opt.seed = 8;
    const auto solo = run(cfg, ProcessParams(0.5, 1.0), opt);
    const auto pair = coupled_run(cfg, cfg, ProcessParams(0.5, 1.0), ProcessParams(0.5, 1.0), 100, 8);
    CHECK(solo.final_state == pair.a.final_state);
  }
  SUBCASE("particle counts must match") {
    CHECK_THROWS_AS(coupled_run(Configuration::line({0.0}, 0.0), Configuration::line({0.0, 1.0}, 0.0),
                                ProcessParams(0.5, 1.0), ProcessParams(0.5, 1.0), 10, 1),
                    DomainError);
  }
}

TEST_CASE("trajectory csv") {
  RunOptions opt;
  opt.steps = 4;
  opt.snapshot_stride = 2;
  const auto s = run(Configuration::ring(10.0, {0.0, 5.0}, 0.0), ProcessParams(1.0, 1.0), opt);
  std::ostringstream out;
  write_trajectory_csv(out, s);
  CHECK(out.str() ==
        "t,particle,position,displacement\n0,0,0,0\n0,1,5,0\n2,0,2,2\n2,1,7,2\n4,0,4,4\n4,1,9,4\n");
}
