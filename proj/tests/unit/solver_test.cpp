#include "mgq/solver.hpp"

#include <gtest/gtest.h>

#include <random>

#include "mgq/errors.hpp"
#include "mgq_testing.hpp"

using namespace mgq;
namespace ts = mgq::test_support;

namespace {

QuboProblem random_generic(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix q = Matrix::square(n);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = u(rng);
    for (std::size_t j = i; j < n; ++j) q(i, j) = q(j, i) = u(rng);
  }
  return QuboProblem(std::move(q), std::move(c));
}

// Plain enumeration with full energy evaluation at every state.
std::pair<BinaryVector, double> brute_force(const QuboProblem& p) {
  const std::size_t n = p.size();
  BinaryVector best;
  double best_e = 0.0;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
    const auto z = ts::bits_of(m, n);
    const double e = energy(p, z);
    if (best.empty() || e < best_e || (e == best_e && z < best)) {
      best = z;
      best_e = e;
    }
  }
  return {best, best_e};
}

AnnealConfig budget(int sweeps, int restarts, std::uint64_t seed) {
  AnnealConfig c;
  c.sweeps = sweeps;
  c.restarts = restarts;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Exhaustive, SingleBit) {
  const QuboProblem p(Matrix::square(1), {-1.0});
  const auto r = solve_exhaustive(p);
  EXPECT_EQ(r.best.z, (BinaryVector{1}));
  EXPECT_EQ(r.best_energy, -1.0);
  EXPECT_TRUE(r.feasible);
}

TEST(Exhaustive, TieBreaksLexicographically) {
  const auto p = build_kmedoid_qubo(Matrix::square(2), 1);
  const auto r = solve_exhaustive(p);
  EXPECT_EQ(r.best.z, (BinaryVector{0, 1}));
  EXPECT_EQ(r.best_energy, -2.0);
  EXPECT_TRUE(r.feasible);
}

TEST(Exhaustive, PenaltyOnlyMinimizersAreFeasible) {
  for (std::size_t n = 1; n <= 10; ++n)
    for (int k = 1; k <= static_cast<int>(n); ++k) {
      const auto r = solve_exhaustive(build_kmedoid_qubo(Matrix::square(n), k));
      EXPECT_EQ(r.best.cardinality(), static_cast<std::size_t>(k));
      EXPECT_EQ(r.best_energy, -2.0 * k * k);
      // Lexicographically smallest feasible vector: the last k bits set.
      for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(r.best.z[i], i + k >= n ? 1 : 0);
    }
}

TEST(Exhaustive, MatchesBruteForce) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng() % 11;
    const auto p = trial % 2 ? random_generic(n, rng)
                             : build_kmedoid_qubo(ts::random_point_delta(n, rng), 1 + static_cast<int>(rng() % n));
    const auto [z, e] = brute_force(p);
    const auto r = solve_exhaustive(p);
    EXPECT_EQ(r.best.z, z);
    EXPECT_EQ(r.best_energy, e);
  }
}

TEST(Exhaustive, RefusesLargeProblems) {
  const QuboProblem p(Matrix::square(26), std::vector<double>(26, 0.0));
  EXPECT_THROW(solve_exhaustive(p), TooLargeError);
}

TEST(Anneal, MatchesExhaustiveOnSmallInstances) {
  std::mt19937_64 rng(17);
  int matches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + rng() % 9;
    const int k = 1 + static_cast<int>(rng() % 4);
    const auto p = build_kmedoid_qubo(ts::random_point_delta(n, rng), std::min<int>(k, n));
    const auto exact = solve_exhaustive(p);
    const auto sa = solve_anneal(p, budget(200, 20, static_cast<std::uint64_t>(trial)));
    if (std::abs(sa.best_energy - exact.best_energy) <= 1e-9) ++matches;
  }
  EXPECT_GE(matches, 95);
}

TEST(Anneal, PenaltyOnlyProblemIsSolvedFeasibly) {
  for (int k : {1, 3, 7, 12, 20}) {
    const auto p = build_kmedoid_qubo(Matrix::square(20), k);
    const auto r = solve_anneal(p, budget(200, 4, 99));
    EXPECT_TRUE(r.feasible);
    EXPECT_EQ(r.best.cardinality(), static_cast<std::size_t>(k));
    EXPECT_EQ(r.best_energy, -2.0 * k * k);
  }
}

TEST(Anneal, DeterministicForSeedAcrossThreadCounts) {
  std::mt19937_64 rng(23);
  const auto p = build_kmedoid_qubo(ts::random_point_delta(40, rng), 5);
  auto config = budget(150, 8, 12345);
  const auto a = solve_anneal(p, config);
  const auto b = solve_anneal(p, config);
  config.threads = 4;
  const auto c = solve_anneal(p, config);
  for (const auto* other : {&b, &c}) {
    EXPECT_EQ(a.best.z, other->best.z);
    EXPECT_EQ(a.best_energy, other->best_energy);
    EXPECT_EQ(a.energy_trace, other->energy_trace);
    EXPECT_EQ(a.t_initial, other->t_initial);
  }
  EXPECT_EQ(a.seed_used, 12345u);
}

TEST(Anneal, TraceIsMonotoneAndEndsAtBest) {
  std::mt19937_64 rng(29);
  const auto p = build_kmedoid_qubo(ts::random_point_delta(30, rng), 4);
  const auto r = solve_anneal(p, budget(20, 12, 4));
  ASSERT_EQ(r.energy_trace.size(), 12u);
  for (std::size_t i = 1; i < r.energy_trace.size(); ++i) EXPECT_LE(r.energy_trace[i], r.energy_trace[i - 1]);
  EXPECT_EQ(r.energy_trace.back(), r.best_energy);
  EXPECT_EQ(r.best_energy, energy(p, r.best.z));
}

TEST(Anneal, DefaultTemperaturesAreCalibrated) {
  std::mt19937_64 rng(31);
  const auto p = build_kmedoid_qubo(ts::random_point_delta(25, rng), 3);
  const auto r = solve_anneal(p, budget(10, 2, 1));
  EXPECT_GT(r.t_initial, 0.0);
  EXPECT_DOUBLE_EQ(r.t_final, 1e-3 * r.t_initial);
  auto fixed = budget(10, 2, 1);
  fixed.t_initial = 3.0;
  fixed.t_final = 0.5;
  const auto s = solve_anneal(p, fixed);
  EXPECT_EQ(s.t_initial, 3.0);
  EXPECT_EQ(s.t_final, 0.5);
}

TEST(Anneal, NoRepairMayReturnInfeasible) {
  // Strongly negative linear terms pull every bit on; without repair the
  // annealer keeps them, with repair the result is trimmed to k.
  Matrix q = Matrix::square(6, 0.0);
  for (std::size_t i = 0; i < 6; ++i) q(i, i) = 0.0;
  const QuboProblem base(q, std::vector<double>(6, -1.0), 0.0, KMedoidParams{1.0, 1.0, 1.0, 2});
  auto config = budget(50, 2, 3);
  config.repair = false;
  const auto raw = solve_anneal(base, config);
  EXPECT_FALSE(raw.feasible);
  EXPECT_EQ(raw.best.cardinality(), 6u);
  config.repair = true;
  const auto fixed = solve_anneal(base, config);
  EXPECT_TRUE(fixed.feasible);
  EXPECT_EQ(fixed.best.cardinality(), 2u);
}

TEST(Anneal, ConfigValidation) {
  const QuboProblem p(Matrix::square(2), {0.0, 0.0});
  AnnealConfig c;
  c.sweeps = 0;
  EXPECT_THROW(solve_anneal(p, c), ConfigError);
  c = AnnealConfig{};
  c.restarts = 0;
  EXPECT_THROW(solve_anneal(p, c), ConfigError);
  c = AnnealConfig{};
  c.t_initial = 0.1;
  c.t_final = 1.0;
  EXPECT_THROW(solve_anneal(p, c), ConfigError);
  c = AnnealConfig{};
  c.t_final = -1.0;
  EXPECT_THROW(solve_anneal(p, c), ConfigError);
}

TEST(Repair, FeasibleInputIsUnchanged) {
  std::mt19937_64 rng(37);
  const auto p = build_kmedoid_qubo(ts::random_delta(8, rng), 3);
  const BinaryVector z{0, 1, 0, 0, 1, 0, 1, 0};
  EXPECT_EQ(repair_cardinality(p, z).z, z);
}

TEST(Repair, AllOnesDropsTheBestSingleBit) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + rng() % 8;
    const auto p = build_kmedoid_qubo(ts::random_delta(n, rng), static_cast<int>(n) - 1);
    const BinaryVector ones(n, 1);
    std::size_t best = 0;
    double best_e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      BinaryVector z = ones;
      z[i] = 0;
      const double e = energy(p, z);
      if (i == 0 || e < best_e) {
        best = i;
        best_e = e;
      }
    }
    const auto s = repair_cardinality(p, ones);
    EXPECT_EQ(s.cardinality(), n - 1);
    EXPECT_EQ(s.z[best], 0);
    EXPECT_NEAR(energy(p, s.z), best_e, 1e-12);
  }
}

TEST(Repair, EmptyStatePicksSmallestDiagonalPlusLinear) {
  const QuboProblem p(Matrix::square(4), {0.5, -0.2, -0.7, 0.1}, 0.0, KMedoidParams{1, 1, 1, 1});
  EXPECT_EQ(repair_cardinality(p, BinaryVector(4, 0)).exemplars, (std::vector<std::size_t>{2}));
}

TEST(Repair, NeedsParams) {
  const QuboProblem p(Matrix::square(2), {0.0, 0.0});
  EXPECT_THROW(repair_cardinality(p, BinaryVector{1, 1}), UnsupportedProblemError);
}

TEST(RepairProperty, AlwaysFeasibleAndStepsMatchDeltaEnergy) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 14;
    const int k = 1 + static_cast<int>(rng() % n);
    const auto p = build_kmedoid_qubo(ts::random_point_delta(n, rng), k);
    BinaryVector z(n);
    for (auto& b : z) b = static_cast<std::uint8_t>(rng() & 1);

    const auto s = repair_cardinality(p, z);
    ASSERT_EQ(s.cardinality(), static_cast<std::size_t>(k));

    // Replay: each step is one flip whose change is its delta_energy, and
    // no alternative flip in the same direction would have done better.
    BinaryVector cur = z;
    while (std::count(cur.begin(), cur.end(), 1) != k) {
      const bool clearing = std::count(cur.begin(), cur.end(), 1) > k;
      double best = 1e300;
      std::size_t pick = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<bool>(cur[i]) != clearing) continue;
        BinaryVector next = cur;
        next[i] ^= 1;
        const double full = energy(p, next) - energy(p, cur);
        ASSERT_NEAR(full, delta_energy(p, cur, i), 1e-12);
        if (full < best - 1e-12) {
          best = full;
          pick = i;
        }
      }
      cur[pick] ^= 1;
    }
    EXPECT_NEAR(energy(p, cur), energy(p, s.z), 1e-12);
  }
}

TEST(StreamSeed, DistinctStreams) {
  EXPECT_NE(stream_seed(1, 0), stream_seed(1, 1));
  EXPECT_NE(stream_seed(1, 0), stream_seed(2, 0));
  EXPECT_EQ(stream_seed(5, 9), stream_seed(5, 9));
}
