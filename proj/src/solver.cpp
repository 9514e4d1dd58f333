#include "mgq/solver.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <random>
#include <string>
#include <thread>

#include "mgq/errors.hpp"

namespace mgq {
namespace {

using Clock = std::chrono::steady_clock;

// Stream used for temperature calibration; restarts use 0..restarts-1.
constexpr std::uint64_t kCalibrationStream = ~std::uint64_t{0};

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

bool feasible(const QuboProblem& problem, const Selection& s) {
  return !problem.params() || s.cardinality() == static_cast<std::size_t>(problem.params()->k);
}

// (energy, z) ordering with lexicographic tie-break.
bool better(double e, const BinaryVector& z, double best_e, const BinaryVector& best_z) {
  if (e != best_e) return e < best_e;
  return z < best_z;
}

BinaryVector random_state(std::mt19937_64& rng, std::size_t n) {
  BinaryVector z(n);
  for (auto& bit : z) bit = static_cast<std::uint8_t>(rng() >> 63);
  return z;
}

// Local fields h_i = sum_{j != i} Q_ij z_j.
std::vector<double> local_fields(const Matrix& q, const BinaryVector& z) {
  const std::size_t n = z.size();
  std::vector<double> h(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!z[j]) continue;
    for (std::size_t i = 0; i < n; ++i)
      if (i != j) h[i] += q(i, j);
  }
  return h;
}

double temperature_from_sample(const QuboProblem& problem, std::uint64_t seed) {
  std::mt19937_64 rng(stream_seed(seed, kCalibrationStream));
  const BinaryVector z = random_state(rng, problem.size());
  std::vector<double> magnitudes;
  magnitudes.reserve(z.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    magnitudes.push_back(std::abs(delta_energy(problem, z, i)));
  if (magnitudes.empty()) return 1.0;
  // Nearest-rank 90th percentile.
  const std::size_t rank = static_cast<std::size_t>(std::ceil(0.9 * magnitudes.size()));
  std::nth_element(magnitudes.begin(), magnitudes.begin() + (rank - 1), magnitudes.end());
  const double t = magnitudes[rank - 1];
  return t > 0.0 ? t : 1.0;
}

struct RestartOutcome {
  BinaryVector z;
  double energy = 0.0;
};

RestartOutcome anneal_once(const QuboProblem& problem, const AnnealConfig& config, double t0,
                           double t1, std::uint64_t restart) {
  const std::size_t n = problem.size();
  const auto& q = problem.quadratic();
  const auto c = problem.linear();
  std::mt19937_64 rng(stream_seed(config.seed, restart));

  BinaryVector z = random_state(rng, n);
  std::vector<double> h = local_fields(q, z);
  double e = energy(problem, z);
  BinaryVector best_z = z;
  double best_e = e;

  const double log_ratio = std::log(t1 / t0);
  for (int sweep = 0; sweep < config.sweeps; ++sweep) {
    const double frac = config.sweeps > 1 ? static_cast<double>(sweep) / (config.sweeps - 1) : 0.0;
    const double t = t0 * std::exp(log_ratio * frac);
    for (std::size_t i = 0; i < n; ++i) {
      const double de = (z[i] ? -1.0 : 1.0) * (q(i, i) + c[i] + 2.0 * h[i]);
      if (de > 0.0 && uniform01(rng) >= std::exp(-de / t)) continue;
      const double step = z[i] ? -1.0 : 1.0;
      z[i] ^= 1;
      const auto row = q.row(i);
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) h[j] += step * row[j];
      e += de;
      if (e < best_e) {
        best_e = e;
        best_z = z;
      }
    }
  }

  if (config.repair && problem.params()) best_z = repair_cardinality(problem, best_z).z;
  return {best_z, energy(problem, best_z)};
}

}  // namespace

void AnnealConfig::validate() const {
  if (sweeps < 1) throw ConfigError("sweeps must be >= 1");
  if (restarts < 1) throw ConfigError("restarts must be >= 1");
  if (t_initial && !(*t_initial > 0.0)) throw ConfigError("t_initial must be positive");
  if (t_final && !(*t_final > 0.0)) throw ConfigError("t_final must be positive");
  if (t_initial && t_final && *t_initial < *t_final) {
    throw ConfigError("t_initial must be >= t_final");
  }
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  // Two rounds of splitmix64 over the pair.
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return mix(mix(seed) ^ stream);
}

Selection repair_cardinality(const QuboProblem& problem, BinaryVector z) {
  if (!problem.params()) throw UnsupportedProblemError("repair needs a target cardinality k");
  if (z.size() != problem.size()) throw DimensionError("state length does not match problem size");
  const std::size_t k = static_cast<std::size_t>(problem.params()->k);
  std::size_t ones = static_cast<std::size_t>(std::count(z.begin(), z.end(), 1));

  while (ones != k) {
    const bool clearing = ones > k;
    std::optional<std::size_t> pick;
    double pick_delta = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (static_cast<bool>(z[i]) != clearing) continue;
      const double d = delta_energy(problem, z, i);
      // On ties, clear the lowest bit or set the highest one: both give the
      // lexicographically smaller result.
      if (!pick || d < pick_delta || (d == pick_delta && !clearing)) {
        pick = i;
        pick_delta = d;
      }
    }
    z[*pick] ^= 1;
    ones = clearing ? ones - 1 : ones + 1;
  }
  return Selection::from_bits(std::move(z));
}

SolveResult solve_exhaustive(const QuboProblem& problem) {
  const auto start = Clock::now();
  const std::size_t n = problem.size();
  if (n > kMaxExhaustiveSize) {
    throw TooLargeError("exhaustive search limited to " + std::to_string(kMaxExhaustiveSize) +
                        " variables, problem has " + std::to_string(n));
  }
  const auto& q = problem.quadratic();
  const auto c = problem.linear();

  // Gray-code walk: one bit flips per step, energy tracked incrementally.
  BinaryVector z(n, 0);
  std::vector<double> h(n, 0.0);
  double e = problem.offset();
  BinaryVector best_z = z;
  double best_exact = e;
  double best_running = e;

  const std::uint64_t states = std::uint64_t{1} << n;
  for (std::uint64_t g = 1; g < states; ++g) {
    const std::size_t i = static_cast<std::size_t>(std::countr_zero(g));
    const double step = z[i] ? -1.0 : 1.0;
    e += step * (q(i, i) + c[i] + 2.0 * h[i]);
    z[i] ^= 1;
    const auto row = q.row(i);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) h[j] += step * row[j];

    // Running sums drift slightly; settle near-ties on exact energies.
    const double tol = 1e-9 * std::max(1.0, std::abs(best_running));
    if (e > best_running + tol) continue;
    const double exact = energy(problem, z);
    if (better(exact, z, best_exact, best_z)) {
      best_exact = exact;
      best_running = e;
      best_z = z;
    }
  }

  SolveResult result;
  result.best = Selection::from_bits(best_z);
  result.best_energy = energy(problem, result.best.z);
  result.feasible = feasible(problem, result.best);
  result.wall_time = Clock::now() - start;
  return result;
}

SolveResult solve_anneal(const QuboProblem& problem, const AnnealConfig& config) {
  config.validate();
  const auto start = Clock::now();

  const double t0 = config.t_initial ? *config.t_initial : temperature_from_sample(problem, config.seed);
  const double t1 = config.t_final ? *config.t_final : 1e-3 * t0;
  if (!(t0 >= t1)) throw ConfigError("resolved t_initial is below t_final");

  const auto restarts = static_cast<std::size_t>(config.restarts);
  std::vector<RestartOutcome> outcomes(restarts, RestartOutcome{{}, problem.offset()});
  if (problem.size() > 0) {
    unsigned workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, restarts));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t r = next++; r < restarts; r = next++)
        outcomes[r] = anneal_once(problem, config, t0, t1, r);
    };
    if (workers <= 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
  }

  SolveResult result;
  BinaryVector best_z;
  double best_e = 0.0;
  for (std::size_t r = 0; r < restarts; ++r) {
    if (r == 0 || better(outcomes[r].energy, outcomes[r].z, best_e, best_z)) {
      best_e = outcomes[r].energy;
      best_z = outcomes[r].z;
    }
    result.energy_trace.push_back(best_e);
  }
  result.best = Selection::from_bits(std::move(best_z));
  result.best_energy = energy(problem, result.best.z);
  result.feasible = feasible(problem, result.best);
  result.seed_used = config.seed;
  result.t_initial = t0;
  result.t_final = t1;
  result.wall_time = Clock::now() - start;
  return result;
}

}  // namespace mgq
