#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>

#include "mgq/qubo.hpp"

namespace mgq {

enum class Schedule { geometric };

/// Simulated annealing settings. Unset temperatures are resolved per problem:
/// t_initial from the 90th percentile of |delta E| at a random state,
/// t_final as 1e-3 * t_initial.
struct AnnealConfig {
  int sweeps = 1000;
  int restarts = 16;
  std::optional<double> t_initial;
  std::optional<double> t_final;
  Schedule schedule = Schedule::geometric;
  std::uint64_t seed = 0;
  bool repair = true;
  /// Worker threads for restarts; 0 means hardware concurrency. Output does not depend on it.
  unsigned threads = 1;

  void validate() const;  // throws ConfigError
};

struct SolveResult {
  Selection best;
  double best_energy = 0.0;
  /// Cardinality equals k; always true for problems without K-medoid parameters.
  bool feasible = false;
  /// Best energy found so far, after each restart.
  std::vector<double> energy_trace;
  std::chrono::nanoseconds wall_time{0};
  std::uint64_t seed_used = 0;
  double t_initial = 0.0;
  double t_final = 0.0;
};

inline constexpr std::size_t kMaxExhaustiveSize = 25;

/// Global minimum over all 2^n states; ties go to the lexicographically smallest z.
SolveResult solve_exhaustive(const QuboProblem& problem);

/// Best of `restarts` independent single-bit-flip Metropolis runs.
SolveResult solve_anneal(const QuboProblem& problem, const AnnealConfig& config);

/// Greedily clears (or sets) bits with the most favorable energy change until
/// the cardinality equals k.
Selection repair_cardinality(const QuboProblem& problem, BinaryVector z);

/// Deterministic 64-bit generator for restart `stream` of run `seed`.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace mgq
