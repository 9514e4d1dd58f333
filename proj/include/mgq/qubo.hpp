#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mgq/matrix.hpp"

namespace mgq {

using BinaryVector = std::vector<std::uint8_t>;

/// Coefficients of the K-medoid objective. `k` is the target cardinality.
struct KMedoidParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  int k = 0;
};

/// Optional overrides; unset fields take alpha = 1/k, beta = 1/n, gamma = 2.
struct KMedoidOptions {
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> gamma;
};

/// E(z) = z'Qz + c'z + offset over binary z, with Q symmetric.
/// Immutable after construction, so it can be shared across solver threads.
class QuboProblem {
 public:
  /// Generic problem without K-medoid parameters.
  QuboProblem(Matrix quadratic, std::vector<double> linear, double offset = 0.0);
  QuboProblem(Matrix quadratic, std::vector<double> linear, double offset, KMedoidParams params);

  std::size_t size() const noexcept { return linear_.size(); }
  const Matrix& quadratic() const noexcept { return quadratic_; }
  std::span<const double> linear() const noexcept { return linear_; }
  double offset() const noexcept { return offset_; }
  const std::optional<KMedoidParams>& params() const noexcept { return params_; }

 private:
  Matrix quadratic_;
  std::vector<double> linear_;
  double offset_ = 0.0;
  std::optional<KMedoidParams> params_;
};

/// An exemplar set: the binary indicator and its sorted set bits.
struct Selection {
  BinaryVector z;
  std::vector<std::size_t> exemplars;

  static Selection from_bits(BinaryVector z);
  std::size_t cardinality() const noexcept { return exemplars.size(); }
};

/// Builds Q = gamma*11' - (alpha/2)*delta and c = beta*delta*1 - 2*gamma*k*1.
QuboProblem build_kmedoid_qubo(const Matrix& delta, int k, const KMedoidOptions& options = {});

double energy(const QuboProblem& problem, std::span<const std::uint8_t> z);

/// E(z with bit i flipped) - E(z), in O(n).
double delta_energy(const QuboProblem& problem, std::span<const std::uint8_t> z, std::size_t i);

struct PenaltySplit {
  double penalty = 0.0;           // gamma((sum z - k)^2 - k^2)
  double medoid_objective = 0.0;  // energy - penalty
};

PenaltySplit cardinality_penalty_decomposition(const QuboProblem& problem,
                                               std::span<const std::uint8_t> z);

/// Writes the problem as `i j value` triplets (see header comment in the file).
void export_triplets(const QuboProblem& problem, const std::filesystem::path& path);

}  // namespace mgq
