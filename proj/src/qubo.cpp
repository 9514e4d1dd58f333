#include "mgq/qubo.hpp"

#include <fstream>
#include <string>

#include "mgq/csv.hpp"
#include "mgq/errors.hpp"

namespace mgq {
namespace {

void check_state(const QuboProblem& problem, std::span<const std::uint8_t> z) {
  if (z.size() != problem.size()) {
    throw DimensionError("state has " + std::to_string(z.size()) + " bits, problem has " +
                         std::to_string(problem.size()) + " variables");
  }
}

}  // namespace

QuboProblem::QuboProblem(Matrix quadratic, std::vector<double> linear, double offset)
    : quadratic_(std::move(quadratic)), linear_(std::move(linear)), offset_(offset) {
  if (quadratic_.rows() != linear_.size() || quadratic_.cols() != linear_.size()) {
    throw DimensionError("quadratic matrix must be n x n for " + std::to_string(linear_.size()) +
                         " linear terms");
  }
  if (!quadratic_.is_symmetric()) throw ValidationError("quadratic matrix is not symmetric");
}

QuboProblem::QuboProblem(Matrix quadratic, std::vector<double> linear, double offset,
                         KMedoidParams params)
    : QuboProblem(std::move(quadratic), std::move(linear), offset) {
  params_ = params;
}

Selection Selection::from_bits(BinaryVector z) {
  Selection s;
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z[i]) s.exemplars.push_back(i);
  s.z = std::move(z);
  return s;
}

QuboProblem build_kmedoid_qubo(const Matrix& delta, int k, const KMedoidOptions& options) {
  const std::size_t n = delta.rows();
  if (delta.cols() != n) throw DimensionError("dissimilarity matrix is not square");
  if (n == 0) throw ParameterError("dissimilarity matrix is empty");
  if (!delta.is_symmetric()) throw ValidationError("dissimilarity matrix is not symmetric");
  for (std::size_t i = 0; i < n; ++i)
    if (delta(i, i) != 0.0) throw ValidationError("dissimilarity matrix has a nonzero diagonal");
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw ParameterError("k = " + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
  }

  KMedoidParams p;
  p.k = k;
  p.alpha = options.alpha.value_or(1.0 / k);
  p.beta = options.beta.value_or(1.0 / static_cast<double>(n));
  p.gamma = options.gamma.value_or(2.0);
  if (!(p.gamma > 0.0)) throw ParameterError("gamma must be positive");

  Matrix q = Matrix::square(n);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      q(i, j) = p.gamma - p.alpha * 0.5 * delta(i, j);
      row_sum += delta(i, j);
    }
    c[i] = p.beta * row_sum - 2.0 * p.gamma * k;
  }
  return QuboProblem(std::move(q), std::move(c), 0.0, p);
}

double energy(const QuboProblem& problem, std::span<const std::uint8_t> z) {
  check_state(problem, z);
  const auto& q = problem.quadratic();
  const auto c = problem.linear();
  double e = problem.offset();
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!z[i]) continue;
    const auto row = q.row(i);
    double acc = c[i];
    for (std::size_t j = 0; j < z.size(); ++j)
      if (z[j]) acc += row[j];
    e += acc;
  }
  return e;
}

double delta_energy(const QuboProblem& problem, std::span<const std::uint8_t> z, std::size_t i) {
  check_state(problem, z);
  if (i >= z.size()) {
    throw DimensionError("bit index " + std::to_string(i) + " out of range for " +
                         std::to_string(z.size()) + " variables");
  }
  const auto row = problem.quadratic().row(i);
  double field = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j)
    if (j != i && z[j]) field += row[j];
  const double sign = z[i] ? -1.0 : 1.0;
  return sign * (row[i] + problem.linear()[i] + 2.0 * field);
}

PenaltySplit cardinality_penalty_decomposition(const QuboProblem& problem,
                                               std::span<const std::uint8_t> z) {
  if (!problem.params()) {
    throw UnsupportedProblemError("problem carries no K-medoid parameters");
  }
  const auto& p = *problem.params();
  double ones = 0.0;
  for (auto bit : z) ones += bit ? 1.0 : 0.0;
  const double excess = ones - p.k;
  PenaltySplit split;
  split.penalty = p.gamma * (excess * excess - static_cast<double>(p.k) * p.k);
  split.medoid_objective = energy(problem, z) - split.penalty;
  return split;
}

void export_triplets(const QuboProblem& problem, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  const auto& q = problem.quadratic();
  const auto c = problem.linear();
  const std::size_t n = problem.size();
  out << "# QUBO in upper-triangular triplet form, 0-based indices.\n"
         "# E(z) = sum_{i<j} w_ij z_i z_j + sum_i w_ii z_i + offset\n"
         "# i j w_ij with i < j: coupling, equal to 2*Q_ij of the symmetric form\n"
         "# i i w_ii: linear term, equal to Q_ii + c_i (z_i^2 = z_i)\n"
         "# offset "
      << csv::format_double(problem.offset()) << "\n# variables " << n << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    out << i << ' ' << i << ' ' << csv::format_double(q(i, i) + c[i]) << '\n';
    for (std::size_t j = i + 1; j < n; ++j)
      if (q(i, j) != 0.0) out << i << ' ' << j << ' ' << csv::format_double(2.0 * q(i, j)) << '\n';
  }
}

}  // namespace mgq
