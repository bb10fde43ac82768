#pragma once

// Reference view generalization functions: plain 2D similarity, distance in a
// principal subspace, and the residual outside the span of training views.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "viewgen/encode.hpp"

namespace viewgen {

enum class ScoreKind : std::uint32_t { Euclidean = 0, Eigenspace = 1, LinearCombination = 2 };

/// score = -epsilon; higher is more similar.
struct ScoreReport {
  double score = 0.0;
  ScoreKind kind = ScoreKind::Euclidean;
  double epsilon = 0.0;
};

ScoreReport euclidean_score(const FeatureVector& b, const FeatureVector& t);

/// Top-k principal subspace of a set of views.
class EigenspaceModel {
 public:
  /// `basis` is k x d with orthonormal rows, sorted by decreasing eigenvalue.
  EigenspaceModel(Eigen::VectorXd mean, Eigen::MatrixXd basis, Eigen::VectorXd eigenvalues);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
  std::size_t k() const noexcept { return static_cast<std::size_t>(basis_.rows()); }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& basis() const noexcept { return basis_; }
  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }

  /// basis * (x - mean).
  Eigen::VectorXd coords(const FeatureVector& x) const;
  /// mean + basis^T * coords(x).
  Eigen::VectorXd reconstruct(const FeatureVector& x) const;
  /// || x - reconstruct(x) ||.
  double reconstruction_error(const FeatureVector& x) const;

  void save(std::ostream& out) const;
  static EigenspaceModel load(std::istream& in);

 private:
  void require_dim(const FeatureVector& x) const;

  Eigen::VectorXd mean_;
  Eigen::MatrixXd basis_;
  Eigen::VectorXd eigenvalues_;
};

/// Sample mean and top-k eigenvectors of the sample covariance. Requires at
/// least k + 1 views of one dimension and k <= d.
EigenspaceModel fit_eigenspace(std::span<const FeatureVector> views, std::size_t k);

/// epsilon = || coords(b) - coords(t) ||.
ScoreReport eigenspace_score(const EigenspaceModel& model, const FeatureVector& b, const FeatureVector& t);

/// Norm of the part of b orthogonal to span(training). The training views are
/// orthonormalized first (modified Gram-Schmidt, dependent views dropped at
/// relative tolerance 1e-10), then subtracted one by one.
ScoreReport lcv_residual(const FeatureVector& b, std::span<const FeatureVector> training);

}  // namespace viewgen
