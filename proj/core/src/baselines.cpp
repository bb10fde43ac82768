#include "viewgen/baselines.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "viewgen/binary_io.hpp"
#include "viewgen/errors.hpp"

namespace viewgen {

namespace {

constexpr char kMagic[] = "VGES";
constexpr std::uint32_t kVersion = 1;
constexpr double kDropTolerance = 1e-10;

Eigen::VectorXd to_eigen(const FeatureVector& x) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x.size()));
  x.for_each_nonzero([&](std::size_t i, double value) { v[static_cast<Eigen::Index>(i)] = value; });
  return v;
}

}  // namespace

ScoreReport euclidean_score(const FeatureVector& b, const FeatureVector& t) {
  const double eps = std::sqrt(squared_distance(b, t));
  return {-eps, ScoreKind::Euclidean, eps};
}

EigenspaceModel::EigenspaceModel(Eigen::VectorXd mean, Eigen::MatrixXd basis, Eigen::VectorXd eigenvalues)
    : mean_(std::move(mean)), basis_(std::move(basis)), eigenvalues_(std::move(eigenvalues)) {
  if (basis_.cols() != mean_.size()) throw InvalidArgument("EigenspaceModel: basis width differs from mean");
  if (eigenvalues_.size() != basis_.rows()) throw InvalidArgument("EigenspaceModel: one eigenvalue per row");
  if (basis_.rows() > basis_.cols()) throw InvalidArgument("EigenspaceModel: k > d");
}

void EigenspaceModel::require_dim(const FeatureVector& x) const {
  if (x.size() != dim())
    throw InvalidArgument("eigenspace: expected dimension " + std::to_string(dim()) + ", got " +
                          std::to_string(x.size()));
}

Eigen::VectorXd EigenspaceModel::coords(const FeatureVector& x) const {
  require_dim(x);
  return basis_ * (to_eigen(x) - mean_);
}

Eigen::VectorXd EigenspaceModel::reconstruct(const FeatureVector& x) const {
  return mean_ + basis_.transpose() * coords(x);
}

double EigenspaceModel::reconstruction_error(const FeatureVector& x) const {
  return (to_eigen(x) - reconstruct(x)).norm();
}

void EigenspaceModel::save(std::ostream& out) const {
  io::write_magic(out, kMagic);
  io::write_le<std::uint32_t>(out, kVersion);
  io::write_le<std::uint64_t>(out, dim());
  io::write_le<std::uint64_t>(out, k());
  for (Eigen::Index i = 0; i < mean_.size(); ++i) io::write_le(out, mean_[i]);
  for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) io::write_le(out, eigenvalues_[i]);
  for (Eigen::Index r = 0; r < basis_.rows(); ++r)
    for (Eigen::Index c = 0; c < basis_.cols(); ++c) io::write_le(out, basis_(r, c));
  if (!out) throw FormatError("EigenspaceModel: write failed");
}

EigenspaceModel EigenspaceModel::load(std::istream& in) {
  io::expect_magic(in, kMagic);
  if (io::read_le<std::uint32_t>(in) != kVersion) throw FormatError("EigenspaceModel: unsupported version");
  const auto d = io::read_le<std::uint64_t>(in);
  const auto k = io::read_le<std::uint64_t>(in);
  if (d == 0 || k > d || d > (1u << 24)) throw FormatError("EigenspaceModel: implausible dimensions");
  Eigen::VectorXd mean(static_cast<Eigen::Index>(d));
  Eigen::VectorXd values(static_cast<Eigen::Index>(k));
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < mean.size(); ++i) mean[i] = io::read_le<double>(in);
  for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = io::read_le<double>(in);
  for (Eigen::Index r = 0; r < basis.rows(); ++r)
    for (Eigen::Index c = 0; c < basis.cols(); ++c) basis(r, c) = io::read_le<double>(in);
  return EigenspaceModel(std::move(mean), std::move(basis), std::move(values));
}

EigenspaceModel fit_eigenspace(std::span<const FeatureVector> views, std::size_t k) {
  if (views.empty()) throw InvalidArgument("fit_eigenspace: no views");
  const std::size_t d = views.front().size();
  if (d == 0) throw InvalidArgument("fit_eigenspace: zero-dimensional views");
  if (k > d) throw InvalidArgument("fit_eigenspace: k exceeds the feature dimension");
  if (views.size() < k + 1) throw InvalidArgument("fit_eigenspace: need at least k + 1 views");
  for (const auto& v : views) require_compatible(views.front(), v, "fit_eigenspace");

  const auto n = static_cast<Eigen::Index>(views.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < n; ++r) x.row(r) = to_eigen(views[static_cast<std::size_t>(r)]).transpose();
  const Eigen::VectorXd mean = x.colwise().mean().transpose();
  x.rowwise() -= mean.transpose();

  // With fewer samples than dimensions, diagonalize the n x n Gram matrix
  // and map its eigenvectors back; both give the covariance eigenvectors.
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  Eigen::VectorXd values(static_cast<Eigen::Index>(k));
  const double scale = 1.0 / static_cast<double>(views.size() - 1);
  if (static_cast<std::size_t>(n) < d) {
    const Eigen::MatrixXd gram = (x * x.transpose()) * scale;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) throw InvalidArgument("fit_eigenspace: eigensolver failed");
    for (std::size_t r = 0; r < k; ++r) {
      const Eigen::Index col = n - 1 - static_cast<Eigen::Index>(r);
      Eigen::VectorXd u = x.transpose() * solver.eigenvectors().col(col);
      const double norm = u.norm();
      values[static_cast<Eigen::Index>(r)] = std::max(0.0, solver.eigenvalues()[col]);
      if (norm > 1e-12) {
        u /= norm;
      } else {
        u.setZero();
      }
      basis.row(static_cast<Eigen::Index>(r)) = u.transpose();
    }
    // Null directions (rank below k) get completed to an orthonormal set.
    for (Eigen::Index r = 0; r < basis.rows(); ++r) {
      if (basis.row(r).norm() > 0.5) continue;
      for (Eigen::Index e = 0; e < static_cast<Eigen::Index>(d); ++e) {
        Eigen::VectorXd cand = Eigen::VectorXd::Unit(static_cast<Eigen::Index>(d), e);
        for (Eigen::Index q = 0; q < basis.rows(); ++q)
          if (q != r && basis.row(q).norm() > 0.5) cand -= basis.row(q).dot(cand) * basis.row(q).transpose();
        if (cand.norm() > 1e-6) {
          basis.row(r) = (cand / cand.norm()).transpose();
          break;
        }
      }
    }
  } else {
    const Eigen::MatrixXd cov = (x.transpose() * x) * scale;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw InvalidArgument("fit_eigenspace: eigensolver failed");
    for (std::size_t r = 0; r < k; ++r) {
      const Eigen::Index col = static_cast<Eigen::Index>(d) - 1 - static_cast<Eigen::Index>(r);
      basis.row(static_cast<Eigen::Index>(r)) = solver.eigenvectors().col(col).transpose();
      values[static_cast<Eigen::Index>(r)] = std::max(0.0, solver.eigenvalues()[col]);
    }
  }
  return EigenspaceModel(mean, std::move(basis), std::move(values));
}

ScoreReport eigenspace_score(const EigenspaceModel& model, const FeatureVector& b, const FeatureVector& t) {
  require_compatible(b, t, "eigenspace_score");
  const double eps = (model.coords(b) - model.coords(t)).norm();
  return {-eps, ScoreKind::Eigenspace, eps};
}

ScoreReport lcv_residual(const FeatureVector& b, std::span<const FeatureVector> training) {
  if (training.empty()) throw InvalidArgument("lcv_residual: no training views");
  for (const auto& t : training) require_compatible(b, t, "lcv_residual");

  std::vector<Eigen::VectorXd> basis;
  basis.reserve(training.size());
  for (const auto& t : training) {
    Eigen::VectorXd v = to_eigen(t);
    const double original = v.norm();
    if (original == 0.0) continue;
    // Two passes keep the basis orthogonal to working precision.
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) v -= q.dot(v) * q;
    const double norm = v.norm();
    if (norm <= kDropTolerance * original) continue;
    basis.push_back(v / norm);
  }

  Eigen::VectorXd r = to_eigen(b);
  for (const auto& q : basis) r -= q.dot(r) * q;
  for (const auto& q : basis) r -= q.dot(r) * q;
  const double eps = r.norm();
  return {-eps, ScoreKind::LinearCombination, eps};
}

}  // namespace viewgen
