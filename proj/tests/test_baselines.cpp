#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "viewgen/baselines.hpp"
#include "viewgen/errors.hpp"
#include "viewgen/rng.hpp"

using namespace viewgen;

namespace {

FeatureVector vec(const Eigen::VectorXd& x) {
  return FeatureVector::dense(FeatureKind::Gradient, std::vector<double>(x.data(), x.data() + x.size()));
}

Eigen::VectorXd gaussian(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.normal();
  return x;
}

Eigen::MatrixXd gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) m.col(j) = gaussian(rng, rows);
  return m;
}

Eigen::MatrixXd orthonormal_columns(Rng& rng, Eigen::Index d, Eigen::Index k) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(rng, d, k));
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
}

}  // namespace

TEST(Euclidean, DistanceCases) {
  const auto a = FeatureVector::feature_map(16, {1, 2, 3});
  EXPECT_EQ(euclidean_score(a, a).epsilon, 0.0);
  const auto r = euclidean_score(a, FeatureVector::feature_map(16, {3, 4}));
  EXPECT_DOUBLE_EQ(r.epsilon, std::sqrt(3.0));
  EXPECT_EQ(r.score, -r.epsilon);
  EXPECT_EQ(r.kind, ScoreKind::Euclidean);
  Eigen::VectorXd x(2), y(2);
  x << 0, 0;
  y << 3, 4;
  EXPECT_DOUBLE_EQ(euclidean_score(vec(x), vec(y)).epsilon, 5.0);
  EXPECT_THROW(euclidean_score(a, vec(x)), InvalidArgument);
}

TEST(Euclidean, TriangleInequality) {
  Rng rng(1);
  for (int k = 0; k < 500; ++k) {
    const auto a = vec(gaussian(rng, 7)), b = vec(gaussian(rng, 7)), c = vec(gaussian(rng, 7));
    EXPECT_LE(euclidean_score(a, c).epsilon, euclidean_score(a, b).epsilon + euclidean_score(b, c).epsilon + 1e-12);
  }
}

TEST(Eigenspace, RecoversPlaneInThreeDimensions) {
  Rng rng(2);
  Eigen::Vector3d n(1, 2, -1);
  n.normalize();
  std::vector<FeatureVector> views;
  for (int k = 0; k < 200; ++k) {
    Eigen::Vector3d p = gaussian(rng, 3);
    p -= n * n.dot(p);
    views.push_back(vec(p + Eigen::Vector3d(1, 1, 1)));
  }
  const auto m = fit_eigenspace(views, 2);
  EXPECT_LT(std::abs((m.basis() * n).norm()), 1e-9);
  EXPECT_LT((m.mean() - Eigen::Vector3d(1, 1, 1)).norm(), 0.3);
  EXPECT_EQ(m.dim(), 3u);
  EXPECT_EQ(m.k(), 2u);
  EXPECT_GE(m.eigenvalues()[0], m.eigenvalues()[1]);
  for (const auto& v : views) EXPECT_LT(m.reconstruction_error(v), 1e-9);
}

TEST(Eigenspace, BasisIsOrthonormal) {
  Rng rng(3);
  for (auto [n, d, k] : {std::tuple{50, 10, 10}, std::tuple{30, 200, 20}, std::tuple{100, 60, 5}, std::tuple{11, 40, 10}}) {
    std::vector<FeatureVector> views;
    const Eigen::VectorXd scales = (gaussian(rng, d).array().abs() + 0.1).matrix();
    for (int v = 0; v < n; ++v) views.push_back(vec(gaussian(rng, d).cwiseProduct(scales)));
    const auto m = fit_eigenspace(views, static_cast<std::size_t>(k));
    ASSERT_EQ(m.k(), static_cast<std::size_t>(k));
    const Eigen::MatrixXd gram = m.basis() * m.basis().transpose();
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-9) << n << " " << d << " " << k;
    for (Eigen::Index i = 1; i < m.eigenvalues().size(); ++i) EXPECT_GE(m.eigenvalues()[i - 1], m.eigenvalues()[i]);
  }
}

TEST(Eigenspace, RecoversPlantedSubspaceUnderNoise) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index d = 50, k = 5;
    const Eigen::MatrixXd u = orthonormal_columns(rng, d, k);
    const Eigen::VectorXd mean = gaussian(rng, d);
    std::vector<FeatureVector> views;
    for (int v = 0; v < 300; ++v) views.push_back(vec(mean + u * (3.0 * gaussian(rng, k)) + 0.01 * gaussian(rng, d)));
    const auto m = fit_eigenspace(views, k);
    // Largest principal angle from the smallest singular value of B U.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.basis() * u);
    const double smallest = svd.singularValues().minCoeff();
    EXPECT_LT(std::acos(std::min(1.0, smallest)), 0.05);
  }
}

TEST(Eigenspace, FullRankKeepsEverything) {
  Rng rng(5);
  std::vector<FeatureVector> views;
  for (int v = 0; v < 12; ++v) views.push_back(vec(gaussian(rng, 6)));
  const auto m = fit_eigenspace(views, 6);
  for (int k = 0; k < 20; ++k) {
    const auto x = vec(gaussian(rng, 6));
    EXPECT_LT(m.reconstruction_error(x), 1e-9);
    const auto y = vec(gaussian(rng, 6));
    EXPECT_NEAR(eigenspace_score(m, x, y).epsilon, euclidean_score(x, y).epsilon, 1e-9);
  }
}

TEST(Eigenspace, ReconstructionErrorShrinksWithK) {
  Rng rng(6);
  std::vector<FeatureVector> views;
  for (int v = 0; v < 40; ++v) views.push_back(vec(gaussian(rng, 15)));
  const auto probe = vec(gaussian(rng, 15));
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= 15; ++k) {
    const double e = fit_eigenspace(views, k).reconstruction_error(probe);
    EXPECT_LE(e, prev + 1e-9);
    prev = e;
  }
}

TEST(Eigenspace, ProjectionContracts) {
  Rng rng(7);
  std::vector<FeatureVector> views;
  for (int v = 0; v < 60; ++v) views.push_back(vec(gaussian(rng, 30)));
  const auto m = fit_eigenspace(views, 8);
  for (int k = 0; k < 1000; ++k) {
    const auto b = vec(gaussian(rng, 30)), t = vec(gaussian(rng, 30));
    const auto r = eigenspace_score(m, b, t);
    EXPECT_LE(r.epsilon, euclidean_score(b, t).epsilon + 1e-12);
    EXPECT_EQ(r.kind, ScoreKind::Eigenspace);
    EXPECT_EQ(r.score, -r.epsilon);
  }
}

TEST(Eigenspace, DifferenceOrthogonalToBasisScoresZero) {
  Rng rng(8);
  std::vector<FeatureVector> views;
  for (int v = 0; v < 40; ++v) views.push_back(vec(gaussian(rng, 20)));
  const auto m = fit_eigenspace(views, 4);
  for (int k = 0; k < 50; ++k) {
    const Eigen::VectorXd b = gaussian(rng, 20);
    Eigen::VectorXd off = gaussian(rng, 20);
    off -= m.basis().transpose() * (m.basis() * off);
    EXPECT_LT(eigenspace_score(m, vec(b), vec(b + off)).epsilon, 1e-9);
  }
}

TEST(Eigenspace, RejectsBadInput) {
  Rng rng(9);
  std::vector<FeatureVector> views;
  for (int v = 0; v < 5; ++v) views.push_back(vec(gaussian(rng, 4)));
  EXPECT_THROW(fit_eigenspace({}, 1), InvalidArgument);
  EXPECT_THROW(fit_eigenspace(views, 5), InvalidArgument);
  EXPECT_THROW(fit_eigenspace(std::span(views).first(3), 3), InvalidArgument);
  auto mixed = views;
  mixed.push_back(vec(gaussian(rng, 3)));
  EXPECT_THROW(fit_eigenspace(mixed, 2), InvalidArgument);
  const auto m = fit_eigenspace(views, 2);
  EXPECT_THROW(m.coords(vec(gaussian(rng, 3))), InvalidArgument);
}

TEST(Eigenspace, SaveLoadRoundTrip) {
  Rng rng(10);
  std::vector<FeatureVector> views;
  for (int v = 0; v < 30; ++v) views.push_back(vec(gaussian(rng, 12)));
  const auto m = fit_eigenspace(views, 5);
  std::stringstream ss;
  m.save(ss);
  const auto bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 4), "VGES");
  const auto back = EigenspaceModel::load(ss);
  EXPECT_EQ(back.basis(), m.basis());
  EXPECT_EQ(back.mean(), m.mean());
  EXPECT_EQ(back.eigenvalues(), m.eigenvalues());
  std::stringstream truncated(bytes.substr(0, bytes.size() - 8));
  EXPECT_THROW(EigenspaceModel::load(truncated), FormatError);
}

TEST(Lcv, InSpanIsZeroAndOrthogonalIsNorm) {
  Rng rng(11);
  const Eigen::MatrixXd g = gaussian(rng, 10, 3);
  std::vector<FeatureVector> training;
  for (int j = 0; j < 3; ++j) training.push_back(vec(g.col(j)));
  const Eigen::VectorXd inside = g * gaussian(rng, 3);
  const auto r = lcv_residual(vec(inside), training);
  EXPECT_LT(r.epsilon, 1e-9);
  EXPECT_EQ(r.kind, ScoreKind::LinearCombination);
  Eigen::VectorXd outside = gaussian(rng, 10);
  const Eigen::MatrixXd q = orthonormal_columns(rng, 10, 10);
  // Build an orthogonal vector by projecting out span(g) with a QR of g.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd qg = qr.householderQ() * Eigen::MatrixXd::Identity(10, 3);
  outside -= qg * (qg.transpose() * outside);
  EXPECT_NEAR(lcv_residual(vec(outside), training).epsilon, outside.norm(), 1e-9);
  EXPECT_GT(lcv_residual(vec(q.col(0) + outside), training).epsilon, 0.0);
}

TEST(Lcv, MatchesLeastSquaresOracleIncludingRankDeficient) {
  Rng rng(12);
  int rank_deficient = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index d = 5 + static_cast<Eigen::Index>(rng.below(30));
    const Eigen::Index r = 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(std::min<Eigen::Index>(d - 1, 8))));
    const Eigen::Index extra = static_cast<Eigen::Index>(rng.below(4));
    // Training set G plus redundant combinations G M: rank r regardless of extra.
    const Eigen::MatrixXd g = gaussian(rng, d, r);
    Eigen::MatrixXd t(d, r + extra);
    t << g, g * gaussian(rng, r, extra);
    rank_deficient += extra > 0;
    std::vector<FeatureVector> training;
    for (Eigen::Index j = 0; j < t.cols(); ++j) training.push_back(vec(t.col(j)));
    const Eigen::VectorXd b = gaussian(rng, d);
    // Normal equations on the independent columns only.
    const Eigen::VectorXd coef = (g.transpose() * g).ldlt().solve(g.transpose() * b);
    const double oracle = (b - g * coef).norm();
    EXPECT_NEAR(lcv_residual(vec(b), training).epsilon, oracle, 1e-8) << "d=" << d << " r=" << r << " extra=" << extra;
  }
  EXPECT_GT(rank_deficient, 500);
}

TEST(Lcv, EmptyOrMismatchedTrainingThrows) {
  Eigen::VectorXd b(3);
  b << 1, 2, 2;
  EXPECT_THROW(lcv_residual(vec(b), {}), InvalidArgument);
  const std::vector<FeatureVector> training{vec(Eigen::VectorXd::Ones(4))};
  EXPECT_THROW(lcv_residual(vec(b), training), InvalidArgument);
}
