#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "viewgen/encode.hpp"
#include "viewgen/errors.hpp"

using namespace viewgen;

namespace {

constexpr double kPi = std::numbers::pi;

View2D view_of(std::initializer_list<std::pair<double, double>> pts) {
  View2D::Points p;
  std::size_t i = 0;
  for (auto [x, y] : pts) p[i++] = Eigen::Vector2d(x, y);
  return View2D::centered(p);
}

View2D random_view(Rng& rng) {
  const auto clip = generate_clip(rng).rotated(random_orientation(rng));
  return project(clip);
}

// Law of cosines for the magnitude and the 2D orientation determinant for the
// sign; shares nothing with the atan2 formulation.
double oracle_angle(const Eigen::Vector2d& prev, const Eigen::Vector2d& at, const Eigen::Vector2d& next) {
  const double a = (prev - at).norm(), b = (next - at).norm(), c = (next - prev).norm();
  const double cosine = std::clamp((a * a + b * b - c * c) / (2 * a * b), -1.0, 1.0);
  const double mag = std::acos(cosine);
  const double orient = (prev.x() - at.x()) * (next.y() - at.y()) - (prev.y() - at.y()) * (next.x() - at.x());
  return orient < 0 ? -mag : mag;
}

}  // namespace

TEST(EncodeAngles, CollinearClipIsStraight) {
  const auto f = encode_angles(view_of({{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}, {5, 0}}));
  ASSERT_EQ(f.size(), 4u);
  for (double a : f.values()) EXPECT_DOUBLE_EQ(a, kPi);
}

TEST(EncodeAngles, RightAngleZigzag) {
  // Staircase: turns alternate left and right, so signs alternate.
  const auto f = encode_angles(view_of({{0, 0}, {1, 0}, {1, 1}, {2, 1}, {2, 2}, {3, 2}}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(f[i]), kPi / 2, 1e-9);
  EXPECT_LT(f[0] * f[1], 0.0);
  EXPECT_LT(f[1] * f[2], 0.0);
}

TEST(EncodeAngles, MatchesIndependentOracle) {
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) {
    const auto view = random_view(rng);
    const auto f = encode_angles(view);
    const auto& p = view.points();
    for (std::size_t i = 1; i <= 4; ++i) {
      const double expected = oracle_angle(p[i - 1], p[i], p[i + 1]);
      // +pi and -pi are the same straight angle.
      const double diff = std::remainder(f[i - 1] - expected, 2 * kPi);
      EXPECT_LT(std::abs(diff), 1e-9);
      EXPECT_GT(f[i - 1], -kPi);
      EXPECT_LE(f[i - 1], kPi);
    }
  }
}

TEST(EncodeAngles, CoincidentPointsAreDegenerate) {
  EXPECT_THROW(encode_angles(view_of({{0, 0}, {1, 0}, {1, 0}, {2, 1}, {2, 2}, {3, 2}})), DegenerateView);
}

TEST(EncodeAngles, InvariantUnderRigidMotion) {
  Rng rng(2);
  for (int k = 0; k < 300; ++k) {
    const auto view = random_view(rng);
    const double phi = rng.uniform(-kPi, kPi);
    const Eigen::Rotation2Dd r(phi);
    const Eigen::Vector2d shift(rng.uniform(-5, 5), rng.uniform(-5, 5));
    View2D::Points moved;
    for (std::size_t i = 0; i < kClipVertices; ++i) moved[i] = r * view.point(i) + shift;
    const auto a = encode_angles(view);
    const auto b = encode_angles(View2D::centered(moved));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_LT(std::abs(std::remainder(a[i] - b[i], 2 * kPi)), 1e-9);
  }
}

TEST(EncodeLocations, CenteredSumsVanish) {
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const auto f = encode_locations(random_view(rng));
    ASSERT_EQ(f.size(), 12u);
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < 12; i += 2) sx += f[i], sy += f[i + 1];
    EXPECT_NEAR(sx, 0, 1e-9);
    EXPECT_NEAR(sy, 0, 1e-9);
  }
}

TEST(EncodeLocations, DecodeInverts) {
  Rng rng(4);
  const auto view = random_view(rng);
  const auto back = decode_locations(encode_locations(view));
  for (std::size_t i = 0; i < kClipVertices; ++i) EXPECT_LT((back.point(i) - view.point(i)).norm(), 1e-12);
}

TEST(EncodeLocations, ReversedOrderIsADistinctPermutation) {
  Rng rng(5);
  const auto view = random_view(rng);
  View2D::Points rev;
  for (std::size_t i = 0; i < kClipVertices; ++i) rev[i] = view.point(kClipVertices - 1 - i);
  const auto a = encode_locations(view);
  const auto b = encode_locations(View2D::centered(rev));
  EXPECT_FALSE(a == b);
  auto va = a.to_dense(), vb = b.to_dense();
  std::sort(va.begin(), va.end());
  std::sort(vb.begin(), vb.end());
  for (std::size_t i = 0; i < va.size(); ++i) EXPECT_NEAR(va[i], vb[i], 1e-12);
}

TEST(EncodeFeatureMap, OriginLandsInCentreCell) {
  const GridSpec grid{2.5, 40};
  const auto [r, c] = grid_cell(grid, 0.0, 0.0);
  EXPECT_EQ(r, 20u);
  EXPECT_EQ(c, 20u);
  const auto f = encode_featuremap(view_of({{0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}}), grid);
  ASSERT_EQ(f.popcount(), 1u);
  EXPECT_EQ(f.cells()[0], 20u * 40u + 20u);
  EXPECT_EQ(f[820], 1.0);
  EXPECT_EQ(f.size(), 1600u);
}

TEST(EncodeFeatureMap, RowsCountDownFromTopColumnsFromLeft) {
  const GridSpec grid{2.0, 4};
  EXPECT_EQ(grid_cell(grid, -1.9, 1.9), std::make_pair(0u, 0u));
  EXPECT_EQ(grid_cell(grid, 1.9, -1.9), std::make_pair(3u, 3u));
  bool clamped = false;
  EXPECT_EQ(grid_cell(grid, 10.0, 0.1, &clamped), std::make_pair(1u, 3u));
  EXPECT_TRUE(clamped);
  grid_cell(grid, 0.5, 0.5, &clamped);
  EXPECT_FALSE(clamped);
}

TEST(EncodeFeatureMap, DistinctCellsGiveSixBits) {
  const auto f = encode_featuremap(view_of({{-2, -2}, {-1, -1}, {0, 0}, {1, 1}, {2, 2}, {0, 1}}));
  EXPECT_EQ(f.popcount(), 6u);
}

TEST(EncodeFeatureMap, PopcountBetweenOneAndSix) {
  Rng rng(6);
  for (int k = 0; k < 2000; ++k) {
    const auto f = encode_featuremap(random_view(rng));
    EXPECT_GE(f.popcount(), 1u);
    EXPECT_LE(f.popcount(), 6u);
    for (double v : f.to_dense()) EXPECT_TRUE(v == 0.0 || v == 1.0);
  }
}

TEST(EncodeFeatureMap, ClampingIsRareAtDefaultExtent) {
  Rng rng(7);
  const GridSpec grid{};
  std::size_t clamped = 0, total = 0;
  for (int k = 0; k < 10000; ++k) {
    const auto view = random_view(rng);
    for (const auto& p : view.points()) {
      bool c = false;
      grid_cell(grid, p.x(), p.y(), &c);
      clamped += c;
      ++total;
    }
  }
  EXPECT_LT(static_cast<double>(clamped) / static_cast<double>(total), 0.01);
}

TEST(FeatureVector, ValidatesConstruction) {
  EXPECT_THROW(FeatureVector::angles({1, 2, 3}), InvalidArgument);
  EXPECT_THROW(FeatureVector::angles({-kPi, 0, 0, 0}), InvalidArgument);
  EXPECT_NO_THROW(FeatureVector::angles({kPi, 0, 0, 0}));
  EXPECT_THROW(FeatureVector::locations(std::vector<double>(10, 0.0)), InvalidArgument);
  EXPECT_THROW(FeatureVector::feature_map(16, {16}), InvalidArgument);
  EXPECT_THROW(FeatureVector::dense(FeatureKind::FeatureMap, {0, 0.5}), InvalidArgument);
  const auto fm = FeatureVector::feature_map(16, {5, 3, 5});
  EXPECT_EQ(fm.popcount(), 2u);
  EXPECT_EQ(fm.cells()[0], 3u);
}

TEST(FeatureVector, SquaredDistance) {
  const auto a = FeatureVector::feature_map(16, {1, 2, 3});
  const auto b = FeatureVector::feature_map(16, {3, 4});
  EXPECT_EQ(squared_distance(a, b), 3.0);
  EXPECT_THROW(squared_distance(a, FeatureVector::feature_map(9, {1})), InvalidArgument);
  const auto x = FeatureVector::locations(std::vector<double>(12, 1.0));
  const auto y = FeatureVector::locations(std::vector<double>(12, 0.0));
  EXPECT_DOUBLE_EQ(squared_distance(x, y), 12.0);
  EXPECT_THROW(squared_distance(a, x), InvalidArgument);
}

TEST(FeatureCsv, RoundTrip) {
  Rng rng(8);
  const auto view = random_view(rng);
  for (const auto& f : {encode_angles(view), encode_locations(view), encode_featuremap(view)}) {
    std::stringstream ss;
    write_feature_csv(ss, f);
    std::string line;
    std::getline(ss, line);
    EXPECT_EQ(line.substr(0, line.find(',')), to_string(f.kind()));
    EXPECT_EQ(read_feature_csv(line), f);
  }
  EXPECT_THROW(read_feature_csv("angles,1,x,3,4"), FormatError);
  EXPECT_THROW(read_feature_csv("bogus,1"), InvalidArgument);
}

TEST(Encoder, DispatchesByKind) {
  Rng rng(9);
  const auto view = random_view(rng);
  EXPECT_EQ(Encoder{FeatureKind::Angles}(view), encode_angles(view));
  EXPECT_EQ(Encoder{FeatureKind::Locations}(view).size(), 12u);
  EXPECT_EQ((Encoder{FeatureKind::FeatureMap, GridSpec{2.5, 10}}.dim()), 100u);
  EXPECT_THROW(Encoder{FeatureKind::Gradient}(view), InvalidArgument);
}
