#pragma once

// Synthetic paperclip objects: random 3D wireframes of unit segments, viewing
// rotations, and centered orthographic 2D views.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "viewgen/rng.hpp"

namespace viewgen {

inline constexpr std::size_t kClipVertices = 6;
inline constexpr std::size_t kClipSegments = kClipVertices - 1;

/// Axis angles in radians. The rotation they describe is Rz * Ry * Rx
/// applied to column vectors.
struct ViewParams {
  double theta_x = 0.0;
  double theta_y = 0.0;
  double theta_z = 0.0;

  bool operator==(const ViewParams&) const = default;
};

Eigen::Matrix3d rotation_matrix(const ViewParams& params);

/// A 3D wireframe: six vertices joined by five unit-length segments.
class ClipModel3D {
 public:
  using Vertices = std::array<Eigen::Vector3d, kClipVertices>;

  /// Validates the unit-segment invariant (tolerance 1e-9).
  explicit ClipModel3D(const Vertices& vertices);

  const Vertices& vertices() const noexcept { return vertices_; }
  const Eigen::Vector3d& vertex(std::size_t i) const { return vertices_.at(i); }

  /// The same clip after applying `rotation` to every vertex.
  ClipModel3D rotated(const Eigen::Matrix3d& rotation) const;
  ClipModel3D rotated(const ViewParams& params) const { return rotated(rotation_matrix(params)); }

  bool operator==(const ClipModel3D& other) const;

 private:
  Vertices vertices_;
};

/// A centered orthographic projection of a clip; points are in vertex order.
class View2D {
 public:
  using Points = std::array<Eigen::Vector2d, kClipVertices>;

  /// Subtracts the centroid, so the stored points always average to zero.
  static View2D centered(const Points& points);
  /// Keeps `points` as given; they must already average to zero (within
  /// 1e-9). Used when reading views back so they round-trip exactly.
  static View2D from_centered(const Points& points);

  const Points& points() const noexcept { return points_; }
  const Eigen::Vector2d& point(std::size_t i) const { return points_.at(i); }
  Eigen::Vector2d centroid() const;

  bool operator==(const View2D& other) const;

 private:
  explicit View2D(const Points& points) : points_(points) {}
  Points points_;
};

enum class RotationMode {
  Continuous,  ///< theta uniform on [-range, +range]
  Discrete,    ///< theta drawn from {-range, +range}
};

/// How target views are rotated relative to a training view.
struct RotationSpec {
  double range_deg = 40.0;
  RotationMode mode = RotationMode::Continuous;

  static RotationSpec continuous(double range_deg) { return {range_deg, RotationMode::Continuous}; }
  static RotationSpec discrete(double range_deg) { return {range_deg, RotationMode::Discrete}; }
};

/// Five unit vectors with uniformly random directions, placed end to end
/// starting at the origin.
ClipModel3D generate_clip(Rng& rng);

/// Uniformly distributed unit vector in R^3.
Eigen::Vector3d random_unit_vector(Rng& rng);

/// Uniformly distributed (Haar) rotation, used to put a clip in a random pose
/// before views are taken relative to that pose.
Eigen::Matrix3d random_orientation(Rng& rng);

/// Rotate by `params`, drop z, subtract the 2D centroid.
View2D project(const ClipModel3D& clip, const ViewParams& params = {});

/// theta_x and theta_y per `spec`; theta_z = 0. Throws InvalidArgument when
/// range_deg is not positive.
ViewParams sample_rotation(const RotationSpec& spec, Rng& rng);
ViewParams sample_rotation(double range_deg, Rng& rng);

/// Optional additive Gaussian noise on view coordinates (re-centered after).
/// Experiments run with sigma = 0, in which case the view is returned as is.
View2D add_view_noise(const View2D& view, double sigma, Rng& rng);

/// Deterministic clip catalogue: clip `id` in `domain` is a pure function of
/// (seed, domain, id). Training and novel clips come from different domains.
class ClipSource {
 public:
  ClipSource(RngSeed seed, SeedDomain domain) : seed_(seed), domain_(domain) {}

  ClipModel3D clip(std::uint64_t id) const;
  std::vector<ClipModel3D> clips(std::uint64_t first_id, std::size_t count) const;

  RngSeed seed() const noexcept { return seed_; }
  SeedDomain domain() const noexcept { return domain_; }

 private:
  RngSeed seed_;
  SeedDomain domain_;
};

// Text format: a '#' header line followed by one whitespace-separated row per
// vertex. Several records may be concatenated in one stream.

struct ClipRecord {
  ClipModel3D clip;
  std::uint64_t seed = 0;
  std::uint64_t id = 0;
};

struct ViewRecord {
  View2D view;
  std::uint64_t seed = 0;
  ViewParams params;
};

void write_clip(std::ostream& out, const ClipRecord& record);
void write_view(std::ostream& out, const ViewRecord& record);
std::vector<ClipRecord> read_clips(std::istream& in);
std::vector<ViewRecord> read_views(std::istream& in);

}  // namespace viewgen
