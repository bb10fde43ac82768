#pragma once

// Feature encodings of 2D views: interior angles, ordered vertex locations,
// and binary occupancy grids ("feature maps").

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "viewgen/clipgen.hpp"

namespace viewgen {

enum class FeatureKind : std::uint32_t {
  Angles = 0,
  Locations = 1,
  FeatureMap = 2,
  Gradient = 3,  ///< dense image gradient features (COIL)
};

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view name);

inline constexpr std::size_t kAngleDim = kClipVertices - 2;
inline constexpr std::size_t kLocationDim = 2 * kClipVertices;

/// Square window centered on the view centroid, split into
/// `resolution` x `resolution` cells.
struct GridSpec {
  double extent = 3.5;  ///< half-width, model units
  std::uint32_t resolution = 40;

  std::size_t cells() const { return static_cast<std::size_t>(resolution) * resolution; }
  void validate() const;
  bool operator==(const GridSpec&) const = default;
};

/// An encoded view.
///
/// Dense kinds keep their values; feature maps keep the sorted list of
/// occupied cells, so memory scales with popcount rather than grid size.
/// Values are immutable and shared between copies.
class FeatureVector {
 public:
  /// Empty dense vector (dimension 0); placeholder for containers.
  FeatureVector() = default;

  /// Signed interior angles, length 4, each in (-pi, pi].
  static FeatureVector angles(std::vector<double> values);
  /// (x0, y0, ..., x5, y5).
  static FeatureVector locations(std::vector<double> values);
  /// Binary map of `dim` cells; `cells` are the indices set to 1.
  static FeatureVector feature_map(std::size_t dim, std::vector<std::uint32_t> cells);
  /// Generic dense vector of the given kind (not FeatureMap).
  static FeatureVector dense(FeatureKind kind, std::vector<double> values);

  FeatureKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return dim_; }
  bool is_sparse() const noexcept { return kind_ == FeatureKind::FeatureMap; }

  double operator[](std::size_t i) const;

  /// Dense values; empty for feature maps (use `cells()` or `to_dense()`).
  std::span<const double> values() const noexcept {
    return values_ ? std::span<const double>(*values_) : std::span<const double>();
  }
  /// Sorted occupied cells; empty for dense kinds.
  std::span<const std::uint32_t> cells() const noexcept { return cells_; }
  std::size_t popcount() const noexcept { return cells_.size(); }

  std::vector<double> to_dense() const;

  /// Calls `fn(index, value)` for every nonzero entry, ascending index.
  template <typename Fn>
  void for_each_nonzero(Fn&& fn) const {
    if (is_sparse()) {
      for (auto c : cells_) fn(static_cast<std::size_t>(c), 1.0);
    } else {
      const auto v = values();
      for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] != 0.0) fn(i, v[i]);
    }
  }

  bool operator==(const FeatureVector& other) const;

 private:
  FeatureVector(FeatureKind kind, std::size_t dim) : kind_(kind), dim_(dim) {}

  FeatureKind kind_ = FeatureKind::Locations;
  std::size_t dim_ = 0;
  std::shared_ptr<const std::vector<double>> values_;
  std::vector<std::uint32_t> cells_;
};

/// Throws InvalidArgument unless `a` and `b` share kind and dimension.
void require_compatible(const FeatureVector& a, const FeatureVector& b, std::string_view where);

double squared_distance(const FeatureVector& a, const FeatureVector& b);

/// Throws DegenerateView if two consecutive points coincide within 1e-12.
FeatureVector encode_angles(const View2D& view);
FeatureVector encode_locations(const View2D& view);
/// Inverse of encode_locations.
View2D decode_locations(const FeatureVector& locations);
/// Row `r` counts down from +y (top) and column `c` up from -x (left);
/// out-of-window vertices clamp to the border cell.
FeatureVector encode_featuremap(const View2D& view, const GridSpec& grid = {});

/// (row, column) of the cell containing (x, y), clamped into the grid.
/// `clamped` is set when the point lies outside the window.
std::pair<std::uint32_t, std::uint32_t> grid_cell(const GridSpec& grid, double x, double y,
                                                  bool* clamped = nullptr);

/// Encoder selected at run time; bundles the grid for feature maps.
struct Encoder {
  FeatureKind kind = FeatureKind::FeatureMap;
  GridSpec grid{};

  FeatureVector operator()(const View2D& view) const;
  std::size_t dim() const;
};

/// CSV row: kind tag followed by the dense values.
void write_feature_csv(std::ostream& out, const FeatureVector& v);
FeatureVector read_feature_csv(std::string_view line);

}  // namespace viewgen
