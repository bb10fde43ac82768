#include "viewgen/encode.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "viewgen/errors.hpp"

namespace viewgen {

namespace {

constexpr double kCoincidentTolerance = 1e-12;

}  // namespace

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Angles: return "angles";
    case FeatureKind::Locations: return "locations";
    case FeatureKind::FeatureMap: return "featuremap";
    case FeatureKind::Gradient: return "gradient";
  }
  return "unknown";
}

FeatureKind parse_feature_kind(std::string_view name) {
  if (name == "angles") return FeatureKind::Angles;
  if (name == "locations") return FeatureKind::Locations;
  if (name == "featuremap" || name == "feature_map" || name == "fm") return FeatureKind::FeatureMap;
  if (name == "gradient") return FeatureKind::Gradient;
  throw InvalidArgument("unknown feature kind '" + std::string(name) + "'");
}

void GridSpec::validate() const {
  if (!(extent > 0.0) || !std::isfinite(extent)) throw InvalidArgument("GridSpec: extent must be positive");
  if (resolution < 1) throw InvalidArgument("GridSpec: resolution must be >= 1");
}

FeatureVector FeatureVector::angles(std::vector<double> values) {
  if (values.size() != kAngleDim) throw InvalidArgument("angles feature must have 4 entries");
  for (double a : values)
    if (!(a > -std::numbers::pi && a <= std::numbers::pi))
      throw InvalidArgument("angle outside (-pi, pi]");
  FeatureVector f(FeatureKind::Angles, kAngleDim);
  f.values_ = std::make_shared<const std::vector<double>>(std::move(values));
  return f;
}

FeatureVector FeatureVector::locations(std::vector<double> values) {
  if (values.size() != kLocationDim) throw InvalidArgument("locations feature must have 12 entries");
  FeatureVector f(FeatureKind::Locations, kLocationDim);
  f.values_ = std::make_shared<const std::vector<double>>(std::move(values));
  return f;
}

FeatureVector FeatureVector::feature_map(std::size_t dim, std::vector<std::uint32_t> cells) {
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  if (!cells.empty() && cells.back() >= dim) throw InvalidArgument("feature map cell index out of range");
  FeatureVector f(FeatureKind::FeatureMap, dim);
  f.cells_ = std::move(cells);
  return f;
}

FeatureVector FeatureVector::dense(FeatureKind kind, std::vector<double> values) {
  switch (kind) {
    case FeatureKind::Angles: return angles(std::move(values));
    case FeatureKind::Locations: return locations(std::move(values));
    case FeatureKind::FeatureMap: {
      std::vector<std::uint32_t> cells;
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] == 1.0) cells.push_back(static_cast<std::uint32_t>(i));
        else if (values[i] != 0.0) throw InvalidArgument("feature map values must be 0 or 1");
      }
      return feature_map(values.size(), std::move(cells));
    }
    case FeatureKind::Gradient: break;
  }
  FeatureVector f(kind, values.size());
  f.values_ = std::make_shared<const std::vector<double>>(std::move(values));
  return f;
}

double FeatureVector::operator[](std::size_t i) const {
  if (i >= dim_) throw InvalidArgument("feature index out of range");
  if (is_sparse()) return std::binary_search(cells_.begin(), cells_.end(), i) ? 1.0 : 0.0;
  return (*values_)[i];
}

bool FeatureVector::operator==(const FeatureVector& other) const {
  if (kind_ != other.kind_ || dim_ != other.dim_ || cells_ != other.cells_) return false;
  const auto a = values();
  const auto b = other.values();
  return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

std::vector<double> FeatureVector::to_dense() const {
  if (!is_sparse()) return {values().begin(), values().end()};
  std::vector<double> out(dim_, 0.0);
  for (auto c : cells_) out[c] = 1.0;
  return out;
}

void require_compatible(const FeatureVector& a, const FeatureVector& b, std::string_view where) {
  if (a.kind() != b.kind() || a.size() != b.size())
    throw InvalidArgument(std::string(where) + ": feature vectors differ in kind or dimension (" +
                          std::string(to_string(a.kind())) + "/" + std::to_string(a.size()) + " vs " +
                          std::string(to_string(b.kind())) + "/" + std::to_string(b.size()) + ")");
}

double squared_distance(const FeatureVector& a, const FeatureVector& b) {
  require_compatible(a, b, "squared_distance");
  if (a.is_sparse()) {
    // |A xor B| for binary maps.
    const auto ca = a.cells();
    const auto cb = b.cells();
    std::size_t common = 0;
    for (std::size_t i = 0, j = 0; i < ca.size() && j < cb.size();) {
      if (ca[i] == cb[j]) {
        ++common, ++i, ++j;
      } else if (ca[i] < cb[j]) {
        ++i;
      } else {
        ++j;
      }
    }
    return static_cast<double>(ca.size() + cb.size() - 2 * common);
  }
  const auto va = a.values();
  const auto vb = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = va[i] - vb[i];
    s += d * d;
  }
  return s;
}

FeatureVector encode_angles(const View2D& view) {
  const auto& p = view.points();
  for (std::size_t i = 0; i + 1 < kClipVertices; ++i)
    if ((p[i + 1] - p[i]).norm() < kCoincidentTolerance)
      throw DegenerateView("encode_angles: consecutive points " + std::to_string(i) + " and " +
                           std::to_string(i + 1) + " coincide");
  std::vector<double> out(kAngleDim);
  for (std::size_t i = 1; i + 1 < kClipVertices; ++i) {
    const Eigen::Vector2d a = p[i - 1] - p[i];
    const Eigen::Vector2d b = p[i + 1] - p[i];
    const double cross = a.x() * b.y() - a.y() * b.x();
    double angle = std::atan2(cross, a.dot(b));
    if (angle <= -std::numbers::pi) angle = std::numbers::pi;
    out[i - 1] = angle;
  }
  return FeatureVector::angles(std::move(out));
}

FeatureVector encode_locations(const View2D& view) {
  std::vector<double> out;
  out.reserve(kLocationDim);
  for (const auto& p : view.points()) {
    out.push_back(p.x());
    out.push_back(p.y());
  }
  return FeatureVector::locations(std::move(out));
}

View2D decode_locations(const FeatureVector& locations) {
  if (locations.kind() != FeatureKind::Locations) throw InvalidArgument("decode_locations: not a locations vector");
  View2D::Points pts;
  const auto v = locations.values();
  for (std::size_t i = 0; i < kClipVertices; ++i) pts[i] = Eigen::Vector2d(v[2 * i], v[2 * i + 1]);
  return View2D::centered(pts);
}

std::pair<std::uint32_t, std::uint32_t> grid_cell(const GridSpec& grid, double x, double y, bool* clamped) {
  const double scale = grid.resolution / (2.0 * grid.extent);
  const double fr = std::floor((grid.extent - y) * scale);
  const double fc = std::floor((x + grid.extent) * scale);
  const double hi = static_cast<double>(grid.resolution - 1);
  const bool outside = fr < 0.0 || fr > hi || fc < 0.0 || fc > hi;
  if (clamped) *clamped = outside;
  return {static_cast<std::uint32_t>(std::clamp(fr, 0.0, hi)), static_cast<std::uint32_t>(std::clamp(fc, 0.0, hi))};
}

FeatureVector encode_featuremap(const View2D& view, const GridSpec& grid) {
  grid.validate();
  std::vector<std::uint32_t> cells;
  cells.reserve(kClipVertices);
  for (const auto& p : view.points()) {
    const auto [r, c] = grid_cell(grid, p.x(), p.y());
    cells.push_back(r * grid.resolution + c);
  }
  return FeatureVector::feature_map(grid.cells(), std::move(cells));
}

FeatureVector Encoder::operator()(const View2D& view) const {
  switch (kind) {
    case FeatureKind::Angles: return encode_angles(view);
    case FeatureKind::Locations: return encode_locations(view);
    case FeatureKind::FeatureMap: return encode_featuremap(view, grid);
    case FeatureKind::Gradient: break;
  }
  throw InvalidArgument("Encoder: gradient features come from images, not clip views");
}

std::size_t Encoder::dim() const {
  switch (kind) {
    case FeatureKind::Angles: return kAngleDim;
    case FeatureKind::Locations: return kLocationDim;
    case FeatureKind::FeatureMap: return grid.cells();
    case FeatureKind::Gradient: break;
  }
  throw InvalidArgument("Encoder: gradient features have no fixed clip dimension");
}

void write_feature_csv(std::ostream& out, const FeatureVector& v) {
  out << to_string(v.kind());
  std::ostringstream row;
  row << std::setprecision(17);
  if (v.is_sparse()) {
    const auto cells = v.cells();
    std::size_t k = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const bool on = k < cells.size() && cells[k] == i;
      if (on) ++k;
      row << (on ? ",1" : ",0");
    }
  } else {
    for (double x : v.values()) row << ',' << x;
  }
  out << row.str() << '\n';
}

FeatureVector read_feature_csv(std::string_view line) {
  std::string s(line);
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  std::istringstream ss(s);
  std::string tok;
  if (!std::getline(ss, tok, ',')) throw FormatError("empty feature row");
  const FeatureKind kind = parse_feature_kind(tok);
  std::vector<double> values;
  while (std::getline(ss, tok, ',')) {
    std::istringstream num(tok);
    double x;
    if (!(num >> x)) throw FormatError("bad feature value '" + tok + "'");
    values.push_back(x);
  }
  return FeatureVector::dense(kind, std::move(values));
}

}  // namespace viewgen
