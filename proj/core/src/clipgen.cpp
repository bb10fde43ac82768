#include "viewgen/clipgen.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include <Eigen/Geometry>

#include "viewgen/errors.hpp"

namespace viewgen {

namespace {

constexpr double kSegmentTolerance = 1e-9;

}  // namespace

Eigen::Matrix3d rotation_matrix(const ViewParams& p) {
  const double cx = std::cos(p.theta_x), sx = std::sin(p.theta_x);
  const double cy = std::cos(p.theta_y), sy = std::sin(p.theta_y);
  const double cz = std::cos(p.theta_z), sz = std::sin(p.theta_z);
  Eigen::Matrix3d rx, ry, rz;
  rx << 1, 0, 0, 0, cx, -sx, 0, sx, cx;
  ry << cy, 0, sy, 0, 1, 0, -sy, 0, cy;
  rz << cz, -sz, 0, sz, cz, 0, 0, 0, 1;
  return rz * ry * rx;
}

ClipModel3D::ClipModel3D(const Vertices& vertices) : vertices_(vertices) {
  for (std::size_t i = 0; i < kClipSegments; ++i) {
    const double len = (vertices_[i + 1] - vertices_[i]).norm();
    if (!std::isfinite(len) || std::abs(len - 1.0) > kSegmentTolerance)
      throw InvalidArgument("ClipModel3D: segment " + std::to_string(i) + " has length " +
                            std::to_string(len) + ", expected 1");
  }
}

ClipModel3D ClipModel3D::rotated(const Eigen::Matrix3d& rotation) const {
  Vertices out;
  for (std::size_t i = 0; i < kClipVertices; ++i) out[i] = rotation * vertices_[i];
  return ClipModel3D(out);
}

bool ClipModel3D::operator==(const ClipModel3D& other) const {
  for (std::size_t i = 0; i < kClipVertices; ++i)
    if (vertices_[i] != other.vertices_[i]) return false;
  return true;
}

View2D View2D::centered(const Points& points) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(kClipVertices);
  Points out;
  for (std::size_t i = 0; i < kClipVertices; ++i) out[i] = points[i] - mean;
  return View2D(out);
}

View2D View2D::from_centered(const Points& points) {
  View2D v(points);
  if (!(v.centroid().norm() <= 1e-9)) throw InvalidArgument("View2D: points are not centered");
  return v;
}

Eigen::Vector2d View2D::centroid() const {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : points_) mean += p;
  return mean / static_cast<double>(kClipVertices);
}

bool View2D::operator==(const View2D& other) const {
  for (std::size_t i = 0; i < kClipVertices; ++i)
    if (points_[i] != other.points_[i]) return false;
  return true;
}

Eigen::Vector3d random_unit_vector(Rng& rng) {
  for (;;) {
    Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

ClipModel3D generate_clip(Rng& rng) {
  ClipModel3D::Vertices v;
  v[0] = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < kClipSegments; ++i) v[i + 1] = v[i] + random_unit_vector(rng);
  return ClipModel3D(v);
}

Eigen::Matrix3d random_orientation(Rng& rng) {
  for (;;) {
    Eigen::Vector4d q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    const double n = q.norm();
    if (n < 1e-12) continue;
    q /= n;
    return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).toRotationMatrix();
  }
}

View2D project(const ClipModel3D& clip, const ViewParams& params) {
  const Eigen::Matrix3d r = rotation_matrix(params);
  View2D::Points pts;
  for (std::size_t i = 0; i < kClipVertices; ++i) pts[i] = (r * clip.vertex(i)).head<2>();
  return View2D::centered(pts);
}

ViewParams sample_rotation(const RotationSpec& spec, Rng& rng) {
  if (!(spec.range_deg > 0.0) || !std::isfinite(spec.range_deg))
    throw InvalidArgument("sample_rotation: range_deg must be positive");
  const double range = spec.range_deg * std::numbers::pi / 180.0;
  ViewParams p;
  if (spec.mode == RotationMode::Discrete) {
    p.theta_x = rng.coin() ? range : -range;
    p.theta_y = rng.coin() ? range : -range;
  } else {
    p.theta_x = rng.uniform(-range, range);
    p.theta_y = rng.uniform(-range, range);
  }
  return p;
}

ViewParams sample_rotation(double range_deg, Rng& rng) {
  return sample_rotation(RotationSpec::continuous(range_deg), rng);
}

View2D add_view_noise(const View2D& view, double sigma, Rng& rng) {
  if (sigma < 0.0) throw InvalidArgument("add_view_noise: sigma must be nonnegative");
  if (sigma == 0.0) return view;
  View2D::Points pts = view.points();
  for (auto& p : pts) p += Eigen::Vector2d(rng.normal(), rng.normal()) * sigma;
  return View2D::centered(pts);
}

ClipModel3D ClipSource::clip(std::uint64_t id) const {
  Rng rng = Rng::stream(seed_, domain_, id);
  return generate_clip(rng);
}

std::vector<ClipModel3D> ClipSource::clips(std::uint64_t first_id, std::size_t count) const {
  std::vector<ClipModel3D> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(clip(first_id + i));
  return out;
}

// ---------------------------------------------------------------------------
// Text serialization

namespace {

struct Header {
  std::string tag;
  std::vector<std::pair<std::string, std::string>> fields;

  const std::string& get(const std::string& key) const {
    for (const auto& [k, v] : fields)
      if (k == key) return v;
    throw FormatError("header missing field '" + key + "'");
  }
};

Header parse_header(const std::string& line) {
  std::istringstream ss(line.substr(1));
  Header h;
  ss >> h.tag;
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw FormatError("malformed header token '" + tok + "'");
    h.fields.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
  }
  return h;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw FormatError("bad integer '" + s + "'");
  return v;
}

double to_double(const std::string& s) {
  std::istringstream ss(s);
  double v;
  if (!(ss >> v)) throw FormatError("bad number '" + s + "'");
  return v;
}

// Splits a stream into records: header line plus the following data rows.
template <typename OnRecord>
void for_each_record(std::istream& in, const std::string& tag, OnRecord&& on_record) {
  std::string line;
  std::optional<Header> header;
  std::vector<std::vector<double>> rows;
  auto flush = [&] {
    if (header) on_record(*header, rows);
    rows.clear();
  };
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line[0] == '#') {
      Header h = parse_header(line);
      if (h.tag != tag) throw FormatError("expected '# " + tag + "' header, got '" + line + "'");
      flush();
      header = std::move(h);
      continue;
    }
    if (!header) throw FormatError("data row before header");
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) row.push_back(to_double(tok));
    rows.push_back(std::move(row));
  }
  flush();
}

}  // namespace

void write_clip(std::ostream& out, const ClipRecord& record) {
  out << "# clip seed=" << record.seed << " id=" << record.id << '\n';
  out << std::setprecision(17);
  for (const auto& v : record.clip.vertices()) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
}

void write_view(std::ostream& out, const ViewRecord& record) {
  out << std::setprecision(17);
  out << "# view seed=" << record.seed << " theta_x=" << record.params.theta_x
      << " theta_y=" << record.params.theta_y << " theta_z=" << record.params.theta_z << '\n';
  for (const auto& p : record.view.points()) out << p.x() << ' ' << p.y() << '\n';
}

std::vector<ClipRecord> read_clips(std::istream& in) {
  std::vector<ClipRecord> out;
  for_each_record(in, "clip", [&](const Header& h, const std::vector<std::vector<double>>& rows) {
    if (rows.size() != kClipVertices) throw FormatError("clip record needs 6 vertex rows");
    ClipModel3D::Vertices v;
    for (std::size_t i = 0; i < kClipVertices; ++i) {
      if (rows[i].size() != 3) throw FormatError("clip vertex row needs 3 coordinates");
      v[i] = Eigen::Vector3d(rows[i][0], rows[i][1], rows[i][2]);
    }
    out.push_back(ClipRecord{ClipModel3D(v), to_u64(h.get("seed")), to_u64(h.get("id"))});
  });
  return out;
}

std::vector<ViewRecord> read_views(std::istream& in) {
  std::vector<ViewRecord> out;
  for_each_record(in, "view", [&](const Header& h, const std::vector<std::vector<double>>& rows) {
    if (rows.size() != kClipVertices) throw FormatError("view record needs 6 point rows");
    View2D::Points p;
    for (std::size_t i = 0; i < kClipVertices; ++i) {
      if (rows[i].size() != 2) throw FormatError("view point row needs 2 coordinates");
      p[i] = Eigen::Vector2d(rows[i][0], rows[i][1]);
    }
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& q : p) mean += q;
    if (!(mean.norm() / static_cast<double>(kClipVertices) <= 1e-9)) throw FormatError("view record is not centered");
    ViewParams params{to_double(h.get("theta_x")), to_double(h.get("theta_y")),
                      to_double(h.get("theta_z"))};
    out.push_back(ViewRecord{View2D::from_centered(p), to_u64(h.get("seed")), params});
  });
  return out;
}

}  // namespace viewgen
