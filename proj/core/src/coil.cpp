#include "viewgen/coil.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <regex>
#include <set>
#include <tuple>

#include "viewgen/baselines.hpp"
#include "viewgen/binary_io.hpp"
#include "viewgen/errors.hpp"
#include "viewgen/parallel.hpp"
#include "viewgen/recognize.hpp"

namespace viewgen {

namespace {

constexpr char kCacheMagic[] = "VGCF";
constexpr std::uint32_t kCacheVersion = 1;

FeatureVector gradient_vector(std::vector<double> values) {
  for (auto& v : values) v = static_cast<double>(static_cast<float>(v));
  return FeatureVector::dense(FeatureKind::Gradient, std::move(values));
}

std::vector<int> range(int first, int last, int step = 1) {
  std::vector<int> out;
  for (int v = first; v <= last; v += step) out.push_back(v);
  return out;
}

}  // namespace

std::vector<double> gradient_features(const GrayImage& image, std::size_t side) {
  if (side == 0 || image.width == 0 || image.height == 0 || image.width % side != 0 || image.height % side != 0)
    throw FormatError("gradient_features: image " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                      " is not a multiple of " + std::to_string(side));
  const std::size_t bx = image.width / side;
  const std::size_t by = image.height / side;
  std::vector<double> small(side * side, 0.0);
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c) {
      double s = 0.0;
      for (std::size_t y = r * by; y < (r + 1) * by; ++y)
        for (std::size_t x = c * bx; x < (c + 1) * bx; ++x) s += image.at(x, y);
      small[r * side + c] = s / static_cast<double>(bx * by);
    }

  auto px = [&](std::size_t r, std::size_t c) { return small[r * side + c]; };
  std::vector<double> mag(side * side);
  double total = 0.0;
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c) {
      const std::size_t cl = c == 0 ? 0 : c - 1, cr = std::min(side - 1, c + 1);
      const std::size_t ru = r == 0 ? 0 : r - 1, rd = std::min(side - 1, r + 1);
      const double gx = (px(r, cr) - px(r, cl)) / 2.0;
      const double gy = (px(rd, c) - px(ru, c)) / 2.0;
      mag[r * side + c] = std::hypot(gx, gy);
      total += mag[r * side + c];
    }
  const double mean = total / static_cast<double>(mag.size());
  if (mean < 1e-12) return std::vector<double>(mag.size(), 0.0);
  for (auto& m : mag) m /= mean;
  return mag;
}

std::optional<std::pair<int, int>> parse_coil_filename(const std::string& name) {
  static const std::regex pattern(R"(obj(\d+)__(\d+)\.(png|ppm|pgm))", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(name, m, pattern)) return std::nullopt;
  return std::make_pair(std::stoi(m[1].str()), std::stoi(m[2].str()));
}

std::vector<CoilView> ingest(const std::string& directory, const IngestOptions& options) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(directory, ec)) throw IngestError("COIL directory not found: " + directory, {directory});

  struct Entry {
    int object_id, angle;
    std::string path;
  };
  std::vector<Entry> entries;
  std::vector<std::string> bad;
  for (const auto& de : fs::directory_iterator(directory)) {
    if (!de.is_regular_file()) continue;
    const auto parsed = parse_coil_filename(de.path().filename().string());
    if (!parsed) continue;
    const auto [obj, angle] = *parsed;
    if (obj < 1 || obj > kCoilObjects || angle % 5 != 0 || angle < 0 || angle >= 360) {
      bad.push_back(de.path().string());
      continue;
    }
    entries.push_back({obj, angle, de.path().string()});
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return std::tie(a.object_id, a.angle) < std::tie(b.object_id, b.angle); });
  for (std::size_t i = 1; i < entries.size(); ++i)
    if (entries[i].object_id == entries[i - 1].object_id && entries[i].angle == entries[i - 1].angle)
      bad.push_back(entries[i].path);
  if (!bad.empty()) throw IngestError("COIL: unexpected or duplicate file names", bad);
  if (entries.empty()) throw IngestError("COIL: no images found in " + directory, {directory});

  if (options.require_complete) {
    std::set<std::pair<int, int>> have;
    for (const auto& e : entries) have.insert({e.object_id, e.angle});
    std::vector<std::string> missing;
    for (int o = 1; o <= kCoilObjects; ++o)
      for (int a = 0; a < 360; a += 5)
        if (!have.count({o, a}))
          missing.push_back((fs::path(directory) / ("obj" + std::to_string(o) + "__" + std::to_string(a) + ".png")).string());
    if (!missing.empty())
      throw IngestError("COIL: " + std::to_string(missing.size()) + " of 7200 views missing", missing);
  }

  std::vector<CoilView> out(entries.size());
  std::vector<std::string> failed(entries.size());
  std::vector<std::string> wrong_size(entries.size());
  parallel_for(entries.size(), options.workers, [&](std::size_t i, std::size_t) {
    const auto& e = entries[i];
    GrayImage img;
    try {
      img = load_grayscale(e.path);
    } catch (const FormatError&) {
      failed[i] = e.path;
      return;
    }
    if (img.width != kCoilImageSide || img.height != kCoilImageSide) {
      wrong_size[i] = e.path + " is " + std::to_string(img.width) + "x" + std::to_string(img.height);
      return;
    }
    out[i] = CoilView{e.object_id, e.angle, gradient_vector(gradient_features(img))};
  });
  std::vector<std::string> unreadable;
  for (auto& f : failed)
    if (!f.empty()) unreadable.push_back(f);
  if (!unreadable.empty()) throw IngestError("COIL: failed to decode " + std::to_string(unreadable.size()) + " files", unreadable);
  for (const auto& w : wrong_size)
    if (!w.empty()) throw FormatError("COIL: expected 128x128 images, " + w);
  return out;
}

void write_feature_cache(std::ostream& out, std::span<const CoilView> views) {
  if (views.empty()) throw InvalidArgument("write_feature_cache: no views");
  const std::size_t dim = views.front().features.size();
  std::set<int> objects;
  for (const auto& v : views) {
    if (v.features.size() != dim || v.features.kind() != FeatureKind::Gradient)
      throw InvalidArgument("write_feature_cache: inconsistent features");
    objects.insert(v.object_id);
  }
  io::write_magic(out, kCacheMagic);
  io::write_le<std::uint32_t>(out, kCacheVersion);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(objects.size()));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(views.size()));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
  for (const auto& v : views) {
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.object_id));
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.angle_deg));
    for (double x : v.features.values()) io::write_le<float>(out, static_cast<float>(x));
  }
  if (!out) throw FormatError("write_feature_cache: write failed");
}

std::vector<CoilView> read_feature_cache(std::istream& in) {
  io::expect_magic(in, kCacheMagic);
  if (io::read_le<std::uint32_t>(in) != kCacheVersion) throw FormatError("feature cache: unsupported version");
  const auto n_objects = io::read_le<std::uint32_t>(in);
  const auto n_views = io::read_le<std::uint32_t>(in);
  const auto dim = io::read_le<std::uint32_t>(in);
  if (dim == 0 || dim > (1u << 20) || n_views > 1'000'000) throw FormatError("feature cache: implausible header");
  std::vector<CoilView> out;
  out.reserve(n_views);
  std::set<int> objects;
  for (std::uint32_t i = 0; i < n_views; ++i) {
    CoilView v;
    v.object_id = static_cast<int>(io::read_le<std::uint32_t>(in));
    v.angle_deg = static_cast<int>(io::read_le<std::uint32_t>(in));
    if (v.angle_deg % 5 != 0 || v.angle_deg >= 360) throw FormatError("feature cache: bad angle");
    std::vector<double> values(dim);
    for (auto& x : values) x = io::read_le<float>(in);
    v.features = FeatureVector::dense(FeatureKind::Gradient, std::move(values));
    objects.insert(v.object_id);
    out.push_back(std::move(v));
  }
  if (objects.size() != n_objects) throw FormatError("feature cache: object count mismatch");
  return out;
}

bool CoilSplit::is_train(int id) const { return std::find(train_objects.begin(), train_objects.end(), id) != train_objects.end(); }
bool CoilSplit::is_test(int id) const { return std::find(test_objects.begin(), test_objects.end(), id) != test_objects.end(); }
bool CoilSplit::is_base_angle(int a) const { return std::find(base_angles.begin(), base_angles.end(), a) != base_angles.end(); }

CoilSplit make_split() { return {range(1, 70), range(71, 100), range(0, 330, 30)}; }

std::string_view to_string(CoilMethod method) {
  switch (method) {
    case CoilMethod::Euclidean: return "euclid";
    case CoilMethod::Eigenspace: return "eigen";
    case CoilMethod::ViewSimilarity: return "viewsim";
    case CoilMethod::Random: return "random";
  }
  return "unknown";
}

CoilMethod parse_coil_method(std::string_view name) {
  if (name == "euclid") return CoilMethod::Euclidean;
  if (name == "eigen") return CoilMethod::Eigenspace;
  if (name == "viewsim") return CoilMethod::ViewSimilarity;
  if (name == "random") return CoilMethod::Random;
  throw InvalidArgument("unknown COIL method '" + std::string(name) + "'");
}

std::vector<CoilView> training_views(const CoilSplit& split, std::span<const CoilView> data, const AccessAudit& audit) {
  std::vector<CoilView> out;
  for (const auto& v : data) {
    if (!split.is_train(v.object_id)) continue;
    if (audit) audit(v.object_id);
    out.push_back(v);
  }
  return out;
}

std::vector<PairSample> make_coil_pairs(std::span<const CoilView> train, std::size_t n_pairs, RngSeed seed) {
  std::map<int, std::vector<std::size_t>> by_object;
  for (std::size_t i = 0; i < train.size(); ++i) by_object[train[i].object_id].push_back(i);
  std::vector<const std::vector<std::size_t>*> groups;
  for (const auto& [id, idx] : by_object)
    if (idx.size() >= 2) groups.push_back(&idx);
  if (groups.size() < 2) throw InvalidArgument("make_coil_pairs: need two objects with at least two views");
  if (n_pairs < 1) throw InvalidArgument("make_coil_pairs: n_pairs must be >= 1");

  std::vector<PairSample> out(2 * n_pairs);
  const std::size_t n = groups.size();
  for (std::size_t p = 0; p < n_pairs; ++p) {
    Rng rng = Rng::stream(seed, SeedDomain::PairSampling, p);
    const std::size_t omega = rng.below(n);
    std::size_t other = rng.below(n - 1);
    if (other >= omega) ++other;
    const auto& g = *groups[omega];
    const std::size_t ti = rng.below(g.size());
    std::size_t bi = rng.below(g.size() - 1);
    if (bi >= ti) ++bi;
    const auto& go = *groups[other];
    const std::size_t oi = rng.below(go.size());
    const CoilView& t = train[g[ti]];
    const CoilView& b = train[g[bi]];
    const CoilView& bo = train[go[oi]];
    out[2 * p] = PairSample{b.features, t.features, 1, static_cast<std::size_t>(b.object_id),
                            static_cast<std::size_t>(t.object_id)};
    out[2 * p + 1] = PairSample{bo.features, t.features, 0, static_cast<std::size_t>(bo.object_id),
                                static_cast<std::size_t>(t.object_id)};
  }
  return out;
}

MlpSimilarity train_coil_similarity(const CoilSplit& split, std::span<const CoilView> data,
                                    const CoilTrainOptions& options, const AccessAudit& audit) {
  const auto train_set = training_views(split, data, audit);
  const auto pairs = make_coil_pairs(train_set, options.n_pairs, options.train.seed);
  return train(pairs, options.train);
}

ProtocolResult run_protocol(CoilMethod method, const CoilSplit& split, std::span<const CoilView> data,
                            const ProtocolOptions& options, const MlpSimilarity* model) {
  if (method == CoilMethod::ViewSimilarity && model == nullptr)
    throw InvalidState("run_protocol: view similarity needs a trained model");

  std::vector<const CoilView*> probes;
  std::map<int, std::vector<const CoilView*>> base_views;
  for (const auto& v : data) {
    if (!split.is_test(v.object_id)) continue;
    probes.push_back(&v);
    if (split.is_base_angle(v.angle_deg)) base_views[v.object_id].push_back(&v);
  }
  if (probes.empty() || base_views.empty()) throw InvalidArgument("run_protocol: no test views in data");

  // Flatten the base so every method scores the same (object, view) list.
  std::vector<int> base_object;
  std::vector<const CoilView*> base;
  for (const auto& [id, views] : base_views)
    for (const auto* v : views) {
      base_object.push_back(id);
      base.push_back(v);
    }

  std::function<double(std::size_t probe, std::size_t view)> score;
  std::vector<Eigen::VectorXd> probe_coords, base_coords;
  std::vector<std::vector<double>> probe_part, base_part;
  std::optional<EigenspaceModel> eigen;

  switch (method) {
    case CoilMethod::Euclidean:
      score = [&](std::size_t p, std::size_t v) { return euclidean_score(probes[p]->features, base[v]->features).score; };
      break;
    case CoilMethod::Eigenspace: {
      const auto train_set = training_views(split, data, options.audit);
      std::vector<FeatureVector> feats;
      feats.reserve(train_set.size());
      for (const auto& v : train_set) feats.push_back(v.features);
      eigen.emplace(fit_eigenspace(feats, options.eigen_k));
      for (const auto* v : probes) probe_coords.push_back(eigen->coords(v->features));
      for (const auto* v : base) base_coords.push_back(eigen->coords(v->features));
      score = [&](std::size_t p, std::size_t v) { return -(probe_coords[p] - base_coords[v]).norm(); };
      break;
    }
    case CoilMethod::ViewSimilarity:
      for (const auto* v : probes) probe_part.push_back(model->partial(v->features, MlpSimilarity::Side::B));
      for (const auto* v : base) base_part.push_back(model->partial(v->features, MlpSimilarity::Side::T));
      score = [&](std::size_t p, std::size_t v) { return model->logit_from_partials(probe_part[p], base_part[v]); };
      break;
    case CoilMethod::Random:
      break;
  }

  std::vector<char> wrong(probes.size(), 0);
  parallel_for(probes.size(), options.workers, [&](std::size_t p, std::size_t) {
    Rng noise = Rng::stream(options.seed, SeedDomain::Evaluation, p);
    int best_id = 0;
    double best = -std::numeric_limits<double>::infinity();
    bool have = false;
    std::size_t v = 0;
    for (const auto& [id, views] : base_views) {
      double s = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < views.size(); ++k, ++v)
        s = std::max(s, method == CoilMethod::Random ? noise.uniform() : score(p, v));
      if (!have || s > best) {
        best = s;
        best_id = id;
        have = true;
      }
    }
    wrong[p] = best_id != probes[p]->object_id;
  });
  ProtocolResult r;
  r.n_probes = probes.size();
  r.n_errors = static_cast<std::size_t>(std::count(wrong.begin(), wrong.end(), 1));
  r.error_rate = static_cast<double>(r.n_errors) / static_cast<double>(r.n_probes);
  return r;
}

}  // namespace viewgen
