#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <png.h>

#include "viewgen/coil.hpp"
#include "viewgen/errors.hpp"

using namespace viewgen;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("viewgen_coil_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

GrayImage pattern(std::size_t side, int object, int angle) {
  GrayImage img{side, side, std::vector<double>(side * side)};
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x)
      img.pixels[y * side + x] = std::floor(std::fmod(37.0 * object + 3.0 * angle + 0.9 * x * (object % 5 + 1) + 1.7 * y, 256.0));
  return img;
}

void write_ppm(const std::string& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  for (double v : img.pixels) {
    const char c = static_cast<char>(static_cast<unsigned char>(std::lround(v)));
    out.put(c).put(c).put(c);
  }
}

void write_png(const std::string& path, const GrayImage& img) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> rgb;
  for (double v : img.pixels) {
    const auto c = static_cast<png_byte>(std::lround(v));
    rgb.insert(rgb.end(), {c, c, c});
  }
  ASSERT_TRUE(png_image_write_to_file(&image, path.c_str(), 0, rgb.data(), 0, nullptr));
}

// Full-size synthetic dataset in memory: every object has a distinct
// signature, views wobble slightly with angle.
std::vector<CoilView> synthetic_dataset(std::size_t dim = 16) {
  std::vector<CoilView> data;
  for (int obj = 1; obj <= kCoilObjects; ++obj) {
    Rng rng(static_cast<std::uint64_t>(obj));
    std::vector<double> sig(dim);
    for (auto& s : sig) s = rng.uniform(0, 10);
    for (int a = 0; a < 360; a += 5) {
      std::vector<double> f(sig);
      for (std::size_t i = 0; i < dim; ++i) f[i] += 0.05 * std::sin(a * 0.0174533 + static_cast<double>(i));
      data.push_back({obj, a, FeatureVector::dense(FeatureKind::Gradient, f)});
    }
  }
  return data;
}

}  // namespace

TEST(GradientFeatures, FlatImageGivesZeros) {
  GrayImage flat{128, 128, std::vector<double>(128 * 128, 77.0)};
  const auto f = gradient_features(flat);
  ASSERT_EQ(f.size(), kCoilFeatureDim);
  for (double v : f) EXPECT_EQ(v, 0.0);
}

TEST(GradientFeatures, VerticalStepMakesABandWithUnitMean) {
  GrayImage img{128, 128, std::vector<double>(128 * 128, 0.0)};
  for (std::size_t y = 0; y < 128; ++y)
    for (std::size_t x = 64; x < 128; ++x) img.pixels[y * 128 + x] = 200.0;
  const auto f = gradient_features(img);
  double sum = 0;
  for (std::size_t r = 0; r < 32; ++r)
    for (std::size_t c = 0; c < 32; ++c) {
      const double v = f[r * 32 + c];
      sum += v;
      if (c == 15 || c == 16) {
        EXPECT_GT(v, 0.0);
      } else {
        EXPECT_EQ(v, 0.0);
      }
      EXPECT_EQ(v, f[c]);  // every row identical
    }
  EXPECT_NEAR(sum / 1024.0, 1.0, 1e-12);
}

TEST(GradientFeatures, RejectsIndivisibleSize) {
  GrayImage img{100, 100, std::vector<double>(100 * 100, 1.0)};
  EXPECT_THROW(gradient_features(img), FormatError);
}

TEST(CoilFilenames, ParsesStandardNames) {
  EXPECT_EQ(parse_coil_filename("obj1__0.png"), std::make_pair(1, 0));
  EXPECT_EQ(parse_coil_filename("obj100__355.png"), std::make_pair(100, 355));
  EXPECT_EQ(parse_coil_filename("obj7__10.PPM"), std::make_pair(7, 10));
  EXPECT_FALSE(parse_coil_filename("obj1_0.png"));
  EXPECT_FALSE(parse_coil_filename("readme.txt"));
  EXPECT_FALSE(parse_coil_filename("obj1__0.jpg"));
}

TEST(Ingest, ReadsMixedFormatsSortedAndDeterministic) {
  TempDir dir;
  write_png(dir.file("obj2__5.png"), pattern(128, 2, 5));
  write_ppm(dir.file("obj1__5.ppm"), pattern(128, 1, 5));
  write_pgm(dir.file("obj1__0.pgm"), pattern(128, 1, 0));
  std::ofstream(dir.file("notes.txt")) << "ignored";
  const auto views = ingest(dir.path().string());
  ASSERT_EQ(views.size(), 3u);
  EXPECT_EQ(views[0].object_id, 1);
  EXPECT_EQ(views[0].angle_deg, 0);
  EXPECT_EQ(views[1].angle_deg, 5);
  EXPECT_EQ(views[2].object_id, 2);
  // All three codecs carry the same gray levels in, so features match a direct computation.
  const auto direct = gradient_features(pattern(128, 2, 5));
  for (std::size_t i = 0; i < direct.size(); ++i)
    EXPECT_NEAR(views[2].features[i], direct[i], 1e-5 * std::max(1.0, std::abs(direct[i])));

  std::stringstream a, b;
  write_feature_cache(a, views);
  write_feature_cache(b, ingest(dir.path().string(), {.workers = 3}));
  EXPECT_EQ(a.str(), b.str());
  const auto back = read_feature_cache(a);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(back[k].object_id, views[k].object_id);
    EXPECT_EQ(back[k].angle_deg, views[k].angle_deg);
    EXPECT_EQ(back[k].features, views[k].features);
  }
}

TEST(Ingest, WrongImageSizeIsFormatError) {
  TempDir dir;
  write_pgm(dir.file("obj1__0.pgm"), pattern(64, 1, 0));
  EXPECT_THROW(ingest(dir.path().string()), FormatError);
}

TEST(Ingest, CorruptFileReportsItsPath) {
  TempDir dir;
  write_pgm(dir.file("obj1__0.pgm"), pattern(128, 1, 0));
  std::ofstream(dir.file("obj1__5.png")) << "not a png at all";
  try {
    ingest(dir.path().string());
    FAIL() << "expected IngestError";
  } catch (const IngestError& e) {
    ASSERT_EQ(e.paths().size(), 1u);
    EXPECT_NE(e.paths()[0].find("obj1__5.png"), std::string::npos);
  }
}

TEST(Ingest, MissingDirectoryEmptyDirectoryAndIncompleteSet) {
  EXPECT_THROW(ingest("/nonexistent/viewgen/coil"), IngestError);
  TempDir empty;
  EXPECT_THROW(ingest(empty.path().string()), IngestError);
  TempDir partial;
  write_pgm(partial.file("obj1__0.pgm"), pattern(128, 1, 0));
  EXPECT_NO_THROW(ingest(partial.path().string()));
  try {
    ingest(partial.path().string(), {.require_complete = true});
    FAIL() << "expected IngestError";
  } catch (const IngestError& e) {
    EXPECT_EQ(e.paths().size(), 7199u);
  }
}

TEST(FeatureCache, RejectsCorruption) {
  const auto data = synthetic_dataset(4);
  std::stringstream ss;
  write_feature_cache(ss, std::span(data).first(10));
  const auto bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 4), "VGCF");
  std::stringstream truncated(bytes.substr(0, bytes.size() - 2));
  EXPECT_THROW(read_feature_cache(truncated), FormatError);
  std::string bad = bytes;
  bad[0] = 'Q';
  std::stringstream bs(bad);
  EXPECT_THROW(read_feature_cache(bs), FormatError);
}

TEST(Split, SeventyThirtyWithTwelveBaseAngles) {
  const auto split = make_split();
  EXPECT_EQ(split.train_objects.size(), 70u);
  EXPECT_EQ(split.test_objects.size(), 30u);
  EXPECT_EQ(split.base_angles.size(), 12u);
  EXPECT_TRUE(split.is_train(70));
  EXPECT_FALSE(split.is_train(71));
  EXPECT_TRUE(split.is_test(100));
  EXPECT_TRUE(split.is_base_angle(330));
  EXPECT_FALSE(split.is_base_angle(35));
  for (int id : split.train_objects) EXPECT_FALSE(split.is_test(id));
}

TEST(Protocol, ProbeCountAndDistinctObjectsAreEasy) {
  const auto data = synthetic_dataset();
  const auto split = make_split();
  for (auto method : {CoilMethod::Euclidean, CoilMethod::Eigenspace}) {
    ProtocolOptions opts;
    opts.eigen_k = 10;
    const auto r = run_protocol(method, split, data, opts);
    EXPECT_EQ(r.n_probes, 2160u);
    EXPECT_EQ(r.n_errors, 0u) << to_string(method);
    EXPECT_EQ(r.error_rate, 0.0);
  }
}

TEST(Protocol, RandomScoresGiveChanceError) {
  const auto data = synthetic_dataset();
  ProtocolOptions opts;
  opts.seed = RngSeed{3};
  const auto r = run_protocol(CoilMethod::Random, make_split(), data, opts);
  EXPECT_NEAR(r.error_rate, 1.0 - 1.0 / 30.0, 0.015);
}

TEST(Protocol, ViewSimilarityNeedsModel) {
  const auto data = synthetic_dataset();
  EXPECT_THROW(run_protocol(CoilMethod::ViewSimilarity, make_split(), data, {}), InvalidState);
}

TEST(Protocol, TrainingNeverTouchesTestObjects) {
  const auto data = synthetic_dataset();
  const auto split = make_split();
  std::set<int> touched;
  const AccessAudit audit = [&](int id) { touched.insert(id); };
  CoilTrainOptions topts;
  topts.n_pairs = 2000;
  topts.train.epochs = 3;
  const auto model = train_coil_similarity(split, data, topts, audit);
  ProtocolOptions opts;
  opts.eigen_k = 10;
  opts.audit = audit;
  run_protocol(CoilMethod::Eigenspace, split, data, opts);
  const auto r = run_protocol(CoilMethod::ViewSimilarity, split, data, opts, &model);
  EXPECT_EQ(r.n_probes, 2160u);
  ASSERT_FALSE(touched.empty());
  EXPECT_EQ(*touched.begin(), 1);
  EXPECT_EQ(*touched.rbegin(), 70);
}

TEST(Protocol, MethodNamesRoundTrip) {
  for (auto m : {CoilMethod::Euclidean, CoilMethod::Eigenspace, CoilMethod::ViewSimilarity, CoilMethod::Random})
    EXPECT_EQ(parse_coil_method(to_string(m)), m);
  EXPECT_THROW(parse_coil_method("lcv"), InvalidArgument);
}

TEST(CoilPairs, PositivesShareObjectNegativesDoNot) {
  const auto data = synthetic_dataset(4);
  const auto train = training_views(make_split(), data);
  EXPECT_EQ(train.size(), 70u * 72u);
  const auto pairs = make_coil_pairs(train, 500, RngSeed{2});
  ASSERT_EQ(pairs.size(), 1000u);
  for (std::size_t k = 0; k < pairs.size(); k += 2) {
    EXPECT_EQ(pairs[k].label, 1);
    EXPECT_EQ(pairs[k].b_object, pairs[k].t_object);
    EXPECT_FALSE(pairs[k].b == pairs[k].t);
    EXPECT_EQ(pairs[k + 1].label, 0);
    EXPECT_NE(pairs[k + 1].b_object, pairs[k + 1].t_object);
  }
}

TEST(CoilDataset, RealImagesIfAvailable) {
  const char* dir = std::getenv("VIEWGEN_COIL_DIR");
  if (!dir) GTEST_SKIP() << "VIEWGEN_COIL_DIR not set";
  const auto views = ingest(dir, {.require_complete = true});
  EXPECT_EQ(views.size(), 7200u);
  const auto r = run_protocol(CoilMethod::Euclidean, make_split(), views, {});
  EXPECT_EQ(r.n_probes, 2160u);
}
