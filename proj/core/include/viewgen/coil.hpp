#pragma once

// COIL-100 ingestion (grayscale gradient-magnitude features) and the
// 70/30 object split recognition protocol.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "viewgen/encode.hpp"
#include "viewgen/image.hpp"
#include "viewgen/rng.hpp"
#include "viewgen/viewsim.hpp"

namespace viewgen {

inline constexpr int kCoilObjects = 100;
inline constexpr int kCoilAnglesPerObject = 72;
inline constexpr std::size_t kCoilImageSide = 128;
inline constexpr std::size_t kCoilFeatureSide = 32;
inline constexpr std::size_t kCoilFeatureDim = kCoilFeatureSide * kCoilFeatureSide;

struct CoilView {
  int object_id = 0;
  int angle_deg = 0;
  FeatureVector features;  ///< FeatureKind::Gradient
};

/// Box-average to `side` x `side`, central-difference gradients (edges
/// clamped), per-pixel magnitude, divided by the mean magnitude. A flat image
/// yields all zeros. Image sides must be multiples of `side`.
std::vector<double> gradient_features(const GrayImage& image, std::size_t side = kCoilFeatureSide);

/// Parses "obj<ID>__<ANGLE>.<png|ppm|pgm>"; nullopt for other names.
std::optional<std::pair<int, int>> parse_coil_filename(const std::string& name);

struct IngestOptions {
  /// Demand all 7200 views, 72 per object.
  bool require_complete = false;
  std::size_t workers = 1;
};

/// Reads every COIL image in `directory`, sorted by (object, angle). Features
/// are rounded to float so they match the cache byte for byte. Throws
/// IngestError listing unreadable or missing files, FormatError on an image
/// that is not 128 x 128.
std::vector<CoilView> ingest(const std::string& directory, const IngestOptions& options = {});

/// Cache: magic, version, object count, view count, dim, then per view its
/// object id, angle and dim little-endian float32 values.
void write_feature_cache(std::ostream& out, std::span<const CoilView> views);
std::vector<CoilView> read_feature_cache(std::istream& in);

struct CoilSplit {
  std::vector<int> train_objects;
  std::vector<int> test_objects;
  std::vector<int> base_angles;

  bool is_train(int object_id) const;
  bool is_test(int object_id) const;
  bool is_base_angle(int angle_deg) const;
};

/// Objects 1-70 train, 71-100 test, base views every 30 degrees.
CoilSplit make_split();

enum class CoilMethod { Euclidean, Eigenspace, ViewSimilarity, Random };

std::string_view to_string(CoilMethod method);
CoilMethod parse_coil_method(std::string_view name);

/// Called with the object id of every view a training step reads.
using AccessAudit = std::function<void(int object_id)>;

/// The views of training objects, reported to `audit`.
std::vector<CoilView> training_views(const CoilSplit& split, std::span<const CoilView> data,
                                     const AccessAudit& audit = {});

/// Same-object and different-object pairs over `train`, drawn like the clip
/// pairs: per iteration one positive (two distinct angles of one object) and
/// one negative sharing its training view.
std::vector<PairSample> make_coil_pairs(std::span<const CoilView> train, std::size_t n_pairs, RngSeed seed);

struct CoilTrainOptions {
  std::size_t n_pairs = 50000;
  TrainConfig train{.epochs = 60, .hidden_units = 5, .validation_fraction = 0.1, .patience = 5};
};

MlpSimilarity train_coil_similarity(const CoilSplit& split, std::span<const CoilView> data,
                                    const CoilTrainOptions& options, const AccessAudit& audit = {});

struct ProtocolOptions {
  std::size_t eigen_k = 20;
  RngSeed seed{};
  std::size_t workers = 1;
  AccessAudit audit;
};

struct ProtocolResult {
  double error_rate = 0.0;
  std::size_t n_probes = 0;
  std::size_t n_errors = 0;
};

/// Classifies every view of the test objects against their base views.
/// ViewSimilarity needs a trained `model` (InvalidState otherwise); Random
/// scores every pair with independent noise.
ProtocolResult run_protocol(CoilMethod method, const CoilSplit& split, std::span<const CoilView> data,
                            const ProtocolOptions& options, const MlpSimilarity* model = nullptr);

}  // namespace viewgen
