#pragma once

// Learned view similarity P(S = 1 | B, T): a one-hidden-layer perceptron on
// the concatenated pair (b, t), trained on same-object / different-object
// pairs drawn from a fixed set of training objects.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "viewgen/clipgen.hpp"
#include "viewgen/encode.hpp"
#include "viewgen/recognize.hpp"
#include "viewgen/rng.hpp"

namespace viewgen {

/// A labelled pair. `label` is 1 when b and t show the same object.
struct PairSample {
  FeatureVector b;
  FeatureVector t;
  int label = 0;
  std::size_t b_object = 0;
  std::size_t t_object = 0;
};

enum class Activation : std::uint32_t { Tanh = 0 };

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  RngSeed seed{};
  std::size_t hidden_units = 8;
  /// Fraction of samples held out for early stopping; 0 disables it.
  double validation_fraction = 0.0;
  /// Epochs without validation improvement before stopping.
  std::size_t patience = 10;

  void validate() const;
};

struct TrainLog {
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  std::size_t best_epoch = 0;
};

class MlpSimilarity {
 public:
  /// All-zero weights with identity standardization; outputs 0.5 everywhere.
  static MlpSimilarity zeros(FeatureKind kind, std::size_t feature_dim, std::size_t hidden_units);

  FeatureKind feature_kind() const noexcept { return kind_; }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  std::size_t input_dim() const noexcept { return 2 * feature_dim_; }
  std::size_t hidden_units() const noexcept { return hidden_; }
  Activation activation() const noexcept { return Activation::Tanh; }

  /// Flattened weights: layer 1 is hidden x (input + 1) row-major with the
  /// bias in the last column, followed by layer 2 as (hidden + 1) entries.
  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }
  std::size_t layer1_size() const noexcept { return hidden_ * (input_dim() + 1); }

  /// Per-input standardization (x - mean) / scale. Identity for feature maps.
  std::span<const double> input_mean() const noexcept { return mean_; }
  std::span<const double> input_scale() const noexcept { return scale_; }
  bool standardizes() const noexcept { return !mean_.empty(); }
  void set_standardization(std::vector<double> mean, std::vector<double> scale);

  /// Pre-sigmoid output. Strictly increasing in similarity(), and keeps its
  /// ordering where the sigmoid saturates.
  double logit(const FeatureVector& b, const FeatureVector& t) const;
  /// P(S = 1 | b, t), always strictly inside (0, 1).
  double similarity(const FeatureVector& b, const FeatureVector& t) const;

  /// Layer-1 pre-activations contributed by `x` placed on one side of the
  /// input (without biases). Caching these per stored view turns each pair
  /// evaluation into O(hidden) work.
  enum class Side { B, T };
  std::vector<double> partial(const FeatureVector& x, Side side) const;
  /// logit() assembled from partial(b, Side::B) and partial(t, Side::T).
  double logit_from_partials(std::span<const double> pb, std::span<const double> pt) const;

  /// Mean cross-entropy over `samples`.
  double loss(std::span<const PairSample> samples) const;
  /// Gradient of loss() with respect to parameters().
  std::vector<double> loss_gradient(std::span<const PairSample> samples) const;

  void save(std::ostream& out) const;
  static MlpSimilarity load(std::istream& in);

 private:
  friend class MlpTrainer;

  MlpSimilarity(FeatureKind kind, std::size_t feature_dim, std::size_t hidden);

  // Sparse standardized input: indices and values of the nonzero entries.
  struct Input {
    std::vector<std::uint32_t> index;
    std::vector<double> value;
  };
  void check_pair(const FeatureVector& b, const FeatureVector& t) const;
  void build_input(const FeatureVector& b, const FeatureVector& t, Input& in) const;
  double forward(const Input& in, std::vector<double>& hidden) const;

  FeatureKind kind_;
  std::size_t feature_dim_;
  std::size_t hidden_;
  std::vector<double> params_;
  std::vector<double> mean_;
  std::vector<double> scale_;
};

/// Mini-batch SGD on cross-entropy. Deterministic for a fixed cfg.seed.
/// Throws InvalidArgument on empty or inconsistent samples and
/// TrainingDiverged when the loss stops being finite.
MlpSimilarity train(std::span<const PairSample> samples, const TrainConfig& cfg, TrainLog* log = nullptr);

/// Balanced pairs from `clips`: per iteration one positive (two views of a
/// clip) and one negative (a view of a different clip against the same
/// training view). Each clip is put in a random base pose; the training view
/// is the posed projection and target views add a rotation from `rotation`.
/// Returns 2 * n_pairs samples, positive first within each iteration.
std::vector<PairSample> make_pairs(std::span<const ClipModel3D> clips, std::size_t n_pairs, const Encoder& encoder,
                                   const RotationSpec& rotation, RngSeed seed, std::size_t workers = 1);

/// classify_with() using the model's logit as the score.
int classify(const MlpSimilarity& model, const FeatureVector& b, std::span<const ModelBaseEntry> base);

}  // namespace viewgen
