#include "viewgen/viewsim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include "viewgen/binary_io.hpp"
#include "viewgen/errors.hpp"
#include "viewgen/parallel.hpp"

namespace viewgen {

namespace {

constexpr char kMagic[] = "VGMS";
constexpr std::uint32_t kVersion = 1;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Cross-entropy of label y given logit z, without forming log(sigmoid(z)).
double bce_with_logit(double z, int y) {
  const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - (y ? z : 0.0);
}

void check_samples(std::span<const PairSample> samples) {
  if (samples.empty()) throw InvalidArgument("train: no samples");
  const auto& first = samples.front().b;
  for (const auto& s : samples) {
    require_compatible(first, s.b, "train");
    require_compatible(first, s.t, "train");
    if (s.label != 0 && s.label != 1) throw InvalidArgument("train: labels must be 0 or 1");
  }
  if (first.size() == 0) throw InvalidArgument("train: zero-dimensional features");
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw InvalidArgument("TrainConfig: batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw InvalidArgument("TrainConfig: learning_rate must be positive");
  if (hidden_units < 1) throw InvalidArgument("TrainConfig: hidden_units must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw InvalidArgument("TrainConfig: validation_fraction must be in [0, 1)");
}

MlpSimilarity::MlpSimilarity(FeatureKind kind, std::size_t feature_dim, std::size_t hidden)
    : kind_(kind), feature_dim_(feature_dim), hidden_(hidden) {
  if (feature_dim == 0 || hidden == 0) throw InvalidArgument("MlpSimilarity: dimensions must be positive");
  params_.assign(layer1_size() + hidden_ + 1, 0.0);
}

MlpSimilarity MlpSimilarity::zeros(FeatureKind kind, std::size_t feature_dim, std::size_t hidden_units) {
  return MlpSimilarity(kind, feature_dim, hidden_units);
}

void MlpSimilarity::set_standardization(std::vector<double> mean, std::vector<double> scale) {
  if (mean.empty() && scale.empty()) {
    mean_.clear();
    scale_.clear();
    return;
  }
  if (mean.size() != input_dim() || scale.size() != input_dim())
    throw InvalidArgument("MlpSimilarity: standardization vectors must have input_dim entries");
  for (std::size_t i = 0; i < scale.size(); ++i)
    if (!(scale[i] > 0.0) || !std::isfinite(scale[i]) || !std::isfinite(mean[i]))
      throw InvalidArgument("MlpSimilarity: standardization scale must be positive and finite");
  mean_ = std::move(mean);
  scale_ = std::move(scale);
}

void MlpSimilarity::check_pair(const FeatureVector& b, const FeatureVector& t) const {
  require_compatible(b, t, "MlpSimilarity");
  if (b.kind() != kind_ || b.size() != feature_dim_)
    throw InvalidArgument("MlpSimilarity: model expects " + std::string(to_string(kind_)) + "/" +
                          std::to_string(feature_dim_) + ", got " + std::string(to_string(b.kind())) + "/" +
                          std::to_string(b.size()));
}

void MlpSimilarity::build_input(const FeatureVector& b, const FeatureVector& t, Input& in) const {
  in.index.clear();
  in.value.clear();
  const std::size_t d = feature_dim_;
  if (!standardizes()) {
    b.for_each_nonzero([&](std::size_t k, double v) {
      in.index.push_back(static_cast<std::uint32_t>(k));
      in.value.push_back(v);
    });
    t.for_each_nonzero([&](std::size_t k, double v) {
      in.index.push_back(static_cast<std::uint32_t>(d + k));
      in.value.push_back(v);
    });
    return;
  }
  in.index.resize(2 * d);
  in.value.resize(2 * d);
  const auto vb = b.values();
  const auto vt = t.values();
  for (std::size_t k = 0; k < d; ++k) {
    in.index[k] = static_cast<std::uint32_t>(k);
    in.value[k] = (vb[k] - mean_[k]) / scale_[k];
    in.index[d + k] = static_cast<std::uint32_t>(d + k);
    in.value[d + k] = (vt[k] - mean_[d + k]) / scale_[d + k];
  }
}

double MlpSimilarity::forward(const Input& in, std::vector<double>& hidden) const {
  const std::size_t stride = input_dim() + 1;
  const double* w2 = params_.data() + layer1_size();
  hidden.resize(hidden_);
  double z = w2[hidden_];
  for (std::size_t h = 0; h < hidden_; ++h) {
    const double* row = params_.data() + h * stride;
    double a = row[stride - 1];
    for (std::size_t n = 0; n < in.index.size(); ++n) a += row[in.index[n]] * in.value[n];
    hidden[h] = std::tanh(a);
    z += w2[h] * hidden[h];
  }
  return z;
}

double MlpSimilarity::logit(const FeatureVector& b, const FeatureVector& t) const {
  check_pair(b, t);
  Input in;
  std::vector<double> hidden;
  build_input(b, t, in);
  return forward(in, hidden);
}

double MlpSimilarity::similarity(const FeatureVector& b, const FeatureVector& t) const {
  const double p = sigmoid(logit(b, t));
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(p, lo, hi);
}

std::vector<double> MlpSimilarity::partial(const FeatureVector& x, Side side) const {
  if (x.kind() != kind_ || x.size() != feature_dim_)
    throw InvalidArgument("MlpSimilarity::partial: feature does not match the model");
  const std::size_t stride = input_dim() + 1;
  const std::size_t offset = side == Side::B ? 0 : feature_dim_;
  std::vector<double> out(hidden_, 0.0);
  auto add = [&](std::size_t k, double v) {
    const std::size_t col = offset + k;
    if (standardizes()) v = (v - mean_[col]) / scale_[col];
    for (std::size_t h = 0; h < hidden_; ++h) out[h] += params_[h * stride + col] * v;
  };
  if (standardizes()) {
    const auto v = x.values();
    for (std::size_t k = 0; k < feature_dim_; ++k) add(k, v[k]);
  } else {
    x.for_each_nonzero(add);
  }
  return out;
}

double MlpSimilarity::logit_from_partials(std::span<const double> pb, std::span<const double> pt) const {
  if (pb.size() != hidden_ || pt.size() != hidden_) throw InvalidArgument("logit_from_partials: size mismatch");
  const std::size_t stride = input_dim() + 1;
  const double* w2 = params_.data() + layer1_size();
  double z = w2[hidden_];
  for (std::size_t h = 0; h < hidden_; ++h) z += w2[h] * std::tanh(pb[h] + pt[h] + params_[h * stride + stride - 1]);
  return z;
}

double MlpSimilarity::loss(std::span<const PairSample> samples) const {
  if (samples.empty()) throw InvalidArgument("loss: no samples");
  Input in;
  std::vector<double> hidden;
  double total = 0.0;
  for (const auto& s : samples) {
    check_pair(s.b, s.t);
    build_input(s.b, s.t, in);
    total += bce_with_logit(forward(in, hidden), s.label);
  }
  return total / static_cast<double>(samples.size());
}

std::vector<double> MlpSimilarity::loss_gradient(std::span<const PairSample> samples) const {
  if (samples.empty()) throw InvalidArgument("loss_gradient: no samples");
  const std::size_t stride = input_dim() + 1;
  const double* w2 = params_.data() + layer1_size();
  std::vector<double> grad(params_.size(), 0.0);
  double* g2 = grad.data() + layer1_size();
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  Input in;
  std::vector<double> hidden;
  for (const auto& s : samples) {
    check_pair(s.b, s.t);
    build_input(s.b, s.t, in);
    const double dz = (sigmoid(forward(in, hidden)) - s.label) * inv_n;
    for (std::size_t h = 0; h < hidden_; ++h) {
      g2[h] += dz * hidden[h];
      const double da = dz * w2[h] * (1.0 - hidden[h] * hidden[h]);
      double* row = grad.data() + h * stride;
      for (std::size_t n = 0; n < in.index.size(); ++n) row[in.index[n]] += da * in.value[n];
      row[stride - 1] += da;
    }
    g2[hidden_] += dz;
  }
  return grad;
}

void MlpSimilarity::save(std::ostream& out) const {
  io::write_magic(out, kMagic);
  io::write_le<std::uint32_t>(out, kVersion);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(kind_));
  io::write_le<std::uint64_t>(out, feature_dim_);
  io::write_le<std::uint64_t>(out, hidden_);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(activation()));
  io::write_le<std::uint64_t>(out, mean_.size());
  for (double m : mean_) io::write_le(out, m);
  for (double s : scale_) io::write_le(out, s);
  io::write_le<std::uint64_t>(out, params_.size());
  for (double w : params_) io::write_le(out, w);
  if (!out) throw FormatError("MlpSimilarity: write failed");
}

MlpSimilarity MlpSimilarity::load(std::istream& in) {
  io::expect_magic(in, kMagic);
  if (io::read_le<std::uint32_t>(in) != kVersion) throw FormatError("MlpSimilarity: unsupported version");
  const auto kind_tag = io::read_le<std::uint32_t>(in);
  if (kind_tag > static_cast<std::uint32_t>(FeatureKind::Gradient)) throw FormatError("MlpSimilarity: bad kind");
  const auto dim = io::read_le<std::uint64_t>(in);
  const auto hidden = io::read_le<std::uint64_t>(in);
  if (io::read_le<std::uint32_t>(in) != static_cast<std::uint32_t>(Activation::Tanh))
    throw FormatError("MlpSimilarity: unknown activation");
  if (dim == 0 || hidden == 0 || dim > (1u << 24) || hidden > (1u << 16))
    throw FormatError("MlpSimilarity: implausible dimensions");
  MlpSimilarity m(static_cast<FeatureKind>(kind_tag), dim, hidden);
  const auto n_std = io::read_le<std::uint64_t>(in);
  if (n_std != 0 && n_std != m.input_dim()) throw FormatError("MlpSimilarity: bad standardization size");
  std::vector<double> mean(n_std), scale(n_std);
  for (auto& x : mean) x = io::read_le<double>(in);
  for (auto& x : scale) x = io::read_le<double>(in);
  try {
    m.set_standardization(std::move(mean), std::move(scale));
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
  if (io::read_le<std::uint64_t>(in) != m.params_.size()) throw FormatError("MlpSimilarity: bad weight count");
  for (auto& w : m.params_) {
    w = io::read_le<double>(in);
    if (!std::isfinite(w)) throw FormatError("MlpSimilarity: non-finite weight");
  }
  return m;
}

class MlpTrainer {
 public:
  MlpTrainer(std::span<const PairSample> samples, const TrainConfig& cfg) : samples_(samples), cfg_(cfg) {}

  MlpSimilarity run(TrainLog* log) {
    cfg_.validate();
    check_samples(samples_);
    const auto& first = samples_.front().b;
    MlpSimilarity model(first.kind(), first.size(), cfg_.hidden_units);

    Rng rng = Rng::stream(cfg_.seed, SeedDomain::Training, 0);
    std::vector<std::size_t> order(samples_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, rng);
    std::size_t n_val = static_cast<std::size_t>(std::floor(cfg_.validation_fraction * order.size()));
    if (n_val >= order.size()) n_val = order.size() - 1;
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> tr(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

    if (!first.is_sparse()) standardize(model, tr);
    initialize(model, rng);

    TrainLog local;
    TrainLog& out = log ? *log : local;
    out = {};
    std::vector<double> best_params = model.params_;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
      shuffle(tr, rng);
      const double train_loss = run_epoch(model, tr);
      out.train_loss.push_back(train_loss);
      if (val.empty()) {
        out.best_epoch = epoch;
        continue;
      }
      const double v = mean_loss(model, val);
      out.validation_loss.push_back(v);
      if (v < best_val) {
        best_val = v;
        best_params = model.params_;
        out.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= cfg_.patience) {
        break;
      }
    }
    if (!val.empty()) model.params_ = best_params;
    return model;
  }

 private:
  static void shuffle(std::vector<std::size_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
  }

  void standardize(MlpSimilarity& model, const std::vector<std::size_t>& idx) const {
    const std::size_t d = model.feature_dim_;
    std::vector<double> sum(2 * d, 0.0), sq(2 * d, 0.0);
    for (auto i : idx) {
      const auto vb = samples_[i].b.values();
      const auto vt = samples_[i].t.values();
      for (std::size_t k = 0; k < d; ++k) {
        sum[k] += vb[k];
        sq[k] += vb[k] * vb[k];
        sum[d + k] += vt[k];
        sq[d + k] += vt[k] * vt[k];
      }
    }
    const double n = static_cast<double>(idx.size());
    std::vector<double> mean(2 * d), scale(2 * d);
    for (std::size_t k = 0; k < 2 * d; ++k) {
      mean[k] = sum[k] / n;
      const double var = std::max(0.0, sq[k] / n - mean[k] * mean[k]);
      const double sd = std::sqrt(var);
      scale[k] = sd > 1e-12 ? sd : 1.0;
    }
    model.set_standardization(std::move(mean), std::move(scale));
  }

  static void initialize(MlpSimilarity& model, Rng& rng) {
    const std::size_t in = model.input_dim();
    const std::size_t stride = in + 1;
    const double r1 = std::sqrt(6.0 / static_cast<double>(in + model.hidden_));
    const double r2 = std::sqrt(6.0 / static_cast<double>(model.hidden_ + 1));
    for (std::size_t h = 0; h < model.hidden_; ++h)
      for (std::size_t k = 0; k < in; ++k) model.params_[h * stride + k] = rng.uniform(-r1, r1);
    double* w2 = model.params_.data() + model.layer1_size();
    for (std::size_t h = 0; h < model.hidden_; ++h) w2[h] = rng.uniform(-r2, r2);
  }

  double mean_loss(const MlpSimilarity& model, const std::vector<std::size_t>& idx) {
    double total = 0.0;
    for (auto i : idx) {
      model.build_input(samples_[i].b, samples_[i].t, input_);
      total += bce_with_logit(model.forward(input_, hidden_), samples_[i].label);
    }
    const double v = total / static_cast<double>(idx.size());
    if (!std::isfinite(v)) throw TrainingDiverged("train: validation loss is not finite");
    return v;
  }

  // One pass of mini-batch SGD. Only the layer-1 columns touched by some
  // input of the batch are updated, which keeps sparse feature maps cheap.
  double run_epoch(MlpSimilarity& model, const std::vector<std::size_t>& idx) {
    const std::size_t stride = model.input_dim() + 1;
    const std::size_t H = model.hidden_;
    const std::size_t l1 = model.layer1_size();
    double* w = model.params_.data();
    grad_.assign(model.params_.size(), 0.0);
    touched_flag_.assign(stride, 0);
    double total = 0.0;
    for (std::size_t start = 0; start < idx.size(); start += cfg_.batch_size) {
      const std::size_t end = std::min(idx.size(), start + cfg_.batch_size);
      const double inv_n = 1.0 / static_cast<double>(end - start);
      touched_.clear();
      double batch_loss = 0.0;
      for (std::size_t q = start; q < end; ++q) {
        const auto& s = samples_[idx[q]];
        model.build_input(s.b, s.t, input_);
        const double z = model.forward(input_, hidden_);
        batch_loss += bce_with_logit(z, s.label);
        const double dz = (sigmoid(z) - s.label) * inv_n;
        for (auto k : input_.index)
          if (!touched_flag_[k]) {
            touched_flag_[k] = 1;
            touched_.push_back(k);
          }
        for (std::size_t h = 0; h < H; ++h) {
          grad_[l1 + h] += dz * hidden_[h];
          const double da = dz * w[l1 + h] * (1.0 - hidden_[h] * hidden_[h]);
          double* row = grad_.data() + h * stride;
          for (std::size_t n = 0; n < input_.index.size(); ++n) row[input_.index[n]] += da * input_.value[n];
          row[stride - 1] += da;
        }
        grad_[l1 + H] += dz;
      }
      if (!std::isfinite(batch_loss)) throw TrainingDiverged("train: loss is not finite");
      total += batch_loss;

      const double lr = cfg_.learning_rate;
      for (std::size_t h = 0; h < H; ++h) {
        double* row = w + h * stride;
        double* g = grad_.data() + h * stride;
        for (auto k : touched_) {
          row[k] -= lr * g[k];
          g[k] = 0.0;
        }
        row[stride - 1] -= lr * g[stride - 1];
        g[stride - 1] = 0.0;
      }
      for (std::size_t h = 0; h <= H; ++h) {
        w[l1 + h] -= lr * grad_[l1 + h];
        grad_[l1 + h] = 0.0;
      }
      for (auto k : touched_) touched_flag_[k] = 0;
    }
    for (std::size_t i = 0; i < model.params_.size(); ++i)
      if (!std::isfinite(model.params_[i])) throw TrainingDiverged("train: weights are not finite");
    return total / static_cast<double>(idx.size());
  }

  std::span<const PairSample> samples_;
  TrainConfig cfg_;
  MlpSimilarity::Input input_;
  std::vector<double> hidden_;
  std::vector<double> grad_;
  std::vector<std::uint32_t> touched_;
  std::vector<char> touched_flag_;
};

MlpSimilarity train(std::span<const PairSample> samples, const TrainConfig& cfg, TrainLog* log) {
  return MlpTrainer(samples, cfg).run(log);
}

std::vector<PairSample> make_pairs(std::span<const ClipModel3D> clips, std::size_t n_pairs, const Encoder& encoder,
                                   const RotationSpec& rotation, RngSeed seed, std::size_t workers) {
  if (clips.size() < 2) throw InvalidArgument("make_pairs: need at least 2 clips");
  if (n_pairs < 1) throw InvalidArgument("make_pairs: n_pairs must be >= 1");
  if (!(rotation.range_deg > 0.0)) throw InvalidArgument("make_pairs: rotation range must be positive");
  std::vector<PairSample> out(2 * n_pairs);
  const std::size_t n = clips.size();
  parallel_for(n_pairs, workers, [&](std::size_t p, std::size_t) {
    Rng rng = Rng::stream(seed, SeedDomain::PairSampling, p);
    const std::size_t omega = rng.below(n);
    std::size_t other = rng.below(n - 1);
    if (other >= omega) ++other;

    const ClipModel3D posed = clips[omega].rotated(random_orientation(rng));
    const FeatureVector t = encoder(project(posed));
    const FeatureVector b = encoder(project(posed, sample_rotation(rotation, rng)));
    const ClipModel3D posed_other = clips[other].rotated(random_orientation(rng));
    const FeatureVector b_other = encoder(project(posed_other, sample_rotation(rotation, rng)));

    out[2 * p] = PairSample{b, t, 1, omega, omega};
    out[2 * p + 1] = PairSample{b_other, t, 0, other, omega};
  });
  return out;
}

int classify(const MlpSimilarity& model, const FeatureVector& b, std::span<const ModelBaseEntry> base) {
  return classify_with([&](const FeatureVector& x, const FeatureVector& t) { return model.logit(x, t); }, b, base);
}

}  // namespace viewgen
