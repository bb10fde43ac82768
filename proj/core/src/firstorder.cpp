#include "viewgen/firstorder.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "viewgen/binary_io.hpp"
#include "viewgen/errors.hpp"

namespace viewgen {

namespace {

constexpr char kMagic[5] = "VGCO";
constexpr std::uint32_t kVersion = 1;

std::size_t rule_index(ScoreRule rule) {
  switch (rule) {
    case ScoreRule::PointwiseMutualInformation: return 0;
    case ScoreRule::JointLog: return 1;
  }
  throw InvalidArgument("unknown score rule");
}

}  // namespace

// ---------------------------------------------------------------------------
// Counter

CoOccurrenceCounter::CoOccurrenceCounter(const GridSpec& grid) : grid_(grid), cells_(grid.cells()) {
  grid_.validate();
  both_on_.assign(cells_ * cells_, 0);
  b_on_.assign(cells_, 0);
  t_on_.assign(cells_, 0);
}

void CoOccurrenceCounter::add(const FeatureVector& b, const FeatureVector& t) {
  if (b.kind() != FeatureKind::FeatureMap || t.kind() != FeatureKind::FeatureMap)
    throw InvalidArgument("CoOccurrenceCounter::add: feature maps required");
  if (b.size() != cells_ || t.size() != cells_)
    throw InvalidArgument("CoOccurrenceCounter::add: feature map does not match the counter's grid");
  for (auto i : b.cells()) {
    ++b_on_[i];
    std::uint32_t* row = both_on_.data() + static_cast<std::size_t>(i) * cells_;
    for (auto j : t.cells()) ++row[j];
  }
  for (auto j : t.cells()) ++t_on_[j];
  ++pairs_;
}

void CoOccurrenceCounter::merge(const CoOccurrenceCounter& other) {
  if (!(other.grid_ == grid_)) throw InvalidArgument("CoOccurrenceCounter::merge: grid mismatch");
  for (std::size_t k = 0; k < both_on_.size(); ++k) both_on_[k] += other.both_on_[k];
  for (std::size_t k = 0; k < cells_; ++k) {
    b_on_[k] += other.b_on_[k];
    t_on_[k] += other.t_on_[k];
  }
  pairs_ += other.pairs_;
}

CoOccurrenceModel CoOccurrenceCounter::finish(double alpha) const {
  return CoOccurrenceModel(grid_, both_on_, b_on_, t_on_, pairs_, alpha);
}

// ---------------------------------------------------------------------------
// Model

CoOccurrenceModel::CoOccurrenceModel(const GridSpec& grid, std::vector<std::uint32_t> both_on,
                                     std::vector<std::uint32_t> b_on, std::vector<std::uint32_t> t_on,
                                     std::uint64_t pair_count, double alpha)
    : grid_(grid),
      cells_(grid.cells()),
      both_on_(std::move(both_on)),
      b_on_(std::move(b_on)),
      t_on_(std::move(t_on)),
      pairs_(pair_count),
      alpha_(alpha) {
  grid_.validate();
  if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) throw InvalidArgument("CoOccurrenceModel: alpha must be positive");
  if (both_on_.size() != cells_ * cells_ || b_on_.size() != cells_ || t_on_.size() != cells_)
    throw InvalidArgument("CoOccurrenceModel: table sizes do not match the grid");
  for (std::size_t i = 0; i < cells_; ++i) {
    if (b_on_[i] > pairs_ || t_on_[i] > pairs_) throw InvalidArgument("CoOccurrenceModel: marginal exceeds pair count");
    for (std::size_t j = 0; j < cells_; ++j) {
      const std::uint64_t n11 = both_on_[i * cells_ + j];
      if (n11 > b_on_[i] || n11 > t_on_[j] ||
          static_cast<std::uint64_t>(b_on_[i]) + t_on_[j] - n11 > pairs_)
        throw InvalidArgument("CoOccurrenceModel: inconsistent counts");
    }
  }
  log_denominator_ = std::log(static_cast<double>(pairs_) + 2.0 * alpha_);
  build_caches();
}

std::uint64_t CoOccurrenceModel::count(std::size_t i, std::size_t j, int b, int t) const {
  if (i >= cells_ || j >= cells_) throw InvalidArgument("CoOccurrenceModel::count: cell out of range");
  const std::uint64_t n11 = both_on_[i * cells_ + j];
  const std::uint64_t bi = b_on_[i], tj = t_on_[j];
  if (b && t) return n11;
  if (b) return bi - n11;
  if (t) return tj - n11;
  return pairs_ - bi - tj + n11;
}

double CoOccurrenceModel::smoothed(std::size_t i, std::size_t j, int b, int t) const {
  return (static_cast<double>(count(i, j, b, t)) + alpha_) / (static_cast<double>(pairs_) + 2.0 * alpha_);
}

double CoOccurrenceModel::log_marginal_b(std::size_t i, int b) const {
  const double on = b_on_[i];
  return std::log((b ? on : static_cast<double>(pairs_) - on) + alpha_) - log_denominator_;
}

double CoOccurrenceModel::log_marginal_t(std::size_t j, int t) const {
  const double on = t_on_[j];
  return std::log((t ? on : static_cast<double>(pairs_) - on) + alpha_) - log_denominator_;
}

double CoOccurrenceModel::term(std::size_t i, std::size_t j, int b, int t, ScoreRule rule) const {
  const double joint = std::log(static_cast<double>(count(i, j, b, t)) + alpha_) - log_denominator_;
  if (rule == ScoreRule::JointLog) return joint;
  return joint - log_marginal_b(i, b) - log_marginal_t(j, t);
}

void CoOccurrenceModel::build_caches() {
  for (std::size_t r = 0; r < 2; ++r) {
    row_sum10_[r].assign(cells_, 0.0);
    col_sum01_[r].assign(cells_, 0.0);
  }
  std::vector<double> lb1(cells_), lb0(cells_), lt1(cells_), lt0(cells_);
  for (std::size_t k = 0; k < cells_; ++k) {
    lb1[k] = log_marginal_b(k, 1);
    lb0[k] = log_marginal_b(k, 0);
    lt1[k] = log_marginal_t(k, 1);
    lt0[k] = log_marginal_t(k, 0);
  }
  for (std::size_t i = 0; i < cells_; ++i) {
    const double bi = b_on_[i];
    const std::uint32_t* row = both_on_.data() + i * cells_;
    for (std::size_t j = 0; j < cells_; ++j) {
      const double n11 = row[j];
      const double j10 = std::log(bi - n11 + alpha_) - log_denominator_;
      const double j01 = std::log(t_on_[j] - n11 + alpha_) - log_denominator_;
      row_sum10_[1][i] += j10;
      col_sum01_[1][j] += j01;
      row_sum10_[0][i] += j10 - lb1[i] - lt0[j];
      col_sum01_[0][j] += j01 - lb0[i] - lt1[j];
    }
  }
}

void CoOccurrenceModel::require_grid(const FeatureVector& v, const char* where) const {
  if (v.kind() != FeatureKind::FeatureMap || v.size() != cells_)
    throw InvalidArgument(std::string(where) + ": expected a feature map on the model's grid");
}

double CoOccurrenceModel::log_score(const FeatureVector& b, const FeatureVector& t, ScoreRule rule) const {
  require_grid(b, "log_score");
  require_grid(t, "log_score");
  const std::size_t r = rule_index(rule);
  double score = 0.0;
  // (1,1) terms, and removal of the B-active rows / T-active columns from the
  // precomputed (1,0) and (0,1) sums.
  for (auto i : b.cells()) {
    score += row_sum10_[r][i];
    for (auto j : t.cells()) {
      score += term(i, j, 1, 1, rule);
      score -= term(i, j, 1, 0, rule);
      score -= term(i, j, 0, 1, rule);
    }
  }
  for (auto j : t.cells()) score += col_sum01_[r][j];
  return score;
}

BlurImage CoOccurrenceModel::blur_image(const FeatureVector& t) const {
  require_grid(t, "blur_image");
  BlurImage out{grid_, std::vector<double>(cells_, 0.0)};
  const auto active = t.cells();
  if (active.empty()) {
    for (std::size_t i = 0; i < cells_; ++i) out.log_probs[i] = log_marginal_b(i, 1);
    return out;
  }
  for (auto j : active) {
    const double log_den = std::log(static_cast<double>(t_on_[j]) + 2.0 * alpha_);
    for (std::size_t i = 0; i < cells_; ++i)
      out.log_probs[i] += std::log(static_cast<double>(both_on_[i * cells_ + j]) + alpha_) - log_den;
  }
  for (auto& v : out.log_probs) v /= static_cast<double>(active.size());
  return out;
}

void CoOccurrenceModel::save(std::ostream& out) const {
  io::write_magic(out, kMagic);
  io::write_le<std::uint32_t>(out, kVersion);
  io::write_le<std::uint32_t>(out, grid_.resolution);
  io::write_le<double>(out, grid_.extent);
  io::write_le<double>(out, alpha_);
  io::write_le<std::uint64_t>(out, pairs_);
  // N[i][j][b][t], t fastest.
  std::vector<char> buf(cells_ * 4 * 4);
  for (std::size_t i = 0; i < cells_; ++i) {
    char* p = buf.data();
    for (std::size_t j = 0; j < cells_; ++j)
      for (int b = 0; b < 2; ++b)
        for (int t = 0; t < 2; ++t) {
          const std::uint64_t c = count(i, j, b, t);
          if (c > std::numeric_limits<std::uint32_t>::max()) throw FormatError("count exceeds 32 bits");
          for (int k = 0; k < 4; ++k) *p++ = static_cast<char>((c >> (8 * k)) & 0xFFu);
        }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw FormatError("failed writing co-occurrence model");
}

CoOccurrenceModel CoOccurrenceModel::load(std::istream& in) {
  io::expect_magic(in, kMagic);
  const auto version = io::read_le<std::uint32_t>(in);
  if (version != kVersion) throw FormatError("unsupported co-occurrence model version " + std::to_string(version));
  GridSpec grid;
  grid.resolution = io::read_le<std::uint32_t>(in);
  grid.extent = io::read_le<double>(in);
  const double alpha = io::read_le<double>(in);
  const auto pairs = io::read_le<std::uint64_t>(in);
  grid.validate();
  const std::size_t cells = grid.cells();
  std::vector<std::uint32_t> both(cells * cells), b_on(cells), t_on(cells);
  std::vector<unsigned char> buf(cells * 4 * 4);
  for (std::size_t i = 0; i < cells; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) throw FormatError("truncated co-occurrence model");
    const unsigned char* p = buf.data();
    for (std::size_t j = 0; j < cells; ++j) {
      std::uint32_t n[2][2];
      for (int b = 0; b < 2; ++b)
        for (int t = 0; t < 2; ++t) {
          n[b][t] = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                    (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
          p += 4;
        }
      if (static_cast<std::uint64_t>(n[0][0]) + n[0][1] + n[1][0] + n[1][1] != pairs)
        throw FormatError("co-occurrence table violates the marginal identity");
      both[i * cells + j] = n[1][1];
      const std::uint32_t bi = n[1][0] + n[1][1];
      const std::uint32_t tj = n[0][1] + n[1][1];
      if (j == 0) b_on[i] = bi;
      else if (b_on[i] != bi) throw FormatError("inconsistent B marginal in co-occurrence table");
      if (i == 0) t_on[j] = tj;
      else if (t_on[j] != tj) throw FormatError("inconsistent T marginal in co-occurrence table");
    }
  }
  return CoOccurrenceModel(grid, std::move(both), std::move(b_on), std::move(t_on), pairs, alpha);
}

CoOccurrenceModel fit_cooccurrence(std::span<const ViewPair> pairs, const GridSpec& grid, double alpha) {
  if (pairs.empty()) throw InvalidArgument("fit_cooccurrence: empty pair stream");
  CoOccurrenceCounter counter(grid);
  for (const auto& p : pairs) counter.add(p.b, p.t);
  return counter.finish(alpha);
}

double blur_entropy(const BlurImage& blur) {
  if (blur.log_probs.empty()) return 0.0;
  const double peak = *std::max_element(blur.log_probs.begin(), blur.log_probs.end());
  double z = 0.0;
  for (double v : blur.log_probs) z += std::exp(v - peak);
  double h = 0.0;
  for (double v : blur.log_probs) {
    const double p = std::exp(v - peak) / z;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

void write_blur_pgm(std::ostream& out, const BlurImage& blur) {
  const auto res = blur.grid.resolution;
  if (blur.log_probs.size() != blur.grid.cells()) throw InvalidArgument("write_blur_pgm: size mismatch");
  const auto [lo, hi] = std::minmax_element(blur.log_probs.begin(), blur.log_probs.end());
  const double span = *hi - *lo;
  out << "P5\n" << res << ' ' << res << "\n255\n";
  for (double v : blur.log_probs) {
    const double u = span > 0.0 ? (v - *lo) / span : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * (1.0 - u)))));
  }
}

}  // namespace viewgen
