#pragma once

// First-order (pairwise co-occurrence) model of P(B | T) on binary feature
// maps. Counting co-occurrences of target cell i and training cell j over
// view pairs of the same object gives a spatially varying blur kernel.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "viewgen/encode.hpp"

namespace viewgen {

/// A (target, training) pair of encodings.
struct ViewPair {
  FeatureVector b;
  FeatureVector t;
};

enum class ScoreRule : std::uint32_t {
  /// h_ij(b,t) = log P(B_i=b, T_j=t) - log P(B_i=b) - log P(T_j=t).
  PointwiseMutualInformation = 0,
  /// h_ij(b,t) = log P(B_i=b, T_j=t); marginals are not removed.
  JointLog = 1,
};

/// Per-cell log P(B_i = 1 | T) for display.
struct BlurImage {
  GridSpec grid;
  std::vector<double> log_probs;
};

class CoOccurrenceModel;

/// Accumulates co-occurrence counts. Counters built on disjoint shards of a
/// pair stream can be merged in any order with the same result.
class CoOccurrenceCounter {
 public:
  explicit CoOccurrenceCounter(const GridSpec& grid);

  void add(const FeatureVector& b, const FeatureVector& t);
  void merge(const CoOccurrenceCounter& other);

  const GridSpec& grid() const noexcept { return grid_; }
  std::uint64_t pair_count() const noexcept { return pairs_; }

  CoOccurrenceModel finish(double alpha = 1.0) const;

 private:
  GridSpec grid_;
  std::size_t cells_;
  std::vector<std::uint32_t> both_on_;  // [i * cells + j]: B_i = 1 and T_j = 1
  std::vector<std::uint32_t> b_on_;
  std::vector<std::uint32_t> t_on_;
  std::uint64_t pairs_ = 0;
};

/// The 4-way table N[i][j][b][t] with Laplace smoothing `alpha`.
///
/// Only the (1,1) counts and the per-cell marginals are stored; the other
/// three entries of each 2x2 table follow from pair_count exactly.
class CoOccurrenceModel {
 public:
  CoOccurrenceModel(const GridSpec& grid, std::vector<std::uint32_t> both_on, std::vector<std::uint32_t> b_on,
                    std::vector<std::uint32_t> t_on, std::uint64_t pair_count, double alpha);

  const GridSpec& grid() const noexcept { return grid_; }
  std::size_t cells() const noexcept { return cells_; }
  std::uint64_t pair_count() const noexcept { return pairs_; }
  double alpha() const noexcept { return alpha_; }

  /// N[i][j][b][t].
  std::uint64_t count(std::size_t i, std::size_t j, int b, int t) const;
  /// (N[i][j][b][t] + alpha) / (pair_count + 2 alpha).
  double smoothed(std::size_t i, std::size_t j, int b, int t) const;
  /// h_ij(b, t) under `rule`.
  double term(std::size_t i, std::size_t j, int b, int t, ScoreRule rule = ScoreRule::PointwiseMutualInformation) const;

  /// Sum of h_ij(B_i, T_j) over cell pairs where B_i = 1 or T_j = 1.
  /// Pairs with both cells off are a shared constant and are left out.
  double log_score(const FeatureVector& b, const FeatureVector& t,
                   ScoreRule rule = ScoreRule::PointwiseMutualInformation) const;

  /// log P(B_i = 1 | T), averaged over the active cells of T:
  /// mean_j log[(N11_ij + alpha) / (N_T_j + 2 alpha)]. Falls back to the
  /// marginal of B_i when T is empty.
  BlurImage blur_image(const FeatureVector& t) const;

  void save(std::ostream& out) const;
  static CoOccurrenceModel load(std::istream& in);

 private:
  void require_grid(const FeatureVector& v, const char* where) const;
  double log_marginal_b(std::size_t i, int b) const;
  double log_marginal_t(std::size_t j, int t) const;
  void build_caches();

  GridSpec grid_;
  std::size_t cells_;
  std::vector<std::uint32_t> both_on_;
  std::vector<std::uint32_t> b_on_;
  std::vector<std::uint32_t> t_on_;
  std::uint64_t pairs_;
  double alpha_;
  double log_denominator_;

  // Row sums of h(i, ., 1, 0) and column sums of h(., j, 0, 1), indexed by rule.
  std::vector<double> row_sum10_[2];
  std::vector<double> col_sum01_[2];
};

/// Counts every pair in `pairs`. Throws InvalidArgument on an empty stream or
/// when a vector is not a feature map on `grid`.
CoOccurrenceModel fit_cooccurrence(std::span<const ViewPair> pairs, const GridSpec& grid, double alpha = 1.0);

/// Shannon entropy (nats) of exp(log_probs) normalized to sum to one.
double blur_entropy(const BlurImage& blur);

/// Binary PGM, min-max normalized; darker pixels are more probable.
void write_blur_pgm(std::ostream& out, const BlurImage& blur);

}  // namespace viewgen
