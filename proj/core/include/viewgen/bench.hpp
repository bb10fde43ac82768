#pragma once

// Experiment orchestration: forced-choice trials on novel clips, model-base
// recognition, and reproduction of the clip and COIL result tables.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "viewgen/clipgen.hpp"
#include "viewgen/coil.hpp"
#include "viewgen/encode.hpp"
#include "viewgen/firstorder.hpp"
#include "viewgen/recognize.hpp"
#include "viewgen/rng.hpp"
#include "viewgen/viewsim.hpp"

namespace viewgen {

/// One training view t of clip omega, another view of omega, and a view of a
/// different clip. The scorer must prefer (b_same, t).
struct ForcedChoiceTrial {
  FeatureVector t;
  FeatureVector b_same;
  FeatureVector b_other;
  std::uint64_t omega_id = 0;
  std::uint64_t other_id = 0;
  /// Rotation of b_same relative to t.
  ViewParams same_params;
};

/// Trials use fresh clips 2k and 2k+1 of `novel` for trial k, each in a
/// random pose; target views are rotated per `rotation`.
std::vector<ForcedChoiceTrial> make_trials(const ClipSource& novel, const Encoder& encoder, const RotationSpec& rotation,
                                           std::size_t n, RngSeed seed, std::size_t workers = 1);

/// Fraction of trials with score(b_other, t) >= score(b_same, t).
double forced_choice_eval(const Scorer& scorer, std::span<const ForcedChoiceTrial> trials, std::size_t workers = 1);

/// Fraction of probes that classify_with() assigns to the wrong object.
double recognize_eval(const Scorer& scorer, std::span<const ModelBaseEntry> base, std::span<const Probe> probes,
                      std::size_t workers = 1);

struct ExperimentConfig {
  std::size_t n_train_clips = 200;
  double rotation_range_deg = 40.0;
  RotationMode rotation_mode = RotationMode::Continuous;
  /// Locations are evaluated with their own rotation protocol.
  double locations_range_deg = 45.0;
  RotationMode locations_mode = RotationMode::Discrete;
  FeatureKind encoder = FeatureKind::FeatureMap;
  GridSpec grid{};
  std::size_t n_trials = 5000;
  RngSeed seed{1};
  std::string method = "viewsim";
  /// Positive/negative iterations for the MLP (2x samples).
  std::size_t train_pairs = 100000;
  /// Same-object pairs counted by the first-order model.
  std::size_t fo_pairs = 100000;
  double alpha = 1.0;
  TrainConfig mlp{};
  std::size_t workers = 1;
  /// wall_time_s is written as 0 unless set, so result files stay byte-stable.
  bool record_wall_time = false;

  std::string coil_dir;
  std::string cache_dir;
  std::size_t eigen_k = 20;
  CoilTrainOptions coil_train{};

  void validate() const;
  Encoder encoder_for(FeatureKind kind) const { return Encoder{kind, grid}; }
  RotationSpec rotation_for(FeatureKind kind) const;
};

struct ResultRow {
  std::string method;
  std::string encoder;
  double error_rate = 0.0;
  std::size_t n_trials = 0;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
};

enum class TableId { ClipFirstOrder, ClipViewSimilarity, Coil };
TableId parse_table_id(std::string_view name);
std::string_view to_string(TableId id);

enum class RunStatus { Ok, Skipped };

struct TableResult {
  TableId table = TableId::ClipFirstOrder;
  RunStatus status = RunStatus::Ok;
  std::string notice;
  std::vector<ResultRow> rows;
};

/// The fixed set of training clips.
std::vector<ClipModel3D> training_clips(const ExperimentConfig& cfg);
/// Trials for one encoder column; every method of the column shares them.
std::vector<ForcedChoiceTrial> column_trials(const ExperimentConfig& cfg, FeatureKind kind);

CoOccurrenceModel train_first_order(const ExperimentConfig& cfg);
MlpSimilarity train_clip_similarity(const ExperimentConfig& cfg, FeatureKind kind, TrainLog* log = nullptr);

/// Scorers by method tag: "euclid", "firstorder", "viewsim".
Scorer euclidean_scorer();
Scorer first_order_scorer(const CoOccurrenceModel& model);
Scorer similarity_scorer(const MlpSimilarity& model);

/// Runs every cell of a table. The COIL table is skipped (with a notice) when
/// cfg.coil_dir does not name a directory.
TableResult reproduce_table(TableId table, const ExperimentConfig& cfg);

/// COIL views from the cache in cfg.cache_dir when present, else ingested
/// from cfg.coil_dir (and cached if cfg.cache_dir is set).
std::vector<CoilView> load_coil(const ExperimentConfig& cfg);

inline constexpr std::string_view kResultHeader = "method,encoder,error_rate,n_trials,seed,wall_time_s";

void write_results_csv(std::ostream& out, std::span<const ResultRow> rows);
void write_summary(std::ostream& out, const TableResult& result);

}  // namespace viewgen
