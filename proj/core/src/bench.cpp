#include "viewgen/bench.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "viewgen/baselines.hpp"
#include "viewgen/errors.hpp"
#include "viewgen/parallel.hpp"

namespace viewgen {

namespace {

constexpr const char* kCacheFile = "coil_features.vgcf";

class Stopwatch {
 public:
  explicit Stopwatch(bool enabled) : enabled_(enabled), start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

std::vector<ForcedChoiceTrial> make_trials(const ClipSource& novel, const Encoder& encoder, const RotationSpec& rotation,
                                           std::size_t n, RngSeed seed, std::size_t workers) {
  if (n < 1) throw InvalidArgument("make_trials: n must be >= 1");
  if (!(rotation.range_deg > 0.0)) throw InvalidArgument("make_trials: rotation range must be positive");
  std::vector<ForcedChoiceTrial> out(n);
  parallel_for(n, workers, [&](std::size_t k, std::size_t) {
    Rng rng = Rng::stream(seed, SeedDomain::TrialSampling, k);
    ForcedChoiceTrial& trial = out[k];
    trial.omega_id = 2 * k;
    trial.other_id = 2 * k + 1;
    const ClipModel3D posed = novel.clip(trial.omega_id).rotated(random_orientation(rng));
    const ClipModel3D posed_other = novel.clip(trial.other_id).rotated(random_orientation(rng));
    trial.same_params = sample_rotation(rotation, rng);
    trial.t = encoder(project(posed));
    trial.b_same = encoder(project(posed, trial.same_params));
    trial.b_other = encoder(project(posed_other, sample_rotation(rotation, rng)));
  });
  return out;
}

double forced_choice_eval(const Scorer& scorer, std::span<const ForcedChoiceTrial> trials, std::size_t workers) {
  if (trials.empty()) throw InvalidArgument("forced_choice_eval: no trials");
  const auto& ref = trials.front().t;
  for (const auto& tr : trials) {
    require_compatible(ref, tr.t, "forced_choice_eval");
    require_compatible(ref, tr.b_same, "forced_choice_eval");
    require_compatible(ref, tr.b_other, "forced_choice_eval");
  }
  std::vector<char> wrong(trials.size(), 0);
  parallel_for(trials.size(), workers, [&](std::size_t k, std::size_t) {
    const auto& tr = trials[k];
    wrong[k] = scorer(tr.b_other, tr.t) >= scorer(tr.b_same, tr.t);
  });
  const auto errors = std::count(wrong.begin(), wrong.end(), 1);
  return static_cast<double>(errors) / static_cast<double>(trials.size());
}

double recognize_eval(const Scorer& scorer, std::span<const ModelBaseEntry> base, std::span<const Probe> probes,
                      std::size_t workers) {
  if (base.empty() || probes.empty()) throw InvalidArgument("recognize_eval: empty base or probe set");
  const FeatureVector* ref = nullptr;
  for (const auto& e : base)
    for (const auto& v : e.views) {
      if (!ref) ref = &v;
      require_compatible(*ref, v, "recognize_eval");
    }
  if (!ref) throw InvalidArgument("recognize_eval: model base has no views");
  for (const auto& p : probes) require_compatible(*ref, p.view, "recognize_eval");
  std::vector<char> wrong(probes.size(), 0);
  parallel_for(probes.size(), workers, [&](std::size_t k, std::size_t) {
    wrong[k] = classify_with(scorer, probes[k].view, base) != probes[k].object_id;
  });
  const auto errors = std::count(wrong.begin(), wrong.end(), 1);
  return static_cast<double>(errors) / static_cast<double>(probes.size());
}

void ExperimentConfig::validate() const {
  if (n_train_clips < 2) throw InvalidArgument("n_train_clips must be >= 2");
  if (n_trials < 1) throw InvalidArgument("n_trials must be >= 1");
  if (!(rotation_range_deg > 0.0) || !(locations_range_deg > 0.0))
    throw InvalidArgument("rotation ranges must be positive");
  if (train_pairs < 1 || fo_pairs < 1) throw InvalidArgument("pair counts must be >= 1");
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  grid.validate();
  mlp.validate();
}

RotationSpec ExperimentConfig::rotation_for(FeatureKind kind) const {
  if (kind == FeatureKind::Locations) return {locations_range_deg, locations_mode};
  return {rotation_range_deg, rotation_mode};
}

TableId parse_table_id(std::string_view name) {
  if (name == "clip_fo") return TableId::ClipFirstOrder;
  if (name == "clip_vs") return TableId::ClipViewSimilarity;
  if (name == "coil") return TableId::Coil;
  throw InvalidArgument("unknown table '" + std::string(name) + "' (expected clip_fo, clip_vs or coil)");
}

std::string_view to_string(TableId id) {
  switch (id) {
    case TableId::ClipFirstOrder: return "clip_fo";
    case TableId::ClipViewSimilarity: return "clip_vs";
    case TableId::Coil: return "coil";
  }
  return "unknown";
}

std::vector<ClipModel3D> training_clips(const ExperimentConfig& cfg) {
  return ClipSource(cfg.seed, SeedDomain::TrainingClips).clips(0, cfg.n_train_clips);
}

std::vector<ForcedChoiceTrial> column_trials(const ExperimentConfig& cfg, FeatureKind kind) {
  const ClipSource novel(cfg.seed, SeedDomain::NovelClips);
  return make_trials(novel, cfg.encoder_for(kind), cfg.rotation_for(kind), cfg.n_trials, cfg.seed, cfg.workers);
}

CoOccurrenceModel train_first_order(const ExperimentConfig& cfg) {
  const auto clips = training_clips(cfg);
  const auto kind = FeatureKind::FeatureMap;
  const auto samples =
      make_pairs(clips, cfg.fo_pairs, cfg.encoder_for(kind), cfg.rotation_for(kind), cfg.seed, cfg.workers);
  CoOccurrenceCounter counter(cfg.grid);
  for (const auto& s : samples)
    if (s.label == 1) counter.add(s.b, s.t);
  return counter.finish(cfg.alpha);
}

MlpSimilarity train_clip_similarity(const ExperimentConfig& cfg, FeatureKind kind, TrainLog* log) {
  const auto clips = training_clips(cfg);
  const auto samples =
      make_pairs(clips, cfg.train_pairs, cfg.encoder_for(kind), cfg.rotation_for(kind), cfg.seed, cfg.workers);
  TrainConfig tc = cfg.mlp;
  tc.seed = cfg.seed;
  return train(samples, tc, log);
}

Scorer euclidean_scorer() {
  return [](const FeatureVector& b, const FeatureVector& t) { return euclidean_score(b, t).score; };
}

Scorer first_order_scorer(const CoOccurrenceModel& model) {
  return [&model](const FeatureVector& b, const FeatureVector& t) { return model.log_score(b, t); };
}

Scorer similarity_scorer(const MlpSimilarity& model) {
  return [&model](const FeatureVector& b, const FeatureVector& t) { return model.logit(b, t); };
}

std::vector<CoilView> load_coil(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  if (!cfg.cache_dir.empty()) {
    const fs::path cache = fs::path(cfg.cache_dir) / kCacheFile;
    std::ifstream in(cache, std::ios::binary);
    if (in) return read_feature_cache(in);
  }
  auto views = ingest(cfg.coil_dir, IngestOptions{.require_complete = true, .workers = cfg.workers});
  if (!cfg.cache_dir.empty()) {
    fs::create_directories(cfg.cache_dir);
    std::ofstream out(fs::path(cfg.cache_dir) / kCacheFile, std::ios::binary);
    write_feature_cache(out, views);
  }
  return views;
}

namespace {

ResultRow make_row(const ExperimentConfig& cfg, std::string method, FeatureKind kind, double error, std::size_t n,
                   const Stopwatch& watch) {
  return {std::move(method), std::string(to_string(kind)), error, n, cfg.seed.value, watch.seconds()};
}

void run_clip_fo(const ExperimentConfig& cfg, TableResult& result) {
  const auto kind = FeatureKind::FeatureMap;
  const auto trials = column_trials(cfg, kind);
  {
    Stopwatch w(cfg.record_wall_time);
    const double e = forced_choice_eval(euclidean_scorer(), trials, cfg.workers);
    result.rows.push_back(make_row(cfg, "euclid", kind, e, trials.size(), w));
  }
  Stopwatch w(cfg.record_wall_time);
  const auto model = train_first_order(cfg);
  const double e = forced_choice_eval(first_order_scorer(model), trials, cfg.workers);
  result.rows.push_back(make_row(cfg, "firstorder", kind, e, trials.size(), w));
}

void run_clip_vs(const ExperimentConfig& cfg, TableResult& result) {
  for (const auto kind : {FeatureKind::Angles, FeatureKind::Locations, FeatureKind::FeatureMap}) {
    const auto trials = column_trials(cfg, kind);
    {
      Stopwatch w(cfg.record_wall_time);
      const double e = forced_choice_eval(euclidean_scorer(), trials, cfg.workers);
      result.rows.push_back(make_row(cfg, "euclid", kind, e, trials.size(), w));
    }
    Stopwatch w(cfg.record_wall_time);
    const auto model = train_clip_similarity(cfg, kind);
    const double e = forced_choice_eval(similarity_scorer(model), trials, cfg.workers);
    result.rows.push_back(make_row(cfg, "viewsim", kind, e, trials.size(), w));
  }
}

void run_coil(const ExperimentConfig& cfg, TableResult& result) {
  std::error_code ec;
  const bool have_cache =
      !cfg.cache_dir.empty() && std::filesystem::exists(std::filesystem::path(cfg.cache_dir) / kCacheFile, ec);
  if (!have_cache && (cfg.coil_dir.empty() || !std::filesystem::is_directory(cfg.coil_dir, ec))) {
    result.status = RunStatus::Skipped;
    result.notice = cfg.coil_dir.empty() ? "COIL-100 directory not given; coil table skipped"
                                         : "COIL-100 directory '" + cfg.coil_dir + "' not found; coil table skipped";
    return;
  }
  const auto data = load_coil(cfg);
  const auto split = make_split();
  ProtocolOptions opts{.eigen_k = cfg.eigen_k, .seed = cfg.seed, .workers = cfg.workers, .audit = {}};
  const auto kind = FeatureKind::Gradient;
  for (const auto method : {CoilMethod::Euclidean, CoilMethod::Eigenspace, CoilMethod::ViewSimilarity}) {
    Stopwatch w(cfg.record_wall_time);
    std::optional<MlpSimilarity> model;
    if (method == CoilMethod::ViewSimilarity) {
      CoilTrainOptions train_opts = cfg.coil_train;
      train_opts.train.seed = cfg.seed;
      model.emplace(train_coil_similarity(split, data, train_opts));
    }
    const auto r = run_protocol(method, split, data, opts, model ? &*model : nullptr);
    result.rows.push_back(make_row(cfg, std::string(to_string(method)), kind, r.error_rate, r.n_probes, w));
  }
}

}  // namespace

TableResult reproduce_table(TableId table, const ExperimentConfig& cfg) {
  cfg.validate();
  TableResult result;
  result.table = table;
  switch (table) {
    case TableId::ClipFirstOrder: run_clip_fo(cfg, result); break;
    case TableId::ClipViewSimilarity: run_clip_vs(cfg, result); break;
    case TableId::Coil: run_coil(cfg, result); break;
  }
  return result;
}

void write_results_csv(std::ostream& out, std::span<const ResultRow> rows) {
  out << kResultHeader << '\n';
  char buf[64];
  for (const auto& r : rows) {
    if (!(r.error_rate >= 0.0 && r.error_rate <= 1.0)) throw InvalidArgument("ResultRow: error_rate outside [0, 1]");
    out << r.method << ',' << r.encoder << ',';
    std::snprintf(buf, sizeof buf, "%.6f", r.error_rate);
    out << buf << ',' << r.n_trials << ',' << r.seed << ',';
    std::snprintf(buf, sizeof buf, "%.3f", r.wall_time_s);
    out << buf << '\n';
  }
}

void write_summary(std::ostream& out, const TableResult& result) {
  out << "table " << to_string(result.table);
  if (result.status == RunStatus::Skipped) {
    out << ": skipped (" << result.notice << ")\n";
    return;
  }
  out << '\n';
  char buf[128];
  for (const auto& r : result.rows) {
    std::snprintf(buf, sizeof buf, "  %-10s %-10s %6.2f%%  (n=%zu)\n", r.method.c_str(), r.encoder.c_str(),
                  100.0 * r.error_rate, r.n_trials);
    out << buf;
  }
}

}  // namespace viewgen
