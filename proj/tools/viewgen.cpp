// viewgen command line: clip generation, model training, forced-choice
// evaluation, COIL ingestion and table reproduction.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "viewgen/baselines.hpp"
#include "viewgen/bench.hpp"
#include "viewgen/coil.hpp"
#include "viewgen/config.hpp"
#include "viewgen/errors.hpp"
#include "viewgen/firstorder.hpp"
#include "viewgen/viewsim.hpp"

namespace {

using namespace viewgen;

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitSkipped = 77;

// String-valued flags that map one-to-one onto config keys, so a flag and a
// config line are interchangeable and the flag wins.
struct FlagBinding {
  CLI::Option* option;
  std::string key;
  std::shared_ptr<std::string> value;
};

class Flags {
 public:
  void bind(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<std::string>();
    bindings_.push_back({app.add_option(flag, *value, help), key, value});
  }

  Config overlay(Config base) const {
    for (const auto& b : bindings_)
      if (b.option->count() > 0) base.set(b.key, *b.value);
    return base;
  }

 private:
  std::vector<FlagBinding> bindings_;
};

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty())
        std::filesystem::create_directories(parent);
      file_.open(path, std::ios::binary);
      if (!file_) throw InvalidArgument("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  bool is_stdout() const { return !file_.is_open(); }

 private:
  std::ofstream file_;
};

std::ifstream open_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path);
  return in;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"viewgen: view generalization and view similarity experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_path;
  bool wall_time = false;
  Flags flags;
  app.add_option("--config", config_path, "key = value configuration file (flags override it)");
  app.add_option("--out", out_path, "output file (default: stdout)");
  flags.bind(app, "--seed", "seed", "root random seed");
  flags.bind(app, "--workers", "workers", "worker threads");
  app.add_flag("--wall-time", wall_time, "record wall_time_s in result CSVs");

  auto* gen = app.add_subcommand("gen-clips", "write random paperclips in the text clip format");
  std::size_t gen_count = 200;
  std::uint64_t gen_first = 0;
  std::string gen_domain = "training";
  gen->add_option("--count", gen_count, "number of clips")->capture_default_str();
  gen->add_option("--first-id", gen_first, "first clip id")->capture_default_str();
  gen->add_option("--domain", gen_domain, "training or novel")->check(CLI::IsMember({"training", "novel"}))
      ->capture_default_str();

  auto* train_fo = app.add_subcommand("train-fo", "fit the first-order co-occurrence model");
  std::string blur_pgm;
  flags.bind(*train_fo, "--pairs", "fo_pairs", "same-object view pairs to count");
  flags.bind(*train_fo, "--alpha", "alpha", "Laplace smoothing");
  flags.bind(*train_fo, "--n-train-clips", "n_train_clips", "training clips");
  train_fo->add_option("--blur-pgm", blur_pgm, "also write the blur of one training view as PGM");

  auto* train_mlp = app.add_subcommand("train-mlp", "train the MLP view similarity model");
  flags.bind(*train_mlp, "--encoder", "encoder", "angles, locations or featuremap");
  flags.bind(*train_mlp, "--pairs", "train_pairs", "positive/negative pair iterations");
  flags.bind(*train_mlp, "--epochs", "epochs", "training epochs");
  flags.bind(*train_mlp, "--hidden", "hidden_units", "hidden units");
  flags.bind(*train_mlp, "--learning-rate", "learning_rate", "SGD learning rate");
  flags.bind(*train_mlp, "--batch-size", "batch_size", "mini-batch size");
  flags.bind(*train_mlp, "--validation", "validation_fraction", "held-out fraction for early stopping");
  flags.bind(*train_mlp, "--n-train-clips", "n_train_clips", "training clips");

  auto* eval_fc = app.add_subcommand("eval-fc", "forced-choice error of one method on novel clips");
  std::string model_path;
  flags.bind(*eval_fc, "--method", "method", "euclid, firstorder or viewsim");
  flags.bind(*eval_fc, "--encoder", "encoder", "angles, locations or featuremap");
  flags.bind(*eval_fc, "--trials", "n_trials", "number of trials");
  eval_fc->add_option("--model", model_path, "trained model file (trained on the fly when omitted)");

  auto* coil_ingest = app.add_subcommand("coil-ingest", "extract COIL-100 features into the cache");
  auto* coil_run = app.add_subcommand("coil-run", "run the COIL-100 recognition protocol");
  for (auto* sub : {coil_ingest, coil_run}) {
    flags.bind(*sub, "--coil-dir", "coil_dir", "directory with obj<N>__<A>.png images");
    flags.bind(*sub, "--cache-dir", "cache_dir", "feature cache directory");
  }
  std::string coil_method = "viewsim";
  coil_run->add_option("--method", coil_method, "euclid, eigen or viewsim")
      ->check(CLI::IsMember({"euclid", "eigen", "viewsim", "random"}))
      ->capture_default_str();
  flags.bind(*coil_run, "--eigen-k", "eigen_k", "eigenspace dimension");

  auto* reproduce = app.add_subcommand("reproduce", "reproduce a result table");
  std::string table;
  reproduce->add_option("--table", table, "clip_fo, clip_vs or coil")
      ->required()
      ->check(CLI::IsMember({"clip_fo", "clip_vs", "coil"}));
  flags.bind(*reproduce, "--coil-dir", "coil_dir", "COIL-100 image directory");
  flags.bind(*reproduce, "--cache-dir", "cache_dir", "feature cache directory");
  flags.bind(*reproduce, "--trials", "n_trials", "trials per cell");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    Config config = config_path.empty() ? Config{} : Config::load(config_path);
    config = flags.overlay(std::move(config));
    if (wall_time) config.set("wall_time", "true");
    ExperimentConfig cfg;
    apply_config(config, cfg);
    cfg.validate();

    if (*gen) {
      Output out(out_path);
      const auto domain = gen_domain == "novel" ? SeedDomain::NovelClips : SeedDomain::TrainingClips;
      const ClipSource source(cfg.seed, domain);
      for (std::size_t i = 0; i < gen_count; ++i)
        write_clip(out.stream(), {source.clip(gen_first + i), cfg.seed.value, gen_first + i});
      return 0;
    }

    if (*train_fo) {
      if (out_path.empty()) throw InvalidArgument("train-fo: --out model path required");
      const auto model = train_first_order(cfg);
      Output out(out_path);
      model.save(out.stream());
      if (!blur_pgm.empty()) {
        const auto clip = training_clips(cfg).front();
        const auto t = cfg.encoder_for(FeatureKind::FeatureMap)(project(clip));
        std::ofstream pgm(blur_pgm, std::ios::binary);
        if (!pgm) throw InvalidArgument("cannot write " + blur_pgm);
        write_blur_pgm(pgm, model.blur_image(t));
      }
      std::cerr << "first-order model: " << model.pair_count() << " pairs, " << model.cells() << " cells\n";
      return 0;
    }

    if (*train_mlp) {
      if (out_path.empty()) throw InvalidArgument("train-mlp: --out model path required");
      TrainLog log;
      const auto model = train_clip_similarity(cfg, cfg.encoder, &log);
      Output out(out_path);
      model.save(out.stream());
      std::cerr << "mlp (" << to_string(cfg.encoder) << "): " << log.train_loss.size()
                << " epochs, final loss " << log.train_loss.back() << "\n";
      return 0;
    }

    if (*eval_fc) {
      const auto trials = column_trials(cfg, cfg.encoder);
      double error = 0.0;
      if (cfg.method == "euclid") {
        error = forced_choice_eval(euclidean_scorer(), trials, cfg.workers);
      } else if (cfg.method == "firstorder") {
        if (cfg.encoder != FeatureKind::FeatureMap) throw InvalidArgument("firstorder works on feature maps only");
        if (model_path.empty()) {
          error = forced_choice_eval(first_order_scorer(train_first_order(cfg)), trials, cfg.workers);
        } else {
          auto in = open_binary(model_path);
          const auto model = CoOccurrenceModel::load(in);
          error = forced_choice_eval(first_order_scorer(model), trials, cfg.workers);
        }
      } else if (cfg.method == "viewsim") {
        if (model_path.empty()) {
          const auto model = train_clip_similarity(cfg, cfg.encoder);
          error = forced_choice_eval(similarity_scorer(model), trials, cfg.workers);
        } else {
          auto in = open_binary(model_path);
          const auto model = MlpSimilarity::load(in);
          error = forced_choice_eval(similarity_scorer(model), trials, cfg.workers);
        }
      } else {
        throw InvalidArgument("unknown method '" + cfg.method + "' (euclid, firstorder, viewsim)");
      }
      const ResultRow row{cfg.method, std::string(to_string(cfg.encoder)), error, trials.size(), cfg.seed.value, 0.0};
      Output out(out_path);
      write_results_csv(out.stream(), std::span(&row, 1));
      return 0;
    }

    if (*coil_ingest) {
      if (cfg.coil_dir.empty() || !std::filesystem::is_directory(cfg.coil_dir)) {
        std::cerr << "COIL-100 directory not found; nothing ingested\n";
        return kExitSkipped;
      }
      if (cfg.cache_dir.empty()) throw InvalidArgument("coil-ingest: --cache-dir required");
      const auto views = load_coil(cfg);
      std::cerr << "ingested " << views.size() << " views into " << cfg.cache_dir << "\n";
      return 0;
    }

    if (*coil_run) {
      const bool have_cache = !cfg.cache_dir.empty() &&
                              std::filesystem::exists(std::filesystem::path(cfg.cache_dir) / "coil_features.vgcf");
      if (!have_cache && (cfg.coil_dir.empty() || !std::filesystem::is_directory(cfg.coil_dir))) {
        std::cerr << "COIL-100 dataset not available; skipped\n";
        return kExitSkipped;
      }
      const auto data = load_coil(cfg);
      const auto split = make_split();
      const auto method = parse_coil_method(coil_method);
      std::optional<MlpSimilarity> model;
      if (method == CoilMethod::ViewSimilarity) {
        CoilTrainOptions opts = cfg.coil_train;
        opts.train.seed = cfg.seed;
        model.emplace(train_coil_similarity(split, data, opts));
      }
      const ProtocolOptions popts{.eigen_k = cfg.eigen_k, .seed = cfg.seed, .workers = cfg.workers, .audit = {}};
      const auto r = run_protocol(method, split, data, popts, model ? &*model : nullptr);
      const ResultRow row{coil_method, "gradient", r.error_rate, r.n_probes, cfg.seed.value, 0.0};
      Output out(out_path);
      write_results_csv(out.stream(), std::span(&row, 1));
      return 0;
    }

    if (*reproduce) {
      const auto result = reproduce_table(parse_table_id(table), cfg);
      if (result.status == RunStatus::Skipped) {
        std::cerr << result.notice << "\n";
        return kExitSkipped;
      }
      Output out(out_path);
      write_results_csv(out.stream(), result.rows);
      write_summary(out.is_stdout() ? std::cerr : std::cout, result);
      return 0;
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IngestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& p : e.paths()) std::cerr << "  " << p << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}
