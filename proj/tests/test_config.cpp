#include <sstream>

#include <gtest/gtest.h>

#include "viewgen/config.hpp"
#include "viewgen/errors.hpp"

using namespace viewgen;

namespace {

Config parse(const std::string& text) {
  std::istringstream in(text);
  return Config::parse(in);
}

}  // namespace

TEST(Config, ParsesKeyValueLinesWithComments) {
  const auto c = parse("# comment\n  n_trials = 300  \n\nseed=7 # trailing\nencoder = angles\n");
  EXPECT_EQ(c.get("n_trials"), "300");
  EXPECT_EQ(c.get("seed"), "7");
  EXPECT_EQ(c.get("encoder"), "angles");
  EXPECT_FALSE(c.get("missing"));
  EXPECT_TRUE(c.contains("seed"));
}

TEST(Config, RejectsMalformedLines) {
  EXPECT_THROW(parse("just words\n"), InvalidArgument);
  EXPECT_THROW(parse(" = 3\n"), InvalidArgument);
}

TEST(Config, LaterValuesAndSetOverride) {
  auto c = parse("seed = 1\nseed = 2\n");
  EXPECT_EQ(c.get("seed"), "2");
  c.set("seed", "3");
  EXPECT_EQ(c.get("seed"), "3");
}

TEST(ApplyConfig, SetsFields) {
  ExperimentConfig cfg;
  apply_config(parse("n_trials = 321\nseed = 9\nrotation_mode = discrete\nencoder = locations\n"
                     "learning_rate = 0.01\nhidden_units = 4\nwall_time = yes\ngrid_resolution = 20\n"
                     "coil_dir = /data/coil\neigen_k = 12\ncoil_epochs = 7\n"),
               cfg);
  EXPECT_EQ(cfg.n_trials, 321u);
  EXPECT_EQ(cfg.seed.value, 9u);
  EXPECT_EQ(cfg.rotation_mode, RotationMode::Discrete);
  EXPECT_EQ(cfg.encoder, FeatureKind::Locations);
  EXPECT_EQ(cfg.mlp.learning_rate, 0.01);
  EXPECT_EQ(cfg.mlp.hidden_units, 4u);
  EXPECT_TRUE(cfg.record_wall_time);
  EXPECT_EQ(cfg.grid.resolution, 20u);
  EXPECT_EQ(cfg.coil_dir, "/data/coil");
  EXPECT_EQ(cfg.eigen_k, 12u);
  EXPECT_EQ(cfg.coil_train.train.epochs, 7u);
}

TEST(ApplyConfig, RejectsUnknownKeysAndBadValues) {
  ExperimentConfig cfg;
  EXPECT_THROW(apply_config(parse("n_trails = 3\n"), cfg), InvalidArgument);
  EXPECT_THROW(apply_config(parse("n_trials = 3x\n"), cfg), InvalidArgument);
  EXPECT_THROW(apply_config(parse("n_trials = -3\n"), cfg), InvalidArgument);
  EXPECT_THROW(apply_config(parse("rotation_mode = sideways\n"), cfg), InvalidArgument);
  EXPECT_THROW(apply_config(parse("wall_time = maybe\n"), cfg), InvalidArgument);
  EXPECT_THROW(apply_config(parse("encoder = pixels\n"), cfg), InvalidArgument);
}

TEST(ApplyConfig, LeavesUnmentionedFieldsAtDefaults) {
  ExperimentConfig cfg;
  apply_config(parse("n_trials = 10\n"), cfg);
  const ExperimentConfig defaults;
  EXPECT_EQ(cfg.train_pairs, defaults.train_pairs);
  EXPECT_EQ(cfg.grid, defaults.grid);
  EXPECT_EQ(cfg.mlp.epochs, defaults.mlp.epochs);
}
