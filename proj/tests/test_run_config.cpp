#include "dpinn/run_config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace dpinn;

TEST(RunConfig, DefaultsFollowTheTrainingProtocol) {
  const RunConfig c = RunConfig::parse_string("[problem]\nid = P1\n");
  EXPECT_EQ(c, RunConfig{});
  EXPECT_EQ(c.hidden_layers, 4);
  EXPECT_EQ(c.hidden_width, 20);
  EXPECT_EQ(c.activation, Activation::kTanh);
  EXPECT_EQ(c.epochs, 80000);
  EXPECT_EQ(c.lr, 3e-3);
  EXPECT_EQ(c.collocation.spatial, 441);
  EXPECT_EQ(c.collocation.time, 21);
  EXPECT_EQ(c.weight_physics, 1.0);
  EXPECT_EQ(c.weight_boundary, 1.0);
  EXPECT_EQ(c.threads, 1);
  const NetworkConfig net = c.network(c.make_spec());
  EXPECT_EQ(ParameterLayout::for_config(net).total, 1361u);
}

TEST(RunConfig, RoundTripsLosslessly) {
  RunConfig c;
  c.problem = ProblemId::kP1Regularized;
  c.T = 0.1 + 0.2;
  c.eps = 1e-9;
  c.t1 = 1.75;
  c.t2 = 2.0;
  c.subdomain_radius = 1.0 / 3.0;
  c.hidden_layers = 3;
  c.hidden_width = 17;
  c.activation = Activation::kIdentity;
  c.normalize_inputs = true;
  c.epochs = 12345;
  c.lr = 1.0 / 7.0;
  c.seed = 18446744073709551615ull;
  c.weight_physics = 0.3;
  c.weight_boundary = 2.0;
  c.checkpoint_every = 100;
  c.threads = 4;
  c.collocation.spatial = 400;
  c.collocation.time = 11;
  c.collocation.long_horizon_rule = false;
  c.collocation.origin_exclusion = 2e-3;
  c.quadrature_refinement = 50;
  c.output_dir = "out/dir";
  const RunConfig back = RunConfig::parse_string(c.to_string());
  EXPECT_EQ(back, c);
  EXPECT_EQ(back.to_string(), c.to_string());
}

TEST(RunConfig, UnknownKeysAndSectionsAreNamed) {
  try {
    RunConfig::parse_string("[training]\nepochz = 5\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "epochz");
  }
  try {
    RunConfig::parse_string("[trainig]\nepochs = 5\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "trainig");
  }
  try {
    RunConfig::parse_string("[training]\nlr = fast\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "lr");
  }
  try {
    RunConfig::parse_string("[problem]\nt1 = 0.5\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "t2");
  }
}

TEST(RunConfig, MissingAlphaSurfacesWhenBuildingTheProblem) {
  const RunConfig c = RunConfig::parse_string("[problem]\nid = P2\n");
  try {
    c.make_spec();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "alpha");
  }
}

TEST(RunConfig, NormalizedInputsMapBoxToUnitCube) {
  const RunConfig c = RunConfig::parse_string(
      "[problem]\nid = P1_regularized\neps = 1e-3\n[network]\nnormalize_inputs = true\n");
  const NetworkConfig net = c.network(c.make_spec());
  ASSERT_EQ(net.input_scale.size(), 3u);
  EXPECT_EQ(net.input_scale[0], 2.0);
  EXPECT_EQ(net.input_shift[2], 1.875);
  EXPECT_EQ(net.input_scale[2], 8.0);
}

TEST(Manifest, JsonRoundTrip) {
  RunManifest m;
  m.config.problem = ProblemId::kP2;
  m.config.alpha = 0.5;
  m.seed = 99;
  m.threads = 2;
  m.started = "2026-01-01T00:00:00Z";
  m.finished = "2026-01-01T00:01:00Z";
  m.status = "completed";
  m.config_hash = "abcdef";
  m.wall_seconds = 60.25;
  m.epochs_run = 10;
  m.outputs = {"checkpoint.txt", "loss_history.csv"};
  m.decisions = decision_flags(m.config);
  m.collocation.strategy = "polar-shells";
  m.collocation.seed = 99;
  m.collocation.spatial_target = 441;
  m.collocation.time_count = 21;
  m.collocation.nominal_spacing = 1.0 / 11.0;
  m.collocation.origin_exclusion = 1e-3;

  const RunManifest back = RunManifest::from_json(m.to_json());
  EXPECT_EQ(back.config, m.config);
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_EQ(back.threads, 2);
  EXPECT_EQ(back.status, "completed");
  EXPECT_EQ(back.wall_seconds, 60.25);
  EXPECT_EQ(back.outputs, m.outputs);
  EXPECT_EQ(back.decisions, m.decisions);
  EXPECT_EQ(back.collocation.nominal_spacing, m.collocation.nominal_spacing);
  EXPECT_EQ(back.collocation.strategy, "polar-shells");
  EXPECT_EQ(back.version, kVersion);

  const auto dir = std::filesystem::temp_directory_path() / "dpinn_manifest_test";
  std::filesystem::create_directories(dir);
  m.save(dir / "manifest.json");
  EXPECT_EQ(RunManifest::load(dir / "manifest.json").config, m.config);
  std::filesystem::remove_all(dir);

  EXPECT_THROW(RunManifest::from_json("{not json"), ConfigError);
}

TEST(Manifest, DecisionFlagsRecordWeightsAndExclusion) {
  RunConfig c;
  c.weight_boundary = 2.5;
  const auto flags = decision_flags(c);
  EXPECT_NE(flags.at("loss_weights").find("boundary=2.5"), std::string::npos);
  EXPECT_TRUE(flags.count("origin_exclusion"));
  EXPECT_TRUE(flags.count("flux_kink"));
}

TEST(CheckpointMetadata, ProblemSurvivesTheRoundTrip) {
  ProblemParams p;
  p.alpha = 1.3;
  p.T = 2.0;
  const ProblemSpec spec = make_problem(ProblemId::kP5, p);
  Checkpoint c;
  store_problem(c, spec);
  const ProblemSpec back = problem_from_checkpoint(c);
  EXPECT_EQ(back.id, ProblemId::kP5);
  EXPECT_EQ(back.alpha, 1.3);
  EXPECT_EQ(back.t1, 0.0);
  EXPECT_EQ(back.t2, 2.0);
  EXPECT_THROW(problem_from_checkpoint(Checkpoint{}), ConfigError);
}
