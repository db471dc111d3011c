#pragma once

// Run configuration (INI text) and the JSON run manifest.
//
//   [problem]     id, T, alpha, eps, t1, t2, subdomain_radius
//   [network]     hidden_layers, hidden_width, activation, normalize_inputs
//   [training]    epochs, lr, seed, weight_physics, weight_boundary,
//                 checkpoint_every, threads
//   [collocation] spatial_points, time_points, long_horizon_rule, origin_exclusion
//   [quadrature]  refinement            (0 = per-dimension default)
//   [output]      dir
//
// Every key is optional except that some problems need alpha or eps.

#include "dpinn/checkpoint.hpp"
#include "dpinn/collocation.hpp"
#include "dpinn/mlp.hpp"
#include "dpinn/problems.hpp"
#include "dpinn/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dpinn {

inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  ProblemId problem = ProblemId::kP1;
  double T = 1.0;
  std::optional<double> alpha;
  std::optional<double> eps;
  std::optional<double> t1;  // window override; both or neither
  std::optional<double> t2;
  std::optional<double> subdomain_radius;

  int hidden_layers = 4;
  int hidden_width = 20;
  Activation activation = Activation::kTanh;
  bool normalize_inputs = false;

  std::int64_t epochs = 80000;
  double lr = 3e-3;
  std::uint64_t seed = 0;
  double weight_physics = 1.0;
  double weight_boundary = 1.0;
  std::int64_t checkpoint_every = 0;
  int threads = 1;

  CollocationCounts collocation;
  int quadrature_refinement = 0;
  std::string output_dir = "run";

  /// Throws ConfigError naming the key for unknown keys or bad values.
  static RunConfig parse(std::istream& in);
  static RunConfig parse_string(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
  void serialize(std::ostream& out) const;
  std::string to_string() const;

  ProblemParams problem_params() const;
  ProblemSpec make_spec() const;
  /// Network for `spec`; with normalize_inputs the bounding box and time
  /// window are mapped to [-1, 1].
  NetworkConfig network(const ProblemSpec& spec) const;
  TrainConfig train_config() const;

  bool operator==(const RunConfig& other) const;
};

struct RunManifest {
  RunConfig config;
  std::string version = kVersion;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string started;
  std::string finished;
  std::string status;  // running, completed, diverged, failed
  std::string message;
  std::string config_hash;
  double wall_seconds = 0.0;
  std::int64_t epochs_run = 0;
  std::vector<std::string> outputs;
  std::map<std::string, std::string> decisions;
  CollocationProvenance collocation;

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static RunManifest load(const std::filesystem::path& path);
};

/// Design choices in effect for a run, as recorded in its manifest.
std::map<std::string, std::string> decision_flags(const RunConfig& config);

/// Problem identity and parameters kept in checkpoint metadata, so a
/// checkpoint can be scored without its config file.
void store_problem(Checkpoint& checkpoint, const ProblemSpec& spec);
/// Throws ConfigError("problem") if the checkpoint carries no problem.
ProblemSpec problem_from_checkpoint(const Checkpoint& checkpoint);

/// Current UTC time, ISO 8601.
std::string utc_timestamp();

}  // namespace dpinn
