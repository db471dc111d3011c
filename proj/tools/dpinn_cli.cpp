// dpinn: train PINN surrogates for the degenerate parabolic benchmarks and
// score them.
//
//   dpinn train        --config run.ini [--out DIR] [--seed N] [--threads N]
//   dpinn train        --from-manifest DIR/manifest.json [--out DIR]
//   dpinn error-table  --checkpoint C [--checkpoint C2 ...] [--times 1,2] [--out F]
//   dpinn error-table  --exact-surrogate --config run.ini [--times 1,2] [--out F]
//   dpinn eps-sweep    --config run.ini [--eps 1e-3,1e-6,1e-9] [--out DIR]
//   dpinn export-field (--checkpoint C | --exact-surrogate --config F)
//                      --times 0,0.5 [--grid 101x101] --out DIR
//   dpinn export-points --config run.ini [--seed N] --out points.csv

#include "dpinn/checkpoint.hpp"
#include "dpinn/collocation.hpp"
#include "dpinn/error_metrics.hpp"
#include "dpinn/run_config.hpp"
#include "dpinn/trainer.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace dpinn;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitIo = 5;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(parse_real(tok, key));
  }
  if (out.empty()) throw ConfigError(key, "empty list for --" + key);
  return out;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string manifest;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::int64_t> epochs;
};

void save_params(const fs::path& path, const RunConfig& rc, const ProblemSpec& spec,
                 const NetworkConfig& net, const ParameterVector& theta,
                 std::int64_t epochs_done) {
  Checkpoint c;
  c.network = net;
  c.seed = rc.seed;
  c.params = theta;
  store_problem(c, spec);
  c.metadata["epochs"] = std::to_string(epochs_done);
  const fs::path tmp = path.string() + ".tmp";
  save_checkpoint(tmp, c);
  fs::rename(tmp, path);
}

struct TrainOutcome {
  int exit_code = 0;
  fs::path checkpoint;
};

TrainOutcome run_training(const RunConfig& rc, const fs::path& dir) {
  fs::create_directories(dir);
  const ProblemSpec spec = rc.make_spec();
  const NetworkConfig net = rc.network(spec);
  const CollocationSet colloc = assemble(spec, rc.collocation, rc.seed);

  RunManifest manifest;
  manifest.config = rc;
  manifest.seed = rc.seed;
  manifest.threads = rc.threads;
  manifest.started = utc_timestamp();
  manifest.status = "running";
  manifest.decisions = decision_flags(rc);
  manifest.collocation = colloc.provenance;
  manifest.save(dir / "manifest.json");
  {
    std::ofstream cfg = open_out(dir / "config.ini");
    rc.serialize(cfg);
  }

  TrainConfig tc = rc.train_config();
  tc.on_checkpoint = [&](std::int64_t epoch, const ParameterVector& theta) {
    save_params(dir / "checkpoint.txt", rc, spec, net, theta, epoch);
  };
  const std::int64_t report_every = std::max<std::int64_t>(1, rc.epochs / 20);
  tc.on_epoch = [&](std::int64_t epoch, const LossBreakdown& loss) {
    if (epoch % report_every == 0 || epoch + 1 == rc.epochs) {
      std::cerr << "epoch " << epoch << "  loss " << format_real(loss.total) << "  (physics "
                << format_real(loss.physics) << ", boundary " << format_real(loss.boundary)
                << ")\n";
    }
  };

  TrainReport report;
  TrainOutcome outcome;
  try {
    report = train(spec, colloc, net, tc);
    manifest.status = "completed";
  } catch (const DivergenceError& e) {
    report = e.report();
    manifest.status = "diverged";
    manifest.message = e.what();
    outcome.exit_code = kExitDiverged;
    std::cerr << "error: " << e.what() << '\n';
  }

  {
    std::ofstream hist = open_out(dir / "loss_history.csv");
    write_history_csv(hist, report.history);
  }
  save_params(dir / "checkpoint.txt", rc, spec, net, report.final_params, report.epochs_run);
  outcome.checkpoint = dir / "checkpoint.txt";

  manifest.finished = utc_timestamp();
  manifest.config_hash = report.config_hash;
  manifest.wall_seconds = report.wall_seconds;
  manifest.epochs_run = report.epochs_run;
  manifest.outputs = {"config.ini", "checkpoint.txt", "loss_history.csv", "manifest.json"};
  manifest.save(dir / "manifest.json");
  if (outcome.exit_code == 0) {
    std::cerr << "final loss " << format_real(report.final_loss.total) << " after "
              << report.epochs_run << " epochs (" << report.wall_seconds << " s)\n";
  }
  return outcome;
}

int cmd_train(const TrainArgs& a) {
  if (a.config.empty() == a.manifest.empty()) {
    throw ConfigError("config", "give exactly one of --config or --from-manifest");
  }
  RunConfig rc = a.config.empty() ? RunManifest::load(a.manifest).config : RunConfig::load(a.config);
  if (a.seed) rc.seed = *a.seed;
  if (a.threads) {
    if (*a.threads < 1) throw ConfigError("threads", "threads must be >= 1");
    rc.threads = *a.threads;
  }
  if (a.epochs) rc.epochs = *a.epochs;
  if (!a.out.empty()) rc.output_dir = a.out;
  return run_training(rc, rc.output_dir).exit_code;
}

// --- error-table -----------------------------------------------------------

struct ScoreArgs {
  std::vector<std::string> checkpoints;
  std::string config;
  bool exact = false;
  std::string times;
  std::string out;
  int refinement = 0;
};

struct Scored {
  ProblemSpec spec;
  std::unique_ptr<Surrogate> model;
};

bool same_problem(const ProblemSpec& a, const ProblemSpec& b) {
  return a.id == b.id && a.alpha == b.alpha && a.eps == b.eps &&
         a.domain.radius() == b.domain.radius();
}

std::vector<Scored> load_models(const ScoreArgs& a) {
  std::optional<ProblemSpec> configured;
  if (!a.config.empty()) configured = RunConfig::load(a.config).make_spec();

  std::vector<Scored> models;
  if (a.exact) {
    if (!configured) throw ConfigError("config", "--exact-surrogate needs --config");
    if (!a.checkpoints.empty()) {
      throw ConfigError("checkpoint", "--exact-surrogate and --checkpoint are exclusive");
    }
    Scored s{*configured, nullptr};
    models.push_back(std::move(s));
    return models;
  }
  if (a.checkpoints.empty()) throw ConfigError("checkpoint", "no --checkpoint given");
  for (const std::string& path : a.checkpoints) {
    Checkpoint c = load_checkpoint(path);
    ProblemSpec spec = problem_from_checkpoint(c);
    if (configured && !same_problem(spec, *configured)) {
      throw ConfigError("checkpoint", "checkpoint " + path + " was trained on " +
                                          to_string(spec.id) +
                                          " with different parameters than the config problem " +
                                          to_string(configured->id));
    }
    if (c.network.input_dim != spec.input_dim()) {
      throw ConfigError("checkpoint", "checkpoint " + path + " input dimension does not match " +
                                          to_string(spec.id));
    }
    models.push_back({std::move(spec), std::make_unique<NetworkSurrogate>(c.network, c.params)});
  }
  return models;
}

// Rebuilds the problem on (0, T) with the same parameters.
ProblemSpec with_horizon(const ProblemSpec& spec, double T) {
  ProblemParams p = spec.parameters;
  p.window.reset();
  p.T = T;
  return make_problem(spec.id, p);
}

int cmd_error_table(const ScoreArgs& a) {
  std::vector<Scored> models = load_models(a);
  const bool regularized = models.front().spec.id == ProblemId::kP1Regularized;
  for (const Scored& m : models) {
    if ((m.spec.id == ProblemId::kP1Regularized) != regularized) {
      throw ConfigError("checkpoint", "cannot mix regularized and plain problems in one table");
    }
  }

  std::ostringstream csv;
  if (regularized) {
    if (!a.times.empty()) throw ConfigError("times", "--times does not apply to eps tables");
    std::vector<EpsSweepRow> rows;
    for (const Scored& m : models) {
      const ExactSurrogate exact(m.spec);
      const Surrogate& model = m.model ? *m.model : static_cast<const Surrogate&>(exact);
      rows.push_back({m.spec.eps, sup_error(model, m.spec, a.refinement)});
    }
    write_eps_table_csv(csv, rows);
  } else {
    std::vector<double> Ts;
    std::vector<ErrorReport> reports;
    for (const Scored& m : models) {
      const std::vector<double> horizons =
          a.times.empty() ? std::vector<double>{m.spec.t2} : parse_list(a.times, "times");
      for (double T : horizons) {
        const ProblemSpec spec = with_horizon(m.spec, T);
        const ExactSurrogate exact(spec);
        const Surrogate& model = m.model ? *m.model : static_cast<const Surrogate&>(exact);
        Ts.push_back(T);
        reports.push_back(sup_error(model, spec, a.refinement));
      }
    }
    write_error_table_csv(csv, Ts, reports);
  }

  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream out = open_out(a.out);
    out << csv.str();
  }
  return 0;
}

// --- eps-sweep -------------------------------------------------------------

int cmd_eps_sweep(const std::string& config, const std::string& eps_list, const std::string& out,
                  std::optional<std::uint64_t> seed, std::optional<int> threads,
                  std::optional<std::int64_t> epochs, int refinement) {
  RunConfig base = RunConfig::load(config);
  base.problem = ProblemId::kP1Regularized;
  if (seed) base.seed = *seed;
  if (threads) base.threads = *threads;
  if (epochs) base.epochs = *epochs;
  if (!out.empty()) base.output_dir = out;
  if (refinement > 0) base.quadrature_refinement = refinement;
  const std::vector<double> eps = parse_list(eps_list, "eps");

  std::vector<EpsSweepRow> rows;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    RunConfig rc = base;
    rc.eps = eps[i];
    const fs::path dir = fs::path(base.output_dir) / ("eps_" + std::to_string(i));
    std::cerr << "training eps = " << format_real(eps[i]) << " into " << dir.string() << '\n';
    const TrainOutcome t = run_training(rc, dir);
    if (t.exit_code != 0) return t.exit_code;
    Checkpoint c = load_checkpoint(t.checkpoint);
    const ProblemSpec spec = problem_from_checkpoint(c);
    const NetworkSurrogate model(c.network, c.params);
    rows.push_back({eps[i], sup_error(model, spec, base.quadrature_refinement)});
  }
  std::ofstream csv = open_out(fs::path(base.output_dir) / "eps_table.csv");
  write_eps_table_csv(csv, rows);
  write_eps_table_csv(std::cout, rows);
  return 0;
}

// --- export-field ----------------------------------------------------------

std::vector<int> parse_grid(const std::string& text, int dim) {
  std::vector<int> n;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, 'x')) {
    try {
      n.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw ConfigError("grid", "bad grid spec '" + text + "'");
    }
  }
  if (n.size() == 1) n.assign(static_cast<std::size_t>(dim), n.front());
  if (static_cast<int>(n.size()) != dim) {
    throw ConfigError("grid", "grid spec '" + text + "' does not match the spatial dimension");
  }
  for (int v : n) {
    if (v < 2) throw ConfigError("grid", "grid needs at least 2 nodes per axis");
  }
  return n;
}

int cmd_export_field(const ScoreArgs& a, const std::string& grid_spec) {
  if (a.checkpoints.size() > 1) throw ConfigError("checkpoint", "export-field takes one checkpoint");
  std::vector<Scored> models = load_models(a);
  const Scored& m = models.front();
  const ProblemSpec& spec = m.spec;
  const ExactSurrogate* exact_model = nullptr;
  std::unique_ptr<ExactSurrogate> exact_holder;
  if (spec.has_exact()) {
    exact_holder = std::make_unique<ExactSurrogate>(spec);
    exact_model = exact_holder.get();
  }
  const Surrogate& model = m.model ? *m.model : static_cast<const Surrogate&>(*exact_model);
  if (a.times.empty()) throw ConfigError("times", "export-field needs --times");
  if (a.out.empty()) throw ConfigError("out", "export-field needs --out");
  const std::vector<double> times = parse_list(a.times, "times");
  const int dim = spec.spatial_dim();
  const std::vector<int> n = parse_grid(grid_spec, dim);

  Eigen::Index total = 1;
  for (int v : n) total *= v;
  PointMatrix pts(dim + 1, total);
  for (Eigen::Index c = 0; c < total; ++c) {
    Eigen::Index rest = c;
    for (int k = 0; k < dim; ++k) {
      const Eigen::Index i = rest % n[static_cast<std::size_t>(k)];
      rest /= n[static_cast<std::size_t>(k)];
      const double lo = spec.domain.lower()(k);
      const double hi = spec.domain.upper()(k);
      pts(k, c) = lo + (hi - lo) * static_cast<double>(i) / (n[static_cast<std::size_t>(k)] - 1);
    }
  }

  static const char* kAxes[] = {"x", "y", "z"};
  fs::create_directories(a.out);
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    pts.row(dim).setConstant(times[ti]);
    const Eigen::VectorXd u_hat = model.values(pts);
    const fs::path path = fs::path(a.out) / ("field_" + std::to_string(ti) + ".csv");
    std::ofstream out = open_out(path);
    for (int k = 0; k < dim; ++k) out << kAxes[k] << ',';
    out << "t,u_hat";
    if (exact_model) out << ",u_exact,abs_error";
    out << ",inside\n";
    for (Eigen::Index c = 0; c < total; ++c) {
      const Vec x = pts.col(c).head(dim);
      for (int k = 0; k < dim; ++k) out << format_real(x(k)) << ',';
      out << format_real(times[ti]) << ',' << format_real(u_hat(c));
      if (exact_model) {
        const double u = spec.exact(x, times[ti]);
        out << ',' << format_real(u) << ',' << format_real(std::abs(u_hat(c) - u));
      }
      const bool inside = spec.domain.contains(x) || spec.domain.on_boundary(x, 1e-12);
      out << ',' << (inside ? 1 : 0) << '\n';
    }
    std::cerr << "wrote " << path.string() << '\n';
  }
  return 0;
}

// --- export-points ---------------------------------------------------------

int cmd_export_points(const std::string& config, std::optional<std::uint64_t> seed,
                      const std::string& out) {
  RunConfig rc = RunConfig::load(config);
  if (seed) rc.seed = *seed;
  const ProblemSpec spec = rc.make_spec();
  const CollocationSet set = assemble(spec, rc.collocation, rc.seed);
  if (out.empty()) {
    write_points_csv(std::cout, set);
  } else {
    std::ofstream f = open_out(out);
    write_points_csv(f, set);
  }
  std::cerr << set.interior.size() << " interior, " << set.boundary.size() << " boundary, "
            << set.initial.size() << " initial points (" << set.provenance.strategy << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PINN solver for degenerate parabolic benchmark problems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  TrainArgs train_args;
  std::uint64_t seed_value = 0;
  int threads_value = 1;
  std::int64_t epochs_value = 0;
  auto* train_cmd = app.add_subcommand("train", "train a network and write its artifacts");
  train_cmd->add_option("--config", train_args.config, "run configuration (INI)");
  train_cmd->add_option("--from-manifest", train_args.manifest, "rerun the config in a manifest");
  train_cmd->add_option("--out", train_args.out, "output directory");
  auto* train_seed = train_cmd->add_option("--seed", seed_value, "override the seed");
  auto* train_threads =
      train_cmd->add_option("--threads", threads_value, "worker threads (1 = reproducible)");
  auto* train_epochs = train_cmd->add_option("--epochs", epochs_value, "override the epoch count");

  ScoreArgs score;
  auto* table_cmd = app.add_subcommand("error-table", "E and E_rel for trained checkpoints");
  table_cmd->add_option("--checkpoint", score.checkpoints, "checkpoint file (repeatable)");
  table_cmd->add_option("--config", score.config, "problem to check against / score");
  table_cmd->add_flag("--exact-surrogate", score.exact, "score the exact solution itself");
  table_cmd->add_option("--times", score.times, "horizons T, comma separated");
  table_cmd->add_option("--out", score.out, "CSV path (stdout if omitted)");
  table_cmd->add_option("--refinement", score.refinement, "quadrature cells per dimension");

  std::string sweep_config, sweep_eps = "1e-3,1e-6,1e-9", sweep_out;
  int sweep_refinement = 0;
  auto* sweep_cmd = app.add_subcommand("eps-sweep", "train and score the regularized problem");
  sweep_cmd->add_option("--config", sweep_config, "base configuration")->required();
  sweep_cmd->add_option("--eps", sweep_eps, "eps values, comma separated");
  sweep_cmd->add_option("--out", sweep_out, "output directory");
  auto* sweep_seed = sweep_cmd->add_option("--seed", seed_value, "override the seed");
  auto* sweep_threads = sweep_cmd->add_option("--threads", threads_value, "worker threads");
  auto* sweep_epochs = sweep_cmd->add_option("--epochs", epochs_value, "override the epoch count");
  sweep_cmd->add_option("--refinement", sweep_refinement, "quadrature cells per dimension");

  ScoreArgs field;
  std::string grid = "101x101";
  auto* field_cmd = app.add_subcommand("export-field", "sample a surrogate on a grid");
  field_cmd->add_option("--checkpoint", field.checkpoints, "checkpoint file");
  field_cmd->add_option("--config", field.config, "problem config");
  field_cmd->add_flag("--exact-surrogate", field.exact, "sample the exact solution");
  field_cmd->add_option("--times", field.times, "times, comma separated")->required();
  field_cmd->add_option("--grid", grid, "nodes per axis, e.g. 101x101");
  field_cmd->add_option("--out", field.out, "output directory")->required();

  std::string points_config, points_out;
  auto* points_cmd = app.add_subcommand("export-points", "write the collocation set as CSV");
  points_cmd->add_option("--config", points_config, "run configuration")->required();
  auto* points_seed = points_cmd->add_option("--seed", seed_value, "override the seed");
  points_cmd->add_option("--out", points_out, "CSV path (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  const auto opt_seed = [&](CLI::Option* o) {
    return o->count() ? std::optional<std::uint64_t>(seed_value) : std::nullopt;
  };
  const auto opt_threads = [&](CLI::Option* o) {
    return o->count() ? std::optional<int>(threads_value) : std::nullopt;
  };
  const auto opt_epochs = [&](CLI::Option* o) {
    return o->count() ? std::optional<std::int64_t>(epochs_value) : std::nullopt;
  };

  try {
    if (train_cmd->parsed()) {
      train_args.seed = opt_seed(train_seed);
      train_args.threads = opt_threads(train_threads);
      train_args.epochs = opt_epochs(train_epochs);
      return cmd_train(train_args);
    }
    if (table_cmd->parsed()) return cmd_error_table(score);
    if (sweep_cmd->parsed()) {
      return cmd_eps_sweep(sweep_config, sweep_eps, sweep_out, opt_seed(sweep_seed),
                           opt_threads(sweep_threads), opt_epochs(sweep_epochs),
                           sweep_refinement);
    }
    if (field_cmd->parsed()) return cmd_export_field(field, grid);
    if (points_cmd->parsed()) return cmd_export_points(points_config, opt_seed(points_seed), points_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error [" << e.key() << "]: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
