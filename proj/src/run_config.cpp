#include "dpinn/run_config.hpp"

#include "dpinn/checkpoint.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

namespace dpinn {

namespace pt = boost::property_tree;
using nlohmann::json;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"problem", {"id", "T", "alpha", "eps", "t1", "t2", "subdomain_radius"}},
      {"network", {"hidden_layers", "hidden_width", "activation", "normalize_inputs"}},
      {"training",
       {"epochs", "lr", "seed", "weight_physics", "weight_boundary", "checkpoint_every",
        "threads"}},
      {"collocation",
       {"spatial_points", "time_points", "long_horizon_rule", "origin_exclusion"}},
      {"quadrature", {"refinement"}},
      {"output", {"dir"}},
  };
  return keys;
}

template <class Int>
Int parse_int(const std::string& text, const std::string& key) {
  Int v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(key, "invalid integer for '" + key + "': '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key, "invalid boolean for '" + key + "': '" + text + "'");
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return *v;
  }

  template <class F>
  void read(const std::string& section, const std::string& key, F&& assign) const {
    if (const auto v = get(section, key)) assign(*v, key);
  }

 private:
  const pt::ptree& tree_;
};

void positive(double v, const std::string& key) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key, "'" + key + "' must be positive");
}

}  // namespace

RunConfig RunConfig::parse(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config", std::string("malformed config: ") + e.message() + " (line " +
                                    std::to_string(e.line()) + ")");
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) {
      throw ConfigError(section, body.empty() ? "config keys must live in a [section]: '" +
                                                    section + "'"
                                              : "unknown config section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) {
        throw ConfigError(key, "unknown key '" + key + "' in [" + section + "]");
      }
    }
  }

  RunConfig c;
  const Reader r(tree);
  r.read("problem", "id", [&](const std::string& v, const std::string&) {
    c.problem = problem_id_from_string(v);
  });
  r.read("problem", "T", [&](const std::string& v, const std::string& k) {
    c.T = parse_real(v, k);
    positive(c.T, k);
  });
  r.read("problem", "alpha", [&](auto& v, auto& k) { c.alpha = parse_real(v, k); });
  r.read("problem", "eps", [&](auto& v, auto& k) { c.eps = parse_real(v, k); });
  r.read("problem", "t1", [&](auto& v, auto& k) { c.t1 = parse_real(v, k); });
  r.read("problem", "t2", [&](auto& v, auto& k) { c.t2 = parse_real(v, k); });
  r.read("problem", "subdomain_radius",
         [&](auto& v, auto& k) { c.subdomain_radius = parse_real(v, k); });
  if (c.t1.has_value() != c.t2.has_value()) {
    throw ConfigError(c.t1 ? "t2" : "t1", "t1 and t2 must be given together");
  }

  r.read("network", "hidden_layers", [&](auto& v, auto& k) {
    c.hidden_layers = parse_int<int>(v, k);
    if (c.hidden_layers < 1) throw ConfigError(k, "hidden_layers must be >= 1");
  });
  r.read("network", "hidden_width", [&](auto& v, auto& k) {
    c.hidden_width = parse_int<int>(v, k);
    if (c.hidden_width < 1) throw ConfigError(k, "hidden_width must be >= 1");
  });
  r.read("network", "activation", [&](const std::string& v, const std::string& k) {
    try {
      c.activation = activation_from_string(v);
    } catch (const ConfigError&) {
      throw ConfigError(k, "unknown activation '" + v + "'");
    }
  });
  r.read("network", "normalize_inputs",
         [&](auto& v, auto& k) { c.normalize_inputs = parse_bool(v, k); });

  r.read("training", "epochs", [&](auto& v, auto& k) {
    c.epochs = parse_int<std::int64_t>(v, k);
    if (c.epochs < 0) throw ConfigError(k, "epochs must be >= 0");
  });
  r.read("training", "lr", [&](auto& v, auto& k) {
    c.lr = parse_real(v, k);
    positive(c.lr, k);
  });
  r.read("training", "seed", [&](auto& v, auto& k) { c.seed = parse_int<std::uint64_t>(v, k); });
  r.read("training", "weight_physics", [&](auto& v, auto& k) {
    c.weight_physics = parse_real(v, k);
    if (!(c.weight_physics >= 0.0)) throw ConfigError(k, "weights must be >= 0");
  });
  r.read("training", "weight_boundary", [&](auto& v, auto& k) {
    c.weight_boundary = parse_real(v, k);
    if (!(c.weight_boundary >= 0.0)) throw ConfigError(k, "weights must be >= 0");
  });
  r.read("training", "checkpoint_every", [&](auto& v, auto& k) {
    c.checkpoint_every = parse_int<std::int64_t>(v, k);
    if (c.checkpoint_every < 0) throw ConfigError(k, "checkpoint_every must be >= 0");
  });
  r.read("training", "threads", [&](auto& v, auto& k) {
    c.threads = parse_int<int>(v, k);
    if (c.threads < 1) throw ConfigError(k, "threads must be >= 1");
  });

  r.read("collocation", "spatial_points",
         [&](auto& v, auto& k) { c.collocation.spatial = parse_int<int>(v, k); });
  r.read("collocation", "time_points", [&](auto& v, auto& k) {
    c.collocation.time = parse_int<int>(v, k);
    if (c.collocation.time < 2) throw ConfigError(k, "time_points must be >= 2");
  });
  r.read("collocation", "long_horizon_rule",
         [&](auto& v, auto& k) { c.collocation.long_horizon_rule = parse_bool(v, k); });
  r.read("collocation", "origin_exclusion", [&](auto& v, auto& k) {
    c.collocation.origin_exclusion = parse_real(v, k);
    if (!(c.collocation.origin_exclusion >= 0.0)) throw ConfigError(k, "must be >= 0");
  });
  r.read("quadrature", "refinement", [&](auto& v, auto& k) {
    c.quadrature_refinement = parse_int<int>(v, k);
    if (c.quadrature_refinement < 0) throw ConfigError(k, "refinement must be >= 0");
  });
  r.read("output", "dir", [&](const std::string& v, const std::string&) { c.output_dir = v; });
  return c;
}

RunConfig RunConfig::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file " + path.string());
  return parse(in);
}

void RunConfig::serialize(std::ostream& out) const {
  out << "[problem]\n";
  out << "id = " << dpinn::to_string(problem) << '\n';
  out << "T = " << format_real(T) << '\n';
  if (alpha) out << "alpha = " << format_real(*alpha) << '\n';
  if (eps) out << "eps = " << format_real(*eps) << '\n';
  if (t1) out << "t1 = " << format_real(*t1) << '\n';
  if (t2) out << "t2 = " << format_real(*t2) << '\n';
  if (subdomain_radius) out << "subdomain_radius = " << format_real(*subdomain_radius) << '\n';
  out << "\n[network]\n";
  out << "hidden_layers = " << hidden_layers << '\n';
  out << "hidden_width = " << hidden_width << '\n';
  out << "activation = " << dpinn::to_string(activation) << '\n';
  out << "normalize_inputs = " << (normalize_inputs ? "true" : "false") << '\n';
  out << "\n[training]\n";
  out << "epochs = " << epochs << '\n';
  out << "lr = " << format_real(lr) << '\n';
  out << "seed = " << seed << '\n';
  out << "weight_physics = " << format_real(weight_physics) << '\n';
  out << "weight_boundary = " << format_real(weight_boundary) << '\n';
  out << "checkpoint_every = " << checkpoint_every << '\n';
  out << "threads = " << threads << '\n';
  out << "\n[collocation]\n";
  out << "spatial_points = " << collocation.spatial << '\n';
  out << "time_points = " << collocation.time << '\n';
  out << "long_horizon_rule = " << (collocation.long_horizon_rule ? "true" : "false") << '\n';
  out << "origin_exclusion = " << format_real(collocation.origin_exclusion) << '\n';
  out << "\n[quadrature]\n";
  out << "refinement = " << quadrature_refinement << '\n';
  out << "\n[output]\n";
  out << "dir = " << output_dir << '\n';
}

std::string RunConfig::to_string() const {
  std::ostringstream os;
  serialize(os);
  return os.str();
}

ProblemParams RunConfig::problem_params() const {
  ProblemParams p;
  p.alpha = alpha;
  p.eps = eps;
  p.T = T;
  if (t1 && t2) p.window = std::make_pair(*t1, *t2);
  p.subdomain_radius = subdomain_radius;
  return p;
}

ProblemSpec RunConfig::make_spec() const { return make_problem(problem, problem_params()); }

NetworkConfig RunConfig::network(const ProblemSpec& spec) const {
  NetworkConfig net;
  net.input_dim = spec.input_dim();
  net.hidden_layers = hidden_layers;
  net.hidden_width = hidden_width;
  net.hidden_activation = activation;
  if (normalize_inputs) {
    const int n = spec.spatial_dim();
    for (int k = 0; k < n; ++k) {
      const double lo = spec.domain.lower()(k);
      const double hi = spec.domain.upper()(k);
      net.input_shift.push_back(0.5 * (lo + hi));
      net.input_scale.push_back(2.0 / (hi - lo));
    }
    net.input_shift.push_back(0.5 * (spec.t1 + spec.t2));
    net.input_scale.push_back(2.0 / (spec.t2 - spec.t1));
  }
  net.validate();
  return net;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.epochs = epochs;
  t.lr = lr;
  t.seed = seed;
  t.weights = {weight_physics, weight_boundary};
  t.threads = threads;
  t.checkpoint_every = checkpoint_every;
  return t;
}

bool RunConfig::operator==(const RunConfig& o) const {
  return problem == o.problem && T == o.T && alpha == o.alpha && eps == o.eps && t1 == o.t1 &&
         t2 == o.t2 && subdomain_radius == o.subdomain_radius &&
         hidden_layers == o.hidden_layers && hidden_width == o.hidden_width &&
         activation == o.activation && normalize_inputs == o.normalize_inputs &&
         epochs == o.epochs && lr == o.lr && seed == o.seed &&
         weight_physics == o.weight_physics && weight_boundary == o.weight_boundary &&
         checkpoint_every == o.checkpoint_every && threads == o.threads &&
         collocation.spatial == o.collocation.spatial && collocation.time == o.collocation.time &&
         collocation.long_horizon_rule == o.collocation.long_horizon_rule &&
         collocation.origin_exclusion == o.collocation.origin_exclusion &&
         quadrature_refinement == o.quadrature_refinement && output_dir == o.output_dir;
}

// -- Manifest ---------------------------------------------------------------

std::map<std::string, std::string> decision_flags(const RunConfig& c) {
  return {
      {"flux_kink", "H and DH vanish on |xi| <= 1; active branch strictly |xi| > 1"},
      {"positive_part_derivative_at_zero", "0"},
      {"loss_normalization", "mean over points per term"},
      {"loss_weights",
       "physics=" + format_real(c.weight_physics) + " boundary=" + format_real(c.weight_boundary)},
      {"initial_condition", "initial slab points in the data term"},
      {"batching", "full batch"},
      {"lr_schedule", "constant"},
      {"initialization", "glorot uniform weights, zero biases"},
      {"input_normalization", c.normalize_inputs ? "bounding box and window to [-1,1]" : "none"},
      {"collocation", "disk/ball concentric shells, square tensor grid"},
      {"origin_exclusion", format_real(c.collocation.origin_exclusion) +
                               " (problems with forcing singular at the origin only)"},
      {"long_horizon_rule", c.collocation.long_horizon_rule ? "ceil(2.1 (t2 - t1)) time points when t2 - t1 >= 100" : "off"},
      {"error_time_set", "training time grid"},
      {"error_functional", "squared L2 norm, sup over times"},
      {"quadrature", "tensor midpoint, polar/cartesian/spherical"},
      {"gradient_reduction", "fixed chunks summed in order"},
  };
}

void store_problem(Checkpoint& c, const ProblemSpec& spec) {
  const ProblemParams& p = spec.parameters;
  c.metadata["problem"] = dpinn::to_string(spec.id);
  c.metadata["t1"] = format_real(spec.t1);
  c.metadata["t2"] = format_real(spec.t2);
  if (p.alpha) c.metadata["alpha"] = format_real(*p.alpha);
  if (p.eps) c.metadata["eps"] = format_real(*p.eps);
  if (p.subdomain_radius) c.metadata["subdomain_radius"] = format_real(*p.subdomain_radius);
}

ProblemSpec problem_from_checkpoint(const Checkpoint& c) {
  const auto get = [&](const std::string& key) -> std::optional<double> {
    const auto it = c.metadata.find(key);
    if (it == c.metadata.end()) return std::nullopt;
    return parse_real(it->second, key);
  };
  const auto it = c.metadata.find("problem");
  if (it == c.metadata.end()) throw ConfigError("problem", "checkpoint records no problem");
  ProblemParams p;
  p.alpha = get("alpha");
  p.eps = get("eps");
  p.subdomain_radius = get("subdomain_radius");
  const auto t1 = get("t1");
  const auto t2 = get("t2");
  if (!t1 || !t2) throw ConfigError("t2", "checkpoint records no time window");
  p.window = std::make_pair(*t1, *t2);
  p.T = *t2;
  return make_problem(problem_id_from_string(it->second), p);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string RunManifest::to_json() const {
  json j;
  j["version"] = version;
  j["config"] = config.to_string();
  j["seed"] = seed;
  j["threads"] = threads;
  j["started"] = started;
  j["finished"] = finished;
  j["status"] = status;
  j["message"] = message;
  j["config_hash"] = config_hash;
  j["wall_seconds"] = wall_seconds;
  j["epochs_run"] = epochs_run;
  j["outputs"] = outputs;
  j["decisions"] = decisions;
  j["collocation"] = {
      {"strategy", collocation.strategy},
      {"seed", collocation.seed},
      {"spatial_target", collocation.spatial_target},
      {"time_count", collocation.time_count},
      {"nominal_spacing", collocation.nominal_spacing},
      {"origin_exclusion", collocation.origin_exclusion},
  };
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  RunManifest m;
  try {
    const json j = json::parse(text);
    m.version = j.at("version").get<std::string>();
    m.config = RunConfig::parse_string(j.at("config").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.threads = j.value("threads", 1);
    m.started = j.value("started", "");
    m.finished = j.value("finished", "");
    m.status = j.value("status", "");
    m.message = j.value("message", "");
    m.config_hash = j.value("config_hash", "");
    m.wall_seconds = j.value("wall_seconds", 0.0);
    m.epochs_run = j.value("epochs_run", std::int64_t{0});
    m.outputs = j.value("outputs", std::vector<std::string>{});
    m.decisions = j.value("decisions", std::map<std::string, std::string>{});
    if (j.contains("collocation")) {
      const json& c = j.at("collocation");
      m.collocation.strategy = c.value("strategy", "");
      m.collocation.seed = c.value("seed", std::uint64_t{0});
      m.collocation.spatial_target = c.value("spatial_target", 0);
      m.collocation.time_count = c.value("time_count", 0);
      m.collocation.nominal_spacing = c.value("nominal_spacing", 0.0);
      m.collocation.origin_exclusion = c.value("origin_exclusion", 0.0);
    }
  } catch (const json::exception& e) {
    throw ConfigError("manifest", std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void RunManifest::save(const std::filesystem::path& path) const {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << to_json();
  }
  std::filesystem::rename(tmp, path);
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("manifest", "cannot open manifest " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return from_json(os.str());
}

}  // namespace dpinn
