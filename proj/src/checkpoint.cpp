#include "dpinn/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace dpinn {

namespace {

constexpr const char* kMagic = "dpinn-checkpoint";
constexpr int kVersion = 1;

std::string join_reals(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) s += ' ';
    s += format_real(xs[i]);
  }
  return s;
}

std::vector<double> split_reals(const std::string& line, const std::string& key) {
  std::istringstream in(line);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_real(tok, key));
  return out;
}

// Reads "key rest-of-line"; throws if the key differs.
std::string expect_line(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ConfigError(key, "checkpoint truncated before '" + key + "'");
  }
  if (line.compare(0, key.size(), key) != 0 ||
      (line.size() > key.size() && line[key.size()] != ' ')) {
    throw ConfigError(key, "checkpoint: expected '" + key + "', got '" + line + "'");
  }
  return line.size() > key.size() ? line.substr(key.size() + 1) : std::string();
}

int parse_int(const std::string& s, const std::string& key) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError(key, "checkpoint: bad integer for '" + key + "': '" + s + "'");
  }
  return v;
}

}  // namespace

std::string format_real(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, p);
}

double parse_real(const std::string& text, const std::string& key) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || p != end) {
    throw ConfigError(key, "bad real number for '" + key + "': '" + text + "'");
  }
  return v;
}

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "input_dim " << c.network.input_dim << '\n';
  out << "hidden_layers " << c.network.hidden_layers << '\n';
  out << "hidden_width " << c.network.hidden_width << '\n';
  out << "hidden_activation " << to_string(c.network.hidden_activation) << '\n';
  out << "output_activation linear\n";
  out << "seed " << c.seed << '\n';
  out << "input_shift" << (c.network.input_shift.empty() ? "" : " ")
      << join_reals(c.network.input_shift) << '\n';
  out << "input_scale" << (c.network.input_scale.empty() ? "" : " ")
      << join_reals(c.network.input_scale) << '\n';
  for (const auto& [k, v] : c.metadata) out << "meta " << k << ' ' << v << '\n';
  out << "parameters " << c.params.values.size() << '\n';
  for (double v : c.params.values) out << format_real(v) << '\n';
}

Checkpoint read_checkpoint(std::istream& in) {
  Checkpoint c;
  const std::string version = expect_line(in, kMagic);
  if (parse_int(version, "version") != kVersion) {
    throw ConfigError("version", "unsupported checkpoint version " + version);
  }
  c.network.input_dim = parse_int(expect_line(in, "input_dim"), "input_dim");
  c.network.hidden_layers = parse_int(expect_line(in, "hidden_layers"), "hidden_layers");
  c.network.hidden_width = parse_int(expect_line(in, "hidden_width"), "hidden_width");
  c.network.hidden_activation = activation_from_string(expect_line(in, "hidden_activation"));
  if (expect_line(in, "output_activation") != "linear") {
    throw ConfigError("output_activation", "only a linear output layer is supported");
  }
  {
    const std::string s = expect_line(in, "seed");
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), c.seed);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw ConfigError("seed", "checkpoint: bad seed '" + s + "'");
    }
  }
  c.network.input_shift = split_reals(expect_line(in, "input_shift"), "input_shift");
  c.network.input_scale = split_reals(expect_line(in, "input_scale"), "input_scale");
  c.network.validate();

  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (line.rfind("meta ", 0) == 0) {
      const std::string rest = line.substr(5);
      const auto sp = rest.find(' ');
      if (sp == std::string::npos) {
        c.metadata[rest] = "";
      } else {
        c.metadata[rest.substr(0, sp)] = rest.substr(sp + 1);
      }
      continue;
    }
    if (line.rfind("parameters ", 0) == 0) {
      count = static_cast<std::size_t>(parse_int(line.substr(11), "parameters"));
      break;
    }
    throw ConfigError("parameters", "checkpoint: unexpected line '" + line + "'");
  }

  c.params = zero_params(c.network);
  if (count != c.params.layout.total) {
    throw StructuralError("checkpoint: parameter count does not match the network header");
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw ConfigError("parameters", "checkpoint truncated");
    c.params.values[i] = parse_real(line, "parameters");
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, checkpoint);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace dpinn
