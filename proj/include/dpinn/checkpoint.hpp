#pragma once

// Parameter checkpoint files.
//
// Text format, one record per line:
//
//   dpinn-checkpoint 1
//   input_dim 3
//   hidden_layers 4
//   hidden_width 20
//   hidden_activation tanh
//   output_activation linear
//   seed 42
//   input_shift <n values or empty>
//   input_scale <n values or empty>
//   meta <key> <value>          (zero or more)
//   parameters <count>
//   <one value per line>
//
// Reals are written in shortest round-trip form, so read(write(c)) == c
// bitwise.

#include "dpinn/mlp.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace dpinn {

struct Checkpoint {
  NetworkConfig network;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> metadata;
  ParameterVector params;
};

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `x`.
std::string format_real(double x);
double parse_real(const std::string& text, const std::string& key);

}  // namespace dpinn
