#pragma once

// Run configuration: line-oriented `key = value` text with `#` comments.
//
//   Nb Nk Nc Nh Nw Nr Ns P M MD    required, integers >= 1
//   sigma_w sigma_h                strides, default 1
//   scope                          c-innermost (default) | all
//   strict                         true | false, also report the N_c Ker-term cost
//   lower_bound                    true | false, plan with M_L = M
//   element_width                  bytes per element for reporting, default 4
//   seed                           input-generation seed, default 42
//   oracle_max_points              exhaustive-search budget, default 10000000

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "commsynth/core_model.hpp"
#include "commsynth/optimizer.hpp"

namespace commsynth {

struct RunConfig {
  ConvProblem problem;
  MachineSpec machine;
  PermutationScope scope = PermutationScope::kCInnermost;
  bool strict = false;
  bool lower_bound = false;
  Count element_width = 4;
  std::uint64_t seed = 42;
  std::int64_t oracle_max_points = 10'000'000;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& reason);
  int line() const { return line_; }

 private:
  int line_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& reason);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Throws ParseError (malformed line, unknown or duplicate key) or
/// ValidationError (missing required field, out-of-range value).
RunConfig parse_config(std::string_view text);
/// Reads and parses a file; throws cli.IoError when it cannot be read.
RunConfig load_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(render_config(c)) == c.
std::string render_config(const RunConfig& cfg);

PermutationScope parse_scope(std::string_view text);

}  // namespace commsynth
