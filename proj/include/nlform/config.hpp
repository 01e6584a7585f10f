#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlform/errors.hpp"

namespace nlform::cli {

struct ConfigEntry {
  std::string value;
  int line = 0;
  bool operator==(const ConfigEntry& o) const { return value == o.value; }
};

struct ParseIssue {
  int line = 0;
  std::string message;
};

/// Parsed experiment configuration: top-level keys plus [section] blocks of
/// key = value lines.  Values stay as strings; commands extract what they
/// need with the typed getters below.
struct ExperimentConfig {
  // Section "" holds the top-level keys.
  std::map<std::string, std::map<std::string, ConfigEntry>> sections;

  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> find(const std::string& section, const std::string& key) const;
  std::string require(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long get_long(const std::string& section, const std::string& key) const;
  long get_long(const std::string& section, const std::string& key, long fallback) const;

  std::string command() const { return get_string("", "command", ""); }
  std::optional<std::uint64_t> seed() const;
};

struct ParseOutcome {
  ExperimentConfig config;
  std::vector<ParseIssue> errors;
  bool ok() const { return errors.empty(); }
};

/// Parses the sectioned key/value format, collecting every error (unknown
/// key or section, duplicate key, missing command, missing seed for a
/// stochastic command) with its line number.
ParseOutcome parse_config(const std::string& text);

/// Canonical re-serialization; parse(serialize(c)) reproduces c, and
/// serializing twice is byte-stable.
std::string serialize_config(const ExperimentConfig& config);

// Small value-syntax helpers shared by the commands.
std::vector<double> parse_double_list(const std::string& text, const std::string& what);
std::vector<int> parse_index_list(const std::string& text, int max_index, const std::string& what);
/// name(arg1,arg2,...) -> {name, args}.
std::pair<std::string, std::vector<std::string>> parse_call(const std::string& text,
                                                            const std::string& what);

}  // namespace nlform::cli
