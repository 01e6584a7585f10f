#include "nlform/config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <sstream>

namespace nlform::cli {

namespace {

struct SectionCatalog {
  const char* name;
  std::vector<const char*> keys;
};

// Known sections and keys; anything else is a config error.
const std::vector<SectionCatalog>& catalog() {
  static const std::vector<SectionCatalog> c = {
      {"", {"command", "seed", "out", "blocks"}},
      {"model",
       {"kind", "dim", "marginal", "rho", "eig", "m0sq", "K", "d", "L", "eps", "lambda", "a_eps",
        "burnin", "thinning", "cond_grid", "atoms", "masses", "weights"}},
      {"space", {"kind", "p", "beta", "gamma", "M", "dim"}},
      {"function", {"kind", "coord", "scale", "center", "scales", "coeffs", "k"}},
      {"form", {"alpha", "delta", "samples", "coords"}},
      {"chain", {"alpha", "delta", "horizon", "chains", "events", "dump", "jump_grid", "x0"}},
      {"grid", {"d", "extent", "n", "K"}},
      {"propagator", {"d", "eps", "m0sq", "points"}},
      {"qr", {"conditions", "terms", "samples", "m0grid", "threshold", "lsamples"}},
      {"scheme", {"space", "p", "beta", "gamma", "M0", "alpha", "m", "eig"}},
      {"sample", {"count"}},
  };
  return c;
}

const SectionCatalog* find_section(const std::string& name) {
  for (const auto& s : catalog())
    if (name == s.name) return &s;
  return nullptr;
}

bool known_key(const SectionCatalog& s, const std::string& key) {
  return std::any_of(s.keys.begin(), s.keys.end(),
                     [&](const char* k) { return key == k; });
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

const std::array<const char*, 5> kStochasticCommands = {"form", "chain", "sample", "qr-report",
                                                        "verify"};

}  // namespace

bool ExperimentConfig::has(const std::string& section, const std::string& key) const {
  return find(section, key).has_value();
}

std::optional<std::string> ExperimentConfig::find(const std::string& section,
                                                  const std::string& key) const {
  const auto sit = sections.find(section);
  if (sit == sections.end()) return std::nullopt;
  const auto kit = sit->second.find(key);
  if (kit == sit->second.end()) return std::nullopt;
  return kit->second.value;
}

std::string ExperimentConfig::require(const std::string& section, const std::string& key) const {
  auto v = find(section, key);
  if (!v)
    throw InvalidInput("config: missing required key '" + key + "' in section [" +
                       (section.empty() ? "top-level" : section) + "]");
  return *v;
}

std::string ExperimentConfig::get_string(const std::string& section, const std::string& key,
                                         const std::string& fallback) const {
  return find(section, key).value_or(fallback);
}

double ExperimentConfig::get_double(const std::string& section, const std::string& key) const {
  const std::string v = require(section, key);
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InvalidInput("config: key '" + key + "' is not a number: " + v);
  }
}

double ExperimentConfig::get_double(const std::string& section, const std::string& key,
                                    double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

long ExperimentConfig::get_long(const std::string& section, const std::string& key) const {
  const std::string v = require(section, key);
  try {
    std::size_t pos = 0;
    const long l = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return l;
  } catch (const std::exception&) {
    throw InvalidInput("config: key '" + key + "' is not an integer: " + v);
  }
}

long ExperimentConfig::get_long(const std::string& section, const std::string& key,
                                long fallback) const {
  return has(section, key) ? get_long(section, key) : fallback;
}

std::optional<std::uint64_t> ExperimentConfig::seed() const {
  const auto v = find("", "seed");
  if (!v) return std::nullopt;
  try {
    return static_cast<std::uint64_t>(std::stoull(*v));
  } catch (const std::exception&) {
    throw InvalidInput("config: seed is not an unsigned integer: " + *v);
  }
}

ParseOutcome parse_config(const std::string& text) {
  ParseOutcome out;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        out.errors.push_back({lineno, "unterminated section header: " + t});
        continue;
      }
      section = trim(t.substr(1, t.size() - 2));
      if (!find_section(section))
        out.errors.push_back({lineno, "unknown section [" + section + "]"});
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      out.errors.push_back({lineno, "expected 'key = value': " + t});
      continue;
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      out.errors.push_back({lineno, "empty key"});
      continue;
    }
    if (value.empty()) {
      out.errors.push_back({lineno, "empty value for key '" + key + "'"});
      continue;
    }
    const SectionCatalog* cat = find_section(section);
    if (cat && !known_key(*cat, key)) {
      out.errors.push_back({lineno, "unknown key '" + key + "' in section [" +
                                        (section.empty() ? "top-level" : section) + "]"});
      continue;
    }
    auto& sec = out.config.sections[section];
    const auto prev = sec.find(key);
    if (prev != sec.end()) {
      out.errors.push_back({lineno, "duplicate key '" + key + "' (first set on line " +
                                        std::to_string(prev->second.line) + ")"});
      continue;
    }
    sec[key] = {value, lineno};
  }

  const std::string cmd = out.config.command();
  if (cmd.empty()) out.errors.push_back({0, "missing command"});
  if (std::any_of(kStochasticCommands.begin(), kStochasticCommands.end(),
                  [&](const char* c) { return cmd == c; }) &&
      !out.config.has("", "seed"))
    out.errors.push_back({0, "command '" + cmd + "' is stochastic and requires a seed"});
  return out;
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& cat : catalog()) {
    const auto sit = config.sections.find(cat.name);
    if (sit == config.sections.end() || sit->second.empty()) continue;
    if (*cat.name != '\0') {
      out += '[';
      out += cat.name;
      out += "]\n";
    }
    for (const char* key : cat.keys) {
      const auto kit = sit->second.find(key);
      if (kit == sit->second.end()) continue;
      out += key;
      out += " = ";
      out += kit->second.value;
      out += '\n';
    }
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    const std::string t = trim(token);
    if (t.empty()) continue;
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(t, &pos));
      if (pos != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw InvalidInput(what + ": bad number '" + t + "'");
    }
  }
  if (out.empty()) throw InvalidInput(what + ": empty list");
  return out;
}

std::vector<int> parse_index_list(const std::string& text, int max_index, const std::string& what) {
  // 1-based indices and ranges: "1,3,5" or "1-4".
  std::vector<int> out;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    const std::string t = trim(token);
    if (t.empty()) continue;
    const auto dash = t.find('-', 1);
    auto to_int = [&](const std::string& s) {
      try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        throw InvalidInput(what + ": bad index '" + s + "'");
      }
    };
    int lo, hi;
    if (dash == std::string::npos) {
      lo = hi = to_int(t);
    } else {
      lo = to_int(trim(t.substr(0, dash)));
      hi = to_int(trim(t.substr(dash + 1)));
    }
    if (lo < 1 || hi < lo || hi > max_index)
      throw InvalidInput(what + ": index range " + t + " out of bounds (1.." +
                         std::to_string(max_index) + ")");
    for (int v = lo; v <= hi; ++v) out.push_back(v - 1);
  }
  if (out.empty()) throw InvalidInput(what + ": empty index list");
  return out;
}

std::pair<std::string, std::vector<std::string>> parse_call(const std::string& text,
                                                            const std::string& what) {
  const std::string t = trim(text);
  const auto open = t.find('(');
  if (open == std::string::npos) return {t, {}};
  if (t.back() != ')') throw InvalidInput(what + ": expected name(args): " + t);
  const std::string name = trim(t.substr(0, open));
  const std::string inner = t.substr(open + 1, t.size() - open - 2);
  std::vector<std::string> args;
  std::string token;
  std::istringstream in(inner);
  while (std::getline(in, token, ',')) args.push_back(trim(token));
  return {name, args};
}

}  // namespace nlform::cli
