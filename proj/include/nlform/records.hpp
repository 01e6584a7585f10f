#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace nlform {

/// One output record: ordered fields serialized as a single JSON object
/// line.  Doubles print with 17 significant digits so that replaying a
/// seeded run is byte-comparable.
class Record {
 public:
  using Value = std::variant<std::int64_t, double, std::string, bool, std::vector<double>>;

  Record& add(std::string key, std::int64_t v);
  Record& add(std::string key, int v) { return add(std::move(key), static_cast<std::int64_t>(v)); }
  Record& add(std::string key, std::uint64_t v);
  Record& add(std::string key, double v);
  Record& add(std::string key, bool v);
  Record& add(std::string key, std::string v);
  Record& add(std::string key, const char* v) { return add(std::move(key), std::string(v)); }
  Record& add(std::string key, std::vector<double> v);

  std::string to_json_line() const;
  const std::vector<std::pair<std::string, Value>>& fields() const { return fields_; }

  static std::string format_double(double v);

 private:
  std::vector<std::pair<std::string, Value>> fields_;
};

/// Serializes records in the order written; emission order is part of the
/// determinism contract.
class RecordWriter {
 public:
  explicit RecordWriter(std::ostream& out) : out_(&out) {}
  void write(const Record& r);
  long count() const { return count_; }

 private:
  std::ostream* out_;
  long count_ = 0;
};

}  // namespace nlform
