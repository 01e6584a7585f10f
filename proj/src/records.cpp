#include "nlform/records.hpp"

#include <cmath>
#include <cstdio>

#include "nlform/errors.hpp"

namespace nlform {

Record& Record::add(std::string key, std::int64_t v) {
  fields_.emplace_back(std::move(key), Value(v));
  return *this;
}

Record& Record::add(std::string key, std::uint64_t v) {
  return add(std::move(key), static_cast<std::int64_t>(v));
}

Record& Record::add(std::string key, double v) {
  fields_.emplace_back(std::move(key), Value(v));
  return *this;
}

Record& Record::add(std::string key, bool v) {
  fields_.emplace_back(std::move(key), Value(v));
  return *this;
}

Record& Record::add(std::string key, std::string v) {
  fields_.emplace_back(std::move(key), Value(std::move(v)));
  return *this;
}

Record& Record::add(std::string key, std::vector<double> v) {
  fields_.emplace_back(std::move(key), Value(std::move(v)));
  return *this;
}

std::string Record::format_double(double v) {
  if (!std::isfinite(v)) throw InvalidInput("Record: non-finite numeric field");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void append_escaped(std::string& out, const std::string& s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
}

}  // namespace

std::string Record::to_json_line() const {
  std::string out = "{";
  bool first = true;
  for (const auto& [key, value] : fields_) {
    if (!first) out += ',';
    first = false;
    append_escaped(out, key);
    out += ':';
    if (const auto* i = std::get_if<std::int64_t>(&value)) {
      out += std::to_string(*i);
    } else if (const auto* d = std::get_if<double>(&value)) {
      out += format_double(*d);
    } else if (const auto* s = std::get_if<std::string>(&value)) {
      append_escaped(out, *s);
    } else if (const auto* b = std::get_if<bool>(&value)) {
      out += *b ? "true" : "false";
    } else if (const auto* vec = std::get_if<std::vector<double>>(&value)) {
      out += '[';
      for (std::size_t j = 0; j < vec->size(); ++j) {
        if (j) out += ',';
        out += format_double((*vec)[j]);
      }
      out += ']';
    }
  }
  out += '}';
  return out;
}

void RecordWriter::write(const Record& r) {
  (*out_) << r.to_json_line() << '\n';
  if (!out_->good()) throw IoError("RecordWriter: write failed");
  ++count_;
}

}  // namespace nlform
