#include "shrinklab/json_writer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace shrinklab {

std::string JsonWriter::formatDouble(double v) {
  if (std::isnan(v)) return "\"nan\"";
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void JsonWriter::comma() {
  if (!needComma_.empty()) {
    if (needComma_.back()) out_ += ",";
    needComma_.back() = true;
  }
}

void JsonWriter::keyPrefix(const std::string& key) {
  comma();
  if (!key.empty()) {
    out_ += "\"" + key + "\":";
  }
}

JsonWriter& JsonWriter::beginObject(const std::string& key) {
  keyPrefix(key);
  out_ += "{";
  needComma_.push_back(false);
  return *this;
}

JsonWriter& JsonWriter::endObject() {
  out_ += "}";
  needComma_.pop_back();
  return *this;
}

JsonWriter& JsonWriter::beginArray(const std::string& key) {
  keyPrefix(key);
  out_ += "[";
  needComma_.push_back(false);
  return *this;
}

JsonWriter& JsonWriter::endArray() {
  out_ += "]";
  needComma_.pop_back();
  return *this;
}

JsonWriter& JsonWriter::field(const std::string& key, double value) {
  keyPrefix(key);
  out_ += formatDouble(value);
  return *this;
}

JsonWriter& JsonWriter::field(const std::string& key, bool value) {
  keyPrefix(key);
  out_ += value ? "true" : "false";
  return *this;
}

JsonWriter& JsonWriter::field(const std::string& key, int value) {
  keyPrefix(key);
  out_ += std::to_string(value);
  return *this;
}

JsonWriter& JsonWriter::field(const std::string& key, long long value) {
  keyPrefix(key);
  out_ += std::to_string(value);
  return *this;
}

JsonWriter& JsonWriter::field(const std::string& key, const std::string& value) {
  keyPrefix(key);
  out_ += "\"";
  for (char c : value) {
    if (c == '"' || c == '\\') out_ += '\\';
    out_ += c;
  }
  out_ += "\"";
  return *this;
}

JsonWriter& JsonWriter::field(const std::string& key, const char* value) {
  return field(key, std::string(value));
}

JsonWriter& JsonWriter::field(const std::string& key, const std::vector<double>& values) {
  beginArray(key);
  for (double v : values) element(v);
  return endArray();
}

JsonWriter& JsonWriter::element(double value) {
  comma();
  out_ += formatDouble(value);
  return *this;
}

JsonWriter& JsonWriter::element(const std::string& value) {
  comma();
  out_ += "\"" + value + "\"";
  return *this;
}

void JsonWriter::writeFile(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << out_ << "\n";
}

} // namespace shrinklab
