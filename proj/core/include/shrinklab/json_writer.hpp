#pragma once

#include <string>
#include <vector>

namespace shrinklab {

// Deterministic JSON emitter for verdict files. Keys keep insertion order and
// doubles are always printed with 17 significant digits, so identical inputs
// produce byte-identical files.
class JsonWriter {
public:
  JsonWriter& beginObject(const std::string& key = "");
  JsonWriter& endObject();
  JsonWriter& beginArray(const std::string& key = "");
  JsonWriter& endArray();
  JsonWriter& field(const std::string& key, double value);
  JsonWriter& field(const std::string& key, bool value);
  JsonWriter& field(const std::string& key, int value);
  JsonWriter& field(const std::string& key, long long value);
  JsonWriter& field(const std::string& key, const std::string& value);
  JsonWriter& field(const std::string& key, const char* value);
  JsonWriter& field(const std::string& key, const std::vector<double>& values);
  JsonWriter& element(double value);
  JsonWriter& element(const std::string& value);

  std::string str() const { return out_; }
  void writeFile(const std::string& path) const;

  static std::string formatDouble(double v);

private:
  void comma();
  void keyPrefix(const std::string& key);
  std::string out_;
  std::vector<bool> needComma_{};
};

} // namespace shrinklab
