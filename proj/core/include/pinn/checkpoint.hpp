#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace pinn {

/// Ordered key -> array (or key -> string) map persisted as text.
///
/// One entry per line: `key a <count> <hexfloat>...` or `key s <text>`.
/// Doubles are written as hexadecimal floats so save/load round-trips
/// bit-exactly. Keys must not contain whitespace; strings must not contain
/// newlines.
class Archive {
 public:
  void put(const std::string& key, std::vector<double> values);
  void put(const std::string& key, std::span<const double> values) {
    put(key, std::vector<double>(values.begin(), values.end()));
  }
  void put_string(const std::string& key, std::string value);

  bool has(const std::string& key) const;
  const std::vector<double>& array(const std::string& key) const;
  const std::string& string(const std::string& key) const;
  double scalar(const std::string& key) const;

  void save(const std::filesystem::path& path) const;
  static Archive load(const std::filesystem::path& path);

  std::string to_text() const;
  static Archive from_text(const std::string& text);

 private:
  std::map<std::string, std::vector<double>> arrays_;
  std::map<std::string, std::string> strings_;
};

}  // namespace pinn
