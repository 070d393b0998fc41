#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lstme {

// Line-based `key = value` configuration. `#` starts a comment line; later
// assignments to the same key replace earlier ones.
class Config
{
public:
  Config() = default;

  static Config parse(std::string const &text, std::string const &source = "<string>");
  static Config load(std::filesystem::path const &path);

  bool has(std::string const &key) const { return values_.count(key) != 0; }
  void set(std::string const &key, std::string value) { values_[key] = std::move(value); }

  std::optional<std::string> get(std::string const &key) const;
  std::string get_or(std::string const &key, std::string const &fallback) const;

  double get_double(std::string const &key, double fallback) const;
  long long get_int(std::string const &key, long long fallback) const;
  std::vector<std::string> get_list(std::string const &key) const;

  // Resolves a path-valued key relative to the directory of the loaded file.
  std::optional<std::filesystem::path> get_path(std::string const &key) const;

  std::map<std::string, std::string> const &values() const { return values_; }
  std::string const &source() const { return source_; }

private:
  std::map<std::string, std::string> values_;
  std::string source_;
  std::filesystem::path base_dir_;
};

std::string trim(std::string_view s);
std::vector<std::string> split_list(std::string_view s, char sep = ',');

} // namespace lstme
