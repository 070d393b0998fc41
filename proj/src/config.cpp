#include "lstme/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "lstme/error.hpp"

namespace lstme {

std::string trim(std::string_view s)
{
  auto const first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto const last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s, char sep)
{
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto const pos = s.find(sep, start);
    auto const piece = trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (!piece.empty()) out.push_back(piece);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

Config Config::parse(std::string const &text, std::string const &source)
{
  Config cfg;
  cfg.source_ = source;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto const t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto const eq = t.find('=');
    if (eq == std::string::npos)
      throw InvalidInput(source + ":" + std::to_string(lineno) + ": expected `key = value`");
    auto key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw InvalidInput(source + ":" + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return cfg;
}

Config Config::load(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  auto cfg = parse(buf.str(), path.string());
  cfg.base_dir_ = path.parent_path();
  return cfg;
}

std::optional<std::string> Config::get(std::string const &key) const
{
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_or(std::string const &key, std::string const &fallback) const
{
  return get(key).value_or(fallback);
}

double Config::get_double(std::string const &key, double fallback) const
{
  auto v = get(key);
  if (!v) return fallback;
  double out = 0;
  auto const *end = v->data() + v->size();
  auto [ptr, ec] = std::from_chars(v->data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw InvalidInput("config key `" + key + "`: not a number: " + *v);
  return out;
}

long long Config::get_int(std::string const &key, long long fallback) const
{
  auto v = get(key);
  if (!v) return fallback;
  long long out = 0;
  auto const *end = v->data() + v->size();
  auto [ptr, ec] = std::from_chars(v->data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw InvalidInput("config key `" + key + "`: not an integer: " + *v);
  return out;
}

std::vector<std::string> Config::get_list(std::string const &key) const
{
  auto v = get(key);
  if (!v) return {};
  return split_list(*v);
}

std::optional<std::filesystem::path> Config::get_path(std::string const &key) const
{
  auto v = get(key);
  if (!v || v->empty()) return std::nullopt;
  std::filesystem::path p(*v);
  if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
  return p;
}

} // namespace lstme
