#include "cavdet/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace cavdet {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

constexpr std::array<const char*, 5> kSectionOrder = {"levels", "cavity", "drive", "ensemble", "run"};

bool known_section(const std::string& s) {
  for (const char* name : kSectionOrder)
    if (s == name) return true;
  return false;
}

void check_path(const std::string& path) {
  const auto dot = path.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == path.size())
    throw ConfigError("malformed key path '" + path + "' (expected section.key)");
  const auto section = path.substr(0, dot);
  if (!known_section(section)) throw ConfigError("unknown section '" + section + "' in '" + path + "'");
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!known_section(section)) throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside of any section");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    const auto path = section + "." + key;
    if (cfg.entries_.count(path)) throw ConfigError(where + ": duplicate key '" + path + "'");
    cfg.entries_[path] = value;
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& path, const std::string& value) {
  check_path(path);
  entries_[path] = value;
}

void Config::erase(const std::string& path) { entries_.erase(path); }

bool Config::has(const std::string& path) const { return entries_.count(path) != 0; }

std::optional<std::string> Config::get(const std::string& path) const {
  const auto it = entries_.find(path);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> Config::get_double(const std::string& path) const {
  const auto raw = get(path);
  if (!raw) return std::nullopt;
  double value = 0.0;
  const char* begin = raw->data();
  const char* end = begin + raw->size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("key '" + path + "': '" + *raw + "' is not a number");
  return value;
}

std::string Config::to_ini() const {
  std::ostringstream out;
  bool first = true;
  for (const char* section : kSectionOrder) {
    const std::string prefix = std::string(section) + ".";
    bool header = false;
    for (const auto& [path, value] : entries_) {
      if (path.compare(0, prefix.size(), prefix) != 0) continue;
      if (!header) {
        if (!first) out << '\n';
        out << '[' << section << "]\n";
        header = true;
        first = false;
      }
      out << path.substr(prefix.size()) << " = " << value << '\n';
    }
  }
  return out.str();
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  (void)ec;
  return std::string(buf.data(), ptr);
}

}  // namespace cavdet
