#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cavdet {

/// Raised for unreadable or malformed configuration input. Maps to exit status 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key-value configuration with INI-style sections.
///
/// Keys are addressed by dotted path ("cavity.kappa_t_hz"). Values are kept as
/// the literal text from the file so that a config can be written back out
/// unchanged.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::string& path);

  /// Applies "section.key=value"; last write wins.
  void apply_override(const std::string& assignment);
  void set(const std::string& path, const std::string& value);
  void erase(const std::string& path);

  [[nodiscard]] bool has(const std::string& path) const;
  [[nodiscard]] std::optional<std::string> get(const std::string& path) const;
  [[nodiscard]] std::optional<double> get_double(const std::string& path) const;

  [[nodiscard]] const std::map<std::string, std::string>& entries() const { return entries_; }

  /// Serializes back to INI text, sections in canonical order.
  [[nodiscard]] std::string to_ini() const;

  bool operator==(const Config&) const = default;

 private:
  std::map<std::string, std::string> entries_;
};

/// Shortest text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace cavdet
