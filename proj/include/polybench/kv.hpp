#pragma once

#include <string>
#include <utility>
#include <vector>

namespace polybench {

// Minimal `key = value` text format: one pair per line, '#' comments,
// blank lines ignored. Order-preserving.
class KvFile {
 public:
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;            // throws ConfigError
  std::string get_or(const std::string& key, const std::string& fallback) const;

  std::string serialize() const;
  void save(const std::string& path) const;
  static KvFile parse(const std::string& text);
  static KvFile load(const std::string& path);

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace polybench
