#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace ccc {

// Flat, sectioned key/value run configuration ("section.key" -> string) with
// a fixed key registry. Every key has a default, a fully-defaulted config is
// valid, and unknown keys are rejected at set time so typos never pass
// silently. Values stay strings until a command parses them, so the resolved
// config serializes back out exactly as given.
class RunConfig {
 public:
  RunConfig();

  void set(const std::string& key, const std::string& value);  // ConfigError on unknown key
  void load_file(const std::string& path);  // INI-style: [section], key = value, # comments

  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  // INI text with sections in registry order; load_file() of the output
  // reproduces the config.
  std::string serialize() const;

  const std::map<std::string, std::string>& values() const { return values_; }

  // Registry in canonical order: (key, default).
  static const std::vector<std::pair<std::string, std::string>>& registry();

 private:
  std::map<std::string, std::string> values_;
};

// Command drivers behind the CLI. Each creates out_dir, writes its result
// files plus a config.ini snapshot there, and throws on failure (ConfigError
// for unusable settings, IoError for filesystem problems, DivergenceError
// from training). All outputs are deterministic in the config.
void cmd_train(const RunConfig& cfg, const std::string& out_dir);
void cmd_thresholds(const RunConfig& cfg, const std::string& out_dir);
void cmd_match(const RunConfig& cfg, const std::string& out_dir);
void cmd_tournament(const RunConfig& cfg, const std::string& out_dir);
// Returns false when a binding property suite fails (caller maps that to the
// property-failure exit code).
bool cmd_verify_theorem(const RunConfig& cfg, const std::string& out_dir);

}  // namespace ccc
