#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mmloc/channel_sim.hpp"
#include "mmloc/pipeline.hpp"

namespace mmloc {

/// Invalid or unreadable configuration; the CLI maps it to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Flat `key = value` text. `#` starts a comment; blank lines are ignored.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, const std::string& source = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.contains(key); }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

 private:
  std::string source_;
  std::map<std::string, std::string> values_;
};

struct RunConfig {
  SceneConfig scene;
  TrajectoryPlan plan;
  std::optional<std::filesystem::path> dataset_path;
  SplitPlan split;
  BranchConfigs branches;
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 1;
};

/// Command-line overrides layered on top of the file.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> train_fraction;
  std::optional<SplitStrategy> split;
  bool literal_cov = false;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::filesystem::path> dataset_path;
};

/// Resolves every key (unknown keys are rejected). Component seeds derive from
/// `seed` unless set explicitly in the file; a command-line seed overrides all.
RunConfig resolve_run_config(const KeyValueConfig& kv, const ConfigOverrides& overrides = {});

/// Stable 64-bit FNV-1a hash of the resolved configuration (output dir excluded).
std::uint64_t config_hash(const RunConfig& config);

SplitStrategy parse_split_strategy(const std::string& text);

}  // namespace mmloc
