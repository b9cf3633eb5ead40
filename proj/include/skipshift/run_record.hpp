#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace skipshift {

inline constexpr const char* kSoftwareVersion = "0.1.0";

struct StageEvent {
  std::string stage;
  /// "completed", "failed" or "partial"
  std::string status;
  std::string key;
  std::string timestamp;
  /// Paths relative to the output directory.
  std::vector<std::string> artifacts;
  std::string message;

  nlohmann::json to_json() const;
  static StageEvent from_json(const nlohmann::json& j);
};

/// Append-only history of pipeline stages for one output directory. The
/// latest event per stage defines that stage's state and artifact set.
class RunRecord {
 public:
  static constexpr const char* kFileName = "run_record.json";

  explicit RunRecord(std::filesystem::path output_dir);

  /// Loads the record if present; an absent file yields an empty history.
  static RunRecord open(const std::filesystem::path& output_dir);

  const std::filesystem::path& output_dir() const { return dir_; }
  const std::vector<StageEvent>& history() const { return history_; }
  std::string config_hash() const { return config_hash_; }
  void set_config_hash(std::string hash) { config_hash_ = std::move(hash); }

  std::optional<StageEvent> latest(const std::string& stage) const;
  /// True when the latest event for `stage` is completed with `key`.
  bool completed(const std::string& stage, const std::string& key) const;

  /// Appends an event and persists the record (temp-then-rename).
  void append(StageEvent event);

  /// Union of the artifact lists of the latest event of every stage.
  std::vector<std::string> artifacts() const;

  nlohmann::json to_json() const;

 private:
  void save() const;

  std::filesystem::path dir_;
  std::string config_hash_;
  std::vector<StageEvent> history_;
};

/// ISO-8601 UTC timestamp with second resolution.
std::string utc_timestamp();

/// Regular files below `dir`, relative to `root`, sorted.
std::vector<std::string> list_files(const std::filesystem::path& root, const std::filesystem::path& dir);

}  // namespace skipshift
