#include "skipshift/run_record.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <set>

#include "skipshift/fs_util.hpp"

namespace skipshift {

namespace fs = std::filesystem;
using nlohmann::json;

json StageEvent::to_json() const {
  return {{"stage", stage},         {"status", status},       {"key", key},
          {"timestamp", timestamp}, {"artifacts", artifacts}, {"message", message}};
}

StageEvent StageEvent::from_json(const json& j) {
  StageEvent e;
  e.stage = j.at("stage").get<std::string>();
  e.status = j.at("status").get<std::string>();
  e.key = j.value("key", "");
  e.timestamp = j.value("timestamp", "");
  e.artifacts = j.value("artifacts", std::vector<std::string>{});
  e.message = j.value("message", "");
  return e;
}

RunRecord::RunRecord(fs::path output_dir) : dir_(std::move(output_dir)) {}

RunRecord RunRecord::open(const fs::path& output_dir) {
  RunRecord r(output_dir);
  const auto path = output_dir / kFileName;
  if (!fs::exists(path)) return r;
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw IoError("corrupt run record " + path.string() + ": " + e.what());
  }
  r.config_hash_ = j.value("config_hash", "");
  for (const auto& e : j.at("history")) r.history_.push_back(StageEvent::from_json(e));
  return r;
}

std::optional<StageEvent> RunRecord::latest(const std::string& stage) const {
  for (auto it = history_.rbegin(); it != history_.rend(); ++it) {
    if (it->stage == stage) return *it;
  }
  return std::nullopt;
}

bool RunRecord::completed(const std::string& stage, const std::string& key) const {
  const auto e = latest(stage);
  if (!e || e->status != "completed" || e->key != key) return false;
  return std::all_of(e->artifacts.begin(), e->artifacts.end(),
                     [&](const std::string& a) { return fs::exists(dir_ / a); });
}

void RunRecord::append(StageEvent event) {
  if (event.timestamp.empty()) event.timestamp = utc_timestamp();
  history_.push_back(std::move(event));
  save();
}

std::vector<std::string> RunRecord::artifacts() const {
  std::set<std::string> stages;
  for (const auto& e : history_) stages.insert(e.stage);
  std::set<std::string> all;
  for (const auto& s : stages) {
    const auto event = latest(s);
    all.insert(event->artifacts.begin(), event->artifacts.end());
  }
  return {all.begin(), all.end()};
}

json RunRecord::to_json() const {
  json h = json::array();
  for (const auto& e : history_) h.push_back(e.to_json());
  return {{"software_version", kSoftwareVersion}, {"config_hash", config_hash_}, {"history", h}};
}

void RunRecord::save() const {
  fs::create_directories(dir_);
  write_text_atomic(dir_ / kFileName, to_json().dump(2) + "\n");
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::string> list_files(const fs::path& root, const fs::path& dir) {
  std::vector<std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace skipshift
