#pragma once

// One JSON document per session under a root directory. Writes go to a
// temporary file that is renamed over the target.

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "planverify/error.hpp"
#include "planverify/json_io.hpp"
#include "planverify/loop.hpp"

namespace planverify {

/// Session ids name files, so only [A-Za-z0-9_-] is accepted.
inline bool is_safe_session_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

class SessionStore {
 public:
  /// Without a root the store keeps sessions in memory only.
  explicit SessionStore(std::optional<std::filesystem::path> root = std::nullopt) : root_(std::move(root)) {
    if (!root_) return;
    std::error_code ec;
    std::filesystem::create_directories(*root_, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create store directory " + root_->string() + ": " + ec.message());
    for (const auto& entry : std::filesystem::directory_iterator(*root_)) {
      if (entry.path().extension() != ".json") continue;
      auto id = entry.path().stem().string();
      if (!is_safe_session_id(id)) continue;
      Session s;
      try {
        s = session_from_json(json::parse(read_file(entry.path().string())));
      } catch (const std::exception& e) {
        throw Error(ErrorCode::Io, "corrupt session document " + entry.path().string() + ": " + e.what());
      }
      if (s.id != id) throw Error(ErrorCode::Io, "session document " + entry.path().string() + " has id " + s.id);
      sessions_[id] = std::make_shared<const Session>(std::move(s));
    }
  }

  /// Next sequential id, `s000001` onwards.
  std::string allocate_id() {
    std::lock_guard lock(mu_);
    for (;;) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "s%06zu", ++counter_);
      if (!sessions_.count(buf) && !reserved_.count(buf)) {
        reserved_[buf] = true;
        return buf;
      }
    }
  }

  /// Immutable snapshot; later writes never alter it.
  std::shared_ptr<const Session> get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  bool contains(const std::string& id) const { return get(id) != nullptr; }

  /// Persists first, then publishes, so a reader never sees state that is
  /// not on disk.
  void put(const Session& s) {
    if (!is_safe_session_id(s.id)) throw Error(ErrorCode::InvalidArgument, "unsafe session id '" + s.id + "'");
    auto snapshot = std::make_shared<const Session>(s);
    if (root_) write_atomically(*root_ / (s.id + ".json"), to_json(s).dump(2) + "\n");
    std::lock_guard lock(mu_);
    sessions_[s.id] = std::move(snapshot);
    reserved_.erase(s.id);
  }

  std::vector<std::string> ids() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, s] : sessions_) out.push_back(id);
    return out;
  }

  /// Per-session mutation lock. Callers try_lock it and report a conflict
  /// when it is taken.
  std::shared_ptr<std::mutex> mutation_lock(const std::string& id) {
    std::lock_guard lock(mu_);
    auto& m = locks_[id];
    if (!m) m = std::make_shared<std::mutex>();
    return m;
  }

  const std::optional<std::filesystem::path>& root() const noexcept { return root_; }

 private:
  static void write_atomically(const std::filesystem::path& target, const std::string& content) {
    auto tmp = target;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
      out << content;
      out.flush();
      if (!out) throw Error(ErrorCode::Io, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot rename " + tmp.string() + ": " + ec.message());
  }

  std::optional<std::filesystem::path> root_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const Session>> sessions_;
  std::map<std::string, bool> reserved_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
  std::size_t counter_ = 0;
};

}  // namespace planverify
