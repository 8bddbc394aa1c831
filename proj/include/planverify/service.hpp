#pragma once

// HTTP API over sessions. Routing lives in Service::handle so it can be
// driven without sockets; mount() attaches it to an httplib server.

#include <cstdint>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "planverify/error.hpp"
#include "planverify/json_io.hpp"
#include "planverify/llm.hpp"
#include "planverify/loop.hpp"
#include "planverify/store.hpp"

namespace planverify {

struct ApiResponse {
  int status = 200;
  json body;
};

/// HTTP status for a library error code.
inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidState:
    case ErrorCode::NoConstraints: return 409;
    case ErrorCode::LlmUnavailable: return 503;
    case ErrorCode::UnparseableLlmOutput: return 502;
    case ErrorCode::Io: return 500;
    default: return 422;
  }
}

inline ApiResponse error_response(int status, std::string code, std::string message, json detail = json::object()) {
  return {status, {{"code", std::move(code)}, {"message", std::move(message)}, {"detail", std::move(detail)}}};
}

struct ServiceOptions {
  LlmConfig llm;
  SessionOptions session;
};

class Service {
 public:
  Service(SessionStore& store, LlmClient& client, ServiceOptions options = {})
      : store_(store), client_(client), options_(std::move(options)) {}

  ApiResponse handle(std::string_view method, std::string_view path, const std::string& body) {
    try {
      return route(method, path, body);
    } catch (const BadRequest& e) {
      return error_response(400, "bad_request", e.what());
    } catch (const SyntaxError& e) {
      return error_response(422, "syntax_error", e.what(), {{"offset", e.offset()}, {"expected", e.expected()}});
    } catch (const UnparseableLlmOutput& e) {
      json detail = json::object();
      if (e.line()) detail["line"] = *e.line();
      return error_response(502, "unparseable_llm_output", e.what(), detail);
    } catch (const InapplicableAction& e) {
      json detail = json::object();
      if (e.step()) detail["step"] = *e.step();
      return error_response(422, "inapplicable_action", e.what(), detail);
    } catch (const Error& e) {
      return error_response(http_status(e.code()), std::string(to_string(e.code())), e.what());
    } catch (const std::exception& e) {
      return error_response(500, "internal", e.what());
    }
  }

  void mount(httplib::Server& server) {
    auto adapter = [this](const httplib::Request& req, httplib::Response& res) {
      auto out = handle(req.method, req.path, req.body);
      res.status = out.status;
      res.set_content(out.body.dump(), "application/json");
    };
    server.Get(R"(/sessions.*)", adapter);
    server.Post(R"(/sessions.*)", adapter);
  }

 private:
  struct BadRequest : std::runtime_error {
    using std::runtime_error::runtime_error;
  };

  static json parse_body(const std::string& body, std::initializer_list<std::string_view> allowed) {
    json doc = body.empty() ? json::object() : json::parse(body, nullptr, false);
    if (doc.is_discarded()) throw BadRequest("request body is not valid JSON");
    try {
      detail::only_keys(doc, allowed, "request body");
    } catch (const Error& e) {
      throw BadRequest(e.what());
    }
    return doc;
  }

  template <class T>
  static std::optional<T> optional_field(const json& doc, const char* key) {
    if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
    try {
      return doc.at(key).get<T>();
    } catch (const json::exception&) {
      throw BadRequest(std::string("field '") + key + "' has the wrong type");
    }
  }

  template <class T>
  static T required_field(const json& doc, const char* key) {
    auto v = optional_field<T>(doc, key);
    if (!v) throw BadRequest(std::string("missing field '") + key + "'");
    return *v;
  }

  static std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= path.size()) {
      auto next = path.find('/', pos);
      if (next == std::string_view::npos) next = path.size();
      if (next > pos) parts.emplace_back(path.substr(pos, next - pos));
      pos = next + 1;
    }
    return parts;
  }

  ApiResponse not_found(const std::string& what) { return error_response(404, "not_found", what + " not found"); }

  ApiResponse route(std::string_view method, std::string_view path, const std::string& body) {
    auto parts = split_path(path);
    if (parts.empty() || parts[0] != "sessions") return not_found("route " + std::string(path));
    const bool get = method == "GET", post = method == "POST";

    if (parts.size() == 1) {
      if (post) return create(body);
      if (get) return {200, {{"sessions", store_.ids()}}};
      return error_response(405, "method_not_allowed", "use GET or POST");
    }
    const std::string& id = parts[1];
    if (!is_safe_session_id(id)) return not_found("session " + id);
    auto snapshot = store_.get(id);
    if (!snapshot) return not_found("session " + id);

    std::string tail;
    for (std::size_t i = 2; i < parts.size(); ++i) tail += "/" + parts[i];

    if (get) {
      if (tail.empty()) return {200, to_json(*snapshot)};
      if (tail == "/report") {
        const auto* report = snapshot->latest_report();
        if (!report) return error_response(404, "no_report", "session " + id + " has no verification report yet");
        return {200, to_json(*report)};
      }
      return not_found("route " + std::string(path));
    }
    if (!post) return error_response(405, "method_not_allowed", "use GET or POST");

    if (tail == "/ask") {
      auto doc = parse_body(body, {"question"});
      return {200, {{"answer", answer_question(*snapshot, required_field<std::string>(doc, "question"))}}};
    }

    json doc;
    if (tail == "/rules/confirm")
      doc = parse_body(body, {"selections", "submit"});
    else if (tail == "/rules")
      doc = parse_body(body, {"text"});
    else if (tail == "/strictness")
      doc = parse_body(body, {"constraint_id", "weight"});
    else if (tail == "/run")
      doc = parse_body(body, {"seed", "max_iterations"});
    else if (tail == "/restart")
      doc = parse_body(body, {});
    else
      return not_found("route " + std::string(path));

    auto lock = store_.mutation_lock(id);
    std::unique_lock guard(*lock, std::try_to_lock);
    if (!guard.owns_lock())
      return error_response(409, "session_busy", "another request is modifying session " + id);
    // Re-read under the lock: the snapshot above may predate a finished write.
    Session s = *store_.get(id);

    if (tail == "/rules/confirm") {
      std::vector<RuleSelection> selections;
      if (!doc.contains("selections") || !doc.at("selections").is_array())
        throw BadRequest("'selections' must be an array");
      for (const auto& item : doc.at("selections")) {
        if (!item.is_object()) throw BadRequest("each selection must be an object");
        for (const auto& [k, v] : item.items()) {
          (void)v;
          if (k != "draft_id" && k != "action" && k != "feedback")
            throw BadRequest("unknown field '" + k + "' in selection");
        }
        RuleSelection sel;
        sel.draft_id = required_field<std::string>(item, "draft_id");
        auto action = optional_field<std::string>(item, "action").value_or("accept");
        if (action == "accept")
          sel.kind = RuleSelection::Kind::Accept;
        else if (action == "reject")
          sel.kind = RuleSelection::Kind::Reject;
        else if (action == "regenerate")
          sel.kind = RuleSelection::Kind::Regenerate;
        else
          throw BadRequest("action must be accept, reject or regenerate");
        sel.feedback = optional_field<std::string>(item, "feedback").value_or("");
        selections.push_back(std::move(sel));
      }
      s = confirm_rules(std::move(s), selections, client_, optional_field<bool>(doc, "submit").value_or(true),
                        options_.llm);
    } else if (tail == "/rules") {
      s = add_rule(std::move(s), required_field<std::string>(doc, "text"), client_, options_.llm);
    } else if (tail == "/strictness") {
      s = adjust_strictness(std::move(s), required_field<std::string>(doc, "constraint_id"),
                            required_field<double>(doc, "weight"));
    } else if (tail == "/run") {
      LoopConfig config = s.config;
      if (auto seed = optional_field<std::uint64_t>(doc, "seed")) config.seed = *seed;
      if (auto k = optional_field<std::size_t>(doc, "max_iterations")) config.max_iterations = *k;
      s = run_iterations(std::move(s), client_, config, options_.llm);
    } else {
      s = restart_plan(std::move(s), client_, options_.llm);
    }
    store_.put(s);
    return {200, to_json(s)};
  }

  ApiResponse create(const std::string& body) {
    auto doc = parse_body(body, {"prompt", "mode"});
    auto prompt = required_field<std::string>(doc, "prompt");
    SessionOptions opts = options_.session;
    opts.llm = options_.llm;
    if (auto mode = optional_field<std::string>(doc, "mode")) {
      if (*mode == "escort")
        opts.mode = DomainMode::Escort;
      else if (*mode == "labeled")
        opts.mode = DomainMode::Labeled;
      else
        throw BadRequest("mode must be escort or labeled");
    }
    auto s = create_session(store_.allocate_id(), std::move(prompt), client_, opts);
    store_.put(s);
    return {201, to_json(s)};
  }

  SessionStore& store_;
  LlmClient& client_;
  ServiceOptions options_;
};

/// `host:port` from PLANVERIFY_BIND_ADDR, defaulting to 127.0.0.1:8080.
inline std::pair<std::string, int> bind_address_from_environment() {
  std::string addr = "127.0.0.1:8080";
  if (const char* env = std::getenv("PLANVERIFY_BIND_ADDR"); env && *env) addr = env;
  auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "bind address needs host:port");
  int port = 0;
  try {
    port = std::stoi(addr.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "bad port in bind address '" + addr + "'");
  }
  return {addr.substr(0, colon), port};
}

}  // namespace planverify
