#pragma once

// Pluggable dialogue backend for the fulfillment stage. An external agent
// receives the running conversation, the tool signatures and the workflow
// text, and answers with either a message or one tool call.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "warpp/orchestration.hpp"

namespace warpp {

struct BackendMessage {
  std::string role;  // system, user, assistant, tool
  std::string content;
  bool operator==(const BackendMessage&) const = default;
};

struct BackendRequest {
  std::string session_id;
  std::vector<BackendMessage> messages;
  std::vector<std::string> tools;  // signature lines
  std::string workflow;

  Json to_json() const;
  static BackendRequest from_json(const Json& j);
  bool operator==(const BackendRequest&) const = default;
};

struct ToolCallRequest {
  std::string name;
  Json args = Json::object();
  bool operator==(const ToolCallRequest&) const = default;
};

// Exactly one of message and tool_call is set. A message may name the prompt
// key it asks about so the scripted client can answer it.
struct BackendResponse {
  std::optional<std::string> message;
  std::string prompt_key;
  std::optional<ToolCallRequest> tool_call;

  Json to_json() const;
  static BackendResponse from_json(const Json& j);
  bool operator==(const BackendResponse&) const = default;
};

class DialogueBackend {
 public:
  virtual ~DialogueBackend() = default;
  virtual BackendResponse complete(const BackendRequest& req) = 0;
};

// One JSON request per line out, one JSON response per line back, e.g. a
// child process on stdin/stdout.
class StreamBackend : public DialogueBackend {
 public:
  StreamBackend(std::istream& in, std::ostream& out) : in_(in), out_(out) {}
  BackendResponse complete(const BackendRequest& req) override;

 private:
  std::istream& in_;
  std::ostream& out_;
};

struct BackendRun {
  bool completed = false;
  std::size_t turns = 0;
  std::size_t rejected_calls = 0;  // calls to tools outside the allowed set
};

struct BackendLimits {
  std::size_t max_turns = 64;
};

// Drives fulfillment through a backend instead of the reference executor.
// Unknown tools are reported back to the backend rather than thrown.
BackendRun drive_backend(DialogueBackend& backend, const std::string& session_id, ExecEnv& env, Transcript& t,
                         Agent agent, const BackendLimits& limits = {});

}  // namespace warpp
