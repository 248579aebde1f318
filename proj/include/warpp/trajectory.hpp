#pragma once

// Event log of one session. Events are appended in virtual-time order and
// serialized one per line.

#include <optional>
#include <string>
#include <vector>

#include "warpp/common.hpp"

namespace warpp {

enum class EventKind { AgentTransition, ToolInvocation, Utterance, Handoff, Thought, Fallback };
enum class Agent { Orchestrator, Authenticator, Personalizer, Fulfillment, React, Client };

std::string_view event_kind_name(EventKind k);
std::string_view agent_name(Agent a);
EventKind parse_event_kind(std::string_view s);
Agent parse_agent(std::string_view s);

struct AgentEvent {
  EventKind kind = EventKind::Utterance;
  Agent agent = Agent::Orchestrator;
  std::optional<Agent> to;      // Handoff target
  std::string tool;             // ToolInvocation
  Json params = Json::object(); // ToolInvocation arguments
  std::string outcome;          // ToolInvocation
  std::string text;             // Utterance, Thought, Fallback
  std::size_t tokens_in = 0;
  std::size_t tokens_out = 0;
  double at = 0;                // virtual ms since session start
  double elapsed = 0;           // ToolInvocation latency

  Json to_json() const;
  static AgentEvent from_json(const Json& j);
  bool operator==(const AgentEvent&) const = default;
};

struct Trajectory {
  std::vector<AgentEvent> events;
  std::size_t tokens_in = 0;
  std::size_t tokens_out = 0;
  double elapsed_ms = 0;
  double fulfillment_ms = 0;
  Json meta = Json::object();

  void append(AgentEvent e);

  // "From->To" strings of every handoff, in order.
  std::vector<std::string> transitions() const;
  // Tool invocations, optionally restricted to fulfillment-side agents.
  std::vector<const AgentEvent*> tool_events(bool fulfillment_only = false) const;
  std::vector<std::string> tool_names(bool fulfillment_only = false) const;

  // Line 1 is {"meta": ..., "totals": ...}; every further line is an event.
  std::string to_jsonl() const;
  static Trajectory from_jsonl(std::string_view text);
};

// Tools every domain uses for intent routing and authentication.
bool is_system_tool(std::string_view name);

}  // namespace warpp
