#include "warpp/trajectory.hpp"

#include <algorithm>
#include <array>

namespace warpp {

namespace {

constexpr std::array<std::string_view, 6> kKinds = {"AgentTransition", "ToolInvocation", "Utterance",
                                                    "Handoff",         "Thought",        "Fallback"};
constexpr std::array<std::string_view, 6> kAgents = {"Orchestrator", "Authenticator", "Personalizer",
                                                     "Fulfillment",  "React",         "Client"};

template <typename E, std::size_t N>
E parse_enum(const std::array<std::string_view, N>& names, std::string_view s, const char* what) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<E>(i);
  throw SchemaError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

}  // namespace

std::string_view event_kind_name(EventKind k) { return kKinds[static_cast<std::size_t>(k)]; }
std::string_view agent_name(Agent a) { return kAgents[static_cast<std::size_t>(a)]; }
EventKind parse_event_kind(std::string_view s) { return parse_enum<EventKind>(kKinds, s, "event kind"); }
Agent parse_agent(std::string_view s) { return parse_enum<Agent>(kAgents, s, "agent"); }

bool is_system_tool(std::string_view name) {
  return name == "intent_identified" || name == "send_verification_text" || name == "code_verifier";
}

Json AgentEvent::to_json() const {
  Json j{{"kind", event_kind_name(kind)}, {"agent", agent_name(agent)}, {"at", at}};
  if (to) j["to"] = agent_name(*to);
  if (kind == EventKind::ToolInvocation) {
    j["tool"] = tool;
    j["params"] = params;
    j["outcome"] = outcome;
    j["elapsed"] = elapsed;
  }
  if (!text.empty()) j["text"] = text;
  j["tokens_in"] = tokens_in;
  j["tokens_out"] = tokens_out;
  return j;
}

AgentEvent AgentEvent::from_json(const Json& j) {
  AgentEvent e;
  e.kind = parse_event_kind(j.at("kind").get<std::string>());
  e.agent = parse_agent(j.at("agent").get<std::string>());
  if (j.contains("to")) e.to = parse_agent(j["to"].get<std::string>());
  e.tool = j.value("tool", "");
  e.params = j.value("params", Json::object());
  e.outcome = j.value("outcome", "");
  e.text = j.value("text", "");
  e.tokens_in = j.value("tokens_in", std::size_t{0});
  e.tokens_out = j.value("tokens_out", std::size_t{0});
  e.at = j.value("at", 0.0);
  e.elapsed = j.value("elapsed", 0.0);
  return e;
}

void Trajectory::append(AgentEvent e) {
  tokens_in += e.tokens_in;
  tokens_out += e.tokens_out;
  elapsed_ms = std::max(elapsed_ms, e.at + e.elapsed);
  events.push_back(std::move(e));
}

std::vector<std::string> Trajectory::transitions() const {
  std::vector<std::string> out;
  for (const auto& e : events)
    if (e.kind == EventKind::Handoff && e.to)
      out.push_back(std::string(agent_name(e.agent)) + "->" + std::string(agent_name(*e.to)));
  return out;
}

std::vector<const AgentEvent*> Trajectory::tool_events(bool fulfillment_only) const {
  std::vector<const AgentEvent*> out;
  for (const auto& e : events) {
    if (e.kind != EventKind::ToolInvocation) continue;
    if (fulfillment_only &&
        (is_system_tool(e.tool) || (e.agent != Agent::Fulfillment && e.agent != Agent::React)))
      continue;
    out.push_back(&e);
  }
  return out;
}

std::vector<std::string> Trajectory::tool_names(bool fulfillment_only) const {
  std::vector<std::string> out;
  for (const auto* e : tool_events(fulfillment_only)) out.push_back(e->tool);
  return out;
}

std::string Trajectory::to_jsonl() const {
  Json head{{"meta", meta},
            {"totals",
             {{"tokens_in", tokens_in},
              {"tokens_out", tokens_out},
              {"elapsed_ms", elapsed_ms},
              {"fulfillment_ms", fulfillment_ms}}}};
  std::string out = head.dump() + "\n";
  for (const auto& e : events) out += e.to_json().dump() + "\n";
  return out;
}

Trajectory Trajectory::from_jsonl(std::string_view text) {
  Trajectory t;
  double elapsed = 0;
  bool first = true;
  for (const auto& line : split(text, '\n')) {
    if (trim_copy(line).empty()) continue;
    Json j = Json::parse(line);
    if (first) {
      first = false;
      if (j.contains("meta")) {
        t.meta = j["meta"];
        const Json totals = j.value("totals", Json::object());
        t.fulfillment_ms = totals.value("fulfillment_ms", 0.0);
        elapsed = totals.value("elapsed_ms", 0.0);
        continue;
      }
    }
    t.append(AgentEvent::from_json(j));
  }
  t.elapsed_ms = std::max(t.elapsed_ms, elapsed);
  return t;
}

}  // namespace warpp
