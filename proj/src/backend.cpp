#include "warpp/backend.hpp"

#include <istream>
#include <ostream>

namespace warpp {

Json BackendRequest::to_json() const {
  Json msgs = Json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"session_id", session_id}, {"messages", msgs}, {"tools", tools}, {"workflow", workflow}};
}

BackendRequest BackendRequest::from_json(const Json& j) {
  BackendRequest r;
  r.session_id = j.at("session_id").get<std::string>();
  for (const auto& m : j.at("messages"))
    r.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
  r.tools = j.value("tools", std::vector<std::string>{});
  r.workflow = j.value("workflow", "");
  return r;
}

Json BackendResponse::to_json() const {
  Json j = Json::object();
  if (message) {
    j["message"] = *message;
    if (!prompt_key.empty()) j["prompt_key"] = prompt_key;
  }
  if (tool_call) j["tool_call"] = {{"name", tool_call->name}, {"args", tool_call->args}};
  return j;
}

BackendResponse BackendResponse::from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("backend response must be an object");
  BackendResponse r;
  if (j.contains("message")) r.message = j["message"].get<std::string>();
  r.prompt_key = j.value("prompt_key", "");
  if (j.contains("tool_call")) {
    const Json& c = j["tool_call"];
    r.tool_call = ToolCallRequest{c.at("name").get<std::string>(), c.value("args", Json::object())};
    if (!r.tool_call->args.is_object()) throw SchemaError("tool_call args must be an object");
  }
  if (r.message.has_value() == r.tool_call.has_value())
    throw SchemaError("backend response needs exactly one of message or tool_call");
  return r;
}

BackendResponse StreamBackend::complete(const BackendRequest& req) {
  out_ << req.to_json().dump() << '\n';
  out_.flush();
  std::string line;
  if (!std::getline(in_, line)) throw Error("backend closed the stream");
  return BackendResponse::from_json(Json::parse(line));
}

BackendRun drive_backend(DialogueBackend& backend, const std::string& session_id, ExecEnv& env, Transcript& t,
                         Agent agent, const BackendLimits& limits) {
  if (!env.workflow || !env.tools || !env.record || !env.client || !env.occurrences)
    throw Error("drive_backend: environment is incomplete");
  BackendRequest req;
  req.session_id = session_id;
  req.workflow = wf::serialize_workflow(*env.workflow);
  for (const auto& spec : env.tools->specs) req.tools.push_back(spec.schema_text());
  BackendRun run;
  while (run.turns < limits.max_turns) {
    ++run.turns;
    BackendResponse resp = backend.complete(req);
    if (resp.message) {
      t.say(agent, *resp.message);
      req.messages.push_back({"assistant", *resp.message});
      if (!resp.prompt_key.empty()) {
        std::string reply = env.client->respond(resp.prompt_key);
        t.client(reply);
        req.messages.push_back({"user", reply});
      }
      continue;
    }
    const ToolCallRequest& call = *resp.tool_call;
    if (!env.tools->find(call.name)) {
      ++run.rejected_calls;
      ToolOutcome miss{call.name, "unknown_tool", {{"outcome", "unknown_tool"}}, 0, true};
      t.tool(agent, miss, call.args);
      req.messages.push_back({"tool", "error: no tool named " + call.name});
      continue;
    }
    std::size_t n = (*env.occurrences)[call.name]++;
    ToolOutcome out;
    try {
      out = invoke(*env.tools, call.name, call.args, *env.record, tool_seed(env.seed, call.name, n), env.invoke);
    } catch (const Error& e) {
      // Bad arguments go back to the agent as an observation.
      out = ToolOutcome{call.name, "invalid_args", {{"outcome", "invalid_args"}, {"error", e.what()}}, 0, true};
    }
    t.tool(agent, out, call.args);
    req.messages.push_back({"tool", out.payload.dump()});
    if (call.name == wf::kTerminalTool && !out.failed) {
      run.completed = true;
      break;
    }
  }
  return run;
}

}  // namespace warpp
