#include <algorithm>

#include "warpp/orchestration.hpp"

namespace warpp {

using namespace wf;

namespace {

// What the model would emit to request the call, e.g. "f(a=1, b=\"x\")".
std::string call_text(const std::string& tool, const Json& params) {
  std::string out = tool + "(";
  bool first = true;
  for (const auto& [k, v] : params.items()) {
    if (!first) out += ", ";
    first = false;
    out += k + "=" + v.dump();
  }
  return out + ")";
}

}  // namespace

std::size_t Transcript::context(Agent a) const {
  auto it = context_.find(a);
  return it == context_.end() ? 0 : it->second;
}

AgentEvent Transcript::base(EventKind k, Agent a) const {
  AgentEvent e;
  e.kind = k;
  e.agent = a;
  e.at = now_;
  return e;
}

void Transcript::push(AgentEvent e, double cost) {
  traj_.append(std::move(e));
  now_ += cost;
}

void Transcript::say(Agent a, const std::string& text) {
  AgentEvent e = base(EventKind::Utterance, a);
  e.text = text;
  e.tokens_in = context(a) + history_;
  e.tokens_out = count_tokens(text);
  history_ += e.tokens_out;
  push(std::move(e), turn_ms_);
}

void Transcript::client(const std::string& text) {
  AgentEvent e = base(EventKind::Utterance, Agent::Client);
  e.text = text;
  history_ += count_tokens(text);
  push(std::move(e), turn_ms_);
}

void Transcript::thought(Agent a, const std::string& text) {
  AgentEvent e = base(EventKind::Thought, a);
  e.text = text;
  e.tokens_in = context(a) + history_;
  e.tokens_out = count_tokens(text);
  history_ += e.tokens_out;
  push(std::move(e), turn_ms_);
}

void Transcript::handoff(Agent from, Agent to) {
  AgentEvent e = base(EventKind::Handoff, from);
  e.to = to;
  e.text = "transfer to " + std::string(agent_name(to));
  e.tokens_in = context(from) + history_;
  e.tokens_out = count_tokens(e.text);
  push(std::move(e), 0);
}

void Transcript::tool(Agent a, const ToolOutcome& out, const Json& params, bool charged) {
  AgentEvent e = base(EventKind::ToolInvocation, a);
  e.tool = out.tool;
  e.params = params;
  e.outcome = out.outcome;
  e.elapsed = out.elapsed_ms;
  if (charged) {
    e.tokens_in = context(a) + history_;
    e.tokens_out = count_tokens(call_text(out.tool, params));
    history_ += e.tokens_out + count_tokens(out.payload.dump());
  }
  push(std::move(e), out.elapsed_ms + (charged ? turn_ms_ : 0));
}

void Transcript::fallback(Agent a, const std::string& why) {
  AgentEvent e = base(EventKind::Fallback, a);
  e.text = why;
  push(std::move(e), 0);
}

void Transcript::charge(Agent a, EventKind kind, const std::string& text, std::size_t in, std::size_t out) {
  AgentEvent e = base(kind, a);
  e.text = text;
  e.tokens_in = in;
  e.tokens_out = out;
  push(std::move(e), turn_ms_);
}

std::uint64_t tool_seed(std::uint64_t session_seed, std::string_view tool, std::size_t occurrence) {
  return derive_seed(session_seed, "tool:" + std::string(tool), occurrence);
}

namespace {

constexpr std::size_t kActionBudget = 10'000;

class Walker {
 public:
  Walker(ExecEnv& env, Transcript& t, Agent agent) : env_(env), t_(t), agent_(agent) {}

  ExecResult run() {
    const auto& steps = env_.workflow->steps;
    std::size_t i = 0;
    while (i < steps.size()) {
      if (steps[i].on_error) {
        ++i;
        continue;
      }
      Flow f = step(steps[i]);
      if (f == Flow::Done) break;
      if (f == Flow::Error) {
        handle_error(steps[i]);
        break;
      }
      if (f == Flow::Goto) {
        auto at = top_index(*env_.workflow, target_);
        if (!at) throw ExecutorStuck(label_str(steps[i].id), "no step " + label_str(target_));
        i = *at;
        continue;
      }
      ++i;
    }
    return res_;
  }

 private:
  enum class Flow { Next, Goto, Done, Error };

  void handle_error(const Step& at) {
    res_.errored = true;
    const auto& steps = env_.workflow->steps;
    auto it = std::find_if(steps.begin(), steps.end(), [](const Step& s) { return s.on_error; });
    if (it == steps.end()) throw ExecutorStuck(label_str(at.id), "tool failed and there is no error handler");
    in_error_ = true;
    step(*it);
  }

  Flow step(const Step& s) {
    for (const auto& a : s.actions) {
      if (++res_.actions > kActionBudget) throw ExecutorStuck(label_str(s.id), "action budget exhausted");
      switch (a.kind) {
        case ActionKind::Say: t_.say(agent_, a.text); break;
        case ActionKind::Prompt: ask(a.key, a.text); break;
        case ActionKind::Goto: target_ = a.target; return Flow::Goto;
        case ActionKind::ToolCall:
        case ActionKind::Terminal: {
          Flow f = call(s, a);
          if (f != Flow::Next) return f;
          break;
        }
      }
    }
    for (const auto& b : s.branches) {
      if (env_.think) t_.thought(agent_, "Step " + label_str(s.id) + ": checking whether " + b.condition.text() + ".");
      if (!holds(b.condition)) continue;
      for (const auto& sub : b.body) {
        Flow f = step(sub);
        if (f != Flow::Next) return f;
      }
      break;
    }
    return Flow::Next;
  }

  void ask(const std::string& key, const std::string& text) {
    t_.say(agent_, text);
    std::string reply = env_.client->respond(key);
    t_.client(reply);
    replies_[key] = reply;
  }

  Flow call(const Step& s, const Action& a) {
    Json params = Json::object();
    for (const auto& arg : a.args) params[arg.name] = resolve(s, arg.expr);
    if (env_.think) t_.thought(agent_, "Step " + label_str(s.id) + " calls for " + a.tool + ".");
    std::size_t n = (*env_.occurrences)[a.tool]++;
    ToolOutcome out = invoke(*env_.tools, a.tool, params, *env_.record, tool_seed(env_.seed, a.tool, n), env_.invoke);
    t_.tool(agent_, out, params);
    outcomes_[a.tool] = out.outcome;
    if (out.failed) {
      if (in_error_) return Flow::Done;
      return handles_failure(s, a.tool) ? Flow::Next : Flow::Error;
    }
    if (!a.bind.empty()) vars_[a.bind] = out.payload.contains("value") ? out.payload["value"] : out.payload;
    if (env_.learn_from_info && is_info_tool_name(a.tool)) {
      const Json flat = flatten(out.payload);
      for (const auto& [k, v] : flat.items())
        if (k != "outcome") set_path(env_.store, k, v);
    }
    if (a.kind == ActionKind::Terminal) {
      res_.completed = true;
      return Flow::Done;
    }
    return Flow::Next;
  }

  // A failure is handled in place when the step branches on it explicitly.
  static bool handles_failure(const Step& s, const std::string& tool) {
    return std::any_of(s.branches.begin(), s.branches.end(), [&](const Branch& b) {
      return b.condition.kind == CondKind::ToolOutcome && b.condition.subject == tool &&
             outcome_condition_holds(b.condition, "api_failure");
    });
  }

  Json resolve(const Step& s, const ArgExpr& e) {
    switch (e.kind) {
      case ArgExpr::Kind::Literal: return e.literal;
      case ArgExpr::Kind::Attribute: {
        const Json* v = find_path(env_.store, e.path);
        if (!v) throw ExecutorStuck(label_str(s.id), "attribute '" + e.path + "' is not known");
        return *v;
      }
      case ArgExpr::Kind::UserInfo: {
        const Json* v = env_.user_info ? find_path(*env_.user_info, e.path) : nullptr;
        if (!v) throw ExecutorStuck(label_str(s.id), "client never provided '" + e.path + "'");
        return *v;
      }
      case ArgExpr::Kind::ToolOutput: {
        auto it = vars_.find(e.path);
        if (it == vars_.end()) throw ExecutorStuck(label_str(s.id), "no tool output bound to '" + e.path + "'");
        return *it;
      }
    }
    return {};
  }

  bool holds(const Condition& c) {
    switch (c.kind) {
      case CondKind::ToolOutcome: {
        auto it = outcomes_.find(c.subject);
        return it != outcomes_.end() && outcome_condition_holds(c, it->second);
      }
      case CondKind::UserReply: {
        auto it = replies_.find(c.subject);
        if (it == replies_.end()) {
          std::string reply = env_.client->respond(c.subject);
          t_.client(reply);
          it = replies_.emplace(c.subject, reply).first;
        }
        return reply_condition_holds(c, normalize_reply(it->second));
      }
      default: {
        const Json* v = find_path(env_.store, c.subject);
        return attr_condition_holds(c, v ? *v : Json());
      }
    }
  }

  ExecEnv& env_;
  Transcript& t_;
  Agent agent_;
  ExecResult res_;
  Label target_;
  bool in_error_ = false;
  std::map<std::string, std::string> outcomes_;
  std::map<std::string, std::string> replies_;
  Json vars_ = Json::object();
};

}  // namespace

ExecResult execute(ExecEnv& env, Transcript& t, Agent agent) {
  if (!env.workflow || !env.tools || !env.record || !env.client || !env.occurrences)
    throw Error("execute: environment is incomplete");
  return Walker(env, t, agent).run();
}

}  // namespace warpp
