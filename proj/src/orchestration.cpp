#include "warpp/orchestration.hpp"

#include "warpp/backend.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <future>

namespace warpp {

using namespace wf;

namespace {

constexpr std::array<std::string_view, 3> kModes = {"react", "noper", "warpp"};
constexpr std::array<std::string_view, 4> kStages = {"Orchestration", "AuthAndPersonalize", "Fulfillment", "Closed"};

// Standing instructions of each agent. Only their length matters to the
// engine; it is charged on every turn the agent takes.
constexpr std::string_view kOrchestratorPrompt =
    "You are the front desk of a customer service system. Greet the customer, work out which supported "
    "service they need, call intent_identified with the intent and domain, and hand the session over. "
    "If the request is not one of the supported services, politely explain which services you offer.";
constexpr std::string_view kAuthenticatorPrompt =
    "You verify the customer's identity before any account work. Ask for the mobile number on file, call "
    "send_verification_text, ask the customer to read back the code and check it with code_verifier. Allow "
    "up to two more attempts after a wrong code. If all attempts fail, offer a live agent and stop.";
constexpr std::string_view kPersonalizerPrompt =
    "You receive a workflow, its tool list and everything known about the customer. Remove every branch "
    "whose condition is already settled by the customer data, keep every branch that depends on tool "
    "results or customer replies, and return the reduced workflow and the tools it still needs.";
constexpr std::string_view kFulfillmentPrompt =
    "You complete the customer's request by following the workflow below step by step. Call tools exactly "
    "as the steps direct, ask the customer for anything the steps require, never skip a step, and close "
    "the case with complete_case when the workflow says so.";
constexpr std::string_view kReactPrompt =
    "You are a customer service agent. Think step by step before every action and keep your thoughts "
    "hidden from the customer. First work out which supported service the customer needs and call "
    "intent_identified. Then verify the customer: ask for the mobile number on file, call "
    "send_verification_text, ask for the code and check it with code_verifier, allowing up to two more "
    "attempts. Finally follow the workflow below step by step, calling tools exactly as the steps direct, "
    "and close the case with complete_case.";

std::size_t tokens(std::string_view s) { return count_tokens(s); }

std::string service_list(const Catalog& cat) {
  std::string out;
  for (const auto& e : cat.entries) {
    if (!out.empty()) out += ", ";
    std::string name = e.intent;
    std::replace(name.begin(), name.end(), '_', ' ');
    out += name;
  }
  return out;
}

void erase_path(Json& obj, std::string_view path) {
  auto parts = split(path, '.');
  Json* cur = &obj;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!cur->is_object() || !cur->contains(parts[i])) return;
    cur = &(*cur)[parts[i]];
  }
  if (cur->is_object()) cur->erase(parts.back());
}

// Attributes an agent can see before calling any info tool.
Json visible_attributes(const ClientData& c, const ToolSet& tools) {
  Json store = c.attributes;
  for (const auto& spec : tools.specs)
    if (spec.kind == ToolKind::Info)
      for (const auto& p : spec.provides) erase_path(store, p);
  store["customer_id"] = c.customer_id;
  return store;
}

Json full_attributes(const ClientData& c) {
  Json store = c.attributes;
  store["customer_id"] = c.customer_id;
  return store;
}

ToolOutcome call_tool(const ToolSet& set, std::string_view name, const Json& params, const ClientData& c,
                      std::uint64_t seed, std::map<std::string, std::size_t>& occ, const InvokeOptions& opts) {
  std::size_t n = occ[std::string(name)]++;
  return invoke(set, name, params, c, tool_seed(seed, name, n), opts);
}

struct AuthContext {
  const ToolSet* sys;
  const ClientData* record;
  ScriptedClient* client;
  std::uint64_t seed;
  int max_attempts;
  bool think;
  std::map<std::string, std::size_t>* occ;
};

AuthResult authenticate(Transcript& t, Agent agent, const AuthContext& cx) {
  AuthResult r;
  auto tool = [&](std::string_view name, const Json& params) {
    if (cx.think) t.thought(agent, "I need to call " + std::string(name) + " to verify the customer.");
    ToolOutcome out = call_tool(*cx.sys, name, params, *cx.record, cx.seed, *cx.occ, {});
    t.tool(agent, out, params);
    return out;
  };
  t.say(agent, "Before we continue I need to verify your identity. What is the mobile number on your account?");
  std::string phone = cx.client->respond("phone_number");
  t.client(phone);
  tool("send_verification_text", {{"customer_id", cx.record->customer_id}, {"phone_number", phone}});
  t.say(agent, "I have sent a verification code to that number. Please read it back to me.");
  while (r.attempts < cx.max_attempts) {
    ++r.attempts;
    std::string code = cx.client->respond("auth_code");
    t.client(code);
    ToolOutcome out = tool("code_verifier", {{"customer_id", cx.record->customer_id}, {"code", code}});
    if (out.outcome == "verified") {
      r.verified = true;
      t.say(agent, "Thank you, you are verified.");
      return r;
    }
    if (r.attempts < cx.max_attempts) t.say(agent, "That code did not match. Please try again.");
  }
  t.say(agent, "I could not verify your identity, so I am transferring you to a live agent who can help further.");
  return r;
}

struct PersonalizeOutcome {
  std::optional<TrimResult> trim;
  std::string error;
};

// Stage 2b: runs every info tool in declaration order, then trims.
PersonalizeOutcome personalize(Transcript& t, const Workflow& w, const ToolSet& tools, const ClientData& record,
                               std::uint64_t seed, const SessionConfig& cfg) {
  PersonalizeOutcome res;
  std::map<std::string, std::size_t> occ;
  ClientData c = record;
  c.info_results = Json::object();
  InvokeOptions opts{cfg.inject_failures};
  std::size_t info_tokens = 0;
  try {
    for (const auto& spec : tools.specs) {
      if (spec.kind != ToolKind::Info) continue;
      Json params = {{"customer_id", record.customer_id}};
      ToolOutcome out = call_tool(tools, spec.name, params, record, seed, occ, opts);
      t.tool(Agent::Personalizer, out, params, false);
      if (out.failed) throw Error(spec.name + " failed");
      c.info_results[spec.name] = out.payload;
      info_tokens += count_tokens(out.payload.dump());
    }
    TrimResult r = trim(w, c);
    t.advance(cfg.trim_ms);
    std::size_t in = tokens(kPersonalizerPrompt) + token_count(w) + tools.schema_tokens() + info_tokens;
    std::size_t out = token_count(r.workflow) + r.tools.size();
    t.charge(Agent::Personalizer, EventKind::AgentTransition, "personalized workflow ready", in, out);
    res.trim = std::move(r);
  } catch (const Error& e) {
    res.error = e.what();
    t.fallback(Agent::Personalizer, std::string("personalization failed, using the full workflow: ") + e.what());
  }
  return res;
}

void merge_events(Trajectory& into, const Trajectory& a, const Trajectory& b) {
  std::vector<const AgentEvent*> all;
  for (const auto& e : a.events) all.push_back(&e);
  for (const auto& e : b.events) all.push_back(&e);
  std::stable_sort(all.begin(), all.end(), [](const AgentEvent* x, const AgentEvent* y) { return x->at < y->at; });
  for (const auto* e : all) into.append(*e);
}

}  // namespace

std::string_view mode_name(Mode m) { return kModes[static_cast<std::size_t>(m)]; }

Mode parse_mode(std::string_view s) {
  for (std::size_t i = 0; i < kModes.size(); ++i)
    if (kModes[i] == s) return static_cast<Mode>(i);
  if (s == "nopersonalization" || s == "NoPersonalization") return Mode::NoPersonalization;
  throw Error("unknown mode '" + std::string(s) + "' (expected react, noper or warpp)");
}

std::string_view stage_name(Stage s) { return kStages[static_cast<std::size_t>(s)]; }

void Session::advance(Stage next) {
  if (static_cast<int>(next) <= static_cast<int>(stage))
    throw StageError("stage cannot move from " + std::string(stage_name(stage)) + " to " +
                     std::string(stage_name(next)));
  if (next == Stage::Fulfillment) {
    if (!auth || !auth->verified) throw StageError("fulfillment needs a verified customer");
    if (mode == Mode::Warpp && !trim) throw StageError("fulfillment needs the personalized workflow");
  }
  stage = next;
}

std::string session_uuid(std::uint64_t seed) {
  std::uint64_t hi = mix64(seed ^ 0x5eed5eed5eed5eedULL), lo = mix64(hi + seed);
  hi = (hi & 0xffffffffffff0fffULL) | 0x4000ULL;       // version 4
  lo = (lo & 0x3fffffffffffffffULL) | 0x8000000000000000ULL;  // variant 1
  char buf[40];
  std::snprintf(buf, sizeof buf, "%08x-%04x-%04x-%04x-%012llx", static_cast<unsigned>(hi >> 32),
                static_cast<unsigned>((hi >> 16) & 0xffff), static_cast<unsigned>(hi & 0xffff),
                static_cast<unsigned>(lo >> 48), static_cast<unsigned long long>(lo & 0xffffffffffffULL));
  return buf;
}

std::uint64_t session_seed(std::uint64_t run_seed, std::size_t profile_index) {
  return derive_seed(run_seed, "session", profile_index);
}

Session start_session(const Catalog& cat, const UserProfile& profile, Mode mode, const SessionConfig& cfg) {
  const IntentEntry& e = cat.at(profile.intent);
  cat.in_domain(e.domain);
  Session s;
  s.profile = profile;
  // Records written elsewhere may omit yes/no answers; use the schema's first choice.
  for (const auto& r : cat.schema(e).replies)
    if (!s.profile.replies.contains(r.path) && !r.choices.empty()) s.profile.replies[r.path] = r.choices.front();
  s.mode = mode;
  s.seed = cfg.seed;
  s.config = cfg;
  s.id = session_uuid(cfg.seed);
  return s;
}

void run_session(const Catalog& cat, Session& s) {
  if (s.stage != Stage::Orchestration) throw StageError("session already ran");
  const SessionConfig& cfg = s.config;
  const Mode requested = s.mode;
  const bool react = requested == Mode::React;
  ToolSet sys = system_toolset();
  apply_latency_overrides(sys, cfg.latencies);
  ScriptedClient client(s.profile);
  std::map<std::string, std::size_t> occ;

  Transcript t(0);
  t.set_turn_ms(cfg.turn_ms);
  const Agent front = react ? Agent::React : Agent::Orchestrator;
  const std::size_t intents_tokens = tokens(service_list(cat));

  auto finish = [&](std::string outcome) {
    s.outcome = std::move(outcome);
    s.stage = Stage::Closed;
    s.trajectory = std::move(t.trajectory());
    Json& m = s.trajectory.meta;
    m = {{"session_id", s.id},
         {"mode", mode_name(requested)},
         {"customer_id", s.profile.customer_id},
         {"seed", s.seed},
         {"outcome", s.outcome},
         {"engine", kEngineVersion}};
    m["intent"] = s.intent ? Json(*s.intent) : Json();
    if (s.auth) m["auth_attempts"] = s.auth->attempts;
    m["stage2_start"] = s.stage2_start;
    m["barrier_at"] = s.barrier_at;
    m["pre_fulfillment_ms"] = s.pre_fulfillment_ms();
    if (requested == Mode::Warpp) m["fallback"] = !s.trim;
    if (s.audit) m["audit"] = {{"relevance", s.audit->relevance}, {"completeness", s.audit->completeness}};
  };

  // Stage 1: intent.
  if (react) {
    t.set_context(Agent::React, 0);  // set once the workflow is known
  } else {
    t.set_context(Agent::Orchestrator, tokens(kOrchestratorPrompt) + intents_tokens +
                                           count_tokens(sys.at("intent_identified").schema_text()));
  }
  const IntentEntry* entry = nullptr;
  try {
    entry = &cat.match(s.profile.first_utterance);
  } catch (const OutOfScopeIntent&) {
  }
  Workflow w;
  ToolSet tools;
  if (entry) {
    w = cat.workflow(*entry);
    tools = cat.tools(*entry);
    apply_latency_overrides(tools, cfg.latencies);
    if (react)
      t.set_context(Agent::React, tokens(kReactPrompt) + intents_tokens + token_count(w) + tools.schema_tokens() +
                                      sys.schema_tokens());
  } else if (react) {
    t.set_context(Agent::React, tokens(kReactPrompt) + intents_tokens + sys.schema_tokens());
  }
  t.say(front, "Hello, thank you for contacting us. How can I help you today?");
  t.client(s.profile.first_utterance);
  if (!entry) {
    if (react) t.thought(front, "This request is not one of the services I support.");
    t.say(front, "I am sorry, I cannot help with that here. I can help with: " + service_list(cat) + ".");
    finish("out_of_scope");
    return;
  }
  if (react) t.thought(front, "The customer wants " + entry->id + ". I should record the intent.");
  {
    Json params = {{"intent", entry->id}, {"domain", entry->domain}};
    ToolOutcome out = call_tool(sys, "intent_identified", params, ClientData{}, s.seed, occ, {});
    t.tool(front, out, params);
  }
  s.intent = entry->id;
  s.advance(Stage::AuthAndPersonalize);
  s.stage2_start = t.now();

  ClientData record = s.profile.client_data(tools);
  AuthContext acx{&sys, &record, &client, s.seed, cfg.max_auth_attempts, react, &occ};
  const std::size_t auth_context =
      tokens(kAuthenticatorPrompt) + count_tokens(sys.at("send_verification_text").schema_text()) +
      count_tokens(sys.at("code_verifier").schema_text());

  // Stage 2: authentication, and in Warpp mode personalization beside it.
  if (requested == Mode::Warpp) {
    t.handoff(Agent::Orchestrator, Agent::Authenticator);
    t.handoff(Agent::Orchestrator, Agent::Personalizer);
    const double t0 = t.now();
    Transcript ta(t0), tp(t0);
    ta.set_turn_ms(cfg.turn_ms);
    ta.set_history(t.history());
    ta.set_context(Agent::Authenticator, auth_context);
    auto run_auth = [&]() { return authenticate(ta, Agent::Authenticator, acx); };
    auto run_trim = [&]() { return personalize(tp, w, tools, record, s.seed, cfg); };
    AuthResult ar;
    PersonalizeOutcome po;
    if (cfg.sequential_personalization) {
      ar = run_auth();
      tp.wait_until(ta.now());
      po = run_trim();
    } else {
      // The tasks share no mutable state; each result is a single-assignment slot.
      auto fa = std::async(std::launch::async, run_auth);
      auto fp = std::async(std::launch::async, run_trim);
      ar = fa.get();
      po = fp.get();
    }
    s.auth = ar;
    s.auth_done = ta.now();
    s.trim_done = tp.now();
    s.barrier_at = std::max(s.auth_done, s.trim_done);
    merge_events(t.trajectory(), ta.trajectory(), tp.trajectory());
    t.wait_until(s.barrier_at);
    t.set_history(ta.history());
    if (po.trim) {
      s.trim = std::move(po.trim);
      s.audit = audit(s.trim->workflow, w, record);
    } else {
      s.mode = Mode::NoPersonalization;
    }
  } else {
    if (!react) {
      t.handoff(Agent::Orchestrator, Agent::Authenticator);
      t.set_context(Agent::Authenticator, auth_context);
    }
    s.auth = authenticate(t, react ? Agent::React : Agent::Authenticator, acx);
    s.auth_done = t.now();
    s.barrier_at = s.auth_done;
  }
  if (!s.auth->verified) {
    finish("auth_failed");
    return;
  }

  // Stage 3: fulfillment.
  const Agent worker = react ? Agent::React : Agent::Fulfillment;
  if (!react) t.handoff(Agent::Authenticator, Agent::Fulfillment);
  s.advance(Stage::Fulfillment);
  ToolSet allowed = s.trim ? filter_tools(tools, s.trim->tools) : tools;
  ExecEnv env;
  env.workflow = s.trim ? &s.trim->workflow : &w;
  env.tools = &allowed;
  env.record = &record;
  env.store = s.trim ? full_attributes(record) : visible_attributes(record, tools);
  env.learn_from_info = !s.trim;
  env.user_info = &s.profile.user_provided_info;
  env.client = &client;
  env.seed = s.seed;
  env.invoke.inject_failures = cfg.inject_failures;
  env.occurrences = &occ;
  env.think = react;
  if (!react)
    t.set_context(Agent::Fulfillment, tokens(kFulfillmentPrompt) + token_count(*env.workflow) + allowed.schema_tokens());
  const double fulfill_start = t.now();
  ExecResult r;
  if (cfg.backend) {
    BackendRun run = drive_backend(*cfg.backend, s.id, env, t, worker);
    r.completed = run.completed;
  } else {
    r = execute(env, t, worker);
  }
  if (r.completed) t.client(client.respond("post_completion"));
  const double fulfill_end = std::max(t.now(), t.trajectory().elapsed_ms);
  finish(r.completed ? (r.errored ? "escalated" : "completed") : "incomplete");
  s.trajectory.fulfillment_ms = fulfill_end - fulfill_start;
}

Session simulate(const Catalog& cat, const UserProfile& profile, Mode mode, const SessionConfig& cfg) {
  Session s = start_session(cat, profile, mode, cfg);
  run_session(cat, s);
  return s;
}

Json GroundTruth::to_json() const {
  Json events = Json::array();
  for (const auto& e : trajectory.events) events.push_back(e.to_json());
  return {{"profile_id", profile_id},
          {"mode", mode_name(mode)},
          {"seed", seed},
          {"meta", trajectory.meta},
          {"totals",
           {{"tokens_in", trajectory.tokens_in},
            {"tokens_out", trajectory.tokens_out},
            {"elapsed_ms", trajectory.elapsed_ms},
            {"fulfillment_ms", trajectory.fulfillment_ms}}},
          {"events", events}};
}

GroundTruth GroundTruth::from_json(const Json& j) {
  GroundTruth g;
  g.profile_id = j.at("profile_id").get<std::int64_t>();
  g.mode = parse_mode(j.at("mode").get<std::string>());
  g.seed = j.at("seed").get<std::uint64_t>();
  g.trajectory.meta = j.value("meta", Json::object());
  for (const auto& e : j.at("events")) g.trajectory.append(AgentEvent::from_json(e));
  const Json totals = j.value("totals", Json::object());
  g.trajectory.fulfillment_ms = totals.value("fulfillment_ms", 0.0);
  g.trajectory.elapsed_ms = std::max(g.trajectory.elapsed_ms, totals.value("elapsed_ms", 0.0));
  return g;
}

GroundTruth generate_ground_truth(const Catalog& cat, const UserProfile& profile, Mode mode, std::uint64_t seed,
                                  SessionConfig cfg) {
  cfg.seed = seed;
  Session s = simulate(cat, profile, mode, cfg);
  GroundTruth g;
  g.profile_id = profile.customer_id;
  g.mode = mode;
  g.seed = seed;
  g.trajectory = std::move(s.trajectory);
  return g;
}

}  // namespace warpp
