#pragma once

// Session state machine: intent identification, authentication running
// alongside personalization up to a join barrier, then fulfillment by a
// deterministic reference executor. React and NoPersonalization are the two
// baseline modes.

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "warpp/catalog.hpp"
#include "warpp/datagen.hpp"
#include "warpp/personalizer.hpp"
#include "warpp/trajectory.hpp"

namespace warpp {

enum class Mode { React, NoPersonalization, Warpp };
enum class Stage { Orchestration, AuthAndPersonalize, Fulfillment, Closed };

std::string_view mode_name(Mode m);  // react, noper, warpp
Mode parse_mode(std::string_view s);
std::string_view stage_name(Stage s);

class ExecutorStuck : public Error {
 public:
  ExecutorStuck(const std::string& step, const std::string& why)
      : Error("executor stuck at step " + step + ": " + why), step_(step) {}
  const std::string& step() const { return step_; }

 private:
  std::string step_;
};

class StageError : public Error {
 public:
  using Error::Error;
};

class DialogueBackend;

struct SessionConfig {
  std::uint64_t seed = 0;
  bool inject_failures = false;
  // Runs personalization after authentication instead of alongside it.
  bool sequential_personalization = false;
  double turn_ms = 0;  // virtual cost of every agent or client turn
  double trim_ms = 0;  // virtual cost of the trim itself
  int max_auth_attempts = 3;
  // Per-tool latency overrides, applied to both domain and system tools.
  Json latencies = Json::object();
  // When set, fulfillment is delegated to this backend instead of the
  // reference executor. Not owned.
  DialogueBackend* backend = nullptr;
};

// Appends events for one logical task on its own virtual clock and charges
// tokens: input is the agent's standing context plus the dialogue so far,
// output is the emitted text.
class Transcript {
 public:
  explicit Transcript(double start = 0) : now_(start) {}

  void set_context(Agent a, std::size_t tokens) { context_[a] = tokens; }
  std::size_t context(Agent a) const;

  void say(Agent a, const std::string& text);
  void client(const std::string& text);
  void thought(Agent a, const std::string& text);
  void handoff(Agent from, Agent to);
  void tool(Agent a, const ToolOutcome& out, const Json& params, bool charged = true);
  void fallback(Agent a, const std::string& why);
  // One model turn whose input and output the caller sizes, e.g. the trim.
  void charge(Agent a, EventKind kind, const std::string& text, std::size_t in, std::size_t out);
  void advance(double ms) { now_ += ms; }
  void wait_until(double t) { now_ = std::max(now_, t); }

  double now() const { return now_; }
  std::size_t history() const { return history_; }
  void set_history(std::size_t h) { history_ = h; }
  void set_turn_ms(double ms) { turn_ms_ = ms; }

  Trajectory& trajectory() { return traj_; }
  const Trajectory& trajectory() const { return traj_; }

 private:
  AgentEvent base(EventKind k, Agent a) const;
  void push(AgentEvent e, double cost);

  Trajectory traj_;
  std::map<Agent, std::size_t> context_;
  std::size_t history_ = 0;
  double now_ = 0;
  double turn_ms_ = 0;
};

// What a fulfillment-side agent knows and may call while walking a workflow.
struct ExecEnv {
  const wf::Workflow* workflow = nullptr;
  const ToolSet* tools = nullptr;       // calls outside this set raise UnknownTool
  const ClientData* record = nullptr;   // backing data for simulated tools
  Json store = Json::object();          // attributes visible to the agent
  bool learn_from_info = false;         // merge info payloads into store
  const Json* user_info = nullptr;      // what the client can supply
  ScriptedClient* client = nullptr;
  std::uint64_t seed = 0;
  InvokeOptions invoke;
  std::map<std::string, std::size_t>* occurrences = nullptr;  // per-session call counts
  bool think = false;                   // emit hidden thoughts (React)
};

struct ExecResult {
  bool completed = false;  // reached complete_case
  bool errored = false;    // took the on_error path
  std::size_t actions = 0;
};

// Walks the workflow from its first step. Throws ExecutorStuck on an
// unresolvable argument and UnknownTool for calls outside env.tools.
ExecResult execute(ExecEnv& env, Transcript& t, Agent agent);

// Seed of the n-th call of a tool in a session; every mode derives it the
// same way so tool outcomes agree across modes.
std::uint64_t tool_seed(std::uint64_t session_seed, std::string_view tool, std::size_t occurrence);

struct AuthResult {
  bool verified = false;
  int attempts = 0;
};

struct Session {
  std::string id;  // uuid derived from the seed
  UserProfile profile;
  Mode mode = Mode::Warpp;
  Stage stage = Stage::Orchestration;
  std::optional<std::string> intent;  // registry id once identified
  std::optional<TrimResult> trim;
  Trajectory trajectory;
  std::uint64_t seed = 0;
  SessionConfig config;

  std::string outcome;            // completed, auth_failed, out_of_scope, error
  std::optional<AuthResult> auth;
  double stage2_start = 0;
  double auth_done = 0;
  double trim_done = 0;
  double barrier_at = 0;          // fulfillment may not start before this
  std::optional<AuditResult> audit;

  double pre_fulfillment_ms() const { return barrier_at - stage2_start; }
  void advance(Stage next);
};

std::string session_uuid(std::uint64_t seed);

// Looks up the profile's workflow and tools; throws for an unknown intent or
// domain.
Session start_session(const Catalog& cat, const UserProfile& profile, Mode mode, const SessionConfig& cfg);

// Runs the whole session to Closed and fills its trajectory.
void run_session(const Catalog& cat, Session& s);

// start_session + run_session.
Session simulate(const Catalog& cat, const UserProfile& profile, Mode mode, const SessionConfig& cfg);

struct GroundTruth {
  std::int64_t profile_id = 0;
  Mode mode = Mode::Warpp;
  std::uint64_t seed = 0;
  Trajectory trajectory;

  Json to_json() const;
  static GroundTruth from_json(const Json& j);
};

GroundTruth generate_ground_truth(const Catalog& cat, const UserProfile& profile, Mode mode, std::uint64_t seed,
                                  SessionConfig cfg = {});

// Seed of the i-th profile's session under a run seed. The mode is not mixed
// in, so all modes replay the same tool outcomes.
std::uint64_t session_seed(std::uint64_t run_seed, std::size_t profile_index);

}  // namespace warpp
