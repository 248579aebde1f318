#include <doctest.h>

#include <map>
#include <sstream>

#include "warpp/backend.hpp"

using namespace warpp;

namespace {

const Catalog& catalog() {
  static const Catalog c = load_catalog(default_fixture_dir());
  return c;
}

// Plays back the fulfillment side of a reference trajectory.
class ReplayBackend : public DialogueBackend {
 public:
  ReplayBackend(const Trajectory& t, const wf::Workflow& w) {
    for (const auto& e : t.events)
      if (e.agent == Agent::Fulfillment && (e.kind == EventKind::Utterance || e.kind == EventKind::ToolInvocation))
        script_.push_back(&e);
    wf::for_each_step(w.steps, [&](const wf::Step& s, std::size_t) {
      for (const auto& a : s.actions)
        if (a.kind == wf::ActionKind::Prompt) keys_[a.text] = a.key;
    });
  }

  BackendResponse complete(const BackendRequest& req) override {
    requests.push_back(req);
    REQUIRE(next_ < script_.size());
    const AgentEvent& e = *script_[next_++];
    BackendResponse r;
    if (e.kind == EventKind::Utterance) {
      r.message = e.text;
      if (keys_.count(e.text)) r.prompt_key = keys_[e.text];
    } else {
      r.tool_call = ToolCallRequest{e.tool, e.params};
    }
    return r;
  }

  std::vector<BackendRequest> requests;

 private:
  std::vector<const AgentEvent*> script_;
  std::map<std::string, std::string> keys_;
  std::size_t next_ = 0;
};

class ScriptBackend : public DialogueBackend {
 public:
  explicit ScriptBackend(std::vector<BackendResponse> r) : script_(std::move(r)) {}
  BackendResponse complete(const BackendRequest&) override {
    if (next_ < script_.size()) return script_[next_++];
    BackendResponse r;
    r.message = "still thinking";
    return r;
  }

 private:
  std::vector<BackendResponse> script_;
  std::size_t next_ = 0;
};

BackendResponse call(std::string name, Json args) {
  BackendResponse r;
  r.tool_call = ToolCallRequest{std::move(name), std::move(args)};
  return r;
}

}  // namespace

TEST_CASE("wire codecs round-trip") {
  BackendRequest req{"abc", {{"user", "hi"}, {"assistant", "hello"}}, {"f(a: string)"}, "workflow x"};
  CHECK(BackendRequest::from_json(Json::parse(req.to_json().dump())) == req);
  BackendResponse msg;
  msg.message = "What is your new address?";
  msg.prompt_key = "new_address";
  CHECK(BackendResponse::from_json(msg.to_json()) == msg);
  BackendResponse tc = call("update_address", {{"customer_id", 1}});
  CHECK(BackendResponse::from_json(tc.to_json()) == tc);
  CHECK_THROWS_AS(BackendResponse::from_json(Json::object()), SchemaError);
  CHECK_THROWS_AS(BackendResponse::from_json(Json::parse(R"({"message":"a","tool_call":{"name":"f"}})")), SchemaError);
  CHECK_THROWS_AS(BackendResponse::from_json(Json::parse(R"({"tool_call":{"name":"f","args":[1]}})")), SchemaError);
}

TEST_CASE("stream transport writes one request line and reads one response line") {
  std::istringstream in(R"({"tool_call":{"name":"complete_case","args":{"customer_id":7}}})"
                        "\n");
  std::ostringstream out;
  StreamBackend b(in, out);
  BackendRequest req{"s1", {{"user", "hello"}}, {}, ""};
  BackendResponse r = b.complete(req);
  REQUIRE(r.tool_call);
  CHECK(r.tool_call->name == "complete_case");
  CHECK(out.str() == req.to_json().dump() + "\n");
  CHECK_THROWS_AS(b.complete(req), Error);
}

TEST_CASE("replaying the reference trajectory through a backend reproduces it") {
  for (const auto& e : catalog().entries) {
    CAPTURE(e.id);
    const auto w = catalog().workflow(e);
    for (const auto& p : generate_profiles(catalog().schema(e), 5, 21)) {
      for (Mode m : {Mode::Warpp, Mode::NoPersonalization}) {
        SessionConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(p.customer_id);
        Session ref = simulate(catalog(), p, m, cfg);
        REQUIRE(ref.outcome == "completed");
        const wf::Workflow& used = ref.trim ? ref.trim->workflow : w;
        ReplayBackend backend(ref.trajectory, used);
        cfg.backend = &backend;
        Session via = simulate(catalog(), p, m, cfg);
        CHECK(via.outcome == "completed");
        CHECK(via.trajectory.to_jsonl() == ref.trajectory.to_jsonl());
        REQUIRE(!backend.requests.empty());
        CHECK(backend.requests.front().session_id == ref.id);
        CHECK(backend.requests.front().workflow == wf::serialize_workflow(used));
      }
    }
  }
}

TEST_CASE("driver reports unknown tools and bad arguments back to the agent") {
  const UserProfile p = load_profiles(default_fixture_dir() / "sample_profiles.json").front();
  ScriptBackend b({call("transfer_funds", {{"amount", 5}}), call("update_address", {{"customer_id", "x"}}),
                   call("complete_case", {{"customer_id", p.customer_id}})});
  SessionConfig cfg;
  cfg.seed = 1;
  cfg.backend = &b;
  Session s = simulate(catalog(), p, Mode::Warpp, cfg);
  CHECK(s.outcome == "completed");
  auto tools = s.trajectory.tool_events(true);
  REQUIRE(tools.size() == 3);
  CHECK(tools[0]->outcome == "unknown_tool");
  CHECK(tools[1]->outcome == "invalid_args");
  CHECK(tools[2]->tool == "complete_case");
}

TEST_CASE("driver stops at the turn limit") {
  const UserProfile p = load_profiles(default_fixture_dir() / "sample_profiles.json").front();
  ScriptBackend b({});
  SessionConfig cfg;
  cfg.backend = &b;
  Session s = simulate(catalog(), p, Mode::NoPersonalization, cfg);
  CHECK(s.outcome == "incomplete");
}
