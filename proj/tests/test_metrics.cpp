#include <doctest.h>

#include <random>

#include "metrics_oracle.hpp"
#include "warpp/metrics.hpp"
#include "warpp/orchestration.hpp"

using namespace warpp;

namespace {

AgentEvent tool_ev(const std::string& name, Json params = Json::object(), Agent a = Agent::Fulfillment) {
  AgentEvent e;
  e.kind = EventKind::ToolInvocation;
  e.agent = a;
  e.tool = name;
  e.params = std::move(params);
  e.outcome = "ok";
  return e;
}

AgentEvent hand(Agent from, Agent to) {
  AgentEvent e;
  e.kind = EventKind::Handoff;
  e.agent = from;
  e.to = to;
  return e;
}

Trajectory traj(std::vector<AgentEvent> evs) {
  Trajectory t;
  for (auto& e : evs) t.append(std::move(e));
  return t;
}

Trajectory tools_only(const std::vector<std::string>& names) {
  Trajectory t;
  for (const auto& n : names) t.append(tool_ev(n));
  return t;
}

const Catalog& catalog() {
  static const Catalog c = load_catalog(default_fixture_dir());
  return c;
}

// Reference trajectories for a handful of profiles in every mode.
const std::vector<Trajectory>& corpus() {
  static const std::vector<Trajectory> all = [] {
    std::vector<Trajectory> out;
    for (const auto& e : catalog().entries) {
      auto ps = generate_profiles(catalog().schema(e), 6, 17);
      for (std::size_t i = 0; i < ps.size(); ++i)
        for (Mode m : {Mode::React, Mode::NoPersonalization, Mode::Warpp}) {
          SessionConfig cfg;
          cfg.seed = session_seed(17, i);
          out.push_back(simulate(catalog(), ps[i], m, cfg).trajectory);
        }
    }
    return out;
  }();
  return all;
}

}  // namespace

TEST_CASE("lcs examples") {
  CHECK(lcs_percent({"a", "b", "c"}, {"a", "c"}) == 100.0);
  CHECK(lcs_percent({}, {"a"}) == 0.0);
  CHECK(lcs_percent({"b", "a"}, {"a", "b"}) == 50.0);
  CHECK(lcs_percent({"x"}, {}) == 100.0);
  CHECK(lcs_length({"a", "a", "b"}, {"a", "b", "a"}) == 2);
}

TEST_CASE("dynamic program agrees with exhaustive enumeration") {
  std::mt19937_64 rng(1234);
  const std::vector<std::string> alphabet = {"a", "b", "c", "d"};
  for (int k = 0; k < 3000; ++k) {
    std::vector<std::string> a, b;
    auto la = rng() % 9, lb = rng() % 9;
    std::size_t sigma = 1 + rng() % alphabet.size();
    for (std::size_t i = 0; i < la; ++i) a.push_back(alphabet[rng() % sigma]);
    for (std::size_t i = 0; i < lb; ++i) b.push_back(alphabet[rng() % sigma]);
    REQUIRE(lcs_length(a, b) == oracle::lcs_exhaustive(a, b));
    REQUIRE(lcs_length(a, b) == lcs_length(b, a));
  }
}

TEST_CASE("exact match") {
  auto gt = traj({hand(Agent::Orchestrator, Agent::Authenticator), tool_ev("a"), hand(Agent::Authenticator, Agent::Fulfillment),
                  tool_ev("b")});
  CHECK(exact_match(gt, gt));
  auto extra = gt;
  extra.append(tool_ev("c"));
  CHECK(!exact_match(extra, gt));
  auto reordered = traj({tool_ev("a"), hand(Agent::Orchestrator, Agent::Authenticator),
                         hand(Agent::Authenticator, Agent::Fulfillment), tool_ev("b")});
  CHECK(!exact_match(reordered, gt));
  // Parameters are not compared.
  auto other_params = traj({hand(Agent::Orchestrator, Agent::Authenticator), tool_ev("a", {{"x", 1}}),
                            hand(Agent::Authenticator, Agent::Fulfillment), tool_ev("b")});
  CHECK(exact_match(other_params, gt));
}

TEST_CASE("agent match") {
  auto oa = hand(Agent::Orchestrator, Agent::Authenticator), af = hand(Agent::Authenticator, Agent::Fulfillment);
  auto gt = traj({oa, af});
  auto same = agent_match(gt, gt);
  CHECK(same.ordered == 100);
  CHECK(same.any == 100);
  auto half = agent_match(traj({oa}), gt);
  CHECK(half.ordered == 50);
  CHECK(half.any == 50);
  auto rev = agent_match(traj({af, oa}), gt);
  CHECK(rev.ordered < rev.any);
  CHECK(rev.any == 100);
  auto none = agent_match(traj({oa}), Trajectory{});
  CHECK(none.ordered == 100);
}

TEST_CASE("tool precision and recall") {
  auto r = prf({"a", "b"}, {"a", "c"});
  CHECK(r.precision == 50);
  CHECK(r.recall == 50);
  CHECK(r.f1 == 50);
  r = prf({"a", "b"}, {"a", "b"});
  CHECK(r.f1 == 100);
  r = prf({}, {"a"});
  CHECK(r.precision == 0);
  CHECK(r.recall == 0);
  CHECK(r.f1 == 0);
  r = prf({"a"}, {});
  CHECK(r.precision == 0);
  CHECK(r.recall == 100);
  CHECK(r.f1 == 0);
  r = prf({}, {});
  CHECK(r.f1 == 100);
  r = prf({"a", "a", "b"}, {"a", "b", "b"});
  CHECK(r.precision == doctest::Approx(200.0 / 3));
  CHECK(r.recall == doctest::Approx(200.0 / 3));

  auto gt = traj({tool_ev("intent_identified", {}, Agent::Orchestrator), tool_ev("code_verifier", {}, Agent::Authenticator),
                  tool_ev("x"), tool_ev("y")});
  auto pred = traj({tool_ev("intent_identified", {}, Agent::Orchestrator), tool_ev("x")});
  CHECK(tool_prf(pred, gt, Scope::Fulfillment).recall == 50);
  CHECK(tool_prf(pred, gt, Scope::Overall).recall == 50);
  CHECK(tool_prf(pred, gt, Scope::Fulfillment).precision == 100);
}

TEST_CASE("param match") {
  Json addr = {{"street", "742 Evergreen Terrace"},
               {"city", "Greenville"},
               {"state", "NC"},
               {"zip_code", "28202"},
               {"country", "USA"}};
  auto gt = traj({tool_ev("update_address", addr)});
  CHECK(param_match(gt, gt) == 100);
  Json wrong = addr;
  wrong["city"] = "Madison";
  wrong["extra"] = 1;
  CHECK(param_match(traj({tool_ev("update_address", wrong)}), gt) == doctest::Approx(80));
  CHECK(param_match(Trajectory{}, gt) == 0);
  CHECK(param_match(Trajectory{}, Trajectory{}) == 100);
  // Greedy in-order alignment by name; nested values are flattened.
  auto g2 = traj({tool_ev("f", {{"a", 1}}), tool_ev("f", {{"a", 2}}), tool_ev("g", {{"n", {{"x", 1}, {"y", 2}}}})});
  auto p2 = traj({tool_ev("g", {{"n", {{"y", 2}, {"x", 0}}}}), tool_ev("f", {{"a", 1}}), tool_ev("f", {{"a", 3}})});
  CHECK(param_match(p2, g2) == doctest::Approx(50));
  // Key order never matters.
  CHECK(param_match(traj({tool_ev("update_address", Json::parse(R"({"country":"USA","zip_code":"28202","state":"NC",
      "city":"Greenville","street":"742 Evergreen Terrace"})"))}), gt) == 100);
}

TEST_CASE("perturbation spec parsing") {
  auto s = PerturbSpec::parse("drop=0.1, swap_adjacent=0.5,corrupt=0,hallucinate=1");
  CHECK(s.drop_tool == 0.1);
  CHECK(s.swap_adjacent == 0.5);
  CHECK(s.hallucinate_tool == 1);
  CHECK(PerturbSpec::parse(s.to_string()).to_string() == s.to_string());
  CHECK(PerturbSpec::parse("").identity());
  CHECK_THROWS_AS(PerturbSpec::parse("drop=2"), Error);
  CHECK_THROWS_AS(PerturbSpec::parse("drop"), Error);
  CHECK_THROWS_AS(PerturbSpec::parse("shuffle=0.1"), Error);
  CHECK_THROWS_AS(PerturbSpec::parse("drop=abc"), Error);
}

TEST_CASE("perturbation harness") {
  const auto& gt = corpus().front();
  SUBCASE("identity") {
    auto p = perturb(gt, {}, 5);
    CHECK(p.to_jsonl() == gt.to_jsonl());
  }
  SUBCASE("drop everything") {
    auto p = perturb(tools_only({"a", "b", "c"}), {1, 0, 0, 0}, 5);
    CHECK(p.tool_names().empty());
    CHECK(tool_prf(p, tools_only({"a", "b", "c"})).recall == 0);
  }
  SUBCASE("swap only separates the metrics") {
    std::size_t swappable = 0;
    for (const auto& t : corpus()) {
      auto p = perturb(t, {0, 1, 0, 0}, 11);
      CHECK(tool_prf(p, t).f1 == 100);
      CHECK(tool_prf(p, t, Scope::Fulfillment).f1 == 100);
      const auto ev = t.tool_events();
      bool can_swap = false;
      for (std::size_t i = 0; i + 1 < ev.size(); ++i)
        can_swap = can_swap || (ev[i]->agent == ev[i + 1]->agent && ev[i]->tool != ev[i + 1]->tool);
      if (!can_swap) {
        CHECK(exact_match(p, t));
        continue;
      }
      ++swappable;
      CHECK(exact_match(p, t) == false);
      CHECK(lcs_tools(p, t) < 100);
    }
    CHECK(swappable > corpus().size() / 2);
  }
  SUBCASE("hallucinations lower precision only") {
    auto p = perturb(gt, {0, 0, 0, 1}, 3);
    auto r = tool_prf(p, gt);
    CHECK(r.recall == 100);
    CHECK(r.precision == doctest::Approx(50));
  }
  SUBCASE("corruption only touches params") {
    auto p = perturb(gt, {0, 0, 1, 0}, 3);
    CHECK(exact_match(p, gt));
    CHECK(param_match(p, gt) < 100);
  }
  SUBCASE("seeded") {
    PerturbSpec s{0.3, 0.3, 0.3, 0.3};
    CHECK(perturb(gt, s, 9).to_jsonl() == perturb(gt, s, 9).to_jsonl());
  }
}

TEST_CASE("recall falls as the drop rate rises") {
  const auto& gt = corpus()[4];
  double prev = 101;
  for (double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    double sum = 0;
    for (std::uint64_t seed = 0; seed < 500; ++seed) sum += tool_prf(perturb(gt, {p, 0, 0, 0}, seed), gt).recall;
    double avg = sum / 500;
    CHECK(avg < prev);
    prev = avg;
  }
  CHECK(prev == 0);
}

TEST_CASE("metric identities on perturbed trajectories") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 0.6);
  int exact_cases = 0;
  for (int k = 0; k < 2000; ++k) {
    const auto& gt = corpus()[static_cast<std::size_t>(k) % corpus().size()];
    PerturbSpec s{u(rng), u(rng), u(rng), u(rng)};
    if (k % 5 == 0) s = {};
    auto p = perturb(gt, s, static_cast<std::uint64_t>(k));
    auto m = score_run(p, gt, "i", "m");
    if (m.exact == 1) {
      ++exact_cases;
      CHECK(m.lcs == 100);
      CHECK(m.tools.f1 == 100);
      CHECK(m.fulfill.f1 == 100);
      CHECK(m.agent.ordered == 100);
      CHECK(m.agent.any == 100);
    }
    CHECK(m.lcs <= m.tools.recall + 1e-9);
    CHECK(m.tools.recall <= 100);
    CHECK(m.agent.ordered <= m.agent.any + 1e-9);
    for (double v : {m.lcs, m.tools.precision, m.tools.recall, m.tools.f1, m.fulfill.f1, m.params, m.agent.any}) {
      CHECK(v >= 0);
      CHECK(v <= 100);
    }
    if (m.tools.precision + m.tools.recall > 0)
      CHECK(m.tools.f1 == doctest::Approx(2 * m.tools.precision * m.tools.recall / (m.tools.precision + m.tools.recall)));
  }
  CHECK(exact_cases >= 400);
}

TEST_CASE("metrics ignore ids and timestamps") {
  const auto& gt = corpus()[7];
  Trajectory moved = gt;
  moved.meta["session_id"] = "other";
  for (auto& e : moved.events) e.at += 1000;
  auto a = score_run(moved, gt, "i", "m");
  CHECK(a.exact == 1);
  CHECK(a.params == 100);
  CHECK(a.lcs == 100);
}

TEST_CASE("aggregation and emission") {
  RunMetrics one;
  one.intent = "updateAddress";
  one.mode = "warpp";
  one.exact = 1;
  one.lcs = 100;
  one.tokens = 123.456;
  one.relevance = 5;
  one.completeness = 4;
  RunMetrics two = one;
  two.exact = 0;
  two.completeness = 5;
  auto rows = aggregate({one});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].values[0] == 1.0);
  CHECK(rows[0].values[5] == doctest::Approx(123.456));
  rows = aggregate({one, two});
  CHECK(rows[0].n == 2);
  CHECK(rows[0].values[0] == 0.5);
  CHECK(*rows[0].values[16] == 4.5);
  CHECK(*rows[0].values[17] == 0.5);
  RunMetrics react = one;
  react.mode = "react";
  react.relevance.reset();
  react.completeness.reset();
  rows = aggregate({one, react});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mode == "react");
  CHECK(!rows[0].values[14]);
  CHECK_THROWS_AS(aggregate({}), Error);

  Json meta = {{"seed", 7}, {"engine", "x"}};
  std::string csv = report_csv(rows, meta);
  CHECK(csv.rfind("# engine=x;seed=7\nIntent,Mode,N,Exact Match,LCS Tools,Tool F1,Fulfill Tool F1,Param Match (%),Token Usage", 0) == 0);
  CHECK(csv.find("updateAddress,warpp,1,1.00,100.00,") != std::string::npos);
  CHECK(csv.find("123.46") != std::string::npos);
  Json j = report_json(rows, meta);
  CHECK(j["rows"][1]["Token Usage"] == 123.46);
  CHECK(j["rows"][0]["Rel. Avg"].is_null());
  CHECK(j["columns"].size() == report_columns().size());
}

TEST_CASE("reference runs score perfectly against themselves") {
  for (const auto& t : corpus()) {
    auto m = score_run(t, t, "i", "m");
    CHECK(m.exact == 1);
    CHECK(m.params == 100);
    CHECK(m.fulfill.f1 == 100);
  }
}
