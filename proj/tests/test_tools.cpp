#include <doctest.h>

#include <fstream>

#include "warpp/tools.hpp"
#include "warpp/workflow.hpp"

using namespace warpp;

namespace {

ToolSet fixture_set(const std::string& rel) { return load_toolset(std::string(WARPP_FIXTURE_DIR) + "/" + rel); }

ClientData k_profile() {
  return ClientData::from_json(Json::parse(R"({
    "customer_id": 57742542,
    "attributes": {"account_type": "ROTH_IRA", "client_level": "PREMIUM", "account_balance": 38985},
    "secrets": {"authenticator_code": 984264}
  })"));
}

Json exec_manifest(double failure_rate) {
  return Json{{"domain", "t"},
              {"intent", "t"},
              {"tools", {{{"name", "op"}, {"kind", "exec"}, {"outcomes", {"a", "b"}}, {"failure_rate", failure_rate},
                          {"params", {{{"name", "n"}, {"type", "integer"}}}}}}}};
}

}  // namespace

TEST_CASE("fixture manifests match the published tool counts") {
  struct Row {
    const char* file;
    std::size_t info, exec;
  };
  const Row rows[] = {{"banking/update_address.tools.json", 1, 4},
                      {"banking/withdraw_retirement_funds.tools.json", 1, 2},
                      {"flights/book_flight.tools.json", 3, 6},
                      {"flights/cancel_flight.tools.json", 2, 6},
                      {"hospital/process_payment.tools.json", 4, 15}};
  for (const auto& r : rows) {
    CAPTURE(r.file);
    auto set = fixture_set(r.file);
    CHECK(set.count(ToolKind::Info) == r.info);
    CHECK(set.count(ToolKind::Exec) == r.exec);
    for (const auto& s : set.specs) CHECK((s.kind == ToolKind::Info) == is_info_tool_name(s.name));
  }
}

TEST_CASE("manifest validation") {
  Json dup = exec_manifest(0);
  dup["tools"].push_back(dup["tools"][0]);
  CHECK_THROWS_AS(parse_toolset(dup), SchemaError);

  Json bad_suffix = exec_manifest(0);
  bad_suffix["tools"][0]["name"] = "op_extra";
  CHECK_THROWS_AS(parse_toolset(bad_suffix), SchemaError);

  Json weights = exec_manifest(0);
  weights["tools"][0]["weights"] = {0.5, 0.4};
  CHECK_THROWS_AS(parse_toolset(weights), SchemaError);

  Json rate = exec_manifest(1.5);
  CHECK_THROWS_AS(parse_toolset(rate), SchemaError);

  CHECK_THROWS_AS(parse_toolset(Json::object()), SchemaError);
}

TEST_CASE("manifest JSON round trip") {
  auto set = fixture_set("hospital/process_payment.tools.json");
  auto again = parse_toolset(toolset_to_json(set));
  CHECK(toolset_to_json(again) == toolset_to_json(set));
}

TEST_CASE("info tool returns the client field") {
  auto set = fixture_set("banking/update_address.tools.json");
  auto c = k_profile();
  auto out = invoke(set, "get_account_type_extra", {{"customer_id", 57742542}}, c, 7);
  CHECK(out.outcome == "ok");
  CHECK(out.payload["account_type"] == "ROTH_IRA");
  CHECK_FALSE(out.failed);
}

TEST_CASE("argument checking") {
  auto set = fixture_set("banking/update_address.tools.json");
  auto c = k_profile();
  CHECK_THROWS_AS(invoke(set, "nope", Json::object(), c, 1), UnknownTool);
  CHECK_THROWS_AS(invoke(set, "apply_address_hold", Json::object(), c, 1), MissingArg);
  CHECK_THROWS_AS(invoke(set, "apply_address_hold", {{"customer_id", "x"}}, c, 1), TypeMismatch);
  CHECK_THROWS_AS(invoke(set, "apply_address_hold", {{"customer_id", 1}, {"extra", 2}}, c, 1), TypeMismatch);
}

TEST_CASE("exec tools are deterministic in the seed") {
  auto set = fixture_set("hospital/process_payment.tools.json");
  auto c = k_profile();
  Json args{{"customer_id", 1}, {"insurance_provider", "Aetna"}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto a = invoke(set, "calculate_patient_responsibility", args, c, seed);
    auto b = invoke(set, "calculate_patient_responsibility", args, c, seed);
    CHECK(a.payload == b.payload);
    CHECK(a.elapsed_ms == b.elapsed_ms);
    CHECK(a.elapsed_ms >= 50);
    CHECK(a.elapsed_ms <= 200);
    CHECK(a.payload["value"].is_number());
  }
}

TEST_CASE("zero failure rate never fails") {
  auto set = parse_toolset(exec_manifest(0));
  InvokeOptions on{true};
  for (std::uint64_t seed = 0; seed < 1000; ++seed) CHECK_FALSE(invoke(set, "op", {{"n", 1}}, {}, seed, on).failed);
}

TEST_CASE("seeded failure fraction") {
  auto set = parse_toolset(exec_manifest(0.5));
  InvokeOptions on{true};
  int failed = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    auto out = invoke(set, "op", {{"n", 1}}, {}, derive_seed(42, "op", i), on);
    if (out.failed) {
      ++failed;
      CHECK(out.outcome == "api_failure");
    }
  }
  CHECK(std::abs(failed / 1000.0 - 0.5) <= 0.05);
  // Failures are opt-in.
  for (std::uint64_t i = 0; i < 100; ++i) CHECK_FALSE(invoke(set, "op", {{"n", 1}}, {}, i).failed);
}

TEST_CASE("outcome weights are respected") {
  auto set = fixture_set("hospital/process_payment.tools.json");
  int flagged = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    auto out = invoke(set, "run_fraud_check", {{"customer_id", 1}, {"amount", 10.0}}, {}, derive_seed(9, "f", i));
    flagged += out.outcome == "flagged";
  }
  CHECK(std::abs(flagged / double(n) - 0.07) < 0.02);
}

TEST_CASE("code verifier compares against the stored code") {
  auto sys = system_toolset();
  auto c = k_profile();
  CHECK(invoke(sys, "code_verifier", {{"customer_id", 1}, {"code", "984264"}}, c, 1).outcome == "verified");
  CHECK(invoke(sys, "code_verifier", {{"customer_id", 1}, {"code", 984264}}, c, 1).outcome == "verified");
  CHECK(invoke(sys, "code_verifier", {{"customer_id", 1}, {"code", "111111"}}, c, 1).outcome == "rejected");
}

TEST_CASE("filter_tools") {
  auto set = fixture_set("flights/book_flight.tools.json");
  CHECK(filter_tools(set, {}).specs.empty());
  auto all = filter_tools(set, set.names());
  CHECK(toolset_to_json(all) == toolset_to_json(set));
  auto some = filter_tools(set, {"create_booking", "complete_case"});
  CHECK(some.names() == std::set<std::string>{"create_booking", "complete_case"});
  CHECK_THROWS_AS(filter_tools(set, {"missing"}), UnknownTool);
}

TEST_CASE("every fixture call resolves against its manifest") {
  const char* pairs[][2] = {{"banking/update_address", ""},
                            {"banking/withdraw_retirement_funds", ""},
                            {"flights/book_flight", ""},
                            {"flights/cancel_flight", ""},
                            {"hospital/process_payment", ""}};
  for (auto& p : pairs) {
    std::string base = std::string(WARPP_FIXTURE_DIR) + "/" + p[0];
    auto set = load_toolset(base + ".tools.json");
    auto names = set.names();
    std::ifstream in(base + ".wf");
    std::string text((std::istreambuf_iterator<char>(in)), {});
    wf::ValidateOptions o;
    o.tools = &names;
    auto w = wf::parse_workflow(text, o);
    // Every declared tool is used by the workflow.
    CHECK(wf::referenced_tools(w) == names);
    // Argument names match declared parameters.
    wf::for_each_step(w.steps, [&](const wf::Step& s, std::size_t) {
      for (const auto& a : s.actions) {
        if (!a.is_call()) continue;
        const auto& spec = set.at(a.tool);
        for (const auto& arg : a.args) {
          bool ok = std::any_of(spec.params.begin(), spec.params.end(),
                                [&](const ParamSpec& ps) { return ps.name == arg.name; });
          CHECK_MESSAGE(ok, a.tool << "." << arg.name);
        }
        for (const auto& ps : spec.params) {
          bool given = std::any_of(a.args.begin(), a.args.end(), [&](const wf::Arg& x) { return x.name == ps.name; });
          CHECK_MESSAGE((given || !ps.required), a.tool << " lacks " << ps.name);
        }
      }
    });
  }
}
