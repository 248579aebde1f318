#include <doctest.h>

#include <fstream>
#include <sstream>

#include "warpp/workflow.hpp"
#include "wfgen.hpp"

using namespace warpp;
using namespace warpp::wf;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE_MESSAGE(in.good(), path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<std::string> kFixtures = {
    "banking/update_address.wf", "banking/withdraw_retirement_funds.wf", "flights/book_flight.wf",
    "flights/cancel_flight.wf", "hospital/process_payment.wf"};

Workflow fixture(const std::string& name) { return parse_workflow(slurp(std::string(WARPP_FIXTURE_DIR) + "/" + name)); }

const char* kLinear =
    "workflow lin domain=d intent=i\n"
    "1. Call `a(customer_id)`\n"
    "2. Call `b(customer_id)`\n"
    "3. Call `c(customer_id)`\n"
    "4. Call `complete_case(customer_id)`\n";

const Step& find_step(const std::vector<Step>& steps, const Label& id) {
  const Step* hit = nullptr;
  for_each_step(steps, [&](const Step& s, std::size_t) {
    if (s.id == id) hit = &s;
  });
  REQUIRE(hit);
  return *hit;
}

}  // namespace

TEST_CASE("update address fixture shape") {
  auto w = fixture("banking/update_address.wf");
  CHECK(w.steps.size() == 6);
  const Step& s4 = w.steps[3];
  CHECK(s4.id == Label{4});
  REQUIRE(s4.branches.size() == 1);
  CHECK(s4.branches[0].condition.kind == CondKind::AttrEquals);
  CHECK(s4.branches[0].condition.subject == "client_level");
  CHECK(s4.branches[0].condition.values[0] == "STANDARD");
  CHECK(w.steps[5].on_error);
}

TEST_CASE("all fixtures parse and round-trip") {
  for (const auto& f : kFixtures) {
    CAPTURE(f);
    auto w = fixture(f);
    auto text = serialize_workflow(w);
    auto again = parse_workflow(text);
    CHECK(again == w);
    CHECK(serialize_workflow(again) == text);
    CHECK(token_count(again) == token_count(w));
  }
}

TEST_CASE("empty step list has no terminal") {
  CHECK_THROWS_AS(parse_workflow("workflow e domain=d intent=i\n"), ValidationError);
}

TEST_CASE("goto to an undefined label is rejected") {
  CHECK_THROWS_AS(parse_workflow("workflow g domain=d intent=i\n"
                                 "1. Go to step 7\n"
                                 "2. Call `complete_case(customer_id)`\n"),
                  ValidationError);
}

TEST_CASE("validation errors") {
  SUBCASE("backward goto") {
    CHECK_THROWS_AS(parse_workflow("workflow g domain=d intent=i\n"
                                   "1. Say \"hi\"\n"
                                   "2. Go to step 1\n"
                                   "3. Call `complete_case(customer_id)`\n"),
                    ValidationError);
  }
  SUBCASE("duplicate label") {
    CHECK_THROWS_AS(parse_workflow("workflow g domain=d intent=i\n"
                                   "1. Say \"hi\"\n"
                                   "1. Call `complete_case(customer_id)`\n"),
                    ValidationError);
  }
  SUBCASE("action after terminal") {
    CHECK_THROWS_AS(parse_workflow("workflow g domain=d intent=i\n"
                                   "1. Call `complete_case(customer_id)`\n"
                                   "  - Say \"bye\"\n"),
                    ValidationError);
  }
  SUBCASE("duplicate branch condition") {
    CHECK_THROWS_AS(parse_workflow("workflow g domain=d intent=i\n"
                                   "1. Check\n"
                                   "  * If x == 1:\n"
                                   "    1.1. Say \"a\"\n"
                                   "  * If x == 1:\n"
                                   "    1.2. Say \"b\"\n"
                                   "2. Call `complete_case(customer_id)`\n"),
                    ValidationError);
  }
  SUBCASE("fall-through without terminal") {
    CHECK_THROWS_AS(parse_workflow("workflow g domain=d intent=i\n"
                                   "1. Check\n"
                                   "  * If x == 1:\n"
                                   "    1.1. Call `complete_case(customer_id)`\n"),
                    ValidationError);
  }
  SUBCASE("unresolved tool") {
    std::set<std::string> tools{"complete_case"};
    ValidateOptions o;
    o.tools = &tools;
    CHECK_THROWS_AS(parse_workflow(kLinear, o), ValidationError);
    tools.insert({"a", "b", "c"});
    CHECK_NOTHROW(parse_workflow(kLinear, o));
  }
  SUBCASE("depth limit") {
    std::string src = "workflow g domain=d intent=i\n";
    Label l;
    for (int d = 0; d <= 9; ++d) {
      l.push_back(1);
      src += std::string(4 * d, ' ') + label_str(l) + ". Level\n";
      src += std::string(4 * d + 2, ' ') + "* If x == " + std::to_string(d) + ":\n";
    }
    l.push_back(1);
    src += std::string(40, ' ') + label_str(l) + ". Say \"deep\"\n";
    src += "2. Call `complete_case(customer_id)`\n";
    CHECK_THROWS_AS(parse_workflow(src), ValidationError);
  }
  SUBCASE("oversized source") {
    std::string big = kLinear;
    big += "# " + std::string(1u << 20, 'x') + "\n";
    CHECK_THROWS_AS(parse_workflow(big), ValidationError);
  }
  SUBCASE("invalid utf-8") {
    std::string bad = std::string(kLinear) + "# \xc3\x28\n";
    CHECK_THROWS_AS(parse_workflow(bad), ValidationError);
  }
}

TEST_CASE("syntax errors carry position") {
  try {
    parse_workflow("workflow g domain=d intent=i\n"
                   "1. Step\n"
                   "  - Call `broken(`\n"
                   "2. Call `complete_case(customer_id)`\n");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 3);
    CHECK(e.col() >= 3);
    CHECK(!e.expected().empty());
  }
  CHECK_THROWS_AS(parse_workflow("flow g\n"), SyntaxError);
  CHECK_THROWS_AS(parse_workflow("workflow g domain=d intent=i\n1. A\n  ? nonsense\n"), SyntaxError);
  CHECK_THROWS_AS(parse_workflow("workflow g domain=d intent=i\n1. A\n  * If x ~~ 3:\n    1.1. B\n"), SyntaxError);
}

TEST_CASE("single-step workflow serializes to two lines") {
  Workflow w{"one", "d", "i", {}};
  Step s;
  s.id = {1};
  s.actions.push_back(Action::call("complete_case", {{"customer_id", ArgExpr::attr("customer_id")}}));
  w.steps.push_back(s);
  auto text = serialize_workflow(w);
  CHECK(text == "workflow one domain=d intent=i\n1. Call `complete_case(customer_id)`\n");
  CHECK(parse_workflow(text) == w);
}

TEST_CASE("token count of the terminal step") {
  auto w = parse_workflow("workflow one domain=d intent=i\n1. Call `complete_case(customer_id)`\n");
  // "1." "Call" "`complete_case(customer_id)`"
  CHECK(token_count(w) == 3);
}

TEST_CASE("token count is additive and prose duplication doubles contribution") {
  auto w = fixture("banking/update_address.wf");
  std::size_t sum = 0;
  for (const auto& s : w.steps) sum += token_count(s, 0);
  CHECK(sum == token_count(w));

  Workflow a = w, b = w;
  const std::string sentence = "Keep the customer informed throughout.";
  a.steps[2].prose += " " + sentence;
  b.steps[2].prose += " " + sentence + " " + sentence;
  auto base = token_count(w);
  CHECK(token_count(b) - base == 2 * (token_count(a) - base));
  CHECK(token_count(a) - base == count_tokens(sentence));
}

TEST_CASE("nested depth 3 indents by depth") {
  auto w = parse_workflow(
      "workflow n domain=d intent=i\n"
      "1. Outer\n"
      "  * If a == 1:\n"
      "    1.1. Middle\n"
      "      * If b == 2:\n"
      "        1.1.1. Inner\n"
      "          * If c == 3:\n"
      "            1.1.1.1. Say \"deep\"\n"
      "2. Call `complete_case(customer_id)`\n");
  CHECK(branch_depth(w) == 3);
  auto text = serialize_workflow(w);
  // Independent check: the deepest step header sits at 4*3 spaces.
  std::istringstream in(text);
  std::string line;
  bool found = false;
  while (std::getline(in, line)) {
    if (line.find("1.1.1.1.") != std::string::npos) {
      CHECK(line.find_first_not_of(' ') == 12);
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("arguments and conditions") {
  auto w = parse_workflow(
      "workflow a domain=d intent=i\n"
      "1. Mixed\n"
      "  - Call `t(customer_id, amount=$due, code=user.auth.code, flag=true, n=-2.5, s=\"x, y\")` -> out\n"
      "  * If t returns in [ok, fine]:\n"
      "    1.1. Say \"fine\"\n"
      "  * If t returns not ok:\n"
      "    1.2. Say \"not ok\"\n"
      "  * If k.v is not null:\n"
      "    1.3. Say \"set\"\n"
      "  * If k.n >= 3:\n"
      "    1.4. Say \"big\"\n"
      "  * If k.s not in [\"a\", \"b\"]:\n"
      "    1.5. Ask again \"more?\"\n"
      "  * If again replies yes:\n"
      "    1.6. Say \"yes\"\n"
      "2. Call `complete_case(customer_id)`\n");
  const auto& a = w.steps[0].actions[0];
  REQUIRE(a.args.size() == 6);
  CHECK(a.args[0].name == "customer_id");
  CHECK(a.args[0].expr.kind == ArgExpr::Kind::Attribute);
  CHECK(a.args[1].expr.kind == ArgExpr::Kind::ToolOutput);
  CHECK(a.args[2].expr.kind == ArgExpr::Kind::UserInfo);
  CHECK(a.args[2].expr.path == "auth.code");
  CHECK(a.args[3].expr.literal == true);
  CHECK(a.args[4].expr.literal == -2.5);
  CHECK(a.args[5].expr.literal == "x, y");
  CHECK(a.bind == "out");
  const auto& br = w.steps[0].branches;
  CHECK(br[0].condition.kind == CondKind::ToolOutcome);
  CHECK(br[0].condition.values.size() == 2);
  CHECK(br[1].condition.negated);
  CHECK(br[2].condition.kind == CondKind::AttrNull);
  CHECK(br[3].condition.kind == CondKind::AttrCompare);
  CHECK(br[4].condition.kind == CondKind::AttrInSet);
  CHECK(br[5].condition.kind == CondKind::UserReply);
  CHECK(parse_workflow(serialize_workflow(w)) == w);
}

TEST_CASE("condition evaluation") {
  Condition eq{CondKind::AttrEquals, "x", false, CmpOp::Lt, {Json("A")}};
  CHECK(attr_condition_holds(eq, "A"));
  CHECK_FALSE(attr_condition_holds(eq, "B"));
  eq.negated = true;
  CHECK(attr_condition_holds(eq, "B"));
  Condition cmp{CondKind::AttrCompare, "x", false, CmpOp::Gt, {Json(30000)}};
  CHECK(attr_condition_holds(cmp, 30001));
  CHECK_FALSE(attr_condition_holds(cmp, 30000));
  Condition num{CondKind::AttrEquals, "x", false, CmpOp::Lt, {Json(0)}};
  CHECK(attr_condition_holds(num, 0.0));
  Condition out{CondKind::ToolOutcome, "t", true, CmpOp::Lt, {Json("eligible"), Json("api_failure")}};
  CHECK(outcome_condition_holds(out, "blocked"));
  CHECK_FALSE(outcome_condition_holds(out, "eligible"));
  Condition rep{CondKind::UserReply, "k", false, CmpOp::Lt, {Json("yes")}};
  CHECK(reply_condition_holds(rep, "Yes please"));
  CHECK_FALSE(reply_condition_holds(rep, "no"));
}

TEST_CASE("path enumeration") {
  SUBCASE("linear") {
    auto ps = enumerate_paths(parse_workflow(kLinear), 10);
    REQUIRE(ps.paths.size() == 1);
    CHECK(ps.paths[0] == std::vector<std::string>{"a", "b", "c", "complete_case"});
    CHECK_FALSE(ps.truncated);
  }
  SUBCASE("independent binary branches give 2^n") {
    for (int n = 1; n <= 6; ++n) {
      std::string src = "workflow b domain=d intent=i\n";
      for (int i = 1; i <= n; ++i) {
        src += std::to_string(i) + ". Decide " + std::to_string(i) + "\n";
        src += "  * If f" + std::to_string(i) + " == true:\n";
        src += "    " + std::to_string(i) + ".1. Call `t" + std::to_string(i) + "(customer_id)`\n";
      }
      src += std::to_string(n + 1) + ". Call `complete_case(customer_id)`\n";
      auto ps = enumerate_paths(parse_workflow(src));
      CHECK(ps.paths.size() == (1u << n));
    }
  }
  SUBCASE("cap sets truncated") {
    std::string src = "workflow b domain=d intent=i\n";
    for (int i = 1; i <= 4; ++i) {
      src += std::to_string(i) + ". Decide\n  * If f" + std::to_string(i) + " == true:\n";
      src += "    " + std::to_string(i) + ".1. Call `t" + std::to_string(i) + "(customer_id)`\n";
    }
    src += "5. Call `complete_case(customer_id)`\n";
    auto w = parse_workflow(src);
    auto exact = enumerate_paths(w, 16);
    CHECK(exact.paths.size() == 16);
    CHECK_FALSE(exact.truncated);
    auto cut = enumerate_paths(w, 5);
    CHECK(cut.paths.size() == 5);
    CHECK(cut.truncated);
  }
  SUBCASE("exhaustive chains have no fall-through") {
    auto ps = enumerate_paths(fixture("flights/cancel_flight.wf"));
    for (const auto& p : ps.paths) {
      CHECK(p.back() == "complete_case");
      CHECK(std::count(p.begin(), p.end(), "complete_case") == 1);
    }
  }
  SUBCASE("fixture paths are distinct and terminate") {
    for (const auto& f : kFixtures) {
      auto ps = enumerate_paths(fixture(f));
      std::set<std::vector<std::string>> uniq(ps.paths.begin(), ps.paths.end());
      CHECK(uniq.size() == ps.paths.size());
      for (const auto& p : ps.paths) CHECK(p.back() == "complete_case");
    }
  }
}

TEST_CASE("static analyses") {
  auto w = fixture("hospital/process_payment.wf");
  auto tools = referenced_tools(w);
  CHECK(tools.count("calculate_patient_responsibility"));
  CHECK(tools.count("get_billing_info_extra"));
  CHECK(decision_points(w) > 10);
  CHECK(step_count(w) > w.steps.size());
  CHECK(find_step(w.steps, {9, 2}).branches.size() == 1);
  CHECK(always_terminates(w));
}

TEST_CASE("random workflows round-trip") {
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    CAPTURE(seed);
    auto w = wfgen::Generator(seed).workflow();
    validate_workflow(w);
    auto text = serialize_workflow(w);
    auto back = parse_workflow(text);
    CHECK(back == w);
    CHECK(serialize_workflow(back) == text);
    CHECK(token_count(back) == token_count(w));
  }
}
