#pragma once

// Workflow intermediate representation and its line-oriented DSL.
//
// A workflow is an ordered list of numbered steps. Each step carries free
// prose, an ordered list of actions and an if/elif chain of branches; branch
// bodies are themselves step lists. Execution walks top-level steps in order;
// after a step's actions run, the first branch whose condition holds has its
// body executed and control then continues with the step after the parent.
// `Go to step N` jumps forward to a top-level step; `complete_case` ends the
// walk.

#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "warpp/common.hpp"

namespace warpp::wf {

inline constexpr std::string_view kTerminalTool = "complete_case";
inline constexpr std::size_t kDefaultPathCap = 100'000;
inline constexpr std::size_t kDefaultMaxDepth = 8;

// Dotted step label, e.g. {4} or {9, 2}. Ordered lexicographically.
using Label = std::vector<int>;

std::string label_str(const Label& l);

struct ArgExpr {
  enum class Kind { Literal, Attribute, UserInfo, ToolOutput };

  Kind kind = Kind::Literal;
  Json literal;      // Kind::Literal
  std::string path;  // attribute path, user-info path or bound variable

  static ArgExpr lit(Json v) { return {Kind::Literal, std::move(v), {}}; }
  static ArgExpr attr(std::string p) { return {Kind::Attribute, {}, std::move(p)}; }
  static ArgExpr user(std::string p) { return {Kind::UserInfo, {}, std::move(p)}; }
  static ArgExpr output(std::string v) { return {Kind::ToolOutput, {}, std::move(v)}; }

  std::string text() const;
  bool operator==(const ArgExpr& o) const {
    return kind == o.kind && path == o.path && literal == o.literal;
  }
};

struct Arg {
  std::string name;
  ArgExpr expr;
  bool operator==(const Arg&) const = default;
};

enum class ActionKind { ToolCall, Prompt, Say, Terminal, Goto };

struct Action {
  ActionKind kind = ActionKind::Say;
  std::string tool;        // ToolCall, Terminal
  std::vector<Arg> args;   // ToolCall, Terminal
  std::string bind;        // ToolCall: variable receiving the call's result
  std::string key;         // Prompt: reply key the client answers
  std::string text;        // Say, Prompt
  Label target;            // Goto

  static Action call(std::string tool, std::vector<Arg> args, std::string bind = {});
  static Action say(std::string text);
  static Action ask(std::string key, std::string text);
  static Action go_to(Label target);

  bool is_call() const { return kind == ActionKind::ToolCall || kind == ActionKind::Terminal; }
  std::string text_form() const;
  bool operator==(const Action&) const = default;
};

enum class CondKind { AttrEquals, AttrNull, AttrCompare, AttrInSet, ToolOutcome, UserReply };
enum class CmpOp { Lt, Le, Gt, Ge };

struct Condition {
  CondKind kind = CondKind::AttrEquals;
  std::string subject;   // attribute path, tool name or reply key
  bool negated = false;  // !=, is not null, not in, returns not
  CmpOp op = CmpOp::Lt;  // AttrCompare only
  // AttrEquals/AttrCompare: one literal; AttrInSet: literals; ToolOutcome:
  // outcome labels as strings; UserReply: "yes" or "no".
  std::vector<Json> values;

  // Attribute conditions can be settled from a complete attribute record;
  // tool outcomes and user replies never can.
  bool is_attribute() const {
    return kind != CondKind::ToolOutcome && kind != CondKind::UserReply;
  }
  std::string text() const;
  bool operator==(const Condition&) const = default;
};

// Evaluation against an observed value. A null attribute only satisfies
// `is null`, `== null` and their negations behave accordingly.
bool attr_condition_holds(const Condition& c, const Json& value);
bool outcome_condition_holds(const Condition& c, std::string_view outcome);
bool reply_condition_holds(const Condition& c, std::string_view reply);

// Normalizes free-form client replies to "yes"/"no" when possible.
std::string normalize_reply(std::string_view reply);

struct Step;

struct Branch {
  Condition condition;
  std::vector<Step> body;
  bool operator==(const Branch& o) const;
};

struct Step {
  Label id;
  std::string prose;
  bool must_always = false;
  bool on_error = false;
  std::vector<Action> actions;
  std::vector<Branch> branches;
  // Label of the step this one was derived from. Not part of structural
  // equality and not serialized.
  Label origin;

  bool operator==(const Step& o) const {
    return id == o.id && prose == o.prose && must_always == o.must_always &&
           on_error == o.on_error && actions == o.actions && branches == o.branches;
  }
};

inline bool Branch::operator==(const Branch& o) const {
  return condition == o.condition && body == o.body;
}

struct Workflow {
  std::string id;
  std::string domain;
  std::string intent;
  std::vector<Step> steps;
  bool operator==(const Workflow&) const = default;
};

struct PathSet {
  std::vector<std::vector<std::string>> paths;
  bool truncated = false;
};

struct ValidateOptions {
  const std::set<std::string>* tools = nullptr;  // resolve tool names when set
  std::size_t max_depth = kDefaultMaxDepth;
};

// Parses and validates. Throws SyntaxError or ValidationError.
Workflow parse_workflow(std::string_view text, const ValidateOptions& opts = {});

// Canonical, byte-stable form.
std::string serialize_workflow(const Workflow& w);

void validate_workflow(const Workflow& w, const ValidateOptions& opts = {});

// Whitespace tokens of the canonical serialization, header line excluded.
std::size_t token_count(const Workflow& w);
std::size_t token_count(const Step& s, std::size_t depth = 0);

PathSet enumerate_paths(const Workflow& w, std::size_t cap = kDefaultPathCap);

std::set<std::string> referenced_tools(const Workflow& w);

// Number of steps carrying a branch chain.
std::size_t decision_points(const Workflow& w);

std::size_t step_count(const Workflow& w);

std::size_t branch_depth(const Workflow& w);

// True when some branch of the chain always matches, so there is no
// fall-through alternative.
bool chain_exhaustive(const std::vector<Branch>& chain);
bool chain_exhaustive(const std::vector<Condition>& chain);

// Whether every walk reaches complete_case.
bool always_terminates(const Workflow& w);

// Index of the top-level step with this label.
std::optional<std::size_t> top_index(const Workflow& w, const Label& l);

void for_each_step(const std::vector<Step>& steps,
                   const std::function<void(const Step&, std::size_t depth)>& fn,
                   std::size_t depth = 0);

// Renders a step subtree at the given depth; used for token accounting and
// serialization.
std::string serialize_step(const Step& s, std::size_t depth);

}  // namespace warpp::wf
