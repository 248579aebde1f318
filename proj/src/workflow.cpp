#include "warpp/workflow.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace warpp::wf {

std::string label_str(const Label& l) {
  std::string out;
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(l[i]);
  }
  return out;
}

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

bool is_identifier(std::string_view s) {
  if (s.empty() || !is_ident_start(s[0])) return false;
  return std::all_of(s.begin(), s.end(), is_ident_char);
}

bool is_path(std::string_view s) {
  if (s.empty()) return false;
  for (const auto& part : split(s, '.'))
    if (!is_identifier(part)) return false;
  return true;
}

std::string last_segment(std::string_view path) {
  auto pos = path.rfind('.');
  return std::string(pos == std::string_view::npos ? path : path.substr(pos + 1));
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

// Length of a JSON string literal starting at s[0] == '"', or npos.
std::size_t string_literal_extent(std::string_view s) {
  if (s.empty() || s[0] != '"') return std::string_view::npos;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;
    } else if (s[i] == '"') {
      return i + 1;
    }
  }
  return std::string_view::npos;
}

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t n = c < 0x80 ? 0 : (c >> 5) == 0x6 ? 1 : (c >> 4) == 0xe ? 2 : (c >> 3) == 0x1e ? 3 : 99;
    if (n == 99 || i + n >= s.size()) return false;
    for (std::size_t k = 1; k <= n; ++k)
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
    i += n + 1;
  }
  return true;
}

const char* cmp_op_text(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

std::string join_values(const std::vector<Json>& vs, bool bare) {
  std::string out = "[";
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) out += ", ";
    out += bare && vs[i].is_string() ? vs[i].get<std::string>() : vs[i].dump();
  }
  return out + "]";
}

}  // namespace

std::string ArgExpr::text() const {
  switch (kind) {
    case Kind::Literal: return literal.dump();
    case Kind::Attribute: return path;
    case Kind::UserInfo: return "user." + path;
    case Kind::ToolOutput: return "$" + path;
  }
  return {};
}

Action Action::call(std::string tool, std::vector<Arg> args, std::string bind) {
  Action a;
  a.kind = tool == kTerminalTool ? ActionKind::Terminal : ActionKind::ToolCall;
  a.tool = std::move(tool);
  a.args = std::move(args);
  a.bind = std::move(bind);
  return a;
}

Action Action::say(std::string text) {
  Action a;
  a.kind = ActionKind::Say;
  a.text = std::move(text);
  return a;
}

Action Action::ask(std::string key, std::string text) {
  Action a;
  a.kind = ActionKind::Prompt;
  a.key = std::move(key);
  a.text = std::move(text);
  return a;
}

Action Action::go_to(Label target) {
  Action a;
  a.kind = ActionKind::Goto;
  a.target = std::move(target);
  return a;
}

std::string Action::text_form() const {
  switch (kind) {
    case ActionKind::ToolCall:
    case ActionKind::Terminal: {
      std::string out = "Call `" + tool + "(";
      for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) out += ", ";
        const auto& a = args[i];
        bool shorthand = a.expr.kind != ArgExpr::Kind::Literal && last_segment(a.expr.path) == a.name;
        out += shorthand ? a.expr.text() : a.name + "=" + a.expr.text();
      }
      out += ")`";
      if (!bind.empty()) out += " -> " + bind;
      return out;
    }
    case ActionKind::Say: return "Say " + Json(text).dump();
    case ActionKind::Prompt: return "Ask " + key + " " + Json(text).dump();
    case ActionKind::Goto: return "Go to step " + label_str(target);
  }
  return {};
}

std::string Condition::text() const {
  switch (kind) {
    case CondKind::AttrEquals: return subject + (negated ? " != " : " == ") + values.at(0).dump();
    case CondKind::AttrNull: return subject + (negated ? " is not null" : " is null");
    case CondKind::AttrCompare: return subject + " " + cmp_op_text(op) + " " + values.at(0).dump();
    case CondKind::AttrInSet: return subject + (negated ? " not in " : " in ") + join_values(values, false);
    case CondKind::ToolOutcome:
      if (values.size() == 1)
        return subject + (negated ? " returns not " : " returns ") + values[0].get<std::string>();
      return subject + (negated ? " returns not in " : " returns in ") + join_values(values, true);
    case CondKind::UserReply: return subject + " replies " + values.at(0).get<std::string>();
  }
  return {};
}

bool attr_condition_holds(const Condition& c, const Json& value) {
  bool r = false;
  switch (c.kind) {
    case CondKind::AttrEquals: r = value == c.values.at(0); break;
    case CondKind::AttrNull: r = value.is_null(); break;
    case CondKind::AttrCompare: {
      if (!value.is_number()) return false;
      double v = value.get<double>(), k = c.values.at(0).get<double>();
      switch (c.op) {
        case CmpOp::Lt: return v < k;
        case CmpOp::Le: return v <= k;
        case CmpOp::Gt: return v > k;
        case CmpOp::Ge: return v >= k;
      }
      return false;
    }
    case CondKind::AttrInSet:
      r = std::find(c.values.begin(), c.values.end(), value) != c.values.end();
      break;
    default: throw Error("not an attribute condition: " + c.text());
  }
  return c.negated ? !r : r;
}

bool outcome_condition_holds(const Condition& c, std::string_view outcome) {
  bool in = std::any_of(c.values.begin(), c.values.end(),
                        [&](const Json& v) { return v.get<std::string>() == outcome; });
  return c.negated ? !in : in;
}

std::string normalize_reply(std::string_view reply) {
  std::string s = trim_copy(reply);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (starts_with(s, "y") || starts_with(s, "sure") || starts_with(s, "ok")) return "yes";
  if (starts_with(s, "n")) return "no";
  return s;
}

bool reply_condition_holds(const Condition& c, std::string_view reply) {
  bool r = normalize_reply(reply) == c.values.at(0).get<std::string>();
  return c.negated ? !r : r;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Line {
  int no;
  int indent;
  std::string text;
};

bool looks_like_action(std::string_view s) {
  if (starts_with(s, "Call `") || starts_with(s, "Say \"")) return true;
  if (starts_with(s, "Go to step ") && s.size() > 11 && std::isdigit(static_cast<unsigned char>(s[11])))
    return true;
  if (starts_with(s, "Ask ")) {
    auto rest = s.substr(4);
    auto sp = rest.find(' ');
    return sp != std::string_view::npos && is_identifier(rest.substr(0, sp)) &&
           sp + 1 < rest.size() && rest[sp + 1] == '"';
  }
  return false;
}

class Parser {
 public:
  explicit Parser(std::string_view text) { split_lines(text); }

  Workflow parse() {
    Workflow w;
    if (lines_.empty()) throw SyntaxError(1, 1, "workflow header");
    parse_header(lines_[0], w);
    pos_ = 1;
    if (pos_ < lines_.size()) {
      if (lines_[pos_].indent != 0) fail(lines_[pos_], 0, "top-level step at column 1");
      w.steps = parse_steps(0);
    }
    if (pos_ < lines_.size()) fail(lines_[pos_], 0, "step header");
    return w;
  }

 private:
  std::vector<Line> lines_;
  std::size_t pos_ = 0;

  [[noreturn]] static void fail(const Line& l, std::size_t offset, const std::string& expected) {
    throw SyntaxError(l.no, l.indent + static_cast<int>(offset) + 1, expected);
  }

  void split_lines(std::string_view text) {
    int no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string_view raw = text.substr(start, end - start);
      ++no;
      if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
      int indent = 0;
      while (static_cast<std::size_t>(indent) < raw.size() && raw[indent] == ' ') ++indent;
      if (static_cast<std::size_t>(indent) < raw.size() && raw[indent] == '\t')
        throw SyntaxError(no, indent + 1, "spaces for indentation");
      std::string body = trim_copy(raw.substr(indent));
      if (!body.empty() && body[0] != '#') lines_.push_back({no, indent, std::move(body)});
      if (end == text.size()) break;
      start = end + 1;
    }
  }

  static void parse_header(const Line& l, Workflow& w) {
    std::istringstream in(l.text);
    std::string word;
    in >> word;
    if (word != "workflow" || l.indent != 0) fail(l, 0, "'workflow <id> domain=<d> intent=<i>'");
    if (!(in >> w.id) || !is_path(w.id)) fail(l, 9, "workflow identifier");
    while (in >> word) {
      auto eq = word.find('=');
      if (eq == std::string::npos) fail(l, 0, "key=value in header");
      auto key = word.substr(0, eq), val = word.substr(eq + 1);
      if (key == "domain") w.domain = val;
      else if (key == "intent") w.intent = val;
      else fail(l, 0, "domain= or intent=");
    }
    if (w.domain.empty() || w.intent.empty()) fail(l, 0, "domain= and intent= in header");
  }

  static bool is_step_header(std::string_view s) {
    std::size_t i = 0;
    bool digit = false;
    while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) {
      digit = digit || std::isdigit(static_cast<unsigned char>(s[i]));
      ++i;
    }
    return digit && i > 0 && s[i - 1] == '.' && (i == s.size() || s[i] == ' ');
  }

  std::vector<Step> parse_steps(int indent) {
    std::vector<Step> steps;
    while (pos_ < lines_.size() && lines_[pos_].indent == indent) {
      if (!is_step_header(lines_[pos_].text)) break;
      steps.push_back(parse_step(indent));
    }
    return steps;
  }

  Step parse_step(int indent) {
    const Line& hl = lines_[pos_++];
    Step s;
    std::string_view t = hl.text;
    std::size_t i = 0;
    while (t[i] != ' ' && i + 1 < t.size()) ++i;
    auto label_end = t[i] == ' ' ? i : t.size();
    std::string_view label_text = t.substr(0, label_end - 1);  // strip trailing '.'
    for (const auto& part : split(label_text, '.')) {
      if (part.empty()) fail(hl, 0, "step label digits");
      s.id.push_back(std::stoi(part));
    }
    std::string_view rest = label_end < t.size() ? t.substr(label_end + 1) : std::string_view{};
    std::size_t col = label_end + 1;
    while (true) {
      if (starts_with(rest, "[always]")) {
        s.must_always = true;
      } else if (starts_with(rest, "[on_error]")) {
        s.on_error = true;
      } else {
        break;
      }
      auto len = rest.find(']') + 1;
      rest.remove_prefix(std::min(rest.size(), len + 1));
      col += len + 1;
    }
    if (looks_like_action(rest)) {
      s.actions.push_back(parse_action(rest, hl, col));
    } else {
      s.prose = trim_copy(rest);
    }

    int item_indent = -1;
    while (pos_ < lines_.size() && lines_[pos_].indent > indent) {
      const Line& l = lines_[pos_];
      if (item_indent < 0) item_indent = l.indent;
      if (l.indent != item_indent) fail(l, 0, "indentation of " + std::to_string(item_indent));
      if (starts_with(l.text, "- ")) {
        if (!s.branches.empty()) fail(l, 0, "branch (actions must precede branches)");
        s.actions.push_back(parse_action(std::string_view(l.text).substr(2), l, 2));
        ++pos_;
      } else if (starts_with(l.text, "* If ") && l.text.back() == ':') {
        Branch b;
        std::string_view ct(l.text);
        b.condition = parse_condition(ct.substr(5, ct.size() - 6), l, 5);
        ++pos_;
        if (pos_ >= lines_.size() || lines_[pos_].indent <= item_indent ||
            !is_step_header(lines_[pos_].text))
          fail(pos_ < lines_.size() ? lines_[pos_] : l, 0, "numbered step inside branch");
        b.body = parse_steps(lines_[pos_].indent);
        s.branches.push_back(std::move(b));
      } else {
        fail(l, 0, "'- <action>' or '* If <condition>:'");
      }
    }
    return s;
  }

  static ArgExpr parse_expr(std::string_view e, const Line& l, std::size_t col) {
    if (e.empty()) fail(l, col, "argument expression");
    if (e[0] == '$') {
      if (!is_identifier(e.substr(1))) fail(l, col, "variable name after '$'");
      return ArgExpr::output(std::string(e.substr(1)));
    }
    if (starts_with(e, "user.")) {
      if (!is_path(e.substr(5))) fail(l, col, "user-info path");
      return ArgExpr::user(std::string(e.substr(5)));
    }
    if (e == "true" || e == "false" || e == "null" || e[0] == '"' || e[0] == '-' ||
        std::isdigit(static_cast<unsigned char>(e[0]))) {
      try {
        Json v = Json::parse(e);
        if (v.is_structured()) fail(l, col, "scalar literal");
        return ArgExpr::lit(std::move(v));
      } catch (const Json::parse_error&) {
        fail(l, col, "JSON literal");
      }
    }
    if (!is_path(e)) fail(l, col, "attribute path");
    return ArgExpr::attr(std::string(e));
  }

  static std::vector<std::string_view> split_top_level(std::string_view s) {
    std::vector<std::string_view> out;
    int depth = 0;
    bool in_str = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      char c = s[i];
      if (in_str) {
        if (c == '\\') ++i;
        else if (c == '"') in_str = false;
      } else if (c == '"') {
        in_str = true;
      } else if (c == '[' || c == '(') {
        ++depth;
      } else if (c == ']' || c == ')') {
        --depth;
      } else if (c == ',' && depth == 0) {
        out.push_back(s.substr(start, i - start));
        start = i + 1;
      }
    }
    out.push_back(s.substr(start));
    return out;
  }

  static std::string parse_string_literal(std::string_view s, const Line& l, std::size_t col) {
    auto ext = string_literal_extent(s);
    if (ext == std::string_view::npos || ext != s.size()) fail(l, col, "quoted string");
    try {
      return Json::parse(s).get<std::string>();
    } catch (const Json::exception&) {
      fail(l, col, "valid string escape");
    }
  }

  static Action parse_action(std::string_view s, const Line& l, std::size_t col) {
    if (starts_with(s, "Call `")) {
      auto close = s.find('`', 6);
      if (close == std::string_view::npos) fail(l, col + s.size(), "closing '`'");
      std::string_view sig = s.substr(6, close - 6);
      auto paren = sig.find('(');
      if (paren == std::string_view::npos || sig.back() != ')') fail(l, col + 6, "tool(args)");
      std::string name(sig.substr(0, paren));
      if (!is_identifier(name)) fail(l, col + 6, "tool name");
      std::vector<Arg> args;
      std::string_view inner = sig.substr(paren + 1, sig.size() - paren - 2);
      if (!trim_copy(inner).empty()) {
        for (auto piece : split_top_level(inner)) {
          std::string p = trim_copy(piece);
          std::size_t k = 0;
          while (k < p.size() && is_ident_char(p[k])) ++k;
          Arg a;
          if (k > 0 && k < p.size() && p[k] == '=') {
            a.name = p.substr(0, k);
            a.expr = parse_expr(trim_copy(std::string_view(p).substr(k + 1)), l, col + 6 + paren);
          } else {
            a.expr = parse_expr(p, l, col + 6 + paren);
            if (a.expr.kind == ArgExpr::Kind::Literal) fail(l, col + 6 + paren, "name=literal");
            a.name = last_segment(a.expr.path);
          }
          args.push_back(std::move(a));
        }
      }
      std::string bind;
      std::string_view tail = s.substr(close + 1);
      if (!tail.empty()) {
        if (!starts_with(tail, " -> ") || !is_identifier(tail.substr(4)))
          fail(l, col + close + 1, "' -> <variable>' or end of line");
        bind = std::string(tail.substr(4));
      }
      return Action::call(std::move(name), std::move(args), std::move(bind));
    }
    if (starts_with(s, "Say ")) return Action::say(parse_string_literal(s.substr(4), l, col + 4));
    if (starts_with(s, "Ask ")) {
      auto rest = s.substr(4);
      auto sp = rest.find(' ');
      if (sp == std::string_view::npos || !is_identifier(rest.substr(0, sp))) fail(l, col + 4, "reply key");
      return Action::ask(std::string(rest.substr(0, sp)),
                         parse_string_literal(rest.substr(sp + 1), l, col + 5 + sp));
    }
    if (starts_with(s, "Go to step ")) {
      Label target;
      for (const auto& part : split(s.substr(11), '.')) {
        if (part.empty() || !std::all_of(part.begin(), part.end(), [](unsigned char c) { return std::isdigit(c); }))
          fail(l, col + 11, "step number");
        target.push_back(std::stoi(part));
      }
      return Action::go_to(std::move(target));
    }
    fail(l, col, "Call/Say/Ask/Go to");
  }

  static std::vector<Json> parse_label_list(std::string_view s, const Line& l, std::size_t col) {
    if (s.size() < 2 || s.front() != '[' || s.back() != ']') fail(l, col, "[label, ...]");
    std::vector<Json> out;
    for (auto piece : split(s.substr(1, s.size() - 2), ',')) {
      auto p = trim_copy(piece);
      if (!is_identifier(p)) fail(l, col, "outcome label");
      out.emplace_back(p);
    }
    return out;
  }

  static Condition parse_condition(std::string_view s, const Line& l, std::size_t col) {
    Condition c;
    auto sp = s.find(' ');
    if (sp == std::string_view::npos) fail(l, col, "condition");
    c.subject = std::string(s.substr(0, sp));
    std::string_view rest = s.substr(sp + 1);
    std::size_t rcol = col + sp + 1;
    auto parse_literal = [&](std::string_view lit) {
      try {
        return Json::parse(lit);
      } catch (const Json::parse_error&) {
        fail(l, rcol, "JSON literal");
      }
    };
    if (starts_with(rest, "returns ")) {
      c.kind = CondKind::ToolOutcome;
      rest.remove_prefix(8);
      if (starts_with(rest, "not ")) {
        c.negated = true;
        rest.remove_prefix(4);
      }
      if (starts_with(rest, "in [")) {
        c.values = parse_label_list(rest.substr(3), l, rcol);
      } else {
        if (!is_identifier(rest)) fail(l, rcol, "outcome label");
        c.values.emplace_back(std::string(rest));
      }
      if (!is_identifier(c.subject)) fail(l, col, "tool name");
      return c;
    }
    if (starts_with(rest, "replies ")) {
      c.kind = CondKind::UserReply;
      auto v = rest.substr(8);
      if (v != "yes" && v != "no") fail(l, rcol + 8, "yes or no");
      c.values.emplace_back(std::string(v));
      if (!is_identifier(c.subject)) fail(l, col, "reply key");
      return c;
    }
    if (!is_path(c.subject) || starts_with(c.subject, "user.")) fail(l, col, "attribute path");
    if (rest == "is null" || rest == "is not null") {
      c.kind = CondKind::AttrNull;
      c.negated = rest == "is not null";
      return c;
    }
    if (starts_with(rest, "in [") || starts_with(rest, "not in [")) {
      c.kind = CondKind::AttrInSet;
      c.negated = rest[0] == 'n';
      Json arr = parse_literal(rest.substr(c.negated ? 7 : 3));
      if (!arr.is_array()) fail(l, rcol, "list literal");
      for (auto& v : arr) c.values.push_back(v);
      return c;
    }
    auto op_end = rest.find(' ');
    if (op_end == std::string_view::npos) fail(l, rcol, "comparison operator");
    auto op = rest.substr(0, op_end);
    Json v = parse_literal(rest.substr(op_end + 1));
    if (v.is_structured()) fail(l, rcol + op_end + 1, "scalar literal");
    c.values.push_back(v);
    if (op == "==" || op == "!=") {
      c.kind = CondKind::AttrEquals;
      c.negated = op == "!=";
      return c;
    }
    c.kind = CondKind::AttrCompare;
    if (op == "<") c.op = CmpOp::Lt;
    else if (op == "<=") c.op = CmpOp::Le;
    else if (op == ">") c.op = CmpOp::Gt;
    else if (op == ">=") c.op = CmpOp::Ge;
    else fail(l, rcol, "==, !=, <, <=, >, >=, in, is null, returns or replies");
    if (!v.is_number()) fail(l, rcol + op_end + 1, "number");
    return c;
  }
};

}  // namespace

Workflow parse_workflow(std::string_view text, const ValidateOptions& opts) {
  if (text.size() > (1u << 20)) throw ValidationError("workflow source exceeds 1 MiB");
  if (!valid_utf8(text)) throw ValidationError("workflow source is not valid UTF-8");
  Workflow w = Parser(text).parse();
  validate_workflow(w, opts);
  return w;
}

// ---------------------------------------------------------------------------
// Serialization

std::string serialize_step(const Step& s, std::size_t depth) {
  std::string ind(4 * depth, ' ');
  std::string out = ind + label_str(s.id) + ".";
  if (s.must_always) out += " [always]";
  if (s.on_error) out += " [on_error]";
  std::size_t first = 0;
  if (!s.prose.empty()) {
    out += " " + s.prose;
  } else if (!s.actions.empty()) {
    out += " " + s.actions[0].text_form();
    first = 1;
  }
  out += '\n';
  for (std::size_t i = first; i < s.actions.size(); ++i) out += ind + "  - " + s.actions[i].text_form() + "\n";
  for (const auto& b : s.branches) {
    out += ind + "  * If " + b.condition.text() + ":\n";
    for (const auto& child : b.body) out += serialize_step(child, depth + 1);
  }
  return out;
}

std::string serialize_workflow(const Workflow& w) {
  std::string out = "workflow " + w.id + " domain=" + w.domain + " intent=" + w.intent + "\n";
  for (const auto& s : w.steps) out += serialize_step(s, 0);
  return out;
}

std::size_t token_count(const Step& s, std::size_t depth) { return count_tokens(serialize_step(s, depth)); }

std::size_t token_count(const Workflow& w) {
  std::size_t n = 0;
  for (const auto& s : w.steps) n += token_count(s, 0);
  return n;
}

// ---------------------------------------------------------------------------
// Analyses

void for_each_step(const std::vector<Step>& steps, const std::function<void(const Step&, std::size_t)>& fn,
                   std::size_t depth) {
  for (const auto& s : steps) {
    fn(s, depth);
    for (const auto& b : s.branches) for_each_step(b.body, fn, depth + 1);
  }
}

std::set<std::string> referenced_tools(const Workflow& w) {
  std::set<std::string> out;
  for_each_step(w.steps, [&](const Step& s, std::size_t) {
    for (const auto& a : s.actions)
      if (a.is_call()) out.insert(a.tool);
  });
  return out;
}

std::size_t decision_points(const Workflow& w) {
  std::size_t n = 0;
  for_each_step(w.steps, [&](const Step& s, std::size_t) { n += s.branches.empty() ? 0 : 1; });
  return n;
}

std::size_t step_count(const Workflow& w) {
  std::size_t n = 0;
  for_each_step(w.steps, [&](const Step&, std::size_t) { ++n; });
  return n;
}

std::size_t branch_depth(const Workflow& w) {
  std::size_t d = 0;
  for_each_step(w.steps, [&](const Step&, std::size_t depth) { d = std::max(d, depth); });
  return d;
}

std::optional<std::size_t> top_index(const Workflow& w, const Label& l) {
  for (std::size_t i = 0; i < w.steps.size(); ++i)
    if (w.steps[i].id == l) return i;
  return std::nullopt;
}

bool chain_exhaustive(const std::vector<Branch>& chain) {
  std::vector<Condition> conds;
  conds.reserve(chain.size());
  for (const auto& b : chain) conds.push_back(b.condition);
  return chain_exhaustive(conds);
}

bool chain_exhaustive(const std::vector<Condition>& chain) {
  // Group by (kind family, subject) and check whether the union of what the
  // branches cover is the whole domain.
  struct Cover {
    std::vector<Json> positives;
    std::vector<std::vector<Json>> negated_sets;
    bool is_null = false, not_null = false, yes = false, no = false;
    std::vector<std::pair<CmpOp, Json>> cmps;
  };
  std::map<std::pair<int, std::string>, Cover> groups;
  for (const auto& c : chain) {
    int family = 0;
    switch (c.kind) {
      case CondKind::AttrEquals:
      case CondKind::AttrInSet: family = 0; break;
      case CondKind::AttrNull: family = 1; break;
      case CondKind::AttrCompare: family = 2; break;
      case CondKind::ToolOutcome: family = 3; break;
      case CondKind::UserReply: family = 4; break;
    }
    auto& g = groups[{family, c.subject}];
    switch (family) {
      case 0:
      case 3:
        if (c.negated) g.negated_sets.push_back(c.values);
        else g.positives.insert(g.positives.end(), c.values.begin(), c.values.end());
        break;
      case 1: (c.negated ? g.not_null : g.is_null) = true; break;
      case 2: g.cmps.emplace_back(c.op, c.values.at(0)); break;
      case 4: (c.values.at(0) == "yes" ? g.yes : g.no) = true; break;
    }
  }
  for (const auto& [key, g] : groups) {
    switch (key.first) {
      case 0:
      case 3:
        for (const auto& neg : g.negated_sets) {
          bool covered = std::all_of(neg.begin(), neg.end(), [&](const Json& v) {
            return std::find(g.positives.begin(), g.positives.end(), v) != g.positives.end();
          });
          if (covered) return true;
        }
        break;
      case 1:
        if (g.is_null && g.not_null) return true;
        break;
      case 2:
        for (const auto& [op1, v1] : g.cmps)
          for (const auto& [op2, v2] : g.cmps)
            if (v1 == v2 && ((op1 == CmpOp::Lt && op2 == CmpOp::Ge) || (op1 == CmpOp::Le && op2 == CmpOp::Gt)))
              return true;
        break;
      case 4:
        if (g.yes && g.no) return true;
        break;
    }
  }
  return false;
}

namespace {

class TerminationCheck {
 public:
  explicit TerminationCheck(const Workflow& w) : w_(w), memo_(w.steps.size(), -1) {}

  bool from_top(std::size_t i) {
    if (i >= w_.steps.size()) return false;
    if (memo_[i] >= 0) return memo_[i] == 1;
    bool r;
    if (w_.steps[i].on_error) {
      r = from_top(i + 1);
    } else {
      r = step(w_.steps[i], [&] { return from_top(i + 1); });
    }
    memo_[i] = r ? 1 : 0;
    return r;
  }

  bool step(const Step& s, const std::function<bool()>& cont) {
    for (const auto& a : s.actions) {
      if (a.kind == ActionKind::Terminal) return true;
      if (a.kind == ActionKind::Goto) {
        auto idx = top_index(w_, a.target);
        return idx && from_top(*idx);
      }
    }
    if (s.branches.empty()) return cont();
    for (const auto& b : s.branches)
      if (!list(b.body, 0, cont)) return false;
    return chain_exhaustive(s.branches) || cont();
  }

  bool list(const std::vector<Step>& steps, std::size_t j, const std::function<bool()>& cont) {
    if (j >= steps.size()) return cont();
    return step(steps[j], [&] { return list(steps, j + 1, cont); });
  }

 private:
  const Workflow& w_;
  std::vector<int> memo_;
};

}  // namespace

bool always_terminates(const Workflow& w) {
  TerminationCheck check(w);
  if (!check.from_top(0)) return false;
  for (const auto& s : w.steps)
    if (s.on_error && !check.step(s, [] { return false; })) return false;
  return true;
}

void validate_workflow(const Workflow& w, const ValidateOptions& opts) {
  if (w.steps.empty()) throw ValidationError("workflow " + w.id + " has no steps (no terminal)");
  const Label* prev = nullptr;
  std::set<Label> top_labels;
  for (const auto& s : w.steps) top_labels.insert(s.id);

  std::function<void(const std::vector<Step>&, std::size_t, const Label&)> walk =
      [&](const std::vector<Step>& steps, std::size_t depth, const Label& top) {
        if (depth > opts.max_depth)
          throw ValidationError("branch nesting exceeds depth " + std::to_string(opts.max_depth));
        for (const auto& s : steps) {
          const Label& owner = depth == 0 ? s.id : top;
          if (s.id.empty()) throw ValidationError("step without label");
          if (prev && !(*prev < s.id))
            throw ValidationError("step " + label_str(s.id) + " is not after step " + label_str(*prev) +
                                  " (labels must be unique and increasing)");
          prev = &s.id;
          if (s.on_error && depth != 0) throw ValidationError("[on_error] step " + label_str(s.id) + " is nested");
          if (s.prose.find('\n') != std::string::npos || looks_like_action(s.prose))
            throw ValidationError("step " + label_str(s.id) + " prose is ambiguous");
          for (std::size_t i = 0; i < s.actions.size(); ++i) {
            const auto& a = s.actions[i];
            bool last = i + 1 == s.actions.size();
            if (a.is_call()) {
              if (a.tool.empty()) throw ValidationError("tool call without tool name");
              if ((a.tool == kTerminalTool) != (a.kind == ActionKind::Terminal))
                throw ValidationError("terminal kind mismatch for " + a.tool);
              if (opts.tools && !opts.tools->count(a.tool))
                throw ValidationError("unresolved tool '" + a.tool + "' in step " + label_str(s.id));
            }
            if (a.kind == ActionKind::Terminal || a.kind == ActionKind::Goto) {
              if (!last || !s.branches.empty())
                throw ValidationError("step " + label_str(s.id) + " has content after " +
                                      (a.kind == ActionKind::Goto ? "a goto" : "complete_case"));
            }
            if (a.kind == ActionKind::Goto) {
              if (!top_labels.count(a.target))
                throw ValidationError("goto to undefined step " + label_str(a.target));
              if (!(owner < a.target))
                throw ValidationError("goto from step " + label_str(owner) + " must move forward");
              auto idx = top_index(w, a.target);
              if (w.steps[*idx].on_error) throw ValidationError("goto targets the error handler");
            }
          }
          std::set<std::string> seen;
          for (const auto& b : s.branches) {
            if (b.body.empty()) throw ValidationError("empty branch body in step " + label_str(s.id));
            if (!seen.insert(b.condition.text()).second)
              throw ValidationError("duplicate branch condition '" + b.condition.text() + "' in step " +
                                    label_str(s.id));
            walk(b.body, depth + 1, owner);
          }
        }
      };
  walk(w.steps, 0, {});
  if (!always_terminates(w))
    throw ValidationError("workflow " + w.id + " has a path that does not end with complete_case");
}

// ---------------------------------------------------------------------------
// Path enumeration

namespace {

class PathWalker {
 public:
  PathWalker(const Workflow& w, std::size_t cap) : w_(w), cap_(cap) {}

  PathSet run() {
    Stack st{{&w_.steps, 0}};
    walk(st);
    PathSet ps;
    ps.paths.assign(seen_.begin(), seen_.end());
    ps.truncated = truncated_;
    return ps;
  }

 private:
  struct Frame {
    const std::vector<Step>* list;
    std::size_t idx;
  };
  using Stack = std::vector<Frame>;

  const Workflow& w_;
  std::size_t cap_;
  std::set<std::vector<std::string>> seen_;
  std::vector<std::string> cur_;
  bool truncated_ = false;

  void record() {
    if (seen_.count(cur_)) return;
    if (seen_.size() >= cap_) {
      truncated_ = true;
      return;
    }
    seen_.insert(cur_);
  }

  void walk(Stack st) {
    if (truncated_) return;
    const Step* s = nullptr;
    while (!st.empty()) {
      auto& f = st.back();
      if (f.idx >= f.list->size()) {
        st.pop_back();
        continue;
      }
      const Step& cand = (*f.list)[f.idx++];
      if (cand.on_error && f.list == &w_.steps) continue;
      s = &cand;
      break;
    }
    if (!s) {
      record();
      return;
    }
    auto mark = cur_.size();
    for (const auto& a : s->actions) {
      if (a.is_call()) cur_.push_back(a.tool);
      if (a.kind == ActionKind::Terminal) {
        record();
        cur_.resize(mark);
        return;
      }
      if (a.kind == ActionKind::Goto) {
        auto idx = top_index(w_, a.target);
        walk(Stack{{&w_.steps, idx.value_or(w_.steps.size())}});
        cur_.resize(mark);
        return;
      }
    }
    if (s->branches.empty()) {
      walk(st);
    } else {
      for (const auto& b : s->branches) {
        Stack next = st;
        next.push_back({&b.body, 0});
        walk(std::move(next));
        if (truncated_) break;
      }
      if (!chain_exhaustive(s->branches)) walk(st);
    }
    cur_.resize(mark);
  }
};

}  // namespace

PathSet enumerate_paths(const Workflow& w, std::size_t cap) {
  if (cap == 0) throw Error("path cap must be positive");
  return PathWalker(w, cap).run();
}

}  // namespace warpp::wf
