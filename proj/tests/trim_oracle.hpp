#pragma once

// Brute-force reference for trimming. Every truth assignment of the
// record-decidable conditions is tried; the assignments that agree with the
// record drive an interpreter that lists every event sequence a run can
// produce (calls with resolved arguments, prompts, messages and the undecided
// conditions taken). A correct trim has exactly the same sequence set.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "warpp/tools.hpp"
#include "warpp/workflow.hpp"

namespace oracle {

using warpp::ClientData;
using warpp::Json;
using namespace warpp::wf;

using Trace = std::vector<std::string>;
using Language = std::set<Trace>;

// Tri-state from an assignment: 1 true, 0 false, -1 undecided.
using Assignment = std::map<std::string, int>;

inline bool decidable(const Condition& c, const ClientData& cd) {
  if (!c.is_attribute()) return false;
  const Json* v = warpp::find_path(cd.attributes, c.subject);
  return v && !v->is_null();
}

inline void collect_decidable(const std::vector<Step>& steps, const ClientData& cd, std::vector<Condition>& out) {
  for (const auto& s : steps)
    for (const auto& b : s.branches) {
      if (decidable(b.condition, cd) &&
          std::find(out.begin(), out.end(), b.condition) == out.end())
        out.push_back(b.condition);
      collect_decidable(b.body, cd, out);
    }
}

inline std::string arg_text(const ArgExpr& e, const ClientData& cd) {
  switch (e.kind) {
    case ArgExpr::Kind::Literal: return e.literal.dump();
    case ArgExpr::Kind::Attribute: {
      const Json* v = warpp::find_path(cd.attributes, e.path);
      return v && !v->is_null() ? v->dump() : "@" + e.path;
    }
    case ArgExpr::Kind::UserInfo: return "user." + e.path;
    case ArgExpr::Kind::ToolOutput: return "$" + e.path;
  }
  return "?";
}

class Interpreter {
 public:
  Interpreter(const Workflow& w, const ClientData& cd, const Assignment& a, std::size_t cap)
      : w_(w), cd_(cd), a_(a), cap_(cap) {}

  Language run() {
    std::vector<Frame> frames;
    std::size_t first = next_top(0);
    if (first < w_.steps.size()) frames.push_back({&w_.steps, first, true});
    Trace t;
    explore(frames, t);
    return std::move(out_);
  }

 private:
  struct Frame {
    const std::vector<Step>* list;
    std::size_t idx;
    bool top;
  };

  const Workflow& w_;
  const ClientData& cd_;
  const Assignment& a_;
  std::size_t cap_;
  Language out_;

  std::size_t next_top(std::size_t i) const {
    while (i < w_.steps.size() && w_.steps[i].on_error) ++i;
    return i;
  }

  int truth(const Condition& c) const {
    auto it = a_.find(c.text());
    return it == a_.end() ? -1 : it->second;
  }

  void emit(Trace t) {
    out_.insert(std::move(t));
    if (out_.size() > cap_) throw std::runtime_error("oracle path cap exceeded");
  }

  // Pops finished frames; returns false when the run fell off the end.
  static bool settle(std::vector<Frame>& frames) {
    while (!frames.empty() && frames.back().idx >= frames.back().list->size()) frames.pop_back();
    return !frames.empty();
  }

  void explore(std::vector<Frame> frames, Trace t) {
    if (!settle(frames)) {
      t.push_back("<fell off the end>");
      emit(std::move(t));
      return;
    }
    Frame& f = frames.back();
    const Step& s = (*f.list)[f.idx];
    ++f.idx;
    if (f.top) f.idx = next_top(f.idx);
    for (const auto& a : s.actions) {
      switch (a.kind) {
        case ActionKind::ToolCall:
        case ActionKind::Terminal: {
          if (warpp::is_info_tool_name(a.tool)) break;
          std::string e = "call " + a.tool + "(";
          for (const auto& arg : a.args) e += arg.name + "=" + arg_text(arg.expr, cd_) + ";";
          e += ")";
          if (!a.bind.empty()) e += "->" + a.bind;
          t.push_back(e);
          if (a.kind == ActionKind::Terminal) {
            emit(std::move(t));
            return;
          }
          break;
        }
        case ActionKind::Prompt: t.push_back("ask " + a.key); break;
        case ActionKind::Say: t.push_back("say " + a.text); break;
        case ActionKind::Goto: {
          std::size_t i = 0;
          while (i < w_.steps.size() && w_.steps[i].id != a.target) ++i;
          if (i == w_.steps.size()) throw std::runtime_error("oracle: bad goto");
          explore({{&w_.steps, i, true}}, std::move(t));
          return;
        }
      }
    }
    std::vector<Condition> live;
    bool taken = false;
    for (const auto& b : s.branches) {
      int v = truth(b.condition);
      if (v == 0) continue;
      live.push_back(b.condition);
      auto next = frames;
      next.push_back({&b.body, 0, false});
      Trace nt = t;
      if (v < 0) nt.push_back("if " + b.condition.text());
      explore(std::move(next), std::move(nt));
      if (v == 1) {
        taken = true;
        break;
      }
    }
    if (!taken && (live.empty() || !chain_exhaustive(live))) explore(std::move(frames), std::move(t));
  }
};

inline std::size_t decidable_count(const Workflow& w, const ClientData& cd) {
  std::vector<Condition> conds;
  collect_decidable(w.steps, cd, conds);
  return conds.size();
}

// Event language of `w` for runs consistent with the record, found by
// enumerating all 2^k assignments of the k record-decidable conditions.
inline Language language(const Workflow& w, const ClientData& cd, std::size_t cap = 200000,
                         std::size_t* consistent = nullptr) {
  std::vector<Condition> conds;
  collect_decidable(w.steps, cd, conds);
  if (conds.size() > 20) throw std::runtime_error("oracle: too many decidable conditions");
  Language all;
  std::size_t hits = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << conds.size()); ++mask) {
    Assignment a;
    bool ok = true;
    for (std::size_t i = 0; i < conds.size() && ok; ++i) {
      int bit = (mask >> i) & 1;
      const Json* v = warpp::find_path(cd.attributes, conds[i].subject);
      ok = bit == (attr_condition_holds(conds[i], *v) ? 1 : 0);
      a[conds[i].text()] = bit;
    }
    if (!ok) continue;
    ++hits;
    Language l = Interpreter(w, cd, a, cap).run();
    all.insert(l.begin(), l.end());
  }
  if (consistent) *consistent = hits;
  return all;
}

}  // namespace oracle
