#include "warpp/personalizer.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <unordered_set>

namespace warpp {

using namespace wf;

std::string_view edit_kind_name(EditKind k) {
  switch (k) {
    case EditKind::PrunedBranch: return "PrunedBranch";
    case EditKind::InlinedValue: return "InlinedValue";
    case EditKind::MergedSteps: return "MergedSteps";
    case EditKind::Renumbered: return "Renumbered";
    case EditKind::TerminatedEarly: return "TerminatedEarly";
    case EditKind::RestoredBranch: return "RestoredBranch";
  }
  return "?";
}

Json TrimResult::to_json() const {
  Json j{{"workflow", serialize_workflow(workflow)}, {"tools", tools}, {"edits", Json::array()},
         {"warnings", warnings}, {"step_visits", step_visits}};
  for (const auto& e : provenance)
    j["edits"].push_back({{"kind", edit_kind_name(e.kind)}, {"at", label_str(e.at)}, {"detail", e.detail}});
  return j;
}

namespace {

Decision decide_impl(const Condition& cond, const ClientData& c, bool strict) {
  if (!cond.is_attribute()) return Decision::Unknown;
  const Json* v = c.lookup(cond.subject);
  if (!v) {
    if (strict && !c.nullable.count(cond.subject)) throw MissingAttribute(cond.subject);
    return Decision::Unknown;
  }
  if (v->is_null()) return Decision::Unknown;
  return attr_condition_holds(cond, *v) ? Decision::True : Decision::False;
}

const Label& origin_of(const Step& s) { return s.origin.empty() ? s.id : s.origin; }

bool has_flow_action(const Step& s) {
  return std::any_of(s.actions.begin(), s.actions.end(), [](const Action& a) {
    return a.kind == ActionKind::ToolCall || a.kind == ActionKind::Terminal || a.kind == ActionKind::Goto;
  });
}

bool empty_step(const Step& s) { return s.prose.empty() && s.actions.empty() && s.branches.empty(); }

void merge_into(Step& dst, Step&& src) {
  if (!src.prose.empty()) dst.prose = dst.prose.empty() ? src.prose : dst.prose + " " + src.prose;
  for (auto& a : src.actions) dst.actions.push_back(std::move(a));
}

std::string info_note(const std::string& tool, const ClientData& c) {
  auto it = c.info_results.find(tool);
  if (it == c.info_results.end()) throw MissingAttribute(tool + " (info result)");
  std::string note;
  const Json flat = flatten(*it);
  for (const auto& [k, v] : flat.items()) {
    if (k == "outcome") continue;
    if (!note.empty()) note += " ";
    note += "[" + k + "=" + v.dump() + "]";
  }
  return note;
}

// Appends a closing step when some path can run off the end.
bool ensure_terminal(Workflow& w) {
  if (always_terminates(w)) return false;
  int last = 0;
  for (const auto& s : w.steps) last = std::max(last, s.id.front());
  Step t;
  t.id = {last + 1};
  t.origin = t.id;
  t.prose = "Close the case.";
  t.actions.push_back(Action::call(std::string(kTerminalTool), {{"customer_id", ArgExpr::attr("customer_id")}}));
  w.steps.push_back(std::move(t));
  return true;
}

struct Flow {
  enum Kind { Continue, Terminal, Goto, Stop } kind = Continue;
  Label target;
};

// One traversal of the input. In plain mode the output is the pass-1
// workflow with original labels. In fused mode steps are merged and numbered
// as they are emitted, which makes the result equal to the three passes in
// sequence without revisiting anything.
class Pruner {
 public:
  Pruner(const Workflow& w, const ClientData& c, bool fused) : w_(w), c_(c), fused_(fused) {}

  PassResult run() {
    out_.workflow = Workflow{w_.id, w_.domain, w_.intent, {}};
    List top{&out_.workflow.steps, {}, &top_counter_};
    std::optional<Label> skip_to;
    bool stopped = false;
    Label stop_at;
    for (const Step& s : w_.steps) {
      if (s.on_error) {
        prune_step(s, top, 0);
        continue;
      }
      if (skip_to) {
        if (target_refs_[s.id] > 0) {
          if (s.id == *skip_to) drop_redundant_goto(top, *skip_to);
          skip_to.reset();
        } else {
          ++visits_;
          edit(EditKind::PrunedBranch, s.id, "unreachable after goto");
          continue;
        }
      }
      if (stopped) {
        if (target_refs_[s.id] > 0) {
          stopped = false;
        } else {
          ++visits_;
          edit(EditKind::TerminatedEarly, s.id, "after terminal at step " + label_str(stop_at));
          continue;
        }
      }
      Flow f = prune_step(s, top, 0);
      if (f.kind == Flow::Terminal || f.kind == Flow::Stop) {
        stopped = true;
        stop_at = s.id;
      } else if (f.kind == Flow::Goto) {
        skip_to = f.target;
      }
    }
    if (fused_) finish_fused();
    return std::move(out_);
  }

  std::size_t visits() const { return visits_; }
  const std::map<std::string, int>& tools() const { return tool_refs_; }

 private:
  struct List {
    std::vector<Step>* steps;
    Label prefix;
    int* counter;
  };

  const Workflow& w_;
  const ClientData& c_;
  bool fused_;
  PassResult out_;
  std::size_t visits_ = 0;
  int top_counter_ = 0;
  std::map<Label, int> target_refs_;  // emitted gotos per original target
  std::map<Label, Label> renamed_;    // original top label -> emitted label
  std::map<std::string, int> tool_refs_;
  bool renumbered_ = false;

  void edit(EditKind k, const Label& at, std::string detail) { out_.edits.push_back({k, at, std::move(detail)}); }

  bool mergeable(const Step& s) const {
    if (has_flow_action(s) || !s.branches.empty() || s.must_always || s.on_error) return false;
    auto it = target_refs_.find(origin_of(s));
    return it == target_refs_.end() || it->second == 0;
  }

  // Appends to the list; in fused mode merges with the previous step or
  // assigns the next label. Returns the index of the step that holds s.
  std::size_t emit(List& L, Step s, bool gets_branches = false) {
    for (const auto& a : s.actions) {
      if (a.kind == ActionKind::Goto) ++target_refs_[a.target];
      if (a.is_call()) ++tool_refs_[a.tool];
    }
    auto& v = *L.steps;
    if (fused_) {
      if (!gets_branches && !v.empty() && mergeable(v.back()) && mergeable(s)) {
        edit(EditKind::MergedSteps, v.back().origin, "absorbed step " + label_str(s.origin));
        merge_into(v.back(), std::move(s));
        return v.size() - 1;
      }
      Label fresh = L.prefix;
      fresh.push_back(++*L.counter);
      if (fresh != s.id) renumbered_ = true;
      if (L.prefix.empty()) renamed_[s.origin] = fresh;
      s.id = fresh;
    }
    v.push_back(std::move(s));
    return v.size() - 1;
  }

  void drop_redundant_goto(List& top, const Label& target) {
    auto& v = *top.steps;
    if (v.empty()) return;
    Step& last = v.back();
    if (last.on_error || last.actions.empty() || last.actions.back().kind != ActionKind::Goto ||
        last.actions.back().target != target)
      return;
    last.actions.pop_back();
    --target_refs_[target];
    edit(EditKind::PrunedBranch, last.origin, "goto to the next step dropped");
    if (empty_step(last)) {
      if (fused_) {
        --*top.counter;
        renamed_.erase(last.origin);
      }
      v.pop_back();
      return;
    }
    if (fused_ && v.size() >= 2 && mergeable(v[v.size() - 2]) && mergeable(last)) {
      Step moved = std::move(last);
      v.pop_back();
      --*top.counter;
      renamed_.erase(moved.origin);
      edit(EditKind::MergedSteps, v.back().origin, "absorbed step " + label_str(moved.origin));
      merge_into(v.back(), std::move(moved));
    }
  }

  Flow prune_list(const std::vector<Step>& steps, List& L, std::size_t depth) {
    for (std::size_t i = 0; i < steps.size(); ++i) {
      Flow f = prune_step(steps[i], L, depth);
      if (f.kind != Flow::Continue) {
        for (std::size_t j = i + 1; j < steps.size(); ++j) {
          ++visits_;
          edit(EditKind::TerminatedEarly, steps[j].id, "unreachable after step " + label_str(steps[i].id));
        }
        return f;
      }
    }
    return {};
  }

  Flow prune_step(const Step& s, List& L, std::size_t depth) {
    ++visits_;
    Step ns;
    ns.id = s.id;
    ns.origin = s.id;
    ns.prose = s.prose;
    ns.must_always = s.must_always;
    ns.on_error = s.on_error;
    Flow flow;
    for (const auto& a : s.actions) {
      if (a.is_call() && is_info_tool_name(a.tool)) {
        auto note = info_note(a.tool, c_);
        if (!note.empty()) ns.prose = ns.prose.empty() ? note : ns.prose + " " + note;
        edit(EditKind::InlinedValue, s.id, a.tool + " replaced by " + (note.empty() ? "its result" : note));
        continue;
      }
      Action na = a;
      if (na.is_call()) {
        for (auto& arg : na.args) {
          if (arg.expr.kind != ArgExpr::Kind::Attribute) continue;
          const Json* v = c_.lookup(arg.expr.path);
          if (!v || v->is_null()) continue;
          edit(EditKind::InlinedValue, s.id, a.tool + "." + arg.name + " = " + v->dump());
          arg.expr = ArgExpr::lit(*v);
        }
      }
      if (na.kind == ActionKind::Terminal) flow.kind = Flow::Terminal;
      if (na.kind == ActionKind::Goto) flow = {Flow::Goto, na.target};
      ns.actions.push_back(std::move(na));
    }

    // Resolve the chain: first settled-true branch wins.
    std::vector<const Branch*> kept;
    const Branch* spliced = nullptr;
    bool undecided_seen = false;
    bool total = false;  // a kept branch is certain to hold
    for (std::size_t k = 0; k < s.branches.size(); ++k) {
      const Branch& b = s.branches[k];
      Decision d = decide_impl(b.condition, c_, true);
      if (d == Decision::False) {
        edit(EditKind::PrunedBranch, s.id, "dropped '" + b.condition.text() + "'");
        continue;
      }
      if (d == Decision::True) {
        if (undecided_seen) {
          kept.push_back(&b);
          total = true;
        } else {
          spliced = &b;
          edit(EditKind::PrunedBranch, s.id, "resolved '" + b.condition.text() + "'");
        }
        for (std::size_t j = k + 1; j < s.branches.size(); ++j) {
          const Branch& later = s.branches[j];
          if (decide_impl(later.condition, c_, false) == Decision::True)
            out_.warnings.push_back("step " + label_str(s.id) + ": '" + b.condition.text() + "' and '" +
                                    later.condition.text() + "' both hold; the first wins");
          edit(EditKind::PrunedBranch, s.id, "dropped '" + later.condition.text() + "' after a settled branch");
        }
        break;
      }
      undecided_seen = true;
      kept.push_back(&b);
    }

    // A heading whose every branch was cut carries nothing for this client.
    if (!s.branches.empty() && kept.empty() && !spliced && ns.actions.empty() && !ns.must_always &&
        !ns.prose.empty()) {
      ns.prose.clear();
      edit(EditKind::PrunedBranch, s.id, "no branch applies");
    }
    bool is_target = depth == 0 && target_refs_[s.id] > 0;
    if (kept.empty() && ns.actions.empty() && ns.prose.empty() && is_target) ns.prose = "Continue";

    bool all_kept_divert = !kept.empty();
    if (!empty_step(ns) || !kept.empty()) {
      std::size_t idx = emit(L, std::move(ns), !kept.empty());
      if (!kept.empty()) {
        int counter = 0;
        Label prefix = (*L.steps)[idx].id;
        std::vector<Condition> live;
        for (const Branch* b : kept) {
          Branch nb;
          nb.condition = b->condition;
          live.push_back(b->condition);
          (*L.steps)[idx].branches.push_back(std::move(nb));
          std::size_t bi = (*L.steps)[idx].branches.size() - 1;
          // Bodies are built in a local vector: emitting into the parent's
          // list must not invalidate it while we recurse.
          std::vector<Step> body;
          List BL{&body, prefix, &counter};
          Flow bf = prune_list(b->body, BL, depth + 1);
          if (body.empty()) {
            // Keep the branch: taking it still shadows the ones after it.
            Step ph;
            ph.id = b->body.front().id;
            ph.origin = ph.id;
            ph.prose = "Continue";
            emit(BL, std::move(ph));
          }
          if (bf.kind == Flow::Continue) all_kept_divert = false;
          (*L.steps)[idx].branches[bi].body = std::move(body);
        }
        if (all_kept_divert && (total || chain_exhaustive(live)) && flow.kind == Flow::Continue && !spliced)
          flow.kind = Flow::Stop;
      }
    } else if (s.branches.empty() && !s.actions.empty()) {
      edit(EditKind::PrunedBranch, s.id, "step left empty");
    }

    if (spliced && flow.kind == Flow::Continue) flow = prune_list(spliced->body, L, depth);
    return flow;
  }

  void rewrite_gotos(std::vector<Step>& steps) {
    for (auto& s : steps) {
      for (auto& a : s.actions) {
        if (a.kind != ActionKind::Goto) continue;
        auto it = renamed_.find(a.target);
        if (it == renamed_.end()) throw FidelityViolation(s.id, "goto target " + label_str(a.target) + " was removed");
        a.target = it->second;
      }
      for (auto& b : s.branches) rewrite_gotos(b.body);
    }
  }

  void finish_fused() {
    rewrite_gotos(out_.workflow.steps);
    if (renumbered_) edit(EditKind::Renumbered, {}, "steps renumbered 1.." + std::to_string(top_counter_));
    if (ensure_terminal(out_.workflow)) {
      edit(EditKind::TerminatedEarly, out_.workflow.steps.back().id, "closing step appended");
      ++tool_refs_[std::string(kTerminalTool)];
    }
  }
};

}  // namespace

Decision decide(const Condition& cond, const ClientData& c) { return decide_impl(cond, c, true); }
Decision decide_lenient(const Condition& cond, const ClientData& c) { return decide_impl(cond, c, false); }

PassResult pass1_prune(const Workflow& w, const ClientData& c) { return Pruner(w, c, false).run(); }

TrimResult trim(const Workflow& w, const ClientData& c) {
  Pruner p(w, c, true);
  PassResult r = p.run();
  TrimResult t;
  t.workflow = std::move(r.workflow);
  t.provenance = std::move(r.edits);
  t.warnings = std::move(r.warnings);
  t.step_visits = p.visits();
  for (const auto& [tool, refs] : p.tools()) {
    ++t.step_visits;
    if (refs > 0) t.tools.insert(tool);
  }
  return t;
}

namespace {

// Static reachability under a record: which steps some run can visit, which
// branches are live there, and whether a run can fall off the end.
struct Reach {
  std::set<const Step*> reachable;
  std::vector<Condition> live_runtime;
  bool falls_through = false;
};

void index_next(const std::vector<Step>& list, const Step* after, bool top, std::map<const Step*, const Step*>& next) {
  for (std::size_t i = 0; i < list.size(); ++i) {
    const Step* n = after;
    for (std::size_t j = i + 1; j < list.size(); ++j) {
      if (top && list[j].on_error) continue;
      n = &list[j];
      break;
    }
    next[&list[i]] = n;
    for (const auto& b : list[i].branches) index_next(b.body, n, false, next);
  }
}

Reach scan(const Workflow& w, const ClientData& c) {
  Reach r;
  std::map<const Step*, const Step*> next;
  index_next(w.steps, nullptr, true, next);
  std::deque<const Step*> work;
  auto visit = [&](const Step* s) {
    if (!s) {
      r.falls_through = true;
      return;
    }
    if (r.reachable.insert(s).second) work.push_back(s);
  };
  const Step* first = nullptr;
  for (const auto& s : w.steps)
    if (!s.on_error) {
      first = &s;
      break;
    }
  visit(first);
  while (!work.empty()) {
    const Step* s = work.front();
    work.pop_front();
    bool diverted = false;
    for (const auto& a : s->actions) {
      if (a.kind == ActionKind::Terminal) diverted = true;
      if (a.kind == ActionKind::Goto) {
        auto ti = top_index(w, a.target);
        visit(ti ? &w.steps[*ti] : nullptr);
        diverted = true;
      }
      if (diverted) break;
    }
    if (diverted) continue;
    std::vector<Condition> live;
    bool taken = false;
    for (const auto& b : s->branches) {
      Decision d = decide_lenient(b.condition, c);
      if (d == Decision::False) continue;
      live.push_back(b.condition);
      if (!b.condition.is_attribute()) r.live_runtime.push_back(b.condition);
      visit(b.body.empty() ? next[s] : &b.body.front());
      if (d == Decision::True) {
        taken = true;
        break;
      }
    }
    if (!taken && (live.empty() || !chain_exhaustive(live))) visit(next[s]);
  }
  return r;
}

void index_original(const std::vector<Step>& list, std::vector<Condition>& anc, std::map<Label, const Step*>& steps,
                    std::map<Label, std::vector<Condition>>& ancestors) {
  for (const auto& s : list) {
    steps[s.id] = &s;
    ancestors[s.id] = anc;
    for (const auto& b : s.branches) {
      bool rt = !b.condition.is_attribute();
      if (rt) anc.push_back(b.condition);
      index_original(b.body, anc, steps, ancestors);
      if (rt) anc.pop_back();
    }
  }
}

class FidelityCheck {
 public:
  FidelityCheck(const Workflow& original, const ClientData* c) : c_(c) {
    std::vector<Condition> anc;
    index_original(original.steps, anc, steps_, ancestors_);
  }

  void check(std::vector<Step>& list, std::vector<Condition>& anc, PassResult& out) {
    for (auto& s : list) {
      const Label& o = origin_of(s);
      present_.insert(o);
      auto it = steps_.find(o);
      if (it != steps_.end()) {
        restore_branches(s, *it->second, out);
        check_args(s, *it->second);
        if (std::any_of(s.actions.begin(), s.actions.end(), [](const Action& a) { return a.is_call(); }))
          check_ancestors(s, anc);
      }
      for (auto& b : s.branches) {
        bool rt = !b.condition.is_attribute();
        if (rt) anc.push_back(b.condition);
        check(b.body, anc, out);
        if (rt) anc.pop_back();
      }
    }
  }

  bool present(const Label& l) const { return present_.count(l) > 0; }

 private:
  const ClientData* c_;
  std::map<Label, const Step*> steps_;
  std::map<Label, std::vector<Condition>> ancestors_;
  std::set<Label> present_;

  bool settled_before(const Step& os, std::size_t k) const {
    for (std::size_t j = 0; j < k; ++j) {
      const Condition& cond = os.branches[j].condition;
      if (!cond.is_attribute()) continue;
      if (!c_ || decide_lenient(cond, *c_) == Decision::True) return true;
    }
    return false;
  }

  void restore_branches(Step& s, const Step& os, PassResult& out) {
    auto has = [&](const Condition& cond) {
      return std::any_of(s.branches.begin(), s.branches.end(), [&](const Branch& b) { return b.condition == cond; });
    };
    for (std::size_t k = 0; k < os.branches.size(); ++k) {
      const Branch& ob = os.branches[k];
      if (ob.condition.is_attribute() || has(ob.condition) || settled_before(os, k)) continue;
      std::size_t pos = 0;
      for (const auto& b : s.branches)
        for (std::size_t j = 0; j < k; ++j)
          if (os.branches[j].condition == b.condition) ++pos;
      s.branches.insert(s.branches.begin() + static_cast<std::ptrdiff_t>(pos), ob);
      out.edits.push_back({EditKind::RestoredBranch, s.id, "restored '" + ob.condition.text() + "'"});
    }
  }

  void check_args(const Step& s, const Step& os) {
    for (const auto& a : s.actions) {
      if (!a.is_call()) continue;
      if (std::none_of(os.actions.begin(), os.actions.end(),
                       [&](const Action& oa) { return oa.is_call() && oa.tool == a.tool; }))
        throw FidelityViolation(s.id, a.tool + " does not belong to this step");
      for (const auto& oa : os.actions) {
        if (!oa.is_call() || oa.tool != a.tool) continue;
        for (const auto& oarg : oa.args) {
          if (oarg.expr.kind != ArgExpr::Kind::ToolOutput) continue;
          auto m = std::find_if(a.args.begin(), a.args.end(), [&](const Arg& x) { return x.name == oarg.name; });
          if (m == a.args.end() || !(m->expr == oarg.expr))
            throw FidelityViolation(s.id, a.tool + "." + oarg.name + " must stay bound to $" + oarg.expr.path);
        }
      }
    }
  }

  void check_ancestors(const Step& s, const std::vector<Condition>& anc) {
    auto it = ancestors_.find(origin_of(s));
    if (it == ancestors_.end()) return;
    for (const auto& need : it->second)
      if (std::find(anc.begin(), anc.end(), need) == anc.end())
        throw FidelityViolation(s.id, "call lost its enclosing condition '" + need.text() + "'");
  }
};

// Merges trivial neighbours in every list. `targets` holds labels that gotos
// point at; those steps keep their own label.
void merge_lists(std::vector<Step>& list, const std::set<Label>& targets, std::vector<TrimEdit>& edits) {
  auto mergeable = [&](const Step& s) {
    return !has_flow_action(s) && s.branches.empty() && !s.must_always && !s.on_error && !targets.count(s.id);
  };
  std::vector<Step> out;
  for (auto& s : list) {
    for (auto& b : s.branches) merge_lists(b.body, targets, edits);
    if (!out.empty() && mergeable(out.back()) && mergeable(s)) {
      edits.push_back({EditKind::MergedSteps, origin_of(out.back()), "absorbed step " + label_str(origin_of(s))});
      merge_into(out.back(), std::move(s));
    } else {
      out.push_back(std::move(s));
    }
  }
  list = std::move(out);
}

void collect_targets(const std::vector<Step>& list, std::set<Label>& targets) {
  for (const auto& s : list) {
    for (const auto& a : s.actions)
      if (a.kind == ActionKind::Goto) targets.insert(a.target);
    for (const auto& b : s.branches) collect_targets(b.body, targets);
  }
}

bool renumber(std::vector<Step>& list, const Label& prefix, int& counter, std::map<Label, Label>& renamed) {
  bool changed = false;
  for (auto& s : list) {
    Label fresh = prefix;
    fresh.push_back(++counter);
    if (s.origin.empty()) s.origin = s.id;
    if (fresh != s.id) changed = true;
    if (prefix.empty()) renamed[s.id] = fresh;
    s.id = fresh;
    int inner = 0;
    for (auto& b : s.branches) changed |= renumber(b.body, fresh, inner, renamed);
  }
  return changed;
}

void retarget(std::vector<Step>& list, const std::map<Label, Label>& renamed) {
  for (auto& s : list) {
    for (auto& a : s.actions)
      if (a.kind == ActionKind::Goto) {
        auto it = renamed.find(a.target);
        if (it == renamed.end()) throw FidelityViolation(s.id, "goto target " + label_str(a.target) + " is missing");
        a.target = it->second;
      }
    for (auto& b : s.branches) retarget(b.body, renamed);
  }
}

}  // namespace

PassResult pass2_fidelity(const Workflow& w, const Workflow& original, const ClientData* c) {
  PassResult out;
  out.workflow = w;
  FidelityCheck fc(original, c);
  std::vector<Condition> anc;
  fc.check(out.workflow.steps, anc, out);
  if (c) {
    Reach r = scan(original, *c);
    for (const Step* s : r.reachable)
      if (s->must_always && !fc.present(s->id))
        throw FidelityViolation(s->id, "required step is missing for this client");
  }
  return out;
}

PassResult pass3_cleanup(const Workflow& w) {
  PassResult out;
  out.workflow = w;
  std::set<Label> targets;
  collect_targets(out.workflow.steps, targets);
  merge_lists(out.workflow.steps, targets, out.edits);
  std::map<Label, Label> renamed;
  int counter = 0;
  if (renumber(out.workflow.steps, {}, counter, renamed)) {
    retarget(out.workflow.steps, renamed);
    out.edits.push_back({EditKind::Renumbered, {}, "steps renumbered 1.." + std::to_string(counter)});
  }
  if (ensure_terminal(out.workflow))
    out.edits.push_back({EditKind::TerminatedEarly, out.workflow.steps.back().id, "closing step appended"});
  return out;
}

int relevance_score(int points) {
  if (points <= 0) return 5;
  if (points == 1) return 4;
  if (points <= 3) return 3;
  if (points <= 5) return 2;
  return 1;
}

int completeness_score(int points) {
  if (points <= 0) return 5;
  if (points >= 4) return 1;
  return 5 - points;
}

AuditResult audit(const Workflow& trimmed, const Workflow& original, const ClientData& c) {
  AuditResult a;
  auto rel = [&](std::string why) {
    ++a.relevance_points;
    a.findings.push_back("relevance: " + std::move(why));
  };
  auto comp = [&](int pts, std::string why) {
    a.completeness_points += pts;
    a.findings.push_back("completeness: " + std::move(why));
  };

  for_each_step(trimmed.steps, [&](const Step& s, std::size_t) {
    for (const auto& act : s.actions)
      if (act.is_call() && is_info_tool_name(act.tool))
        rel("step " + label_str(s.id) + " still calls " + act.tool);
    bool unknown_seen = false;
    for (const auto& b : s.branches) {
      Decision d = decide_lenient(b.condition, c);
      if (d == Decision::Unknown) {
        unknown_seen = true;
        continue;
      }
      if (d == Decision::True && unknown_seen) continue;
      rel("step " + label_str(s.id) + " keeps settled branch '" + b.condition.text() + "'");
    }
  });
  Reach tr = scan(trimmed, c);
  // A bare closing step that static termination depends on is not clutter
  // even when this client can never reach it.
  auto needed_closer = [&](const Step& s, std::size_t depth) {
    if (depth != 0 || !s.branches.empty() || s.actions.size() != 1 || s.actions[0].kind != ActionKind::Terminal)
      return false;
    Workflow without = trimmed;
    without.steps.erase(without.steps.begin() + (&s - trimmed.steps.data()));
    return !always_terminates(without);
  };
  for_each_step(trimmed.steps, [&](const Step& s, std::size_t depth) {
    if (depth == 0 && s.on_error) return;
    if (!tr.reachable.count(&s) && !needed_closer(s, depth))
      rel("step " + label_str(s.id) + " is unreachable for this client");
  });

  Reach orr = scan(original, c);
  std::set<std::string> kept_tools = referenced_tools(trimmed);
  std::set<std::string> needed;
  for (const Step* s : orr.reachable)
    for (const auto& act : s->actions)
      if (act.is_call() && !is_info_tool_name(act.tool)) needed.insert(act.tool);
  for (const auto& t : needed)
    if (!kept_tools.count(t)) comp(2, "tool " + t + " is missing");

  std::set<std::string> kept_conds;
  for_each_step(trimmed.steps, [&](const Step& s, std::size_t) {
    for (const auto& b : s.branches) kept_conds.insert(b.condition.text());
  });
  std::set<std::string> live;
  for (const auto& cond : orr.live_runtime) live.insert(cond.text());
  for (const auto& t : live)
    if (!kept_conds.count(t)) comp(1, "runtime branch '" + t + "' is missing");

  std::vector<std::string> proses;
  for_each_step(trimmed.steps, [&](const Step& s, std::size_t) { proses.push_back(s.prose); });
  for (const Step* s : orr.reachable) {
    if (!s->must_always) continue;
    bool found = std::any_of(proses.begin(), proses.end(),
                             [&](const std::string& p) { return p.find(s->prose) != std::string::npos; });
    if (!found) comp(1, "required step " + label_str(s->id) + " is missing");
  }
  if (!always_terminates(trimmed) || tr.falls_through) comp(1, "some path does not reach a terminal");

  a.relevance = relevance_score(a.relevance_points);
  a.completeness = completeness_score(a.completeness_points);
  return a;
}

}  // namespace warpp
