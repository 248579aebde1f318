#pragma once

// Partial evaluation of a workflow against a known client record.
//
// pass1_prune resolves `_extra` calls, inlines known arguments and removes
// branches whose conditions are settled by the record. pass2_fidelity checks
// that nothing the client can still influence was lost. pass3_cleanup merges
// trivial steps, renumbers and guarantees a terminal. trim() does all three in
// a single traversal and is checked against the composition in tests.

#include <set>
#include <string>
#include <vector>

#include "warpp/tools.hpp"
#include "warpp/workflow.hpp"

namespace warpp {

class MissingAttribute : public Error {
 public:
  explicit MissingAttribute(const std::string& path)
      : Error("attribute '" + path + "' is absent from the client record"), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class FidelityViolation : public Error {
 public:
  FidelityViolation(const wf::Label& at, const std::string& what)
      : Error("fidelity violation at step " + wf::label_str(at) + ": " + what), at_(at) {}
  const wf::Label& at() const { return at_; }

 private:
  wf::Label at_;
};

enum class EditKind { PrunedBranch, InlinedValue, MergedSteps, Renumbered, TerminatedEarly, RestoredBranch };

std::string_view edit_kind_name(EditKind k);

struct TrimEdit {
  EditKind kind;
  wf::Label at;
  std::string detail;
};

struct PassResult {
  wf::Workflow workflow;
  std::vector<TrimEdit> edits;
  std::vector<std::string> warnings;
};

struct TrimResult {
  wf::Workflow workflow;
  std::set<std::string> tools;
  std::vector<TrimEdit> provenance;
  std::vector<std::string> warnings;
  std::size_t step_visits = 0;  // steps touched plus tools collected

  Json to_json() const;
};

enum class Decision { True, False, Unknown };

// Settles an attribute condition from the record. Runtime conditions and
// null values are Unknown. An absent path throws MissingAttribute unless it
// is listed as nullable.
Decision decide(const wf::Condition& cond, const ClientData& c);

// Same, but an absent path is Unknown instead of an error.
Decision decide_lenient(const wf::Condition& cond, const ClientData& c);

PassResult pass1_prune(const wf::Workflow& w, const ClientData& c);

// Verifies pass1 output against the original. Outcome and reply branches that
// went missing are restored verbatim; other losses throw FidelityViolation.
// The record lets the check tell a legitimately cut chain from a lost branch;
// without it every earlier attribute branch counts as possibly taken.
PassResult pass2_fidelity(const wf::Workflow& w, const wf::Workflow& original, const ClientData* c = nullptr);

PassResult pass3_cleanup(const wf::Workflow& w);

TrimResult trim(const wf::Workflow& w, const ClientData& c);

struct AuditResult {
  int relevance = 5;
  int completeness = 5;
  int relevance_points = 0;
  int completeness_points = 0;
  std::vector<std::string> findings;
};

// Deterministic rubric comparing a trimmed workflow with its original.
AuditResult audit(const wf::Workflow& trimmed, const wf::Workflow& original, const ClientData& c);

int relevance_score(int points);
int completeness_score(int points);

}  // namespace warpp
