#pragma once

// Declared tools and their simulated execution.
//
// Info tools (name suffix `_extra`) read fields of the client record. Exec
// tools draw an outcome label, a latency and an optional return value from a
// per-call seed, so a given (spec, args, record, seed) always yields the same
// ToolOutcome.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "warpp/common.hpp"

namespace warpp {

class UnknownTool : public Error {
 public:
  explicit UnknownTool(const std::string& name) : Error("unknown tool '" + name + "'") {}
};

class MissingArg : public Error {
 public:
  MissingArg(const std::string& tool, const std::string& param)
      : Error("missing argument '" + param + "' for " + tool), param_(param) {}
  const std::string& param() const { return param_; }

 private:
  std::string param_;
};

class TypeMismatch : public Error {
 public:
  TypeMismatch(const std::string& tool, const std::string& param, const std::string& why)
      : Error("argument '" + param + "' for " + tool + ": " + why), param_(param) {}
  const std::string& param() const { return param_; }

 private:
  std::string param_;
};

// Client attribute record: everything the engine may know about a customer
// before talking to them.
struct ClientData {
  std::int64_t customer_id = 0;
  Json attributes = Json::object();    // nested; addressed by dotted path
  Json info_results = Json::object();  // info tool name -> payload
  Json secrets = Json::object();       // verification material, never shown to agents
  std::set<std::string> nullable;      // paths allowed to be absent

  const Json* lookup(std::string_view path) const { return find_path(attributes, path); }

  // Accepts {"customer_id", "attributes", "info_results"?, "secrets"?}; the
  // attribute map may be nested or use dotted keys.
  static ClientData from_json(const Json& j);
  Json to_json() const;
};

enum class ToolKind { Info, Exec };
enum class ReturnKind { None, Amount, Id };

struct ParamSpec {
  std::string name;
  std::string type = "any";  // string, integer, number, boolean, id, any
  bool required = true;
};

struct LatencySpec {
  double min_ms = 50;
  double max_ms = 200;  // equal bounds mean a fixed latency
};

struct ToolSpec {
  std::string name;
  ToolKind kind = ToolKind::Exec;
  std::string description;
  std::vector<ParamSpec> params;
  std::vector<std::string> outcomes;
  std::vector<double> weights;  // parallel to outcomes; empty means uniform
  ReturnKind returns = ReturnKind::None;
  LatencySpec latency;
  double failure_rate = 0.02;
  std::vector<std::string> provides;  // Info: attribute paths returned
  // Exec: when set, outcome is "verified" iff args[verify_arg] equals this
  // path in ClientData::secrets, else "rejected".
  std::string verify_path;
  std::string verify_arg;

  // Compact signature line shown to agents; its tokens are charged per turn.
  std::string schema_text() const;
};

struct ToolOutcome {
  std::string tool;
  std::string outcome;
  Json payload = Json::object();
  double elapsed_ms = 0;
  bool failed = false;
};

struct ToolSet {
  std::string domain;
  std::string intent;
  std::vector<ToolSpec> specs;

  const ToolSpec* find(std::string_view name) const;
  const ToolSpec& at(std::string_view name) const;
  std::set<std::string> names() const;
  std::size_t count(ToolKind k) const;
  std::size_t schema_tokens() const;
};

inline bool is_info_tool_name(std::string_view name) {
  return name.size() > 6 && name.substr(name.size() - 6) == "_extra";
}

ToolSet parse_toolset(const Json& manifest);
ToolSet load_toolset(const std::filesystem::path& manifest);
Json toolset_to_json(const ToolSet& set);

// Overrides latency per tool: {"tool": {"min": a, "max": b}} or {"tool": ms}.
void apply_latency_overrides(ToolSet& set, const Json& overrides);

struct InvokeOptions {
  bool inject_failures = false;
};

ToolOutcome invoke(const ToolSet& set, std::string_view tool, const Json& args, const ClientData& c,
                   std::uint64_t seed, const InvokeOptions& opts = {});

// Subset in original declaration order. Throws UnknownTool for names not in set.
ToolSet filter_tools(const ToolSet& set, const std::set<std::string>& keep);

// Runs every info tool of the set against the record and stores the payloads
// in c.info_results. Failures are never injected here.
void collect_info_results(ClientData& c, const ToolSet& set);

// Tools used by the orchestrator and authenticator in every domain.
ToolSet system_toolset();

}  // namespace warpp
