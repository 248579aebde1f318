#include "warpp/tools.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace warpp {

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double round2(double v) { return std::round(v * 100.0) / 100.0; }

bool type_ok(const std::string& type, const Json& v) {
  if (type == "any") return true;
  if (type == "string") return v.is_string();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number();
  if (type == "boolean") return v.is_boolean();
  if (type == "id") return v.is_string() || v.is_number_integer();
  return false;
}

const char* kTypes[] = {"any", "string", "integer", "number", "boolean", "id"};

ReturnKind parse_returns(const std::string& s) {
  if (s == "none") return ReturnKind::None;
  if (s == "amount") return ReturnKind::Amount;
  if (s == "id") return ReturnKind::Id;
  throw SchemaError("unknown returns kind '" + s + "'");
}

const char* returns_name(ReturnKind r) {
  switch (r) {
    case ReturnKind::None: return "none";
    case ReturnKind::Amount: return "amount";
    case ReturnKind::Id: return "id";
  }
  return "none";
}

LatencySpec parse_latency(const Json& j, const std::string& tool) {
  LatencySpec l;
  if (j.is_number()) {
    l.min_ms = l.max_ms = j.get<double>();
  } else if (j.is_object()) {
    l.min_ms = j.value("min", l.min_ms);
    l.max_ms = j.value("max", l.max_ms);
  } else {
    throw SchemaError("latency for " + tool + " must be a number or {min,max}");
  }
  if (l.min_ms < 0 || l.max_ms < l.min_ms) throw SchemaError("invalid latency range for " + tool);
  return l;
}

ToolSpec parse_spec(const Json& j) {
  if (!j.is_object()) throw SchemaError("tool entry must be an object");
  ToolSpec s;
  s.name = j.at("name").get<std::string>();
  auto kind = j.value("kind", std::string(is_info_tool_name(s.name) ? "info" : "exec"));
  if (kind != "info" && kind != "exec") throw SchemaError("tool " + s.name + ": kind must be info or exec");
  s.kind = kind == "info" ? ToolKind::Info : ToolKind::Exec;
  if ((s.kind == ToolKind::Info) != is_info_tool_name(s.name))
    throw SchemaError("tool " + s.name + ": the _extra suffix is reserved for info tools");
  s.description = j.value("description", "");
  for (const auto& p : j.value("params", Json::array())) {
    ParamSpec ps;
    ps.name = p.at("name").get<std::string>();
    ps.type = p.value("type", "any");
    ps.required = p.value("required", true);
    if (std::find(std::begin(kTypes), std::end(kTypes), ps.type) == std::end(kTypes))
      throw SchemaError("tool " + s.name + ": unknown parameter type '" + ps.type + "'");
    s.params.push_back(std::move(ps));
  }
  s.outcomes = j.value("outcomes", std::vector<std::string>{});
  s.weights = j.value("weights", std::vector<double>{});
  if (!s.weights.empty()) {
    if (s.weights.size() != s.outcomes.size()) throw SchemaError("tool " + s.name + ": weights/outcomes mismatch");
    double sum = 0;
    for (double w : s.weights) {
      if (w < 0) throw SchemaError("tool " + s.name + ": negative weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw SchemaError("tool " + s.name + ": weights must sum to 1");
  }
  for (const auto& o : s.outcomes)
    if (o == "api_failure") throw SchemaError("tool " + s.name + ": api_failure is reserved");
  s.returns = parse_returns(j.value("returns", "none"));
  if (j.contains("latency")) s.latency = parse_latency(j["latency"], s.name);
  s.failure_rate = j.value("failure_rate", s.failure_rate);
  if (s.failure_rate < 0 || s.failure_rate > 1) throw SchemaError("tool " + s.name + ": failure_rate outside [0,1]");
  s.provides = j.value("provides", std::vector<std::string>{});
  if (s.kind == ToolKind::Info && s.provides.empty())
    throw SchemaError("info tool " + s.name + " must declare provided attributes");
  if (s.kind == ToolKind::Exec && !s.provides.empty())
    throw SchemaError("exec tool " + s.name + " cannot provide attributes");
  s.verify_path = j.value("verify_path", "");
  s.verify_arg = j.value("verify_arg", "");
  return s;
}

Json spec_to_json(const ToolSpec& s) {
  Json j{{"name", s.name}, {"kind", s.kind == ToolKind::Info ? "info" : "exec"}, {"description", s.description}};
  j["params"] = Json::array();
  for (const auto& p : s.params) j["params"].push_back({{"name", p.name}, {"type", p.type}, {"required", p.required}});
  if (!s.outcomes.empty()) j["outcomes"] = s.outcomes;
  if (!s.weights.empty()) j["weights"] = s.weights;
  j["returns"] = returns_name(s.returns);
  j["latency"] = {{"min", s.latency.min_ms}, {"max", s.latency.max_ms}};
  j["failure_rate"] = s.failure_rate;
  if (!s.provides.empty()) j["provides"] = s.provides;
  if (!s.verify_path.empty()) {
    j["verify_path"] = s.verify_path;
    j["verify_arg"] = s.verify_arg;
  }
  return j;
}

}  // namespace

ClientData ClientData::from_json(const Json& j) {
  ClientData c;
  if (!j.contains("customer_id") || !j["customer_id"].is_number_integer())
    throw SchemaError("client data needs an integer customer_id");
  c.customer_id = j["customer_id"].get<std::int64_t>();
  if (c.customer_id <= 0) throw SchemaError("customer_id must be positive");
  const Json attrs = j.value("attributes", Json::object());
  for (const auto& [k, v] : attrs.items()) {
    if (find_path(c.attributes, k)) throw SchemaError("duplicate attribute path '" + k + "'");
    set_path(c.attributes, k, v);
  }
  if (!c.lookup("customer_id")) c.attributes["customer_id"] = c.customer_id;
  c.info_results = j.value("info_results", Json::object());
  c.secrets = j.value("secrets", Json::object());
  const Json nullable = j.value("nullable", Json::array());
  for (const auto& p : nullable) c.nullable.insert(p.get<std::string>());
  return c;
}

Json ClientData::to_json() const {
  Json j{{"customer_id", customer_id}, {"attributes", flatten(attributes)}, {"info_results", info_results}};
  if (!secrets.empty()) j["secrets"] = secrets;
  if (!nullable.empty()) j["nullable"] = nullable;
  return j;
}

std::string ToolSpec::schema_text() const {
  std::string out = name + "(";
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) out += ", ";
    out += params[i].name + ": " + params[i].type + (params[i].required ? "" : "?");
  }
  out += ")";
  if (!outcomes.empty()) {
    out += " -> ";
    for (std::size_t i = 0; i < outcomes.size(); ++i) out += (i ? "|" : "") + outcomes[i];
  }
  if (!description.empty()) out += " : " + description;
  return out;
}

const ToolSpec* ToolSet::find(std::string_view name) const {
  for (const auto& s : specs)
    if (s.name == name) return &s;
  return nullptr;
}

const ToolSpec& ToolSet::at(std::string_view name) const {
  if (auto* s = find(name)) return *s;
  throw UnknownTool(std::string(name));
}

std::set<std::string> ToolSet::names() const {
  std::set<std::string> out;
  for (const auto& s : specs) out.insert(s.name);
  return out;
}

std::size_t ToolSet::count(ToolKind k) const {
  return static_cast<std::size_t>(std::count_if(specs.begin(), specs.end(), [&](const ToolSpec& s) { return s.kind == k; }));
}

std::size_t ToolSet::schema_tokens() const {
  std::size_t n = 0;
  for (const auto& s : specs) n += count_tokens(s.schema_text());
  return n;
}

ToolSet parse_toolset(const Json& m) {
  if (!m.is_object() || !m.contains("tools") || !m["tools"].is_array())
    throw SchemaError("tool manifest needs a tools array");
  ToolSet set;
  set.domain = m.value("domain", "");
  set.intent = m.value("intent", "");
  std::set<std::string> seen;
  for (const auto& t : m["tools"]) {
    auto spec = parse_spec(t);
    if (!seen.insert(spec.name).second) throw SchemaError("duplicate tool name '" + spec.name + "'");
    set.specs.push_back(std::move(spec));
  }
  return set;
}

ToolSet load_toolset(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw SchemaError("cannot open tool manifest " + manifest.string());
  try {
    return parse_toolset(Json::parse(in));
  } catch (const Json::exception& e) {
    throw SchemaError(manifest.string() + ": " + e.what());
  }
}

Json toolset_to_json(const ToolSet& set) {
  Json j{{"domain", set.domain}, {"intent", set.intent}, {"tools", Json::array()}};
  for (const auto& s : set.specs) j["tools"].push_back(spec_to_json(s));
  return j;
}

void apply_latency_overrides(ToolSet& set, const Json& overrides) {
  for (const auto& [name, v] : overrides.items()) {
    for (auto& s : set.specs)
      if (s.name == name) s.latency = parse_latency(v, name);
  }
}

ToolOutcome invoke(const ToolSet& set, std::string_view tool, const Json& args, const ClientData& c,
                   std::uint64_t seed, const InvokeOptions& opts) {
  const ToolSpec& spec = set.at(tool);
  if (!args.is_object()) throw TypeMismatch(spec.name, "*", "arguments must be an object");
  for (const auto& p : spec.params) {
    auto it = args.find(p.name);
    if (it == args.end()) {
      if (p.required) throw MissingArg(spec.name, p.name);
      continue;
    }
    if (!type_ok(p.type, *it)) throw TypeMismatch(spec.name, p.name, "expected " + p.type + ", got " + it->dump());
  }
  for (const auto& [k, v] : args.items()) {
    bool declared = std::any_of(spec.params.begin(), spec.params.end(), [&](const ParamSpec& p) { return p.name == k; });
    if (!declared) throw TypeMismatch(spec.name, k, "not a declared parameter");
  }

  std::mt19937_64 rng(seed);
  ToolOutcome out;
  out.tool = spec.name;
  // Draw order is fixed: failure, outcome, latency, return value.
  double u_fail = unit(rng), u_outcome = unit(rng), u_latency = unit(rng), u_value = unit(rng);
  out.elapsed_ms = spec.latency.min_ms + u_latency * (spec.latency.max_ms - spec.latency.min_ms);
  if (opts.inject_failures && u_fail < spec.failure_rate) {
    out.failed = true;
    out.outcome = "api_failure";
    out.payload = {{"outcome", out.outcome}};
    return out;
  }

  if (spec.kind == ToolKind::Info) {
    out.outcome = "ok";
    for (const auto& path : spec.provides) {
      const Json* v = c.lookup(path);
      set_path(out.payload, path, v ? *v : Json());
    }
    return out;
  }

  if (!spec.verify_path.empty()) {
    const Json* expected = find_path(c.secrets, spec.verify_path);
    auto it = args.find(spec.verify_arg);
    bool match = expected && it != args.end() &&
                 (*it == *expected || (it->is_string() && it->get<std::string>() == expected->dump()));
    out.outcome = match ? "verified" : "rejected";
  } else if (spec.outcomes.empty()) {
    out.outcome = "ok";
  } else {
    std::size_t pick = spec.outcomes.size() - 1;
    double acc = 0;
    for (std::size_t i = 0; i < spec.outcomes.size(); ++i) {
      acc += spec.weights.empty() ? 1.0 / static_cast<double>(spec.outcomes.size()) : spec.weights[i];
      if (u_outcome < acc) {
        pick = i;
        break;
      }
    }
    out.outcome = spec.outcomes[pick];
  }
  out.payload["outcome"] = out.outcome;

  switch (spec.returns) {
    case ReturnKind::None: break;
    case ReturnKind::Amount: {
      const Json* base = nullptr;
      for (const auto& p : spec.params) {
        auto it = args.find(p.name);
        if (it != args.end() && it->is_number()) {
          base = &*it;
          break;
        }
      }
      out.payload["value"] = base ? round2(base->get<double>() * (0.5 + u_value)) : round2(50 + u_value * 4950);
      break;
    }
    case ReturnKind::Id: {
      std::string prefix = spec.name.substr(0, std::min<std::size_t>(3, spec.name.size()));
      for (auto& ch : prefix) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      out.payload["value"] = prefix + "-" + hex64(mix64(seed)).substr(0, 8);
      break;
    }
  }
  return out;
}

ToolSet filter_tools(const ToolSet& set, const std::set<std::string>& keep) {
  for (const auto& k : keep)
    if (!set.find(k)) throw UnknownTool(k);
  ToolSet out{set.domain, set.intent, {}};
  for (const auto& s : set.specs)
    if (keep.count(s.name)) out.specs.push_back(s);
  return out;
}

void collect_info_results(ClientData& c, const ToolSet& set) {
  for (const auto& s : set.specs) {
    if (s.kind != ToolKind::Info) continue;
    Json args = Json::object();
    for (const auto& p : s.params)
      if (p.name == "customer_id") args["customer_id"] = c.customer_id;
    auto out = invoke(set, s.name, args, c, 0);
    out.payload.erase("outcome");
    c.info_results[s.name] = out.payload;
  }
}

ToolSet system_toolset() {
  static const Json manifest = Json::parse(R"({
    "domain": "system", "intent": "system",
    "tools": [
      {"name": "intent_identified", "kind": "exec",
       "description": "Record the identified intent and hand off the session",
       "params": [{"name": "intent", "type": "string"}, {"name": "domain", "type": "string"}],
       "latency": 5, "failure_rate": 0},
      {"name": "send_verification_text", "kind": "exec",
       "description": "Send a one-time code to the phone number on file",
       "params": [{"name": "customer_id", "type": "integer"}, {"name": "phone_number", "type": "id"}],
       "outcomes": ["sent"], "failure_rate": 0},
      {"name": "code_verifier", "kind": "exec",
       "description": "Check the code the client read back",
       "params": [{"name": "customer_id", "type": "integer"}, {"name": "code", "type": "id"}],
       "verify_path": "authenticator_code", "verify_arg": "code", "failure_rate": 0}
    ]})");
  return parse_toolset(manifest);
}

}  // namespace warpp
