#include "warpp/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace warpp {

using namespace wf;

namespace {

const std::set<std::string> kReserved = {"customer_id", "intent",    "agent_sequence", "user_provided_info",
                                         "authenticator_api", "meta", "replies",        "auth_attempts"};

std::uint64_t next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  return mix64(state);
}

double unit(std::uint64_t& state) { return static_cast<double>(next(state) >> 11) * 0x1.0p-53; }

std::string scalar_text(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw SchemaError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FieldSpec parse_field(const std::string& path, const Json& j) {
  FieldSpec f;
  f.path = path;
  if (j.is_array()) {
    f.choices = j.get<std::vector<Json>>();
  } else if (j.is_object() && j.contains("choices")) {
    f.choices = j["choices"].get<std::vector<Json>>();
    if (j.contains("weights")) f.weights = j["weights"].get<std::vector<double>>();
  } else if (j.is_object() && (j.contains("range") || j.contains("money"))) {
    f.ranged = true;
    f.decimal = j.contains("money");
    const Json& r = f.decimal ? j["money"] : j["range"];
    if (!r.is_array() || r.size() != 2) throw SchemaError(path + ": range needs [lo, hi]");
    f.lo = r[0].get<double>();
    f.hi = r[1].get<double>();
    if (f.hi < f.lo) throw SchemaError(path + ": empty range");
  } else {
    f.choices = {j};  // a bare value is a single-valued domain
  }
  if (!f.ranged) {
    if (f.choices.empty()) throw SchemaError(path + ": empty domain");
    if (!f.weights.empty()) {
      if (f.weights.size() != f.choices.size()) throw SchemaError(path + ": weights and choices differ in length");
      double sum = 0;
      for (double w : f.weights) {
        if (w < 0) throw SchemaError(path + ": negative weight");
        sum += w;
      }
      if (std::fabs(sum - 1.0) > 1e-9) throw SchemaError(path + ": weights must sum to 1");
    }
  }
  return f;
}

std::vector<FieldSpec> parse_fields(const Json& j) {
  std::vector<FieldSpec> out;
  if (j.is_null()) return out;
  if (!j.is_object()) throw SchemaError("field list must be an object");
  for (const auto& [path, spec] : j.items()) out.push_back(parse_field(path, spec));
  return out;
}

bool covers(const std::vector<FieldSpec>& fields, const std::string& path) {
  for (const auto& f : fields)
    if (f.path == path || path.rfind(f.path + ".", 0) == 0 || f.path.rfind(path + ".", 0) == 0) return true;
  return false;
}

std::string normalize_key(std::string_view key) {
  std::string k(key);
  for (auto& c : k)
    if (c == '-') c = '_';
  return k;
}

}  // namespace

Json FieldSpec::draw(std::uint64_t& state) const {
  if (ranged) {
    if (decimal) return std::round((lo + unit(state) * (hi - lo)) * 100.0) / 100.0;
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return static_cast<std::int64_t>(lo) + static_cast<std::int64_t>(next(state) % span);
  }
  if (choices.size() == 1) return choices[0];
  if (weights.empty()) return choices[next(state) % choices.size()];
  double u = unit(state);
  double acc = 0;
  for (std::size_t i = 0; i < choices.size(); ++i) {
    acc += weights[i];
    if (u < acc) return choices[i];
  }
  return choices.back();
}

UserProfile UserProfile::from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("profile must be an object");
  UserProfile p;
  if (!j.contains("customer_id") || !j["customer_id"].is_number_integer() || j["customer_id"].get<std::int64_t>() <= 0)
    throw SchemaError("profile needs a positive integer customer_id");
  p.customer_id = j["customer_id"].get<std::int64_t>();
  if (j.contains("intent")) {
    p.intent = j["intent"].get<std::string>();
  } else if (j.contains("agent_sequence") && j["agent_sequence"].is_array() && !j["agent_sequence"].empty()) {
    p.intent = j["agent_sequence"][0].get<std::string>();
  }
  for (const auto& [k, v] : j.items()) {
    if (kReserved.count(k) || (!k.empty() && k[0] == '_')) continue;
    p.attributes[k] = v;
  }
  p.user_provided_info = j.value("user_provided_info", Json::object());
  if (p.user_provided_info.contains("first_utterance")) {
    p.first_utterance = p.user_provided_info["first_utterance"].get<std::string>();
    p.user_provided_info.erase("first_utterance");
  }
  if (j.contains("authenticator_api")) p.authenticator_code = j["authenticator_api"].value("authenticator_code", Json());
  if (p.authenticator_code.is_null() && p.user_provided_info.contains("authenticator_code"))
    p.authenticator_code = p.user_provided_info["authenticator_code"];
  p.replies = j.value("replies", Json::object());
  if (j.contains("auth_attempts"))
    for (const auto& a : j["auth_attempts"]) p.auth_attempts.push_back(scalar_text(a));
  return p;
}

Json UserProfile::to_json() const {
  Json j = Json::object();
  j["agent_sequence"] = Json::array({intent});
  j["customer_id"] = customer_id;
  for (const auto& [k, v] : attributes.items())
    if (k != "customer_id") j[k] = v;
  j["authenticator_api"] = {{"authenticator_code", authenticator_code}};
  Json upi = user_provided_info;
  upi["first_utterance"] = first_utterance;
  j["user_provided_info"] = upi;
  if (!replies.empty()) j["replies"] = replies;
  if (!auth_attempts.empty()) j["auth_attempts"] = auth_attempts;
  return j;
}

ClientData UserProfile::client_data(const ToolSet& tools) const {
  Json attrs = attributes;
  attrs["customer_id"] = customer_id;
  ClientData c = ClientData::from_json({{"customer_id", customer_id}, {"attributes", attrs}});
  c.secrets["authenticator_code"] = authenticator_code;
  collect_info_results(c, tools);
  return c;
}

std::vector<UserProfile> load_profiles(const std::filesystem::path& file) {
  Json j = Json::parse(slurp(file));
  const Json list = j.is_object() ? j.at("profiles") : j;
  std::vector<UserProfile> out;
  for (const auto& p : list) out.push_back(UserProfile::from_json(p));
  return out;
}

IntentSchema IntentSchema::from_json(const Json& j) {
  IntentSchema s;
  s.intent = j.at("intent").get<std::string>();
  s.fields = parse_fields(j.value("fields", Json()));
  s.user_fields = parse_fields(j.value("user_fields", Json()));
  s.replies = parse_fields(j.value("replies", Json()));
  const Json u = j.value("utterances", Json::object());
  for (const auto& f : u.value("fixed", Json::array())) s.utterances.push_back(f.get<std::string>());
  // Combinations in a fixed order; the pool is capped at 50 entries.
  const Json openers = u.value("openers", Json::array({""}));
  const Json requests = u.value("requests", Json::array());
  const Json closers = u.value("closers", Json::array({""}));
  for (const auto& r : requests)
    for (const auto& o : openers)
      for (const auto& c : closers) {
        if (s.utterances.size() >= 50) break;
        std::string text = o.get<std::string>();
        for (const auto& part : {r.get<std::string>(), c.get<std::string>()}) {
          if (part.empty()) continue;
          if (!text.empty()) text += " ";
          text += part;
        }
        if (std::find(s.utterances.begin(), s.utterances.end(), text) == s.utterances.end())
          s.utterances.push_back(text);
      }
  if (s.utterances.empty()) throw SchemaError(s.intent + ": no first utterances");
  return s;
}

IntentSchema load_schema(const std::filesystem::path& file) { return IntentSchema::from_json(Json::parse(slurp(file))); }

bool is_builtin_prompt(std::string_view key) {
  std::string k = normalize_key(key);
  return k == "new_address" || k == "auth_code" || k == "phone_number" || k == "post_completion";
}

void check_schema_covers(const IntentSchema& s, const Workflow& w, const ToolSet& tools) {
  auto need_attr = [&](const std::string& path) {
    if (path == "customer_id" || covers(s.fields, path)) return;
    throw SchemaError(s.intent + ": no value domain for attribute '" + path + "'");
  };
  std::set<std::string> reply_keys;
  for (const auto& r : s.replies) reply_keys.insert(r.path);
  auto user_has_key = [&](const std::string& key) {
    for (const auto& f : s.user_fields) {
      if (f.path == key || f.path.rfind(key + ".", 0) == 0) return true;
      auto dot = f.path.rfind('.');
      if (dot != std::string::npos && f.path.substr(dot + 1) == key) return true;
    }
    return false;
  };
  for_each_step(w.steps, [&](const Step& st, std::size_t) {
    for (const auto& a : st.actions) {
      if (a.kind == ActionKind::Prompt) {
        if (!is_builtin_prompt(a.key) && !reply_keys.count(a.key) && !user_has_key(a.key))
          throw SchemaError(s.intent + ": nothing answers prompt '" + a.key + "'");
      }
      if (!a.is_call()) continue;
      if (!tools.find(a.tool)) throw SchemaError(s.intent + ": tool '" + a.tool + "' is not declared");
      for (const auto& arg : a.args) {
        if (arg.expr.kind == ArgExpr::Kind::Attribute) need_attr(arg.expr.path);
        if (arg.expr.kind == ArgExpr::Kind::UserInfo && !covers(s.user_fields, arg.expr.path))
          throw SchemaError(s.intent + ": no user value for '" + arg.expr.path + "'");
      }
    }
    for (const auto& b : st.branches) {
      if (b.condition.is_attribute()) need_attr(b.condition.subject);
      if (b.condition.kind == CondKind::UserReply && !is_builtin_prompt(b.condition.subject) &&
          !reply_keys.count(b.condition.subject))
        throw SchemaError(s.intent + ": no reply policy for '" + b.condition.subject + "'");
    }
  });
  for (const auto& spec : tools.specs)
    for (const auto& p : spec.provides) need_attr(p);
}

std::vector<UserProfile> generate_profiles(const IntentSchema& schema, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw SchemaError("profile count must be at least 1");
  std::uint64_t state = derive_seed(seed, "profiles:" + schema.intent);
  std::vector<UserProfile> out;
  std::set<std::int64_t> ids;
  for (std::size_t i = 0; i < n; ++i) {
    UserProfile p;
    p.intent = schema.intent;
    do {
      p.customer_id = 10000000 + static_cast<std::int64_t>(next(state) % 90000000);
    } while (!ids.insert(p.customer_id).second);
    for (const auto& f : schema.fields) {
      if (f.path == "customer_id") continue;
      set_path(p.attributes, f.path, f.draw(state));
    }
    auto code = 100000 + static_cast<std::int64_t>(next(state) % 900000);
    auto phone = 2000000000 + static_cast<std::int64_t>(next(state) % 7999999999LL);
    p.authenticator_code = code;
    set_path(p.attributes, "contact_info.mobile_phone_number", phone);
    for (const auto& f : schema.user_fields) set_path(p.user_provided_info, f.path, f.draw(state));
    p.user_provided_info["authenticator_code"] = code;
    p.user_provided_info["mobile_phone_number"] = phone;
    for (const auto& r : schema.replies) p.replies[r.path] = r.draw(state);
    p.first_utterance = schema.utterances[next(state) % schema.utterances.size()];
    out.push_back(std::move(p));
  }
  return out;
}

std::string ScriptedClient::respond(std::string_view raw) {
  const std::string key = normalize_key(raw);
  const Json& upi = p_.user_provided_info;
  if (key == "post_completion") return "exit";
  if (p_.replies.contains(key)) return scalar_text(p_.replies[key]);
  if (key == "auth_code") {
    if (attempt_ < p_.auth_attempts.size()) return p_.auth_attempts[attempt_++];
    return scalar_text(p_.authenticator_code);
  }
  if (key == "phone_number" && upi.contains("mobile_phone_number")) return scalar_text(upi["mobile_phone_number"]);
  if (key == "new_address" && upi.contains("address")) {
    const Json& a = upi["address"];
    return scalar_text(a.value("street", Json(""))) + ", " + scalar_text(a.value("city", Json(""))) + ", " +
           scalar_text(a.value("state", Json(""))) + " " + scalar_text(a.value("zip_code", Json(""))) + ", " +
           scalar_text(a.value("country", Json("")));
  }
  if (upi.contains(key)) {
    const Json& v = upi[key];
    if (!v.is_object()) return scalar_text(v);
    std::string joined;
    const Json parts = flatten(v);
    for (const auto& [k, x] : parts.items()) {
      if (!joined.empty()) joined += ", ";
      joined += scalar_text(x);
    }
    return joined;
  }
  const Json flat = flatten(upi);
  for (const auto& [path, v] : flat.items()) {
    auto dot = path.rfind('.');
    if (dot != std::string::npos && path.substr(dot + 1) == key) return scalar_text(v);
  }
  throw UnknownPrompt(key);
}

}  // namespace warpp
