#pragma once

// Synthetic customers: per-intent value schemas, seeded profile generation
// and the scripted client that answers agent prompts from a profile.

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "warpp/tools.hpp"
#include "warpp/workflow.hpp"

namespace warpp {

class UnknownPrompt : public Error {
 public:
  explicit UnknownPrompt(const std::string& key) : Error("no scripted answer for prompt '" + key + "'"), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct UserProfile {
  std::int64_t customer_id = 0;
  std::string intent;                        // workflow intent, e.g. update_address
  Json attributes = Json::object();          // everything the bank already knows
  Json user_provided_info = Json::object();  // what the customer can tell the agent
  Json authenticator_code;                   // expected MFA code
  Json replies = Json::object();             // prompt key -> scripted answer
  std::vector<std::string> auth_attempts;    // codes typed before the right one
  std::string first_utterance;

  // Accepts the flat record shape: unreserved top-level keys are attributes.
  static UserProfile from_json(const Json& j);
  Json to_json() const;

  // Record handed to the personalizer; info payloads are filled from `tools`.
  ClientData client_data(const ToolSet& tools) const;
};

std::vector<UserProfile> load_profiles(const std::filesystem::path& file);

struct FieldSpec {
  std::string path;
  std::vector<Json> choices;  // categorical domain, may contain null
  std::vector<double> weights;
  bool ranged = false;  // integer range [lo, hi]
  bool decimal = false;  // money range with 2 decimals
  double lo = 0;
  double hi = 0;

  Json draw(std::uint64_t& state) const;
};

struct IntentSchema {
  std::string intent;
  std::vector<FieldSpec> fields;       // attribute paths
  std::vector<FieldSpec> user_fields;  // user_provided_info paths
  std::vector<FieldSpec> replies;      // prompt key -> answer domain
  std::vector<std::string> utterances; // first-utterance pool

  static IntentSchema from_json(const Json& j);
};

IntentSchema load_schema(const std::filesystem::path& file);

// Throws SchemaError naming the first attribute, user field or prompt of the
// workflow that profiles drawn from the schema could not supply.
void check_schema_covers(const IntentSchema& s, const wf::Workflow& w, const ToolSet& tools);

std::vector<UserProfile> generate_profiles(const IntentSchema& schema, std::size_t n, std::uint64_t seed);

// Answers prompts from a profile. Codes in auth_attempts are used first, then
// the correct one; anything asked after the case is closed gets "exit".
class ScriptedClient {
 public:
  explicit ScriptedClient(const UserProfile& p) : p_(p) {}
  std::string respond(std::string_view key);
  std::string first_utterance() const { return p_.first_utterance; }
  const UserProfile& profile() const { return p_; }

 private:
  const UserProfile& p_;
  std::size_t attempt_ = 0;
};

// Prompt keys the client answers without a per-key entry.
bool is_builtin_prompt(std::string_view key);

}  // namespace warpp
