#pragma once

// Registry of supported intents and the fixture files behind each one.

#include <filesystem>
#include <string>
#include <vector>

#include "warpp/datagen.hpp"
#include "warpp/tools.hpp"
#include "warpp/workflow.hpp"

namespace warpp {

class OutOfScopeIntent : public Error {
 public:
  explicit OutOfScopeIntent(const std::string& what) : Error("out-of-scope intent: " + what) {}
};

struct IntentEntry {
  std::string id;      // camelCase, e.g. updateAddress
  std::string intent;  // workflow intent, e.g. update_address
  std::string domain;
  std::filesystem::path workflow;
  std::filesystem::path tools;
  std::filesystem::path schema;
  std::vector<std::string> aliases;  // lowercase phrases
};

struct Catalog {
  std::filesystem::path root;
  std::vector<IntentEntry> entries;

  // Accepts either the camel id or the workflow intent.
  const IntentEntry& at(std::string_view name) const;
  const IntentEntry* find(std::string_view name) const;
  std::vector<const IntentEntry*> in_domain(std::string_view domain) const;
  std::vector<std::string> domains() const;

  // Longest alias occurring in the utterance wins; ties go to registry order.
  const IntentEntry& match(std::string_view utterance) const;

  wf::Workflow workflow(const IntentEntry& e) const;
  ToolSet tools(const IntentEntry& e) const;
  IntentSchema schema(const IntentEntry& e) const;
};

Catalog load_catalog(const std::filesystem::path& root);

inline std::filesystem::path default_fixture_dir() {
#ifdef WARPP_FIXTURE_DIR
  return WARPP_FIXTURE_DIR;
#else
  return "fixtures";
#endif
}

}  // namespace warpp
