#include "warpp/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace warpp {

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

const IntentEntry* Catalog::find(std::string_view name) const {
  for (const auto& e : entries)
    if (e.id == name || e.intent == name) return &e;
  return nullptr;
}

const IntentEntry& Catalog::at(std::string_view name) const {
  if (const auto* e = find(name)) return *e;
  throw OutOfScopeIntent(std::string(name));
}

std::vector<const IntentEntry*> Catalog::in_domain(std::string_view domain) const {
  std::vector<const IntentEntry*> out;
  for (const auto& e : entries)
    if (e.domain == domain) out.push_back(&e);
  if (out.empty()) throw Error("unknown domain '" + std::string(domain) + "'");
  return out;
}

std::vector<std::string> Catalog::domains() const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (std::find(out.begin(), out.end(), e.domain) == out.end()) out.push_back(e.domain);
  return out;
}

const IntentEntry& Catalog::match(std::string_view utterance) const {
  const std::string text = lower(utterance);
  const IntentEntry* best = nullptr;
  std::size_t best_len = 0;
  for (const auto& e : entries)
    for (const auto& a : e.aliases)
      if (a.size() > best_len && text.find(a) != std::string::npos) {
        best = &e;
        best_len = a.size();
      }
  if (!best) throw OutOfScopeIntent(std::string(utterance));
  return *best;
}

wf::Workflow Catalog::workflow(const IntentEntry& e) const {
  return wf::parse_workflow(read_file(root / e.workflow));
}

ToolSet Catalog::tools(const IntentEntry& e) const { return load_toolset(root / e.tools); }

IntentSchema Catalog::schema(const IntentEntry& e) const { return load_schema(root / e.schema); }

Catalog load_catalog(const std::filesystem::path& root) {
  Catalog c;
  c.root = root;
  const Json j = Json::parse(read_file(root / "registry.json"));
  for (const auto& item : j.at("intents")) {
    IntentEntry e;
    e.id = item.at("id").get<std::string>();
    e.intent = item.at("intent").get<std::string>();
    e.domain = item.at("domain").get<std::string>();
    e.workflow = item.at("workflow").get<std::string>();
    e.tools = item.at("tools").get<std::string>();
    e.schema = item.at("schema").get<std::string>();
    for (const auto& a : item.value("aliases", Json::array())) e.aliases.push_back(lower(a.get<std::string>()));
    if (c.find(e.id) || c.find(e.intent)) throw SchemaError("duplicate intent '" + e.id + "' in registry");
    c.entries.push_back(std::move(e));
  }
  return c;
}

}  // namespace warpp
