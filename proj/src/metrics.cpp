#include "warpp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace warpp {

namespace {

// Small splitmix stream so perturbations do not depend on the standard
// library's distribution implementations.
struct Stream {
  std::uint64_t state;
  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    return mix64(state);
  }
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

std::map<std::string, std::size_t> counts(const std::vector<std::string>& v) {
  std::map<std::string, std::size_t> m;
  for (const auto& s : v) ++m[s];
  return m;
}

std::size_t multiset_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  auto ca = counts(a), cb = counts(b);
  std::size_t n = 0;
  for (const auto& [k, c] : ca) {
    auto it = cb.find(k);
    if (it != cb.end()) n += std::min(c, it->second);
  }
  return n;
}

std::vector<std::string> scoped_tools(const Trajectory& t, Scope scope) {
  return t.tool_names(scope == Scope::Fulfillment);
}

Json corrupt_value(const Json& v) {
  if (v.is_string()) return v.get<std::string>() + "_corrupted";
  if (v.is_number_integer()) return v.get<std::int64_t>() + 1;
  if (v.is_number()) return v.get<double>() + 1.0;
  if (v.is_boolean()) return !v.get<bool>();
  return "corrupted";
}

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", round2(v));
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0 : s / static_cast<double>(v.size());
}

// Population standard deviation.
double stddev(const std::vector<double>& v) {
  if (v.empty()) return 0;
  double m = mean(v), s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

int mode_rank(const std::string& m) {
  if (m == "react") return 0;
  if (m == "noper") return 1;
  if (m == "warpp") return 2;
  return 3;
}

}  // namespace

double round2(double v) {
  double r = std::round(v * 100.0) / 100.0;
  return r == 0 ? 0.0 : r;  // no "-0.00"
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::vector<std::string> adherence_sequence(const Trajectory& t) {
  std::vector<std::string> out;
  for (const auto& e : t.events) {
    if (e.kind == EventKind::Handoff && e.to)
      out.push_back("T:" + std::string(agent_name(e.agent)) + "->" + std::string(agent_name(*e.to)));
    else if (e.kind == EventKind::ToolInvocation)
      out.push_back(e.tool);
  }
  return out;
}

bool exact_match(const Trajectory& pred, const Trajectory& gt) {
  return adherence_sequence(pred) == adherence_sequence(gt);
}

AgentMatch agent_match(const Trajectory& pred, const Trajectory& gt) {
  const auto p = pred.transitions(), g = gt.transitions();
  AgentMatch m;
  if (g.empty()) return m;
  const double n = static_cast<double>(g.size());
  m.ordered = 100.0 * static_cast<double>(lcs_length(p, g)) / n;
  m.any = 100.0 * static_cast<double>(multiset_overlap(p, g)) / n;
  return m;
}

double lcs_percent(const std::vector<std::string>& pred, const std::vector<std::string>& gt) {
  if (gt.empty()) return 100;
  return 100.0 * static_cast<double>(lcs_length(pred, gt)) / static_cast<double>(gt.size());
}

double lcs_tools(const Trajectory& pred, const Trajectory& gt) { return lcs_percent(pred.tool_names(), gt.tool_names()); }

PRF prf(const std::vector<std::string>& pred, const std::vector<std::string>& gt) {
  PRF r;
  if (pred.empty() && gt.empty()) return r;
  if (pred.empty()) return {0, 0, 0};
  if (gt.empty()) return {0, 100, 0};
  const double hit = static_cast<double>(multiset_overlap(pred, gt));
  r.precision = 100.0 * hit / static_cast<double>(pred.size());
  r.recall = 100.0 * hit / static_cast<double>(gt.size());
  r.f1 = r.precision + r.recall == 0 ? 0 : 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

PRF tool_prf(const Trajectory& pred, const Trajectory& gt, Scope scope) {
  return prf(scoped_tools(pred, scope), scoped_tools(gt, scope));
}

double param_match(const Trajectory& pred, const Trajectory& gt) {
  const auto p = pred.tool_events(), g = gt.tool_events();
  std::vector<bool> used(p.size(), false);
  std::size_t total = 0, matched = 0;
  for (const auto* ge : g) {
    const Json gflat = flatten(ge->params);
    total += gflat.size();
    const AgentEvent* partner = nullptr;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (!used[i] && p[i]->tool == ge->tool) {
        used[i] = true;
        partner = p[i];
        break;
      }
    if (!partner) continue;
    const Json pflat = flatten(partner->params);
    for (const auto& [k, v] : gflat.items()) {
      auto it = pflat.find(k);
      if (it != pflat.end() && *it == v) ++matched;
    }
  }
  if (total == 0) return 100;
  return 100.0 * static_cast<double>(matched) / static_cast<double>(total);
}

PerturbSpec PerturbSpec::parse(std::string_view text) {
  PerturbSpec s;
  for (const auto& raw : split(text, ',')) {
    const std::string item = trim_copy(raw);
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("perturb item '" + item + "' needs name=probability");
    const std::string key = trim_copy(item.substr(0, eq));
    double p = 0;
    try {
      std::size_t used = 0;
      const std::string num = trim_copy(item.substr(eq + 1));
      p = std::stod(num, &used);
      if (used != num.size()) throw std::invalid_argument(num);
    } catch (const std::exception&) {
      throw Error("perturb item '" + item + "' has no numeric probability");
    }
    if (!(p >= 0 && p <= 1)) throw Error("perturb probability for '" + key + "' must be in [0, 1]");
    if (key == "drop" || key == "drop_tool") s.drop_tool = p;
    else if (key == "swap" || key == "swap_adjacent") s.swap_adjacent = p;
    else if (key == "corrupt" || key == "corrupt_param") s.corrupt_param = p;
    else if (key == "hallucinate" || key == "hallucinate_tool") s.hallucinate_tool = p;
    else throw Error("unknown perturbation '" + key + "'");
  }
  return s;
}

std::string PerturbSpec::to_string() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "drop=%g,swap=%g,corrupt=%g,hallucinate=%g", drop_tool, swap_adjacent,
                corrupt_param, hallucinate_tool);
  return buf;
}

Trajectory perturb(const Trajectory& gt, const PerturbSpec& spec, std::uint64_t seed) {
  Stream rng{derive_seed(seed, "perturb")};
  std::vector<AgentEvent> ev;
  for (const auto& e : gt.events) {
    if (e.kind == EventKind::ToolInvocation && rng.unit() < spec.drop_tool) continue;
    ev.push_back(e);
  }

  std::vector<std::size_t> tools;
  for (std::size_t i = 0; i < ev.size(); ++i)
    if (ev[i].kind == EventKind::ToolInvocation) tools.push_back(i);
  for (std::size_t k = 0; k + 1 < tools.size();) {
    AgentEvent& a = ev[tools[k]];
    AgentEvent& b = ev[tools[k + 1]];
    if (a.tool != b.tool && a.agent == b.agent && rng.unit() < spec.swap_adjacent) {
      std::swap(a.tool, b.tool);
      std::swap(a.params, b.params);
      std::swap(a.outcome, b.outcome);
      k += 2;
    } else {
      ++k;
    }
  }

  for (std::size_t i : tools) {
    AgentEvent& e = ev[i];
    if (rng.unit() >= spec.corrupt_param) continue;
    const Json flat = flatten(e.params);
    if (flat.empty()) continue;
    auto it = flat.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(rng.next() % flat.size()));
    set_path(e.params, it.key(), corrupt_value(it.value()));
  }

  Trajectory out;
  out.meta = gt.meta;
  std::size_t invented = 0;
  for (auto& e : ev) {
    const bool is_tool = e.kind == EventKind::ToolInvocation;
    AgentEvent copy = e;
    out.append(std::move(e));
    if (is_tool && rng.unit() < spec.hallucinate_tool) {
      AgentEvent h = copy;
      h.tool = "hallucinated_tool_" + std::to_string(++invented);
      h.params = Json::object();
      h.outcome = "unknown_tool";
      h.elapsed = 0;
      h.at = copy.at + copy.elapsed;
      out.append(std::move(h));
    }
  }
  out.elapsed_ms = std::max(out.elapsed_ms, gt.elapsed_ms);
  out.fulfillment_ms = gt.fulfillment_ms;
  if (!spec.identity()) out.meta["perturb"] = spec.to_string();
  return out;
}

RunMetrics score_run(const Trajectory& pred, const Trajectory& gt, const std::string& intent, const std::string& mode) {
  RunMetrics m;
  m.intent = intent;
  m.mode = mode;
  m.customer_id = gt.meta.value("customer_id", std::int64_t{0});
  m.exact = exact_match(pred, gt) ? 1 : 0;
  m.agent = agent_match(pred, gt);
  m.lcs = lcs_tools(pred, gt);
  m.tools = tool_prf(pred, gt, Scope::Overall);
  m.fulfill = tool_prf(pred, gt, Scope::Fulfillment);
  m.params = param_match(pred, gt);
  m.tokens = static_cast<double>(pred.tokens_in + pred.tokens_out);
  m.latency_ms = pred.elapsed_ms;
  m.fulfill_latency_ms = pred.fulfillment_ms;
  if (pred.meta.contains("audit")) {
    m.relevance = pred.meta["audit"].value("relevance", 0.0);
    m.completeness = pred.meta["audit"].value("completeness", 0.0);
  }
  return m;
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {
      "Exact Match",          "LCS Tools",           "Tool F1",          "Fulfill Tool F1",
      "Param Match (%)",      "Token Usage",         "Agent Match Ordered", "Agent Match Any",
      "Tool Precision",       "Tool Recall",         "Fulfill Tool Precision", "Fulfill Tool Recall",
      "Latency (ms)",         "Fulfill Latency (ms)", "Rel. Avg",        "Rel. Std",
      "Comp. Avg",            "Comp. Std"};
  return cols;
}

std::vector<ReportRow> aggregate(const std::vector<RunMetrics>& runs) {
  if (runs.empty()) throw Error("nothing to aggregate");
  std::vector<std::string> intents;
  for (const auto& r : runs)
    if (std::find(intents.begin(), intents.end(), r.intent) == intents.end()) intents.push_back(r.intent);
  std::map<std::pair<std::size_t, std::pair<int, std::string>>, std::vector<const RunMetrics*>> groups;
  for (const auto& r : runs) {
    auto pos = static_cast<std::size_t>(std::find(intents.begin(), intents.end(), r.intent) - intents.begin());
    groups[{pos, {mode_rank(r.mode), r.mode}}].push_back(&r);
  }
  std::vector<ReportRow> rows;
  for (const auto& [key, members] : groups) {
    ReportRow row;
    row.intent = intents[key.first];
    row.mode = key.second.second;
    row.n = members.size();
    auto col = [&](auto get) {
      std::vector<double> v;
      for (const auto* m : members) v.push_back(get(*m));
      return v;
    };
    auto opt = [&](auto get) {
      std::vector<double> v;
      for (const auto* m : members)
        if (auto x = get(*m)) v.push_back(*x);
      return v;
    };
    const std::vector<double> rel = opt([](const RunMetrics& m) { return m.relevance; });
    const std::vector<double> comp = opt([](const RunMetrics& m) { return m.completeness; });
    auto maybe = [](const std::vector<double>& v, double x) -> std::optional<double> {
      if (v.empty()) return std::nullopt;
      return x;
    };
    row.values = {
        mean(col([](const RunMetrics& m) { return m.exact; })),
        mean(col([](const RunMetrics& m) { return m.lcs; })),
        mean(col([](const RunMetrics& m) { return m.tools.f1; })),
        mean(col([](const RunMetrics& m) { return m.fulfill.f1; })),
        mean(col([](const RunMetrics& m) { return m.params; })),
        mean(col([](const RunMetrics& m) { return m.tokens; })),
        mean(col([](const RunMetrics& m) { return m.agent.ordered; })),
        mean(col([](const RunMetrics& m) { return m.agent.any; })),
        mean(col([](const RunMetrics& m) { return m.tools.precision; })),
        mean(col([](const RunMetrics& m) { return m.tools.recall; })),
        mean(col([](const RunMetrics& m) { return m.fulfill.precision; })),
        mean(col([](const RunMetrics& m) { return m.fulfill.recall; })),
        mean(col([](const RunMetrics& m) { return m.latency_ms; })),
        mean(col([](const RunMetrics& m) { return m.fulfill_latency_ms; })),
        maybe(rel, mean(rel)),
        maybe(rel, stddev(rel)),
        maybe(comp, mean(comp)),
        maybe(comp, stddev(comp)),
    };
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string report_csv(const std::vector<ReportRow>& rows, const Json& meta) {
  std::string out = "#";
  bool first = true;
  for (const auto& [k, v] : meta.items()) {
    out += first ? " " : ";";
    first = false;
    out += k + "=" + (v.is_string() ? v.get<std::string>() : v.dump());
  }
  out += "\nIntent,Mode,N";
  for (const auto& c : report_columns()) out += "," + c;
  out += "\n";
  for (const auto& r : rows) {
    out += r.intent + "," + r.mode + "," + std::to_string(r.n);
    for (const auto& v : r.values) out += "," + (v ? fmt2(*v) : std::string());
    out += "\n";
  }
  return out;
}

Json report_json(const std::vector<ReportRow>& rows, const Json& meta) {
  Json list = Json::array();
  const auto& cols = report_columns();
  for (const auto& r : rows) {
    Json row = {{"Intent", r.intent}, {"Mode", r.mode}, {"N", r.n}};
    for (std::size_t i = 0; i < cols.size(); ++i) row[cols[i]] = r.values[i] ? Json(round2(*r.values[i])) : Json();
    list.push_back(row);
  }
  return {{"meta", meta}, {"columns", cols}, {"rows", list}};
}

}  // namespace warpp
