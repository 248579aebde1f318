#pragma once

// Adherence and efficiency metrics between a predicted trajectory and its
// ground truth, a perturbation harness, and per intent x mode aggregation.
// Percentages are kept at full precision; rounding happens on emission.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "warpp/trajectory.hpp"

namespace warpp {

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Handoffs as "T:From->To" and tool calls by name, in event order.
std::vector<std::string> adherence_sequence(const Trajectory& t);

bool exact_match(const Trajectory& pred, const Trajectory& gt);

struct AgentMatch {
  double ordered = 100;
  double any = 100;
};
AgentMatch agent_match(const Trajectory& pred, const Trajectory& gt);

// |LCS| / |gt| x 100; an empty ground truth scores 100.
double lcs_tools(const Trajectory& pred, const Trajectory& gt);
double lcs_percent(const std::vector<std::string>& pred, const std::vector<std::string>& gt);

struct PRF {
  double precision = 100;
  double recall = 100;
  double f1 = 100;
};

enum class Scope { Overall, Fulfillment };

// Multiset precision and recall over tool names. Empty sides: both empty is
// 100/100/100; no predictions against a non-empty truth is 0/0/0; predictions
// against an empty truth are P=0, R=100, F1=0.
PRF tool_prf(const Trajectory& pred, const Trajectory& gt, Scope scope = Scope::Overall);
PRF prf(const std::vector<std::string>& pred, const std::vector<std::string>& gt);

// Each ground-truth call is paired with the earliest unused predicted call of
// the same name; matched flattened (key, value) pairs over all gt pairs.
double param_match(const Trajectory& pred, const Trajectory& gt);

struct PerturbSpec {
  double drop_tool = 0;
  double swap_adjacent = 0;
  double corrupt_param = 0;
  double hallucinate_tool = 0;

  bool identity() const { return drop_tool == 0 && swap_adjacent == 0 && corrupt_param == 0 && hallucinate_tool == 0; }
  // "drop=0.1,swap=0.2,corrupt=0,hallucinate=0.05"; long names also accepted.
  static PerturbSpec parse(std::string_view text);
  std::string to_string() const;
};

// Seeded edit of a copy of gt. Edits apply to tool invocations in this order:
// drop, swap of non-overlapping adjacent pairs with different names, param
// corruption, then insertion of tools that do not exist.
Trajectory perturb(const Trajectory& gt, const PerturbSpec& spec, std::uint64_t seed);

struct RunMetrics {
  std::string intent;
  std::string mode;
  std::int64_t customer_id = 0;
  double exact = 0;  // 0 or 1
  AgentMatch agent;
  double lcs = 0;
  PRF tools;
  PRF fulfill;
  double params = 0;
  double tokens = 0;
  double latency_ms = 0;
  double fulfill_latency_ms = 0;
  std::optional<double> relevance;
  std::optional<double> completeness;
};

RunMetrics score_run(const Trajectory& pred, const Trajectory& gt, const std::string& intent, const std::string& mode);

struct ReportRow {
  std::string intent;
  std::string mode;
  std::size_t n = 0;
  std::vector<std::optional<double>> values;  // parallel to report_columns()
};

const std::vector<std::string>& report_columns();

// Groups by (intent, mode), in first-seen intent order and then mode order
// react, noper, warpp.
std::vector<ReportRow> aggregate(const std::vector<RunMetrics>& runs);

// First line is "# key=value;..." from meta, then a header and one row per group.
std::string report_csv(const std::vector<ReportRow>& rows, const Json& meta);
Json report_json(const std::vector<ReportRow>& rows, const Json& meta);

double round2(double v);

}  // namespace warpp
