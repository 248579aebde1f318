#pragma once

// Command-line front end: generate profiles and ground truth, run sessions
// in each mode, and report metrics. Exit codes: 0 ok, 1 executor error,
// 2 usage error.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "warpp/common.hpp"
#include "warpp/metrics.hpp"

namespace warpp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitExecutor = 1;
inline constexpr int kExitUsage = 2;

class UsageError : public Error {
 public:
  using Error::Error;
};

struct ExperimentConfig {
  std::vector<std::string> domains;  // empty: all
  std::vector<std::string> intents;  // registry ids or workflow intents; empty: all in domains
  std::vector<std::string> modes = {"react", "noper", "warpp"};
  std::size_t n = 50;
  std::uint64_t seed = 2024;
  std::string perturb;  // PerturbSpec text; empty for none
  bool failures = false;
  bool wall_clock = false;
  double turn_ms = 0;
  double trim_ms = 0;
  Json latencies = Json::object();
  std::size_t workers = 0;  // 0: hardware concurrency, capped at 8
  std::filesystem::path out = "out";
  std::filesystem::path fixtures;  // empty: compiled-in fixture dir

  // Keys mirror the long flag names.
  static ExperimentConfig from_json(const Json& j);
  Json to_json() const;
  // Hash over everything except the output and fixture locations.
  std::string hash() const;
  Json artifact_meta() const;
};

int cmd_generate(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_report(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace warpp
