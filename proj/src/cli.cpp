#include "warpp/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "warpp/catalog.hpp"
#include "warpp/datagen.hpp"
#include "warpp/orchestration.hpp"
#include "warpp/personalizer.hpp"

namespace fs = std::filesystem;

namespace warpp {

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw UsageError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

std::vector<std::string> json_strings(const Json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  const Json v = j.at(key);
  if (v.is_string()) return split(v.get<std::string>(), ',');
  for (const auto& s : v) out.push_back(s.get<std::string>());
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  static const std::set<std::string> known = {"domains", "intents", "modes",  "n",         "seed",
                                              "perturb", "failures", "wall_clock", "turn_ms", "trim_ms",
                                              "latencies", "workers", "out",    "fixtures"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw UsageError("unknown config key '" + k + "'");
  ExperimentConfig c;
  try {
    c.domains = json_strings(j, "domains");
    c.intents = json_strings(j, "intents");
    if (j.contains("modes")) c.modes = json_strings(j, "modes");
    c.n = j.value("n", c.n);
    c.seed = j.value("seed", c.seed);
    c.perturb = j.value("perturb", c.perturb);
    c.failures = j.value("failures", c.failures);
    c.wall_clock = j.value("wall_clock", c.wall_clock);
    c.turn_ms = j.value("turn_ms", c.turn_ms);
    c.trim_ms = j.value("trim_ms", c.trim_ms);
    c.latencies = j.value("latencies", c.latencies);
    c.workers = j.value("workers", c.workers);
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("fixtures")) c.fixtures = j.at("fixtures").get<std::string>();
  } catch (const Json::exception& e) {
    throw UsageError(std::string("bad config: ") + e.what());
  }
  return c;
}

Json ExperimentConfig::to_json() const {
  return {{"domains", domains}, {"intents", intents},       {"modes", modes},     {"n", n},
          {"seed", seed},       {"perturb", perturb},       {"failures", failures}, {"wall_clock", wall_clock},
          {"turn_ms", turn_ms}, {"trim_ms", trim_ms},       {"latencies", latencies}, {"workers", workers},
          {"out", out.string()}, {"fixtures", fixtures.string()}};
}

std::string ExperimentConfig::hash() const {
  Json j = to_json();
  // Locations and parallelism do not change any artifact.
  j.erase("out");
  j.erase("fixtures");
  j.erase("workers");
  return hex64(fnv1a(j.dump()));
}

Json ExperimentConfig::artifact_meta() const {
  return {{"config_hash", hash()}, {"seed", seed}, {"engine", std::string(kEngineVersion)}};
}

namespace {

struct Context {
  Catalog catalog;
  std::vector<const IntentEntry*> intents;
  std::vector<Mode> modes;
};

Context open_context(const ExperimentConfig& cfg) {
  Context ctx;
  ctx.catalog = load_catalog(cfg.fixtures.empty() ? default_fixture_dir() : cfg.fixtures);
  const auto all_domains = ctx.catalog.domains();
  std::set<std::string> domains;
  for (const auto& d : cfg.domains) {
    const std::string name = trim_copy(d);
    if (std::find(all_domains.begin(), all_domains.end(), name) == all_domains.end())
      throw UsageError("unknown domain '" + name + "'");
    domains.insert(name);
  }
  std::set<std::string> picked;
  for (const auto& i : cfg.intents) {
    const std::string name = trim_copy(i);
    const IntentEntry* e = ctx.catalog.find(name);
    if (!e) throw UsageError("unknown intent '" + name + "'");
    if (!domains.empty() && !domains.count(e->domain))
      throw UsageError("intent '" + name + "' is not in the selected domains");
    picked.insert(e->id);
  }
  for (const auto& e : ctx.catalog.entries) {
    const bool want = picked.empty() ? (domains.empty() || domains.count(e.domain)) : picked.count(e.id) > 0;
    if (want) ctx.intents.push_back(&e);
  }
  if (ctx.intents.empty()) throw UsageError("no intents selected");

  std::set<Mode> modes;
  for (const auto& m : cfg.modes) {
    try {
      modes.insert(parse_mode(trim_copy(m)));
    } catch (const Error&) {
      throw UsageError("unknown mode '" + m + "'");
    }
  }
  if (modes.empty()) throw UsageError("no modes selected");
  ctx.modes.assign(modes.begin(), modes.end());
  return ctx;
}

SessionConfig session_config(const ExperimentConfig& cfg) {
  SessionConfig s;
  s.inject_failures = cfg.failures;
  s.turn_ms = cfg.turn_ms;
  s.trim_ms = cfg.trim_ms;
  s.latencies = cfg.latencies;
  return s;
}

// Base seed of one intent's sessions, so that session ids differ across intents.
std::uint64_t intent_seed(const ExperimentConfig& cfg, const IntentEntry& e) {
  return derive_seed(cfg.seed, "intent:" + e.id, 0);
}

std::size_t worker_count(const ExperimentConfig& cfg) {
  if (cfg.workers) return cfg.workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return std::clamp<std::size_t>(hw ? hw : 1, 1, 8);
}

// Runs fn(i) for i in [0, n) on a bounded pool. Results are indexed, so the
// order of completion never shows in the output. Returns one error message
// per failed index, empty when fn succeeded.
std::vector<std::string> parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (errors[i].empty()) errors[i] = "error";
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < std::min(workers, n); ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return errors;
}

fs::path profiles_path(const ExperimentConfig& cfg, const IntentEntry& e) {
  return cfg.out / "profiles" / (e.id + ".json");
}

fs::path ground_truth_path(const ExperimentConfig& cfg, Mode m, const IntentEntry& e) {
  return cfg.out / "ground_truth" / std::string(mode_name(m)) / (e.id + ".jsonl");
}

fs::path runs_dir(const ExperimentConfig& cfg, Mode m, const IntentEntry& e) {
  return cfg.out / "runs" / std::string(mode_name(m)) / e.id;
}

std::uint64_t artifact_seed(const Json& meta, const std::string& where) {
  if (!meta.contains("artifact") || !meta.at("artifact").contains("seed"))
    throw UsageError(where + " carries no seed");
  return meta.at("artifact").at("seed").get<std::uint64_t>();
}

}  // namespace

int cmd_generate(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  const Context ctx = open_context(cfg);
  const Json meta = cfg.artifact_meta();
  const SessionConfig base = session_config(cfg);
  const std::size_t workers = worker_count(cfg);
  std::size_t failures = 0;
  for (const IntentEntry* e : ctx.intents) {
    const IntentSchema schema = ctx.catalog.schema(*e);
    check_schema_covers(schema, ctx.catalog.workflow(*e), ctx.catalog.tools(*e));
    const auto profiles = generate_profiles(schema, cfg.n, cfg.seed);
    Json plist = Json::array();
    for (const auto& p : profiles) plist.push_back(p.to_json());
    write_file(profiles_path(cfg, *e), Json{{"meta", meta}, {"profiles", plist}}.dump(2) + "\n");

    const std::uint64_t seed = intent_seed(cfg, *e);
    for (Mode m : ctx.modes) {
      std::vector<std::string> lines(profiles.size());
      const auto errors = parallel_for(profiles.size(), workers, [&](std::size_t i) {
        GroundTruth g = generate_ground_truth(ctx.catalog, profiles[i], m, session_seed(seed, i), base);
        g.trajectory.meta["artifact"] = meta;
        lines[i] = g.to_json().dump();
      });
      std::string text;
      for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!errors[i].empty()) {
          ++failures;
          err << "generate: " << e->id << "/" << mode_name(m) << " profile " << profiles[i].customer_id << ": "
              << errors[i] << "\n";
          continue;
        }
        text += lines[i] + "\n";
      }
      write_file(ground_truth_path(cfg, m, *e), text);
    }
    out << "generated " << profiles.size() << " profiles for " << e->id << "\n";
  }
  return failures ? kExitExecutor : kExitOk;
}

int cmd_run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  const Context ctx = open_context(cfg);
  const Json meta = cfg.artifact_meta();
  const SessionConfig base = session_config(cfg);
  const std::size_t workers = worker_count(cfg);
  std::optional<PerturbSpec> spec;
  if (!cfg.perturb.empty()) {
    try {
      spec = PerturbSpec::parse(cfg.perturb);
    } catch (const Error& e) {
      throw UsageError(std::string("bad --perturb: ") + e.what());
    }
  }
  std::size_t failures = 0;
  for (const IntentEntry* e : ctx.intents) {
    const fs::path pfile = profiles_path(cfg, *e);
    if (!fs::exists(pfile)) throw UsageError("missing " + pfile.string() + "; run generate first");
    const Json doc = Json::parse(read_file(pfile));
    if (doc.at("meta").at("seed").get<std::uint64_t>() != cfg.seed)
      throw UsageError(pfile.string() + " was generated with a different seed");
    std::vector<UserProfile> profiles;
    for (const auto& p : doc.at("profiles")) profiles.push_back(UserProfile::from_json(p));

    const std::uint64_t seed = intent_seed(cfg, *e);
    for (Mode m : ctx.modes) {
      const fs::path dir = runs_dir(cfg, m, *e);
      fs::remove_all(dir);
      fs::create_directories(dir);
      const auto errors = parallel_for(profiles.size(), workers, [&](std::size_t i) {
        SessionConfig sc = base;
        sc.seed = session_seed(seed, i);
        const auto t0 = std::chrono::steady_clock::now();
        Session s = simulate(ctx.catalog, profiles[i], m, sc);
        Trajectory t = std::move(s.trajectory);
        if (spec && !spec->identity()) t = perturb(t, *spec, derive_seed(sc.seed, mode_name(m), 0));
        t.meta["artifact"] = meta;
        if (cfg.wall_clock) {
          const std::chrono::duration<double, std::milli> d = std::chrono::steady_clock::now() - t0;
          t.meta["wall_ms"] = round2(d.count());
        }
        write_file(dir / (std::to_string(profiles[i].customer_id) + ".jsonl"), t.to_jsonl());
      });
      std::size_t ok = 0;
      for (std::size_t i = 0; i < errors.size(); ++i) {
        if (errors[i].empty()) {
          ++ok;
          continue;
        }
        ++failures;
        err << "run: " << e->id << "/" << mode_name(m) << " profile " << profiles[i].customer_id << ": " << errors[i]
            << "\n";
      }
      out << "ran " << ok << "/" << profiles.size() << " " << mode_name(m) << " sessions for " << e->id << "\n";
    }
  }
  return failures ? kExitExecutor : kExitOk;
}

namespace {

std::string cell(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", round2(*v));
  return buf;
}

void print_summary(const std::vector<ReportRow>& rows, std::ostream& out) {
  const auto& cols = report_columns();
  const std::vector<std::string> shown = {"Exact Match", "LCS Tools", "Tool F1", "Param Match (%)", "Token Usage"};
  std::vector<std::size_t> idx;
  for (const auto& s : shown) idx.push_back(std::find(cols.begin(), cols.end(), s) - cols.begin());
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-26s %-6s %4s %8s %8s %8s %8s %10s\n", "intent", "mode", "n", "exact", "lcs", "f1",
                "params", "tokens");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-26s %-6s %4zu %8s %8s %8s %8s %10s\n", r.intent.c_str(), r.mode.c_str(), r.n,
                  cell(r.values[idx[0]]).c_str(), cell(r.values[idx[1]]).c_str(), cell(r.values[idx[2]]).c_str(),
                  cell(r.values[idx[3]]).c_str(), cell(r.values[idx[4]]).c_str());
    out << buf;
  }
}

}  // namespace

int cmd_report(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  const Context ctx = open_context(cfg);
  std::vector<RunMetrics> scored;
  std::set<std::uint64_t> seeds;
  std::set<std::string> hashes;
  for (const IntentEntry* e : ctx.intents) {
    for (Mode m : ctx.modes) {
      const fs::path dir = runs_dir(cfg, m, *e);
      if (!fs::is_directory(dir)) continue;
      std::vector<fs::path> files;
      for (const auto& f : fs::directory_iterator(dir))
        if (f.path().extension() == ".jsonl") files.push_back(f.path());
      if (files.empty()) continue;

      const fs::path gfile = ground_truth_path(cfg, m, *e);
      if (!fs::exists(gfile)) throw UsageError("missing ground truth " + gfile.string());
      std::map<std::int64_t, GroundTruth> truth;
      std::vector<std::int64_t> order;
      std::istringstream lines(read_file(gfile));
      for (std::string line; std::getline(lines, line);) {
        if (trim_copy(line).empty()) continue;
        GroundTruth g = GroundTruth::from_json(Json::parse(line));
        seeds.insert(artifact_seed(g.trajectory.meta, gfile.string()));
        order.push_back(g.profile_id);
        truth.emplace(g.profile_id, std::move(g));
      }

      std::map<std::int64_t, Trajectory> preds;
      for (const auto& f : files) {
        Trajectory t = Trajectory::from_jsonl(read_file(f));
        seeds.insert(artifact_seed(t.meta, f.string()));
        hashes.insert(t.meta.at("artifact").value("config_hash", std::string()));
        std::int64_t id = 0;
        try {
          id = std::stoll(f.stem().string());
        } catch (const std::exception&) {
          throw UsageError("unexpected run file " + f.string());
        }
        if (!truth.count(id)) throw UsageError("no ground truth for " + f.string());
        preds.emplace(id, std::move(t));
      }
      // Ground-truth order keeps the report independent of directory listing order.
      for (std::int64_t id : order) {
        auto it = preds.find(id);
        if (it == preds.end()) continue;
        scored.push_back(score_run(it->second, truth.at(id).trajectory, e->id, std::string(mode_name(m))));
      }
    }
  }
  if (scored.empty()) throw UsageError("no run trajectories under " + (cfg.out / "runs").string());
  if (seeds.size() > 1) throw UsageError("inputs were produced with different seeds");

  std::string hash;
  for (const auto& h : hashes) hash += (hash.empty() ? "" : "+") + h;
  const Json meta = {{"config_hash", hash}, {"seed", *seeds.begin()}, {"engine", std::string(kEngineVersion)}};
  const auto rows = aggregate(scored);
  write_file(cfg.out / "report" / "metrics.csv", report_csv(rows, meta));
  write_file(cfg.out / "report" / "metrics.json", report_json(rows, meta).dump(2) + "\n");
  print_summary(rows, out);
  (void)err;
  return kExitOk;
}

namespace {

int cmd_trim(const ExperimentConfig& cfg, const fs::path& profiles_file, std::optional<std::int64_t> customer, bool as_json,
             std::ostream& out) {
  const Catalog cat = load_catalog(cfg.fixtures.empty() ? default_fixture_dir() : cfg.fixtures);
  const fs::path file = profiles_file.empty() ? cat.root / "sample_profiles.json" : profiles_file;
  if (!fs::exists(file)) throw UsageError("missing " + file.string());
  std::size_t shown = 0;
  for (const auto& p : load_profiles(file)) {
    if (customer && p.customer_id != *customer) continue;
    const IntentEntry* e = cat.find(p.intent);
    if (!e) throw UsageError("unknown intent '" + p.intent + "'");
    const wf::Workflow w = cat.workflow(*e);
    const ClientData c = p.client_data(cat.tools(*e));
    const TrimResult r = trim(w, c);
    if (as_json) {
      Json j = r.to_json();
      j["customer_id"] = p.customer_id;
      j["intent"] = e->id;
      out << j.dump() << "\n";
    } else {
      out << "# customer " << p.customer_id << " " << e->id << "\n" << serialize_workflow(r.workflow);
    }
    ++shown;
  }
  if (!shown) throw UsageError("no matching profile in " + file.string());
  return kExitOk;
}

int cmd_validate(const ExperimentConfig& cfg, const fs::path& workflow_file, const fs::path& tools_file,
                 std::ostream& out, std::ostream& err) {
  if (!workflow_file.empty()) {
    std::set<std::string> names;
    wf::ValidateOptions opts;
    if (!tools_file.empty()) {
      for (const auto& t : load_toolset(tools_file).names()) names.insert(t);
      opts.tools = &names;
    }
    try {
      wf::parse_workflow(read_file(workflow_file), opts);
    } catch (const Error& e) {
      err << workflow_file.string() << ": " << e.what() << "\n";
      return kExitExecutor;
    }
    out << "ok " << workflow_file.string() << "\n";
    return kExitOk;
  }
  const Catalog cat = load_catalog(cfg.fixtures.empty() ? default_fixture_dir() : cfg.fixtures);
  std::size_t bad = 0;
  for (const auto& e : cat.entries) {
    try {
      const ToolSet tools = cat.tools(e);
      std::set<std::string> names;
      for (const auto& t : tools.names()) names.insert(t);
      for (const auto& t : system_toolset().names()) names.insert(t);
      wf::ValidateOptions opts;
      opts.tools = &names;
      const wf::Workflow w = wf::parse_workflow(read_file(cat.root / e.workflow), opts);
      check_schema_covers(cat.schema(e), w, tools);
      out << "ok " << e.id << "\n";
    } catch (const Error& ex) {
      ++bad;
      err << e.id << ": " << ex.what() << "\n";
    }
  }
  return bad ? kExitExecutor : kExitOk;
}

}  // namespace

namespace {

// Flag values are collected separately so that a --config file can supply
// the base and only flags that were actually given override it.
struct Flags {
  std::string config;
  std::vector<std::string> domains, intents, modes;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string perturb;
  std::string out, fixtures;
  std::size_t workers = 0;
  double turn_ms = 0, trim_ms = 0;
  std::string latencies;
  bool failures = false, virtual_clock = false, wall_clock = false;
  std::map<std::string, CLI::Option*> opt;

  void add_common(CLI::App& app) {
    opt["config"] = app.add_option("--config", config, "JSON experiment config; flags override it");
    opt["out"] = app.add_option("--out", out, "output directory (default out)");
    opt["fixtures"] = app.add_option("--fixtures", fixtures, "fixture root");
    opt["domains"] = app.add_option("--domains", domains, "comma-separated domains")->delimiter(',');
    opt["intents"] = app.add_option("--intents", intents, "comma-separated intents")->delimiter(',');
    opt["modes"] = app.add_option("--modes", modes, "subset of react,noper,warpp")->delimiter(',');
    opt["seed"] = app.add_option("--seed", seed, "run seed (default 2024)");
    opt["failures"] = app.add_flag("--failures", failures, "inject seeded tool failures");
    opt["latencies"] = app.add_option("--latencies", latencies, "JSON object of tool -> latency ms");
    opt["turn_ms"] = app.add_option("--turn-ms", turn_ms, "virtual cost of each dialogue turn");
    opt["trim_ms"] = app.add_option("--trim-ms", trim_ms, "virtual cost of the trim");
    opt["workers"] = app.add_option("--workers", workers, "worker threads (default: cores, at most 8)");
  }

  void add_session(CLI::App& app) {
    opt["n"] = app.add_option("--n", n, "profiles per intent (default 50)");
    opt["perturb"] = app.add_option("--perturb", perturb, "drop=P,swap=P,corrupt=P,hallucinate=P");
    opt["virtual_clock"] = app.add_flag("--virtual-clock", virtual_clock, "simulated latencies only (default)");
    opt["wall_clock"] = app.add_flag("--wall-clock", wall_clock, "also record measured wall time per session");
    opt["wall_clock"]->excludes(opt["virtual_clock"]);
  }

  bool given(const char* k) const {
    auto it = opt.find(k);
    return it != opt.end() && it->second->count() > 0;
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c;
    if (given("config")) {
      Json j;
      try {
        j = Json::parse(read_file(config));
      } catch (const Json::exception& e) {
        throw UsageError("config " + config + ": " + e.what());
      }
      c = ExperimentConfig::from_json(j);
    }
    if (given("out")) c.out = out;
    if (given("fixtures")) c.fixtures = fixtures;
    if (given("domains")) c.domains = domains;
    if (given("intents")) c.intents = intents;
    if (given("modes")) c.modes = modes;
    if (given("seed")) c.seed = seed;
    if (given("failures")) c.failures = failures;
    if (given("turn_ms")) c.turn_ms = turn_ms;
    if (given("trim_ms")) c.trim_ms = trim_ms;
    if (given("workers")) c.workers = workers;
    if (given("n")) c.n = n;
    if (given("perturb")) c.perturb = perturb;
    if (given("wall_clock")) c.wall_clock = true;
    if (given("virtual_clock")) c.wall_clock = false;
    if (given("latencies")) {
      try {
        c.latencies = Json::parse(latencies);
      } catch (const Json::exception& e) {
        throw UsageError(std::string("--latencies: ") + e.what());
      }
    }
    if (!c.latencies.is_object()) throw UsageError("latencies must be a JSON object");
    if (c.n == 0) throw UsageError("--n must be at least 1");
    return c;
  }
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"warpp: workflow personalization experiments"};
  app.require_subcommand(1);
  Flags gen, run, rep, tr, val;

  CLI::App* g = app.add_subcommand("generate", "write profiles and per-mode ground truth");
  gen.add_common(*g);
  gen.add_session(*g);
  CLI::App* r = app.add_subcommand("run", "run sessions over generated profiles");
  run.add_common(*r);
  run.add_session(*r);
  CLI::App* p = app.add_subcommand("report", "score runs against ground truth");
  rep.add_common(*p);

  CLI::App* t = app.add_subcommand("trim", "print personalized workflows for profile records");
  std::string trim_profiles;
  std::int64_t trim_customer = 0;
  bool trim_json = false;
  tr.opt["fixtures"] = t->add_option("--fixtures", tr.fixtures, "fixture root");
  t->add_option("--profiles", trim_profiles, "profile file (default: the fixture sample records)");
  CLI::Option* cust = t->add_option("--customer", trim_customer, "only this customer id");
  t->add_flag("--json", trim_json, "emit the trim result as JSON lines");

  CLI::App* v = app.add_subcommand("validate", "check workflows, tool manifests and schemas");
  std::string val_workflow, val_tools;
  val.opt["fixtures"] = v->add_option("--fixtures", val.fixtures, "fixture root");
  v->add_option("--workflow", val_workflow, "validate one workflow file instead");
  v->add_option("--tools", val_tools, "tool manifest used to resolve --workflow");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_generate(gen.resolve(), out, err);
    if (r->parsed()) return cmd_run(run.resolve(), out, err);
    if (p->parsed()) return cmd_report(rep.resolve(), out, err);
    if (t->parsed()) {
      std::optional<std::int64_t> c;
      if (cust->count()) c = trim_customer;
      return cmd_trim(tr.resolve(), trim_profiles, c, trim_json, out);
    }
    if (v->parsed()) return cmd_validate(val.resolve(), val_workflow, val_tools, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitExecutor;
  }
  return kExitUsage;
}

}  // namespace warpp
