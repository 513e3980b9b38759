#include "orchvis/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <pthread.h>
#include <thread>

#include "CLI11.hpp"
#include "orchvis/goal_dsl.hpp"
#include "orchvis/json_util.hpp"
#include "orchvis/service.hpp"

namespace orchvis {

namespace fs = std::filesystem;

namespace {

struct RunOptions {
  std::string scenario;
  std::string autonomy = "conflict_gated";
  std::uint64_t seed = 0;
  std::string out;
  std::string log;
  bool llm = false;
};

struct VerifyOptions {
  std::string goals;
  std::string evidence;
  double lambda = 0.5;
  std::string ontology;
};

struct ServeOptions {
  int port = 0;
  std::string data_dir;
};

std::string data_dir_from_env() {
  const char* d = std::getenv("ORCHVIS_DATA_DIR");
  return d && *d ? d : ORCHVIS_DATA_DIR_DEFAULT;
}

// Parse failures name the file they came from.
template <typename F>
auto from_file(const std::string& path, F parse) {
  try {
    return parse();
  } catch (const Error& e) {
    if (e.code() != "syntax-error" && e.code() != "schema-error") throw;
    Json detail = e.detail();
    detail["file"] = path;
    throw Error(e.code(), path + ": " + e.what(), detail);
  }
}

// An external-endpoint proposal for the scenario's task text.
GoalGraph goals_from_llm(const Scenario& sc) {
  if (sc.task_text.empty()) throw Error("invalid-command", "scenario has no task_text for --llm", Json{{"scenario", sc.name}});
  auto backend = register_backend({"external-endpoint", {}, {}});
  IntentRequest req;
  req.task_text = sc.task_text;
  req.ontology = sc.ontology;
  req.exemplars = load_exemplars((fs::path(data_dir_from_env()) / "exemplars.json").string(), *sc.ontology);
  return propose_goals(req, *backend).graph;
}

int do_run(const RunOptions& o, std::ostream& out) {
  Autonomy autonomy;
  try {
    autonomy = autonomy_from_string(o.autonomy);
  } catch (const Error&) {
    throw Error("invalid-command", "unknown autonomy level '" + o.autonomy + "'", Json{{"autonomy", o.autonomy}});
  }
  Scenario sc = load_scenario(o.scenario);
  if (o.llm) sc.goals = goals_from_llm(sc);
  std::string log = o.log.empty() ? default_log_path(o.out) : o.log;
  auto run = run_scenario(sc, autonomy, o.seed);
  write_log(log, run.events);
  Json report = build_report(run.events, log);
  jsonu::write_file(o.out, jsonu::canonical(report));
  out << "exit " << run.exit_code << ": phase " << to_string(run.state.phase) << ", " << run.state.conflicts.size()
      << " open conflict(s), " << run.events.size() << " events in " << log << "\n";
  return run.exit_code;
}

int do_verify(const VerifyOptions& o, std::ostream& out) {
  Ontology ontology = Ontology::load(o.ontology.empty() ? (fs::path(data_dir_from_env()) / "ontology.json").string()
                                                        : o.ontology);
  GoalGraph graph = from_file(o.goals, [&] { return parse_document(jsonu::read_text(o.goals), ontology); });
  VerifierConfig config;
  config.lambda = o.lambda;
  config.validate();
  Json j = jsonu::read_file(o.evidence);
  Json list = j.is_object() && j.contains("evidence") ? j["evidence"] : j;
  if (list.is_object()) list = Json::array({list});
  Json reports = Json::array();
  from_file(o.evidence, [&] {
    if (!list.is_array()) jsonu::schema_error("$", "expected an evidence record, an array or {\"evidence\": [...]}");
    return 0;
  });
  for (std::size_t i = 0; i < list.size(); ++i) {
    auto rec = from_file(o.evidence, [&] { return evidence_from_json(list[i], jsonu::index("$.evidence", i)); });
    if (!graph.contains(rec.goal_id)) {
      throw Error("unknown-goal", "evidence names unknown goal '" + rec.goal_id + "'", Json{{"goal_id", rec.goal_id}});
    }
    reports.push_back(to_json(evaluate(graph.at(rec.goal_id), rec, config)));
  }
  out << jsonu::canonical(Json{{"lambda", o.lambda}, {"reports", reports}});
  return 0;
}

int do_replay(const std::string& log, std::ostream& out) {
  auto events = read_log(log);
  Json report = build_report(events, log);
  out << jsonu::canonical(report);
  return 0;
}

int do_serve(ServeOptions o, std::ostream& out) {
  if (o.data_dir.empty()) o.data_dir = data_dir_from_env();
  if (o.port == 0) {
    const char* p = std::getenv("ORCHVIS_PORT");
    o.port = p && *p ? std::atoi(p) : 8080;
  }
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ServiceConfig config;
  config.data_dir = o.data_dir;
  Service service(config);
  std::size_t recovered = service.recover();
  out << "orchvis serving on 127.0.0.1:" << o.port << " (data " << o.data_dir << ", " << recovered
      << " session(s) recovered)" << std::endl;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  waiter.detach();
  service.serve("0.0.0.0", o.port);
  return 0;
}

}  // namespace

std::string default_log_path(const std::string& out_path) {
  fs::path p(out_path);
  return (p.parent_path() / (p.stem().string() + ".events.jsonl")).string();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"orchvis: goal orchestration engine"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario end to end");
  run_cmd->add_option("--scenario", run.scenario, "Scenario file")->required();
  run_cmd->add_option("--autonomy", run.autonomy, "manual | conflict_gated | auto")
      ->check(CLI::IsMember({"manual", "conflict_gated", "auto"}));
  run_cmd->add_option("--seed", run.seed, "Fault tie-break seed");
  run_cmd->add_option("--out", run.out, "Report file")->required();
  run_cmd->add_option("--log", run.log, "Event log file (default: next to the report)");
  run_cmd->add_flag("--llm", run.llm, "Propose goals through the external endpoint");

  VerifyOptions verify;
  auto* verify_cmd = app.add_subcommand("verify", "Verify evidence against a goal document");
  verify_cmd->add_option("--goals", verify.goals, "Goal document")->required();
  verify_cmd->add_option("--evidence", verify.evidence, "Evidence file")->required();
  verify_cmd->add_option("--lambda", verify.lambda, "Soft constraint weight");
  verify_cmd->add_option("--ontology", verify.ontology, "Ontology file");

  std::string log;
  auto* replay_cmd = app.add_subcommand("replay", "Fold an event log and print the report");
  replay_cmd->add_option("--log", log, "Event log file")->required();

  ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--port", serve.port, "Port (default ORCHVIS_PORT or 8080)");
  serve_cmd->add_option("--data-dir", serve.data_dir, "Data directory (default ORCHVIS_DATA_DIR)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << jsonu::compact(Json{{"error", "usage"}, {"message", e.what()}, {"detail", Json::object()}}) << "\n";
    return 1;
  }

  try {
    if (*run_cmd) return do_run(run, out);
    if (*verify_cmd) return do_verify(verify, out);
    if (*replay_cmd) return do_replay(log, out);
    if (*serve_cmd) return do_serve(serve, out);
  } catch (const Error& e) {
    err << jsonu::compact(error_body(e)) << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << jsonu::compact(Json{{"error", "internal"}, {"message", e.what()}, {"detail", Json::object()}}) << "\n";
    return 1;
  }
  return 1;
}

}  // namespace orchvis
