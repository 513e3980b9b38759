#include "orchvis/scenario.hpp"

#include <algorithm>
#include <filesystem>

#include "orchvis/goal_dsl.hpp"
#include "orchvis/json_util.hpp"

namespace orchvis {

using namespace jsonu;
namespace fs = std::filesystem;

namespace {

std::string resolve(const fs::path& base, const std::string& rel) { return (base / rel).lexically_normal().string(); }

}  // namespace

Scenario load_scenario(const std::string& path) {
  Json j = read_file(path);
  expect_object(j, "$", {"name", "goals", "ontology", "agents", "fixtures"},
                {"description", "task_text", "faults", "config", "expected_conflicts"});
  fs::path base = fs::path(path).parent_path();
  Scenario s;
  s.path = path;
  s.name = get_string(j, "name", "$");
  if (j.contains("description")) s.description = get_string(j, "description", "$");
  if (j.contains("task_text")) s.task_text = get_string(j, "task_text", "$");
  s.ontology = std::make_shared<const Ontology>(Ontology::load(resolve(base, get_string(j, "ontology", "$"))));
  s.goals = graph_from_json(read_file(resolve(base, get_string(j, "goals", "$"))), *s.ontology);
  s.registry = AgentRegistry::load(resolve(base, get_string(j, "agents", "$")));
  const Json& fixtures = get_array(j, "fixtures", "$");
  for (std::size_t i = 0; i < fixtures.size(); ++i) {
    if (!fixtures[i].is_string()) schema_error(index("$.fixtures", i), "expected a path");
    std::string file = resolve(base, fixtures[i].get<std::string>());
    s.fixtures.add(fixture_table_from_json(read_file(file), file));
  }
  if (j.contains("faults")) s.faults = fault_schedule_from_json(j["faults"], "$.faults");
  if (j.contains("config")) s.config = verifier_config_from_json(j["config"], "$.config");
  s.config.validate();
  if (j.contains("expected_conflicts")) {
    const Json& list = get_array(j, "expected_conflicts", "$");
    for (std::size_t i = 0; i < list.size(); ++i) {
      std::string p = index("$.expected_conflicts", i);
      expect_object(list[i], p, {"kind", "involved_goal_ids"});
      ExpectedConflict e;
      try {
        e.kind = conflict_kind_from_string(get_string(list[i], "kind", p));
      } catch (const Error&) {
        schema_error(child(p, "kind"), "unknown conflict kind");
      }
      for (const auto& g : get_array(list[i], "involved_goal_ids", p)) e.involved_goal_ids.push_back(g.get<std::string>());
      std::sort(e.involved_goal_ids.begin(), e.involved_goal_ids.end());
      s.expected.push_back(std::move(e));
    }
  }
  return s;
}

std::vector<std::string> scenario_files(const std::string& data_dir) {
  std::vector<std::string> out;
  fs::path dir = fs::path(data_dir) / "scenarios";
  if (!fs::exists(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") out.push_back(entry.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string session_id_for(const Scenario& s, Autonomy autonomy, std::uint64_t seed) {
  return s.name + "-" + std::string(to_string(autonomy)) + "-" + std::to_string(seed);
}

RunOutcome run_scenario(const Scenario& scenario, Autonomy autonomy, std::uint64_t seed,
                        const FaultSchedule* faults_override) {
  Env env = scenario.env();
  SimulatedAgents agents(scenario.registry, scenario.fixtures, faults_override ? *faults_override : scenario.faults,
                         *scenario.ontology, seed);
  SessionRunner runner(env, agents);
  runner.begin(SessionInit{session_id_for(scenario, autonomy, seed), scenario.name, seed, scenario.config, autonomy,
                           scenario.goals});
  Command start;
  start.kind = CommandKind::start;
  start.origin = Origin::user;
  runner.submit(start);
  RunOutcome out;
  out.state = runner.state();
  out.events = runner.events();
  out.exit_code = exit_code_for(out.state);
  return out;
}

int exit_code_for(const SessionState& state) {
  if (state.phase == Phase::completed) {
    return state.goals.at(state.goals.root).status == GoalStatus::achieved ? 0 : 1;
  }
  if (state.phase == Phase::executing && awaiting_user(state) &&
      (!state.conflicts.empty() || state.pending || !state.paused.empty())) {
    return 2;
  }
  return 1;
}

Json build_report(const std::vector<Event>& events, const std::string& log_path) {
  SessionState state = fold(events);
  Json reports = Json::array(), conflicts = Json::array(), proposals = Json::array(), applied = Json::array();
  std::map<std::string, RepairCandidate> known;
  for (const auto& e : events) {
    const Json& p = e.payload;
    switch (e.kind) {
      case EventKind::VerificationReport: reports.push_back(p.at("report")); break;
      case EventKind::ConflictDetected: {
        Json c = p.at("conflict");
        std::string id = c.at("id");
        c["status"] = state.conflicts.count(id) ? "open" : "resolved";
        conflicts.push_back(c);
        break;
      }
      case EventKind::RepairProposed: {
        Json ids = Json::array();
        for (const auto& c : p.at("candidates")) {
          auto cand = candidate_from_json(c);
          ids.push_back(cand.id);
          known[cand.id] = cand;
        }
        Json entry{{"seq", e.seq}, {"conflict_id", p.at("conflict_id")}, {"candidates", p.at("candidates")},
                   {"awaiting", p.at("awaiting")}};
        if (p.contains("selected")) entry["selected"] = p.at("selected");
        proposals.push_back(entry);
        break;
      }
      case EventKind::PlanUpdated:
        if (p.contains("candidate_id")) {
          std::string id = p.at("candidate_id");
          Json entry{{"seq", e.seq}, {"candidate_id", id}, {"moves", p.at("moves")},
                     {"resolved_conflicts", p.value("resolved_conflicts", Json::array())}};
          if (known.count(id)) entry["predicted"] = to_json(known.at(id).predicted);
          applied.push_back(entry);
        }
        break;
      default: break;
    }
  }
  Json statuses = Json::object();
  for (const auto& [id, n] : state.goals.nodes) statuses[id] = std::string(to_string(n.status));
  return Json{{"session_id", state.session_id},
              {"scenario", state.scenario},
              {"seed", state.seed},
              {"autonomy", std::string(to_string(state.autonomy))},
              {"exit_code", exit_code_for(state)},
              {"phase", std::string(to_string(state.phase))},
              {"root_status", state.goals.nodes.empty() ? Json(nullptr)
                                                        : Json(std::string(to_string(state.goals.at(state.goals.root).status)))},
              {"statuses", statuses},
              {"verification_reports", reports},
              {"conflicts", conflicts},
              {"repair_proposals", proposals},
              {"applied_repairs", applied},
              {"event_count", events.size()},
              {"event_log", log_path},
              {"final_state", state_to_json(state)}};
}

}  // namespace orchvis
