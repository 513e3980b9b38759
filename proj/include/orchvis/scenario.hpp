#pragma once

#include <memory>
#include <string>
#include <vector>

#include "orchvis/executor.hpp"

namespace orchvis {

struct ExpectedConflict {
  ConflictKind kind = ConflictKind::temporal_overlap;
  std::vector<std::string> involved_goal_ids;  // sorted
};

// A goal document with its agents, fixture tables, fault schedule and
// expected-conflict annotations. Paths inside the file are relative to it.
struct Scenario {
  std::string name;
  std::string description;
  std::string task_text;
  std::string path;
  GoalGraph goals;
  std::shared_ptr<const Ontology> ontology;
  AgentRegistry registry;
  FixtureSet fixtures;
  FaultSchedule faults;
  VerifierConfig config;
  std::vector<ExpectedConflict> expected;

  Env env() const { return Env{*ontology, registry, fixtures}; }
};

// Throws schema-error (with the offending path) and io-error.
Scenario load_scenario(const std::string& path);
std::vector<std::string> scenario_files(const std::string& data_dir);

struct RunOutcome {
  SessionState state;
  std::vector<Event> events;
  int exit_code = 1;
};

// Deterministic session id for a run.
std::string session_id_for(const Scenario& s, Autonomy autonomy, std::uint64_t seed);

// begin, confirm (start), then drive the agents until nothing moves without
// a human.
RunOutcome run_scenario(const Scenario& scenario, Autonomy autonomy, std::uint64_t seed,
                        const FaultSchedule* faults_override = nullptr);

// 0: completed with the root achieved; 2: waiting on a human (open conflict,
// pending approval or user pause); 1 otherwise.
int exit_code_for(const SessionState& state);

// Final statuses, every VerificationReport and ConflictRecord in log order,
// proposed and applied repairs, the folded final state and the log path.
// Built from the log alone so a replay reproduces it exactly.
Json build_report(const std::vector<Event>& events, const std::string& log_path);

}  // namespace orchvis
