#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orchvis/agent_registry.hpp"
#include "orchvis/conflict.hpp"
#include "orchvis/goal_model.hpp"
#include "orchvis/planner.hpp"
#include "orchvis/verifier.hpp"

namespace orchvis {

enum class Autonomy { manual, conflict_gated, auto_ };
enum class Phase { planning, executing, completed };

std::string_view to_string(Autonomy a);
Autonomy autonomy_from_string(std::string_view text);
std::string_view to_string(Phase p);
Phase phase_from_string(std::string_view text);

struct PausedBranch {
  std::string goal_id;
  std::vector<std::string> task_ids;
  std::map<std::string, TaskState> prior_tasks;
  std::string reason;  // conflict id, or "user"

  friend bool operator==(const PausedBranch&, const PausedBranch&) = default;
};

Json to_json(const PausedBranch& b);
PausedBranch branch_from_json(const Json& j);

struct PendingApproval {
  std::string conflict_id;
  std::string candidate_id;

  friend bool operator==(const PendingApproval&, const PendingApproval&) = default;
};

struct SessionState {
  std::string session_id;
  std::string scenario;
  std::uint64_t seed = 0;
  VerifierConfig config;
  Autonomy autonomy = Autonomy::conflict_gated;
  Phase phase = Phase::planning;

  GoalGraph goals;
  TaskGraph tasks;
  MatchReport match;
  AgentOverrides overrides;

  std::map<std::string, EvidenceRecord> evidence;        // by goal
  std::map<std::string, EvidenceRecord> deferred;        // by task, completed while paused
  std::map<std::string, VerificationReport> reports;     // by goal
  std::map<std::string, ConflictRecord> conflicts;       // open, by id
  std::vector<ConflictRecord> resolved;
  std::map<std::string, std::vector<RepairCandidate>> proposals;  // latest, by conflict id
  std::optional<PendingApproval> pending;
  std::vector<PausedBranch> paused;
  std::vector<std::string> applied_candidates;
  std::int64_t seq = 0;

  const PausedBranch* branch_of_task(const std::string& task_id) const;
  std::vector<EvidenceRecord> evidence_list() const;

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

Json state_to_json(const SessionState& s);

enum class EventKind {
  GoalUpdated,
  TaskStarted,
  TaskCompleted,
  TaskFailed,
  VerificationReport,
  ConflictDetected,
  RepairProposed,
  PlanUpdated,
  BranchPaused,
  BranchResumed,
  AutonomyChanged,
  SessionCompleted
};

std::string_view to_string(EventKind k);
EventKind event_kind_from_string(std::string_view text);

struct Event {
  std::int64_t seq = 0;
  std::string timestamp;
  EventKind kind = EventKind::GoalUpdated;
  Json payload;

  friend bool operator==(const Event&, const Event&) = default;
};

Json to_json(const Event& e);
Event event_from_json(const Json& j);
// One compact line, no trailing newline.
std::string event_line(const Event& e);

enum class CommandKind { start, task_finished, pause_branch, resume_branch, apply_plan_update, set_autonomy, user_edit };
enum class Origin { user, system, agent };

std::string_view to_string(CommandKind k);
CommandKind command_kind_from_string(std::string_view text);
std::string_view to_string(Origin o);
Origin origin_from_string(std::string_view text);

struct Command {
  CommandKind kind = CommandKind::start;
  Json payload = Json::object();
  Origin origin = Origin::user;
};

Json to_json(const Command& c);
// Checks the payload schema for the kind. Throws invalid-command.
Command command_from_json(const Json& j);

// The only state transition: every mutation is an event applied here.
void apply_event(SessionState& state, const Event& event);
SessionState fold(const std::vector<Event>& events);

}  // namespace orchvis
