#pragma once

#include <map>
#include <string>
#include <vector>

#include "orchvis/session.hpp"

namespace orchvis {

// Read-only collaborators shared by the conflict engine and the executor.
struct Env {
  const Ontology& ontology;
  const AgentRegistry& registry;
  const FixtureSet& fixtures;
};

// Pairs of exclusive-attention records from different goals whose intervals
// overlap with positive duration.
std::vector<ConflictRecord> detect_temporal(const std::map<std::string, EvidenceRecord>& evidence);

// Internal nodes with a hard money bound on price.amount whose descendants'
// evidence prices (same currency) sum past the bound.
std::vector<ConflictRecord> detect_budget(const GoalGraph& graph,
                                          const std::map<std::string, EvidenceRecord>& evidence);

// Runtime conflicts: temporal_overlap and budget_exceeded, ordered by kind
// then lowest goal id.
std::vector<ConflictRecord> detect(const SessionState& state);

// Plan-time feasibility over the fixture tables of the assigned agents, for
// goals that have no evidence yet: a goal with no hard-feasible row, an
// exclusive pair whose every feasible row pair overlaps, or cheapest options
// that already exceed an ancestor budget.
std::vector<ConflictRecord> detect_static(const SessionState& state, const Env& env);

// detect and detect_static merged in canonical order.
std::vector<ConflictRecord> detect_all(const SessionState& state, const Env& env);

bool conflict_present(const SessionState& state, const Env& env, const std::string& conflict_id);

// Fault-free selection for `goal` by `agent_id`. Throws no-fixture-match.
EvidenceRecord select_evidence(const std::string& agent_id, const GoalNode& goal, const Env& env);

struct Simulation {
  SessionState state;
  std::set<std::string> changed_goals;  // evidence replaced or removed by a move
  std::set<std::string> reset_goals;    // downstream goals whose evidence was cleared
  std::set<std::string> rebuilt_tasks;  // tasks that must be replanned
  std::map<std::string, std::optional<EvidenceRecord>> evidence_changes;
  bool graph_changed = false;
};

// Applies moves to a copy of the state: new evidence or goal edits, then
// downstream tasks reset to blocked with their evidence cleared. Changed goals
// are re-verified. Throws inapplicable-move.
Simulation simulate(const SessionState& state, const std::vector<Move>& moves, const Env& env);

// Same bookkeeping for a reconciled goal edit: changed leaves lose their
// evidence and are replanned along with everything downstream of them.
Simulation simulate_edit(const SessionState& state, const GoalGraph& edited, const Env& env);

// Status each goal should have now. Leaf: conflicted while in an open
// conflict, else paused while its task is paused, else failed for a failed
// task, else from its verification report, else achieved for a skipped task,
// active while running, pending otherwise. Internal nodes roll up, except
// that an open conflict naming them wins.
std::map<std::string, GoalStatus> derived_statuses(const SessionState& state);

// Leaf statuses from re-verifying the evidence in `state` (goals without
// evidence are achieved only when their task was skipped), open-conflict
// goals marked conflicted, internal nodes rolled up.
std::map<std::string, GoalStatus> predicted_statuses(const SessionState& state, const Env& env);

// progress = achieved nodes / all nodes after the moves; risk = share of hard
// ordering constraints with a number, money or duration bound on evidenced
// leaves whose observed value lies within risk_margin * |bound| of the bound;
// cost_delta = price change summed over the goals the moves target.
Predicted predict(const std::vector<Move>& moves, const SessionState& state, const Env& env);

// Ranked by progress desc, risk asc, cost_delta asc, id asc. Every candidate
// removes the conflict when simulated. Throws no-repair-found, or
// conflict-not-present when the conflict no longer holds.
std::vector<RepairCandidate> propose_repairs(const ConflictRecord& conflict, const SessionState& state,
                                             const Env& env);

}  // namespace orchvis
