#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "orchvis/evidence.hpp"
#include "orchvis/goal_model.hpp"
#include "orchvis/ontology.hpp"

namespace orchvis {

struct SkillMatrix {
  std::string agent_id;
  std::set<std::string> tools;
  std::set<std::string> input_types;
  std::set<std::string> output_types;
  double success_rate = 0;
  Money cost_per_call{0, "USD"};

  friend bool operator==(const SkillMatrix&, const SkillMatrix&) = default;
};

Json to_json(const SkillMatrix& m);
SkillMatrix skill_matrix_from_json(const Json& j, const std::string& path);

class AgentRegistry {
 public:
  // Throws duplicate-agent, or invalid-agent when the matrix breaks its
  // invariants (empty tools, success_rate outside [0, 1]).
  void register_agent(SkillMatrix matrix);

  bool contains(const std::string& agent_id) const { return agents_.count(agent_id) != 0; }
  // Throws unknown-agent.
  const SkillMatrix& at(const std::string& agent_id) const;
  const std::map<std::string, SkillMatrix>& agents() const { return agents_; }
  bool empty() const { return agents_.empty(); }

  static AgentRegistry from_json(const Json& j);
  static AgentRegistry load(const std::string& path);
  Json to_json() const;

 private:
  std::map<std::string, SkillMatrix> agents_;
};

// --- fixtures ----------------------------------------------------------------

struct FixtureRow {
  std::string id;
  FieldMap fields;

  friend bool operator==(const FixtureRow&, const FixtureRow&) = default;
};

// One table per ontology type. A table may be scoped to a single agent, in
// which case it shadows the shared table for that agent.
struct FixtureTable {
  std::string ontology_type;
  std::optional<std::string> agent_id;
  std::map<std::string, ValueKind> columns;
  std::vector<FixtureRow> rows;

  friend bool operator==(const FixtureTable&, const FixtureTable&) = default;
};

// {"ontology_type", "agent_id"?, "columns": {name: kind}, "rows": [{"id", <cells>}]}
// Cells use the column kind's cell encoding; a null or missing cell is absent.
FixtureTable fixture_table_from_json(const Json& j, const std::string& path);
Json to_json(const FixtureTable& table);

class FixtureSet {
 public:
  // Throws duplicate-fixture for two tables with the same (type, agent) key.
  void add(FixtureTable table);
  // Agent-scoped table first, then the shared table for the exact type.
  const FixtureTable* table_for(const std::string& ontology_type, const std::string& agent_id) const;
  const std::vector<FixtureTable>& tables() const { return tables_; }

 private:
  std::vector<FixtureTable> tables_;
};

// --- faults ------------------------------------------------------------------

enum class FaultEffect { emit_conflicting_time, omit_field, fail_call, delay };

std::string_view to_string(FaultEffect effect);
FaultEffect fault_effect_from_string(std::string_view text);

// Fires once: on the agent's n-th call (1-based) or on its first call for
// the named goal.
struct Fault {
  std::string agent_id;
  std::optional<int> ordinal;
  std::optional<std::string> goal_id;
  FaultEffect effect = FaultEffect::fail_call;
  std::optional<std::string> field;  // omit_field target
  std::optional<int> rounds;         // delay length; unset draws from the seed

  friend bool operator==(const Fault&, const Fault&) = default;
};

struct FaultSchedule {
  std::vector<Fault> faults;

  friend bool operator==(const FaultSchedule&, const FaultSchedule&) = default;
};

FaultSchedule fault_schedule_from_json(const Json& j, const std::string& path);
Json to_json(const FaultSchedule& schedule);

// --- selection ---------------------------------------------------------------

struct RowSelection {
  std::size_t chosen = 0;
  // Remaining hard-feasible rows in rank order (including those beyond the
  // options cap).
  std::vector<std::size_t> ranked_rest;
};

inline constexpr std::size_t kMaxOptions = 5;

struct RowScore {
  std::size_t hard_violations = 0;
  std::size_t soft_satisfied = 0;
};

// Evaluates a goal's constraints against a row. An absent field or a kind
// mismatch counts as a violation.
RowScore score_row(const GoalNode& goal, const FieldMap& fields);

// Rank: hard-feasible only, most soft constraints satisfied, lowest price,
// lowest row id. Throws no-fixture-match.
RowSelection select_row(const GoalNode& goal, const FixtureTable& table);

// Builds the record for `chosen` with the next rows (up to kMaxOptions) as
// options.
EvidenceRecord make_record(const std::string& agent_id, const GoalNode& goal,
                           const FixtureTable& table, std::size_t chosen,
                           const std::vector<std::size_t>& rest, const Ontology& ontology);

struct InvokeResult {
  EvidenceRecord record;
  int delay_rounds = 0;
  std::optional<FaultEffect> fault;  // the fault that fired, if any
};

// Deterministic simulated sub-agents. Calls for one agent are numbered in
// order so that ordinal fault triggers are well defined.
class SimulatedAgents {
 public:
  SimulatedAgents(const AgentRegistry& registry, const FixtureSet& fixtures, FaultSchedule faults,
                  const Ontology& ontology, std::uint64_t seed);

  // `session_evidence` is the evidence already recorded in the session; the
  // emit_conflicting_time effect needs it. Throws agent-call-failed,
  // no-fixture-match, unknown-agent.
  InvokeResult invoke(const std::string& agent_id, const GoalNode& goal,
                      const std::vector<EvidenceRecord>& session_evidence);

  // Fault-free selection, used by repair enumeration.
  EvidenceRecord select(const std::string& agent_id, const GoalNode& goal) const;

  // Marks calls as already made (used when a session is restored from its log).
  void note_call(const std::string& agent_id, const std::string& goal_id);

  const FixtureSet& fixtures() const { return *fixtures_; }

 private:
  std::optional<std::size_t> fault_for(const std::string& agent_id, const std::string& goal_id, int ordinal) const;

  const AgentRegistry* registry_;
  const FixtureSet* fixtures_;
  FaultSchedule faults_;
  const Ontology* ontology_;
  std::uint64_t seed_;
  std::map<std::string, int> calls_;
  std::set<std::pair<std::string, std::string>> seen_goals_;
  std::set<std::size_t> consumed_;
};

}  // namespace orchvis
