#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "orchvis/agent_registry.hpp"
#include "orchvis/goal_model.hpp"

namespace orchvis {

enum class TaskState { blocked, ready, running, done, failed, paused };

std::string_view to_string(TaskState state);
TaskState task_state_from_string(std::string_view text);

struct TaskSpec {
  std::string id;
  std::string goal_id;
  std::string ontology_type;
  std::string agent_id;  // empty until assigned
  std::set<std::string> required_tools;
  std::set<std::string> depends_on;
  // Conjunction of the conditions on the goal and its conditional ancestors,
  // outermost first.
  std::vector<Predicate> guards;
  TaskState state = TaskState::blocked;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

std::string task_id_for(const std::string& goal_id);

struct TaskGraph {
  std::map<std::string, TaskSpec> tasks;

  bool contains(const std::string& task_id) const { return tasks.count(task_id) != 0; }
  const TaskSpec& at(const std::string& task_id) const;
  TaskSpec& at(const std::string& task_id);
  const TaskSpec* for_goal(const std::string& goal_id) const;
  // Tasks that transitively depend on any of `roots`, excluding the roots.
  std::set<std::string> downstream(const std::set<std::string>& roots) const;
  // Kahn order, ties by id. Throws dependency-cycle.
  std::vector<std::string> topological_order() const;

  friend bool operator==(const TaskGraph&, const TaskGraph&) = default;
};

Json to_json(const TaskSpec& task);
TaskSpec task_from_json(const Json& j, const std::string& path);
Json to_json(const TaskGraph& graph);
TaskGraph task_graph_from_json(const Json& j);

struct EligibleAgent {
  std::string agent_id;
  double success_rate = 0;
  Money cost_per_call;

  friend bool operator==(const EligibleAgent&, const EligibleAgent&) = default;
};

struct MatchEntry {
  std::string task_id;
  std::string goal_id;
  std::vector<EligibleAgent> eligible;  // ranked best first
  std::string chosen;
  std::vector<std::string> trace;
  bool manual = false;

  friend bool operator==(const MatchEntry&, const MatchEntry&) = default;
};

struct MatchReport {
  std::map<std::string, MatchEntry> entries;

  friend bool operator==(const MatchReport&, const MatchReport&) = default;
};

Json to_json(const MatchReport& report);
MatchReport match_report_from_json(const Json& j);

// Manual assignments by task id.
using AgentOverrides = std::map<std::string, std::string>;

// One blocked, unassigned task per leaf goal. Sequential parents chain their
// children in id order (every leaf under child k waits on every leaf under
// child k-1); a conditional node whose condition names a goal waits on that
// goal's leaves. Throws unknown-ontology-tool-mapping, dependency-cycle.
TaskGraph compile(const GoalGraph& graph, const Ontology& ontology);

// Eligible iff required_tools are a subset of the agent's tools and the task
// type is one of its input types. Best: highest success_rate, then lowest
// cost_per_call, then smallest agent_id. An override is honored while its
// agent stays eligible. Throws no-eligible-agent.
std::pair<TaskGraph, MatchReport> assign(TaskGraph skeleton, const AgentRegistry& registry,
                                         const AgentOverrides& overrides = {});

MatchEntry match_task(const TaskSpec& task, const AgentRegistry& registry,
                      const AgentOverrides& overrides = {});

// Rebuilds tasks for affected goals (their subtree leaves), goals new to the
// plan and everything downstream of them. Other tasks are copied unchanged;
// tasks for goals that no longer exist are dropped.
TaskGraph replan_subgraph(const TaskGraph& current, const std::set<std::string>& affected_goal_ids,
                          const GoalGraph& graph, const Ontology& ontology,
                          const AgentRegistry& registry, MatchReport& report,
                          const AgentOverrides& overrides = {});

}  // namespace orchvis
