#include "orchvis/planner.hpp"

#include <algorithm>
#include <cstdio>
#include <queue>

#include "orchvis/goal_dsl.hpp"
#include "orchvis/json_util.hpp"

namespace orchvis {

using namespace jsonu;

namespace {

constexpr std::string_view kStateNames[] = {"blocked", "ready", "running", "done", "failed", "paused"};

std::string rate_text(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", r);
  return buf;
}

std::string money_text(const Money& m) { return format_money_amount(m.minor) + " " + m.currency; }

std::string joined(const std::set<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

}  // namespace

std::string_view to_string(TaskState state) { return kStateNames[static_cast<int>(state)]; }

TaskState task_state_from_string(std::string_view text) {
  for (int i = 0; i < 6; ++i) {
    if (kStateNames[i] == text) return static_cast<TaskState>(i);
  }
  throw Error("schema-error", "unknown task state '" + std::string(text) + "'");
}

std::string task_id_for(const std::string& goal_id) { return "t-" + goal_id; }

const TaskSpec& TaskGraph::at(const std::string& task_id) const {
  auto it = tasks.find(task_id);
  if (it == tasks.end()) throw Error("unknown-task", "no task '" + task_id + "'", Json{{"task_id", task_id}});
  return it->second;
}

TaskSpec& TaskGraph::at(const std::string& task_id) {
  return const_cast<TaskSpec&>(static_cast<const TaskGraph&>(*this).at(task_id));
}

const TaskSpec* TaskGraph::for_goal(const std::string& goal_id) const {
  auto it = tasks.find(task_id_for(goal_id));
  return it == tasks.end() ? nullptr : &it->second;
}

std::set<std::string> TaskGraph::downstream(const std::set<std::string>& roots) const {
  std::set<std::string> reached;
  std::vector<std::string> frontier(roots.begin(), roots.end());
  while (!frontier.empty()) {
    std::string cur = frontier.back();
    frontier.pop_back();
    for (const auto& [id, t] : tasks) {
      if (t.depends_on.count(cur) && !roots.count(id) && reached.insert(id).second) frontier.push_back(id);
    }
  }
  return reached;
}

std::vector<std::string> TaskGraph::topological_order() const {
  std::map<std::string, std::size_t> indegree;
  for (const auto& [id, t] : tasks) {
    std::size_t n = 0;
    for (const auto& d : t.depends_on) n += tasks.count(d);
    indegree[id] = n;
  }
  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto& [id, n] : indegree) {
    if (n == 0) ready.push(id);
  }
  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string cur = ready.top();
    ready.pop();
    order.push_back(cur);
    for (const auto& [id, t] : tasks) {
      if (t.depends_on.count(cur) && --indegree[id] == 0) ready.push(id);
    }
  }
  if (order.size() != tasks.size()) {
    Json stuck = Json::array();
    for (const auto& [id, n] : indegree) {
      if (n > 0) stuck.push_back(id);
    }
    throw Error("dependency-cycle", "task dependencies form a cycle", Json{{"tasks", stuck}});
  }
  return order;
}

Json to_json(const TaskSpec& t) {
  Json guards = Json::array();
  for (const auto& g : t.guards) guards.push_back(predicate_to_json(g));
  return Json{{"id", t.id},
              {"goal_id", t.goal_id},
              {"ontology_type", t.ontology_type},
              {"agent_id", t.agent_id},
              {"required_tools", t.required_tools},
              {"depends_on", t.depends_on},
              {"guards", guards},
              {"state", std::string(to_string(t.state))}};
}

TaskSpec task_from_json(const Json& j, const std::string& path) {
  expect_object(j, path, {"id", "goal_id", "ontology_type", "agent_id", "required_tools", "depends_on", "guards", "state"});
  TaskSpec t;
  t.id = get_string(j, "id", path);
  t.goal_id = get_string(j, "goal_id", path);
  t.ontology_type = get_string(j, "ontology_type", path);
  t.agent_id = get_string(j, "agent_id", path);
  t.required_tools = j.at("required_tools").get<std::set<std::string>>();
  t.depends_on = j.at("depends_on").get<std::set<std::string>>();
  const auto& guards = get_array(j, "guards", path);
  for (std::size_t i = 0; i < guards.size(); ++i) {
    t.guards.push_back(predicate_from_json(guards[i], index(child(path, "guards"), i)));
  }
  t.state = task_state_from_string(get_string(j, "state", path));
  return t;
}

Json to_json(const TaskGraph& graph) {
  Json arr = Json::array();
  for (const auto& [id, t] : graph.tasks) arr.push_back(to_json(t));
  return Json{{"tasks", arr}};
}

TaskGraph task_graph_from_json(const Json& j) {
  expect_object(j, "$", {"tasks"});
  TaskGraph g;
  const auto& arr = get_array(j, "tasks", "$");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    auto t = task_from_json(arr[i], index("$.tasks", i));
    auto id = t.id;
    g.tasks.emplace(std::move(id), std::move(t));
  }
  return g;
}

Json to_json(const MatchReport& report) {
  Json arr = Json::array();
  for (const auto& [id, e] : report.entries) {
    Json eligible = Json::array();
    for (const auto& a : e.eligible) {
      eligible.push_back(Json{{"agent_id", a.agent_id},
                              {"success_rate", a.success_rate},
                              {"cost_per_call", to_json(TypedValue::money(a.cost_per_call.minor, a.cost_per_call.currency))}});
    }
    arr.push_back(Json{{"task_id", e.task_id},
                       {"goal_id", e.goal_id},
                       {"eligible", eligible},
                       {"chosen", e.chosen},
                       {"trace", e.trace},
                       {"manual", e.manual}});
  }
  return Json{{"entries", arr}};
}

MatchReport match_report_from_json(const Json& j) {
  MatchReport r;
  for (const auto& e : j.at("entries")) {
    MatchEntry m;
    m.task_id = e.at("task_id").get<std::string>();
    m.goal_id = e.at("goal_id").get<std::string>();
    for (const auto& a : e.at("eligible")) {
      auto cost = typed_value_from_json(a.at("cost_per_call"), "$.cost_per_call");
      m.eligible.push_back({a.at("agent_id").get<std::string>(), a.at("success_rate").get<double>(), cost.as_money()});
    }
    m.chosen = e.at("chosen").get<std::string>();
    m.trace = e.at("trace").get<std::vector<std::string>>();
    m.manual = e.at("manual").get<bool>();
    auto id = m.task_id;
    r.entries.emplace(std::move(id), std::move(m));
  }
  return r;
}

// --- compile -------------------------------------------------------------------

TaskGraph compile(const GoalGraph& graph, const Ontology& ontology) {
  TaskGraph out;
  for (const auto& leaf : graph.leaves()) {
    const auto& node = graph.at(leaf);
    auto tools = ontology.tools(node.ontology_type);
    if (tools.empty()) {
      throw Error("unknown-ontology-tool-mapping",
                  "no tools are mapped for ontology type '" + node.ontology_type + "'",
                  Json{{"goal_id", leaf}, {"ontology_type", node.ontology_type}});
    }
    TaskSpec t;
    t.id = task_id_for(leaf);
    t.goal_id = leaf;
    t.ontology_type = node.ontology_type;
    t.required_tools = std::set<std::string>(tools.begin(), tools.end());
    // Guards: conditions along the parent chain, outermost first.
    std::vector<std::string> chain;
    for (std::optional<std::string> cur = leaf; cur; cur = graph.at(*cur).parent) chain.push_back(*cur);
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      const auto& n = graph.at(*it);
      if (n.relation == Relation::conditional && n.condition) t.guards.push_back(*n.condition);
    }
    out.tasks.emplace(t.id, std::move(t));
  }

  auto link = [&](const std::vector<std::string>& waiters, const std::vector<std::string>& sources) {
    for (const auto& w : waiters) {
      for (const auto& s : sources) {
        if (s != w) out.tasks.at(task_id_for(w)).depends_on.insert(task_id_for(s));
      }
    }
  };
  for (const auto& id : graph.depth_first()) {
    const auto& node = graph.at(id);
    if (node.relation == Relation::sequential) {
      auto kids = graph.children(id);
      for (std::size_t k = 1; k < kids.size(); ++k) {
        link(graph.subtree_leaves(kids[k]), graph.subtree_leaves(kids[k - 1]));
      }
    }
    if (node.relation == Relation::conditional && node.condition && node.condition->goal &&
        graph.contains(*node.condition->goal)) {
      link(graph.subtree_leaves(id), graph.subtree_leaves(*node.condition->goal));
    }
  }
  out.topological_order();
  return out;
}

// --- assign --------------------------------------------------------------------

MatchEntry match_task(const TaskSpec& task, const AgentRegistry& registry, const AgentOverrides& overrides) {
  MatchEntry e;
  e.task_id = task.id;
  e.goal_id = task.goal_id;
  std::set<std::string> uncovered = task.required_tools;
  bool type_covered = false;
  for (const auto& [id, m] : registry.agents()) {
    std::set<std::string> missing;
    std::set_difference(task.required_tools.begin(), task.required_tools.end(), m.tools.begin(),
                        m.tools.end(), std::inserter(missing, missing.end()));
    bool type_ok = m.input_types.count(task.ontology_type) != 0;
    if (missing.empty() && type_ok) {
      e.eligible.push_back({id, m.success_rate, m.cost_per_call});
      e.trace.push_back(id + ": eligible (success_rate " + rate_text(m.success_rate) + ", cost " +
                        money_text(m.cost_per_call) + ")");
    } else {
      std::string why;
      if (!missing.empty()) why = "missing tools " + joined(missing);
      if (!type_ok) why += std::string(why.empty() ? "" : "; ") + "does not accept " + task.ontology_type;
      e.trace.push_back(id + ": ineligible, " + why);
    }
    if (type_ok) type_covered = true;
    for (const auto& t : m.tools) uncovered.erase(t);
  }
  if (e.eligible.empty()) {
    Json detail{{"task_id", task.id}, {"goal_id", task.goal_id}, {"ontology_type", task.ontology_type},
                {"required_tools", task.required_tools}, {"uncovered_tools", uncovered},
                {"type_covered", type_covered}};
    throw Error("no-eligible-agent", "no registered agent can serve task '" + task.id + "'", detail);
  }
  std::stable_sort(e.eligible.begin(), e.eligible.end(), [](const EligibleAgent& a, const EligibleAgent& b) {
    if (a.success_rate != b.success_rate) return a.success_rate > b.success_rate;
    if (a.cost_per_call.minor != b.cost_per_call.minor) return a.cost_per_call.minor < b.cost_per_call.minor;
    return a.agent_id < b.agent_id;
  });
  e.chosen = e.eligible.front().agent_id;
  e.trace.push_back("ranked by success_rate desc, cost asc, agent_id asc: " + e.chosen);
  auto ov = overrides.find(task.id);
  if (ov != overrides.end()) {
    bool ok = std::any_of(e.eligible.begin(), e.eligible.end(),
                          [&](const EligibleAgent& a) { return a.agent_id == ov->second; });
    if (ok) {
      e.chosen = ov->second;
      e.manual = true;
      e.trace.push_back("manual override: " + ov->second);
    } else {
      e.trace.push_back("manual override " + ov->second + " dropped: agent no longer eligible");
    }
  }
  return e;
}

std::pair<TaskGraph, MatchReport> assign(TaskGraph skeleton, const AgentRegistry& registry,
                                         const AgentOverrides& overrides) {
  MatchReport report;
  for (auto& [id, t] : skeleton.tasks) {
    auto e = match_task(t, registry, overrides);
    t.agent_id = e.chosen;
    report.entries.emplace(id, std::move(e));
  }
  return {std::move(skeleton), std::move(report)};
}

TaskGraph replan_subgraph(const TaskGraph& current, const std::set<std::string>& affected_goal_ids,
                          const GoalGraph& graph, const Ontology& ontology,
                          const AgentRegistry& registry, MatchReport& report,
                          const AgentOverrides& overrides) {
  for (const auto& g : affected_goal_ids) {
    if (!graph.contains(g)) throw Error("unknown-goal", "no goal '" + g + "'", Json{{"goal_id", g}});
  }
  TaskGraph fresh = compile(graph, ontology);
  std::set<std::string> roots;
  for (const auto& g : affected_goal_ids) {
    for (const auto& leaf : graph.subtree_leaves(g)) roots.insert(task_id_for(leaf));
  }
  for (const auto& [id, t] : fresh.tasks) {
    if (!current.contains(id)) roots.insert(id);
  }
  std::set<std::string> rebuild = roots;
  for (const auto& id : fresh.downstream(roots)) rebuild.insert(id);

  TaskGraph out;
  for (auto& [id, t] : fresh.tasks) {
    if (rebuild.count(id)) {
      auto e = match_task(t, registry, overrides);
      t.agent_id = e.chosen;
      report.entries[id] = std::move(e);
      out.tasks.emplace(id, t);
    } else {
      out.tasks.emplace(id, current.at(id));
    }
  }
  for (auto it = report.entries.begin(); it != report.entries.end();) {
    it = out.contains(it->first) ? std::next(it) : report.entries.erase(it);
  }
  return out;
}

}  // namespace orchvis
