#include "orchvis/conflict_engine.hpp"

#include <algorithm>
#include <cmath>

namespace orchvis {

namespace {

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

std::string money_text(std::int64_t minor, const std::string& currency) {
  return format_money_amount(minor) + " " + currency;
}

std::string clock_text(std::int64_t seconds) { return format_rfc3339(Timestamp{seconds}); }

ConflictRecord make_conflict(ConflictKind kind, std::vector<std::string> goals, std::string narrative,
                             std::vector<std::string> refs) {
  std::sort(goals.begin(), goals.end());
  goals.erase(std::unique(goals.begin(), goals.end()), goals.end());
  ConflictRecord c;
  c.kind = kind;
  c.id = conflict_id(kind, goals);
  c.involved_goal_ids = std::move(goals);
  c.narrative = std::move(narrative);
  c.evidence_refs = std::move(refs);
  return c;
}

void canonical_order(std::vector<ConflictRecord>& out) {
  std::sort(out.begin(), out.end(), [](const ConflictRecord& a, const ConflictRecord& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.involved_goal_ids.front() != b.involved_goal_ids.front()) {
      return a.involved_goal_ids.front() < b.involved_goal_ids.front();
    }
    return a.id < b.id;
  });
}

// Hard money bounds on price.amount declared by a node.
std::vector<std::pair<const Constraint*, Money>> budget_bounds(const GoalNode& node) {
  std::vector<std::pair<const Constraint*, Money>> out;
  for (const auto& c : node.constraints) {
    if (c.severity != Severity::hard || c.subject != "price.amount") continue;
    if (c.op != Op::le && c.op != Op::lt) continue;
    const auto* v = std::get_if<TypedValue>(&c.value);
    if (!v || v->is_raw() || v->kind() != ValueKind::money) continue;
    out.push_back({&c, v->as_money()});
  }
  return out;
}

bool exceeds(Op op, std::int64_t sum, std::int64_t bound) { return op == Op::le ? sum > bound : sum >= bound; }

bool is_leaf_goal(const GoalGraph& g, const std::string& id) { return g.children(id).empty(); }

}  // namespace

std::vector<ConflictRecord> detect_temporal(const std::map<std::string, EvidenceRecord>& evidence) {
  std::vector<ConflictRecord> out;
  std::vector<std::pair<const EvidenceRecord*, Interval>> timed;
  for (const auto& [goal, rec] : evidence) {
    if (!rec.exclusive_attention) continue;
    if (auto iv = evidence_interval(rec.fields)) timed.push_back({&rec, *iv});
  }
  for (std::size_t i = 0; i < timed.size(); ++i) {
    for (std::size_t j = i + 1; j < timed.size(); ++j) {
      const auto& [a, ia] = timed[i];
      const auto& [b, ib] = timed[j];
      if (a->goal_id == b->goal_id) continue;
      std::int64_t lo = std::max(ia.start, ib.start), hi = std::min(ia.end, ib.end);
      if (lo >= hi) continue;
      std::string text = "Detected conflict between " + a->goal_id + " and " + b->goal_id + ": " + a->id + " (" +
                         clock_text(ia.start) + " to " + clock_text(ia.end) + ") overlaps " + b->id + " (" +
                         clock_text(ib.start) + " to " + clock_text(ib.end) + ") by " +
                         std::to_string((hi - lo + 59) / 60) + " min.";
      out.push_back(make_conflict(ConflictKind::temporal_overlap, {a->goal_id, b->goal_id}, text, {a->id, b->id}));
    }
  }
  canonical_order(out);
  return out;
}

std::vector<ConflictRecord> detect_budget(const GoalGraph& graph, const std::map<std::string, EvidenceRecord>& evidence) {
  std::vector<ConflictRecord> out;
  for (const auto& id : graph.depth_first()) {
    if (is_leaf_goal(graph, id)) continue;
    for (const auto& [c, bound] : budget_bounds(graph.at(id))) {
      std::int64_t sum = 0;
      std::vector<std::string> goals{id}, refs, contributors;
      for (const auto& leaf : graph.subtree_leaves(id)) {
        auto it = evidence.find(leaf);
        if (it == evidence.end()) continue;
        auto price = evidence_price(it->second.fields);
        if (!price || price->currency != bound.currency) continue;
        sum += price->minor;
        goals.push_back(leaf);
        contributors.push_back(leaf);
        refs.push_back(it->second.id);
      }
      if (contributors.empty() || !exceeds(c->op, sum, bound.minor)) continue;
      std::string text = "Budget exceeded for " + id + ": " + money_text(sum, bound.currency) + " across " +
                         join(contributors, ", ") + " against a limit of " + money_text(bound.minor, bound.currency) +
                         " (" + c->id + ").";
      out.push_back(make_conflict(ConflictKind::budget_exceeded, goals, text, refs));
    }
  }
  canonical_order(out);
  return out;
}

std::vector<ConflictRecord> detect(const SessionState& state) {
  auto out = detect_temporal(state.evidence);
  auto budget = detect_budget(state.goals, state.evidence);
  out.insert(out.end(), budget.begin(), budget.end());
  canonical_order(out);
  return out;
}

namespace {

struct Feasible {
  const FixtureTable* table = nullptr;
  std::vector<std::size_t> rows;  // ranked
};

// Feasible rows per pending leaf with an assigned agent and a fixture table.
std::map<std::string, Feasible> pending_feasibility(const SessionState& state, const Env& env) {
  std::map<std::string, Feasible> out;
  for (const auto& leaf : state.goals.leaves()) {
    if (state.evidence.count(leaf)) continue;
    const TaskSpec* t = state.tasks.for_goal(leaf);
    if (!t || t->agent_id.empty() || t->state == TaskState::done || t->state == TaskState::failed) continue;
    if (const auto* b = state.branch_of_task(t->id)) {
      auto prior = b->prior_tasks.at(t->id);
      if (prior == TaskState::done || prior == TaskState::failed) continue;
    }
    if (state.deferred.count(t->id)) continue;
    const auto& goal = state.goals.at(leaf);
    const FixtureTable* table = env.fixtures.table_for(goal.ontology_type, t->agent_id);
    if (!table) continue;
    Feasible f{table, {}};
    try {
      auto sel = select_row(goal, *table);
      f.rows.push_back(sel.chosen);
      f.rows.insert(f.rows.end(), sel.ranked_rest.begin(), sel.ranked_rest.end());
    } catch (const Error&) {
    }
    out.emplace(leaf, std::move(f));
  }
  return out;
}

}  // namespace

std::vector<ConflictRecord> detect_static(const SessionState& state, const Env& env) {
  std::vector<ConflictRecord> out;
  auto feas = pending_feasibility(state, env);
  for (const auto& [goal, f] : feas) {
    if (f.rows.empty()) {
      out.push_back(make_conflict(ConflictKind::static_contradiction, {goal},
                                  "No fixture option for " + goal + " satisfies its hard constraints.", {}));
    }
  }
  // Exclusive pairs where every feasible combination overlaps.
  for (auto a = feas.begin(); a != feas.end(); ++a) {
    for (auto b = std::next(a); b != feas.end(); ++b) {
      if (a->second.rows.empty() || b->second.rows.empty()) continue;
      if (!env.ontology.exclusive_attention(state.goals.at(a->first).ontology_type) ||
          !env.ontology.exclusive_attention(state.goals.at(b->first).ontology_type)) {
        continue;
      }
      bool all_overlap = true;
      for (std::size_t ra : a->second.rows) {
        auto ia = evidence_interval(a->second.table->rows[ra].fields);
        for (std::size_t rb : b->second.rows) {
          auto ib = evidence_interval(b->second.table->rows[rb].fields);
          if (!ia || !ib || std::max(ia->start, ib->start) >= std::min(ia->end, ib->end)) all_overlap = false;
        }
      }
      if (all_overlap) {
        out.push_back(make_conflict(ConflictKind::static_contradiction, {a->first, b->first},
                                    "Every option for " + a->first + " overlaps every option for " + b->first + ".",
                                    {}));
      }
    }
  }
  // Cheapest remaining options already past an ancestor budget.
  for (const auto& id : state.goals.depth_first()) {
    if (is_leaf_goal(state.goals, id)) continue;
    for (const auto& [c, bound] : budget_bounds(state.goals.at(id))) {
      std::int64_t sum = 0;
      bool any_pending = false;
      std::vector<std::string> goals{id};
      auto leaves = state.goals.subtree_leaves(id);
      // Plan-time only: once evidence arrives the runtime budget check owns it.
      if (std::any_of(leaves.begin(), leaves.end(), [&](const std::string& l) { return state.evidence.count(l) > 0; })) {
        continue;
      }
      for (const auto& leaf : leaves) {
        std::optional<Money> price;
        auto ev = state.evidence.find(leaf);
        if (ev != state.evidence.end()) {
          price = evidence_price(ev->second.fields);
        } else if (auto f = feas.find(leaf); f != feas.end() && !f->second.rows.empty()) {
          std::optional<Money> best;
          for (std::size_t r : f->second.rows) {
            auto p = evidence_price(f->second.table->rows[r].fields);
            if (p && p->currency == bound.currency && (!best || p->minor < best->minor)) best = p;
          }
          price = best;
          any_pending = any_pending || best.has_value();
        }
        if (!price || price->currency != bound.currency) continue;
        sum += price->minor;
        goals.push_back(leaf);
      }
      if (any_pending && exceeds(c->op, sum, bound.minor)) {
        out.push_back(make_conflict(ConflictKind::static_contradiction, goals,
                                    "Cheapest options under " + id + " total " + money_text(sum, bound.currency) +
                                        ", above the limit of " + money_text(bound.minor, bound.currency) + " (" +
                                        c->id + ").",
                                    {}));
      }
    }
  }
  canonical_order(out);
  return out;
}

std::vector<ConflictRecord> detect_all(const SessionState& state, const Env& env) {
  auto out = detect(state);
  auto st = detect_static(state, env);
  out.insert(out.end(), st.begin(), st.end());
  canonical_order(out);
  return out;
}

bool conflict_present(const SessionState& state, const Env& env, const std::string& id) {
  auto all = detect_all(state, env);
  return std::any_of(all.begin(), all.end(), [&](const ConflictRecord& c) { return c.id == id; });
}

EvidenceRecord select_evidence(const std::string& agent_id, const GoalNode& goal, const Env& env) {
  const FixtureTable* table = env.fixtures.table_for(goal.ontology_type, agent_id);
  if (!table) {
    throw Error("no-fixture-match", "no fixture table for '" + goal.ontology_type + "'",
                Json{{"goal_id", goal.id}, {"agent_id", agent_id}});
  }
  auto sel = select_row(goal, *table);
  return make_record(agent_id, goal, *table, sel.chosen, sel.ranked_rest, env.ontology);
}

// --- simulation ----------------------------------------------------------------

namespace {

[[noreturn]] void inapplicable(const Move& m, const std::string& why) {
  throw Error("inapplicable-move", move_label(m) + ": " + why, Json{{"move", to_json(m)}});
}

void set_intended_state(SessionState& s, const std::string& task_id, TaskState st) {
  if (auto* b = const_cast<PausedBranch*>(s.branch_of_task(task_id))) {
    b->prior_tasks[task_id] = st;
  } else {
    s.tasks.at(task_id).state = st;
  }
}

std::string own_row(const EvidenceRecord& r) {
  auto colon = r.id.find(':');
  return colon == std::string::npos ? r.id : r.id.substr(colon + 1);
}

bool referenced_by_condition(const GoalGraph& g, const std::string& id) {
  for (const auto& [nid, n] : g.nodes) {
    if (n.condition && n.condition->goal && *n.condition->goal == id) return true;
  }
  return false;
}

void finish_simulation(const SessionState& state, Simulation& sim, const std::set<std::string>& replan_roots,
                       const Env& env);

}  // namespace

Simulation simulate(const SessionState& state, const std::vector<Move>& moves, const Env& env) {
  Simulation sim{state, {}, {}, {}, {}, false};
  SessionState& s = sim.state;
  std::set<std::string> replan_roots;

  auto reselect = [&](const std::string& goal) {
    const TaskSpec* t = s.tasks.for_goal(goal);
    if (!t || !s.evidence.count(goal)) return;
    try {
      s.evidence[goal] = select_evidence(t->agent_id, s.goals.at(goal), env);
    } catch (const Error&) {
      s.evidence.erase(goal);
    }
    sim.changed_goals.insert(goal);
  };

  for (const auto& m : moves) {
    switch (m.kind) {
      case MoveKind::choose_option: {
        auto it = s.evidence.find(m.goal_id);
        if (it == s.evidence.end()) inapplicable(m, "goal has no evidence");
        auto& rec = it->second;
        if (m.option_index >= rec.options.size()) inapplicable(m, "no such option");
        EvidenceOption prev{own_row(rec), rec.fields};
        EvidenceOption pick = rec.options[m.option_index];
        rec.options.erase(rec.options.begin() + static_cast<std::ptrdiff_t>(m.option_index));
        rec.options.push_back(prev);
        if (rec.options.size() > kMaxOptions) rec.options.resize(kMaxOptions);
        rec.id = m.goal_id + ":" + pick.row_id;
        rec.fields = pick.fields;
        sim.changed_goals.insert(m.goal_id);
        break;
      }
      case MoveKind::relax_soft: {
        std::string owner;
        for (auto& [gid, node] : s.goals.nodes) {
          const Constraint* c = node.find_constraint(m.constraint_id);
          if (!c) continue;
          if (c->severity != Severity::soft) inapplicable(m, "constraint is hard");
          owner = gid;
        }
        if (owner.empty()) inapplicable(m, "unknown constraint");
        auto& node = s.goals.at(owner);
        node.constraints.erase(std::remove_if(node.constraints.begin(), node.constraints.end(),
                                              [&](const Constraint& c) { return c.id == m.constraint_id; }),
                               node.constraints.end());
        // A relaxed derived predicate takes its attribute with it.
        for (auto a = node.attributes.begin(); a != node.attributes.end(); ++a) {
          if (derived_constraint_id(owner, a->first) == m.constraint_id) {
            node.attributes.erase(a);
            break;
          }
        }
        sim.graph_changed = true;
        reselect(owner);
        break;
      }
      case MoveKind::reassign_agent: {
        if (!s.tasks.contains(m.task_id)) inapplicable(m, "unknown task");
        auto& task = s.tasks.at(m.task_id);
        if (task.agent_id == m.agent_id) inapplicable(m, "agent already assigned");
        auto entry = match_task(task, env.registry);
        bool eligible = std::any_of(entry.eligible.begin(), entry.eligible.end(),
                                    [&](const EligibleAgent& a) { return a.agent_id == m.agent_id; });
        if (!eligible) inapplicable(m, "agent not eligible");
        task.agent_id = m.agent_id;
        s.overrides[m.task_id] = m.agent_id;
        s.match.entries[m.task_id] = match_task(task, env.registry, s.overrides);
        replan_roots.insert(task.goal_id);
        reselect(task.goal_id);
        break;
      }
      case MoveKind::drop_goal: {
        if (!s.goals.contains(m.goal_id) || m.goal_id == s.goals.root) inapplicable(m, "unknown or root goal");
        const auto& node = s.goals.at(m.goal_id);
        if (!is_leaf_goal(s.goals, m.goal_id)) inapplicable(m, "goal is not a leaf");
        if (node.has_hard_constraints()) inapplicable(m, "goal has hard constraints");
        if (referenced_by_condition(s.goals, m.goal_id)) inapplicable(m, "goal is referenced by a condition");
        std::string parent = *node.parent;
        if (s.goals.children(parent).size() < 2) inapplicable(m, "goal is its parent's only child");
        s.goals.nodes.erase(m.goal_id);
        s.evidence.erase(m.goal_id);
        s.reports.erase(m.goal_id);
        std::string tid = task_id_for(m.goal_id);
        s.deferred.erase(tid);
        for (auto& b : s.paused) {
          b.task_ids.erase(std::remove(b.task_ids.begin(), b.task_ids.end(), tid), b.task_ids.end());
          b.prior_tasks.erase(tid);
        }
        sim.graph_changed = true;
        sim.changed_goals.insert(m.goal_id);
        replan_roots.insert(parent);
        break;
      }
    }
  }

  for (const auto& g : sim.changed_goals) {
    if (s.goals.contains(g)) replan_roots.insert(g);
  }
  finish_simulation(state, sim, replan_roots, env);
  return sim;
}

namespace {

void finish_simulation(const SessionState& state, Simulation& sim, const std::set<std::string>& replan_roots,
                       const Env& env) {
  SessionState& s = sim.state;
  TaskGraph before = s.tasks;
  s.tasks = replan_subgraph(s.tasks, replan_roots, s.goals, env.ontology, env.registry, s.match, s.overrides);
  // Remove empty branches left by a dropped goal.
  s.paused.erase(std::remove_if(s.paused.begin(), s.paused.end(), [](const PausedBranch& b) { return b.task_ids.empty(); }),
                 s.paused.end());

  std::set<std::string> changed_tasks;
  for (const auto& g : sim.changed_goals) {
    if (s.tasks.contains(task_id_for(g))) changed_tasks.insert(task_id_for(g));
  }
  std::set<std::string> replanned;
  for (const auto& r : replan_roots) {
    for (const auto& leaf : s.goals.subtree_leaves(r)) replanned.insert(task_id_for(leaf));
  }
  for (const auto& [id, t] : s.tasks.tasks) {
    if (!before.contains(id)) replanned.insert(id);
  }
  sim.rebuilt_tasks = replanned;
  for (const auto& t : s.tasks.downstream(replanned)) sim.rebuilt_tasks.insert(t);
  for (const auto& t : s.tasks.downstream(changed_tasks)) {
    const auto& goal = s.tasks.at(t).goal_id;
    sim.rebuilt_tasks.insert(t);
    sim.reset_goals.insert(goal);
    bool had = s.evidence.erase(goal) + s.deferred.erase(t) > 0;
    if (had) sim.evidence_changes[goal] = std::nullopt;
    s.reports.erase(goal);
  }
  for (const auto& t : sim.rebuilt_tasks) {
    if (!s.tasks.contains(t)) continue;
    const auto& goal = s.tasks.at(t).goal_id;
    bool has_evidence = s.evidence.count(goal) || s.deferred.count(t);
    std::optional<TaskState> previous;
    if (const auto* b = state.branch_of_task(t)) {
      previous = b->prior_tasks.at(t);
    } else if (before.contains(t)) {
      previous = before.at(t).state;
    }
    TaskState st = has_evidence ? TaskState::done : TaskState::blocked;
    bool agent_changed = before.contains(t) && before.at(t).agent_id != s.tasks.at(t).agent_id;
    if (!has_evidence && !sim.reset_goals.count(goal) && !agent_changed && previous) {
      // Untouched by a move and never produced evidence: keep what it was doing.
      st = *previous;
    }
    set_intended_state(s, t, st);
    if (s.branch_of_task(t)) s.tasks.at(t).state = TaskState::paused;
  }
  for (const auto& g : sim.changed_goals) {
    auto it = s.evidence.find(g);
    if (it != s.evidence.end()) {
      sim.evidence_changes[g] = it->second;
      s.reports[g] = evaluate(s.goals.at(g), it->second, s.config);
    } else if (state.evidence.count(g)) {
      sim.evidence_changes[g] = std::nullopt;
      s.reports.erase(g);
    }
  }
}

}  // namespace

Simulation simulate_edit(const SessionState& state, const GoalGraph& edited, const Env& env) {
  Simulation sim{state, {}, {}, {}, {}, true};
  SessionState& s = sim.state;
  s.goals = edited;
  std::set<std::string> roots;
  for (const auto& [id, node] : edited.nodes) {
    auto old = state.goals.nodes.find(id);
    GoalNode a = node;
    bool differs = old == state.goals.nodes.end();
    if (!differs) {
      GoalNode b = old->second;
      a.status = b.status;
      differs = !(a == b);
    }
    if (!differs) continue;
    roots.insert(id);
    if (!edited.is_leaf(id)) continue;
    std::string tid = task_id_for(id);
    bool had = s.evidence.erase(id) + s.deferred.erase(tid) > 0;
    if (had) sim.evidence_changes[id] = std::nullopt;
    s.reports.erase(id);
    sim.changed_goals.insert(id);
    sim.reset_goals.insert(id);
  }
  // Goals that disappeared: their parents are replanned.
  for (const auto& [id, node] : state.goals.nodes) {
    if (edited.contains(id)) continue;
    std::string tid = task_id_for(id);
    if (s.evidence.erase(id) + s.deferred.erase(tid) > 0) sim.evidence_changes[id] = std::nullopt;
    s.reports.erase(id);
    for (auto& b : s.paused) {
      b.task_ids.erase(std::remove(b.task_ids.begin(), b.task_ids.end(), tid), b.task_ids.end());
      b.prior_tasks.erase(tid);
    }
    if (node.parent && edited.contains(*node.parent)) roots.insert(*node.parent);
  }
  // Leaf roots only: internal edits re-detect but do not re-run their subtree.
  std::set<std::string> replan;
  for (const auto& r : roots) {
    if (edited.is_leaf(r) || !state.goals.contains(r) || state.goals.at(r).parent != edited.at(r).parent ||
        state.goals.at(r).relation != edited.at(r).relation || state.goals.at(r).condition != edited.at(r).condition) {
      replan.insert(r);
    }
  }
  finish_simulation(state, sim, replan, env);
  return sim;
}

// --- statuses and prediction -----------------------------------------------------

namespace {

std::map<std::string, GoalStatus> roll_up(const GoalGraph& graph, const std::map<std::string, GoalStatus>& leaves,
                                          const std::set<std::string>& conflicted) {
  GoalGraph g = graph;
  for (const auto& [id, st] : leaves) g.at(id).status = st;
  auto out = rollup_status(g);
  for (const auto& id : conflicted) {
    if (out.count(id)) out[id] = GoalStatus::conflicted;
  }
  return out;
}

GoalStatus report_status(const VerificationReport& r) { return r.achieved ? GoalStatus::achieved : GoalStatus::failed; }

}  // namespace

std::map<std::string, GoalStatus> derived_statuses(const SessionState& state) {
  std::set<std::string> conflicted;
  for (const auto& [id, c] : state.conflicts) conflicted.insert(c.involved_goal_ids.begin(), c.involved_goal_ids.end());
  std::map<std::string, GoalStatus> leaves;
  for (const auto& leaf : state.goals.leaves()) {
    const TaskSpec* t = state.tasks.for_goal(leaf);
    GoalStatus st = GoalStatus::pending;
    auto rep = state.reports.find(leaf);
    if (conflicted.count(leaf)) {
      st = GoalStatus::conflicted;
    } else if (t && t->state == TaskState::paused) {
      st = GoalStatus::paused;
    } else if (t && t->state == TaskState::failed) {
      st = GoalStatus::failed;
    } else if (rep != state.reports.end()) {
      st = report_status(rep->second);
    } else if (t && t->state == TaskState::done) {
      st = GoalStatus::achieved;
    } else if (t && t->state == TaskState::running) {
      st = GoalStatus::active;
    } else if (!t) {
      st = state.goals.at(leaf).status;
    }
    leaves[leaf] = st;
  }
  return roll_up(state.goals, leaves, conflicted);
}

std::map<std::string, GoalStatus> predicted_statuses(const SessionState& state, const Env& env) {
  std::set<std::string> conflicted;
  for (const auto& c : detect_all(state, env)) conflicted.insert(c.involved_goal_ids.begin(), c.involved_goal_ids.end());
  std::map<std::string, GoalStatus> leaves;
  for (const auto& leaf : state.goals.leaves()) {
    const TaskSpec* t = state.tasks.for_goal(leaf);
    TaskState ts = t ? t->state : TaskState::blocked;
    if (t) {
      if (const auto* b = state.branch_of_task(t->id)) ts = b->prior_tasks.at(t->id);
    }
    GoalStatus st = GoalStatus::pending;
    auto ev = state.evidence.find(leaf);
    if (conflicted.count(leaf)) {
      st = GoalStatus::conflicted;
    } else if (ts == TaskState::failed) {
      st = GoalStatus::failed;
    } else if (ev != state.evidence.end()) {
      st = report_status(evaluate(state.goals.at(leaf), ev->second, state.config));
    } else if (ts == TaskState::done && !state.deferred.count(t->id)) {
      st = GoalStatus::achieved;
    }
    leaves[leaf] = st;
  }
  return roll_up(state.goals, leaves, conflicted);
}

namespace {

double risk_of(const SessionState& s) {
  std::size_t total = 0, near = 0;
  for (const auto& leaf : s.goals.leaves()) {
    auto ev = s.evidence.find(leaf);
    if (ev == s.evidence.end()) continue;
    for (const auto& c : s.goals.at(leaf).constraints) {
      if (c.severity != Severity::hard || !is_ordering_op(c.op)) continue;
      const auto* bound = std::get_if<TypedValue>(&c.value);
      if (!bound || bound->is_raw()) continue;
      auto k = bound->kind();
      if (k != ValueKind::number && k != ValueKind::money && k != ValueKind::duration) continue;
      ++total;
      auto obs = ev->second.fields.find(c.subject);
      if (obs == ev->second.fields.end() || obs->second.is_raw() || obs->second.kind() != k) continue;
      if (k == ValueKind::money && obs->second.as_money().currency != bound->as_money().currency) continue;
      double b = *bound->numeric(), o = *obs->second.numeric();
      double margin = s.config.risk_margin * std::fabs(b);
      if (std::fabs(o - b) <= margin + 1e-9 * std::max(1.0, std::fabs(b))) ++near;
    }
  }
  return total ? static_cast<double>(near) / static_cast<double>(total) : 0.0;
}

std::set<std::string> targeted_goals(const std::vector<Move>& moves, const SessionState& s) {
  std::set<std::string> out;
  for (const auto& m : moves) {
    switch (m.kind) {
      case MoveKind::choose_option:
      case MoveKind::drop_goal: out.insert(m.goal_id); break;
      case MoveKind::relax_soft:
        for (const auto& [gid, n] : s.goals.nodes) {
          if (n.find_constraint(m.constraint_id)) out.insert(gid);
        }
        break;
      case MoveKind::reassign_agent:
        if (s.tasks.contains(m.task_id)) out.insert(s.tasks.at(m.task_id).goal_id);
        break;
    }
  }
  return out;
}

std::int64_t price_of(const std::map<std::string, EvidenceRecord>& ev, const std::string& goal, const std::string& cur) {
  auto it = ev.find(goal);
  if (it == ev.end()) return 0;
  auto p = evidence_price(it->second.fields);
  return p && p->currency == cur ? p->minor : 0;
}

Predicted measure(const std::vector<Move>& moves, const SessionState& before, const SessionState& after, const Env& env) {
  Predicted p;
  auto statuses = predicted_statuses(after, env);
  std::size_t achieved = 0;
  for (const auto& [id, st] : statuses) achieved += st == GoalStatus::achieved;
  p.progress = statuses.empty() ? 0.0 : static_cast<double>(achieved) / static_cast<double>(statuses.size());
  p.risk = risk_of(after);
  std::string cur = "USD";
  for (const auto& [g, rec] : before.evidence) {
    if (auto pr = evidence_price(rec.fields)) {
      cur = pr->currency;
      break;
    }
  }
  std::int64_t delta = 0;
  for (const auto& g : targeted_goals(moves, before)) delta += price_of(after.evidence, g, cur) - price_of(before.evidence, g, cur);
  p.cost_delta = Money{delta, cur};
  return p;
}

std::string rationale_for(const Move& m, const SessionState& before, const Simulation& sim, const ConflictRecord& c,
                          const Predicted& p) {
  std::string what;
  switch (m.kind) {
    case MoveKind::choose_option: {
      const auto& opt = before.evidence.at(m.goal_id).options.at(m.option_index);
      what = "Choose option " + opt.row_id + " for " + m.goal_id;
      auto name = opt.fields.find("name");
      if (name != opt.fields.end() && name->second.kind() == ValueKind::text) what += " (" + name->second.as_text() + ")";
      break;
    }
    case MoveKind::relax_soft: what = "Relax soft constraint " + m.constraint_id; break;
    case MoveKind::reassign_agent: what = "Reassign " + m.task_id + " to " + m.agent_id; break;
    case MoveKind::drop_goal: what = "Drop goal " + m.goal_id; break;
  }
  std::string text = what + ". Removes " + c.id + ".";
  if (!sim.reset_goals.empty()) {
    text += " Re-runs " + join(std::vector<std::string>(sim.reset_goals.begin(), sim.reset_goals.end()), ", ") + ".";
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, " Predicted progress %.0f%%, risk %.0f%%, cost change %s %s.", p.progress * 100,
                p.risk * 100, format_money_amount(p.cost_delta.minor).c_str(), p.cost_delta.currency.c_str());
  return text + buf;
}

}  // namespace

Predicted predict(const std::vector<Move>& moves, const SessionState& state, const Env& env) {
  auto sim = simulate(state, moves, env);
  return measure(moves, state, sim.state, env);
}

std::vector<RepairCandidate> propose_repairs(const ConflictRecord& conflict, const SessionState& state, const Env& env) {
  if (!conflict_present(state, env, conflict.id)) {
    throw Error("conflict-not-present", "conflict " + conflict.id + " no longer holds", Json{{"conflict_id", conflict.id}});
  }
  std::vector<Move> moves;
  const auto& involved = conflict.involved_goal_ids;
  for (const auto& g : involved) {
    auto ev = state.evidence.find(g);
    if (ev == state.evidence.end()) continue;
    for (std::size_t i = 0; i < ev->second.options.size(); ++i) moves.push_back(Move{MoveKind::choose_option, g, i, {}, {}, {}});
  }
  for (const auto& g : involved) {
    for (const auto& c : state.goals.at(g).constraints) {
      if (c.severity == Severity::soft) moves.push_back(Move{MoveKind::relax_soft, {}, 0, c.id, {}, {}});
    }
  }
  for (const auto& g : involved) {
    const TaskSpec* t = state.tasks.for_goal(g);
    if (!t) continue;
    std::optional<FieldMap> current;
    if (auto ev = state.evidence.find(g); ev != state.evidence.end()) {
      current = ev->second.fields;
    } else {
      try {
        current = select_evidence(t->agent_id, state.goals.at(g), env).fields;
      } catch (const Error&) {
      }
    }
    for (const auto& a : match_task(*t, env.registry).eligible) {
      if (a.agent_id == t->agent_id) continue;
      try {
        auto other = select_evidence(a.agent_id, state.goals.at(g), env);
        if (!current || other.fields != *current) {
          moves.push_back(Move{MoveKind::reassign_agent, {}, 0, {}, t->id, a.agent_id});
        }
      } catch (const Error&) {
      }
    }
  }
  for (const auto& g : involved) {
    const auto& n = state.goals.at(g);
    if (g != state.goals.root && is_leaf_goal(state.goals, g) && !n.has_hard_constraints() &&
        !referenced_by_condition(state.goals, g) && state.goals.children(*n.parent).size() >= 2) {
      moves.push_back(Move{MoveKind::drop_goal, g, 0, {}, {}, {}});
    }
  }

  std::vector<RepairCandidate> out;
  for (const auto& m : moves) {
    Simulation sim;
    try {
      sim = simulate(state, {m}, env);
    } catch (const Error&) {
      continue;
    }
    if (conflict_present(sim.state, env, conflict.id)) continue;
    RepairCandidate c;
    c.conflict_id = conflict.id;
    c.id = conflict.id + "#" + move_label(m);
    c.moves = {m};
    c.predicted = measure(c.moves, state, sim.state, env);
    c.rationale = rationale_for(m, state, sim, conflict, c.predicted);
    out.push_back(std::move(c));
  }
  if (out.empty()) {
    throw Error("no-repair-found", "no closed-set move removes " + conflict.id + "; edit the goals to resolve it",
                Json{{"conflict_id", conflict.id}});
  }
  std::sort(out.begin(), out.end(), [](const RepairCandidate& a, const RepairCandidate& b) {
    if (a.predicted.progress != b.predicted.progress) return a.predicted.progress > b.predicted.progress;
    if (a.predicted.risk != b.predicted.risk) return a.predicted.risk < b.predicted.risk;
    if (a.predicted.cost_delta.minor != b.predicted.cost_delta.minor) return a.predicted.cost_delta.minor < b.predicted.cost_delta.minor;
    return a.id < b.id;
  });
  return out;
}

}  // namespace orchvis
