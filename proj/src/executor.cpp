#include "orchvis/executor.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "orchvis/goal_dsl.hpp"
#include "orchvis/json_util.hpp"

namespace orchvis {

namespace {

// Repairs applied without a human in a single step; guards against repairs
// that keep producing fresh conflicts.
constexpr int kMaxAutoApplies = 8;

[[noreturn]] void invalid(const std::string& message, Json detail = Json::object()) {
  throw Error("invalid-command", message, std::move(detail));
}

[[noreturn]] void wrong_phase(const SessionState& s, const std::string& what) {
  throw Error("wrong-phase", what + " is not allowed in phase " + std::string(to_string(s.phase)),
              Json{{"phase", std::string(to_string(s.phase))}});
}

Json evidence_changes_json(const std::map<std::string, std::optional<EvidenceRecord>>& changes) {
  Json out = Json::object();
  for (const auto& [g, rec] : changes) out[g] = rec ? to_json(*rec) : Json(nullptr);
  return out;
}

Json paused_json(const std::vector<PausedBranch>& branches) {
  Json out = Json::array();
  for (const auto& b : branches) out.push_back(to_json(b));
  return out;
}

TaskState effective_state(const SessionState& s, const std::string& task_id) {
  if (const auto* b = s.branch_of_task(task_id)) return b->prior_tasks.at(task_id);
  return s.tasks.at(task_id).state;
}

struct Ctx {
  const Env& env;
  SessionState s;
  std::vector<Event> events;
  int auto_applies = 0;

  void emit(EventKind kind, Json payload) {
    Event e;
    e.seq = s.seq + 1;
    e.timestamp = format_rfc3339(Timestamp{s.goals.clock.seconds + e.seq});
    e.kind = kind;
    e.payload = std::move(payload);
    apply_event(s, e);
    events.push_back(std::move(e));
  }

  Json plan_payload() const {
    return Json{{"task_graph", to_json(s.tasks)}, {"match", to_json(s.match)}, {"overrides", s.overrides}};
  }

  // --- branches ----------------------------------------------------------------

  std::vector<std::string> branch_tasks(const std::string& goal_id) const {
    std::set<std::string> roots;
    for (const auto& leaf : s.goals.subtree_leaves(goal_id)) {
      if (s.tasks.contains(task_id_for(leaf))) roots.insert(task_id_for(leaf));
    }
    std::set<std::string> all = roots;
    for (const auto& t : s.tasks.downstream(roots)) all.insert(t);
    std::vector<std::string> out;
    for (const auto& t : all) {
      if (!s.branch_of_task(t)) out.push_back(t);
    }
    return out;
  }

  bool pause(const std::string& goal_id, const std::string& reason) {
    for (const auto& b : s.paused) {
      if (b.goal_id == goal_id) return false;
    }
    auto tasks = branch_tasks(goal_id);
    if (tasks.empty()) return false;
    emit(EventKind::BranchPaused, Json{{"goal_id", goal_id}, {"task_ids", tasks}, {"reason", reason}});
    return true;
  }

  void resume(const PausedBranch& branch) {
    std::vector<std::string> deferred_goals;
    for (const auto& t : branch.task_ids) {
      auto d = s.deferred.find(t);
      if (d != s.deferred.end()) deferred_goals.push_back(d->second.goal_id);
    }
    Json restored = Json::object();
    for (const auto& [t, st] : branch.prior_tasks) restored[t] = std::string(to_string(st));
    emit(EventKind::BranchResumed, Json{{"goal_id", branch.goal_id}, {"task_ids", branch.task_ids}, {"restored", restored}});
    for (const auto& g : deferred_goals) verify(g);
  }

  void resume_resolved(const std::set<std::string>& resolved) {
    std::vector<PausedBranch> held;
    for (const auto& b : s.paused) {
      if (resolved.count(b.reason)) held.push_back(b);
    }
    for (const auto& b : held) resume(b);
  }

  // --- verification and conflicts --------------------------------------------

  void verify(const std::string& goal_id) {
    const auto& rec = s.evidence.at(goal_id);
    std::string task = task_id_for(goal_id);
    try {
      auto report = evaluate(s.goals.at(goal_id), rec, s.config);
      emit(EventKind::VerificationReport, Json{{"report", to_json(report)}});
    } catch (const Error& e) {
      emit(EventKind::TaskFailed,
           Json{{"task_id", task}, {"goal_id", goal_id}, {"error", Json{{"error", e.code()}, {"message", e.what()}}}});
    }
  }

  void detect_new() {
    if (s.phase != Phase::executing) return;
    std::vector<ConflictRecord> fresh;
    for (auto c : detect_all(s, env)) {
      if (s.conflicts.count(c.id)) continue;
      c.detected_at = s.seq + 1;
      emit(EventKind::ConflictDetected, Json{{"conflict", to_json(c)}});
      std::vector<std::string> goals = c.involved_goal_ids;
      std::stable_sort(goals.begin(), goals.end(), [&](const std::string& a, const std::string& b) {
        return s.goals.depth(a) < s.goals.depth(b);
      });
      for (const auto& g : goals) pause(g, c.id);
      fresh.push_back(std::move(c));
    }
    for (const auto& c : fresh) {
      if (s.conflicts.count(c.id)) propose(s.conflicts.at(c.id));
    }
  }

  void propose(const ConflictRecord& c) {
    std::vector<RepairCandidate> candidates;
    try {
      candidates = propose_repairs(c, s, env);
    } catch (const Error& e) {
      if (e.code() == "conflict-not-present") return;
      if (e.code() != "no-repair-found") throw;
    }
    Json list = Json::array();
    for (const auto& cand : candidates) list.push_back(to_json(cand));
    if (s.autonomy == Autonomy::auto_ && !candidates.empty() && auto_applies < kMaxAutoApplies) {
      ++auto_applies;
      emit(EventKind::RepairProposed, Json{{"conflict_id", c.id},
                                           {"candidates", list},
                                           {"awaiting", "none"},
                                           {"selected", candidates.front().id}});
      apply(candidates.front());
      return;
    }
    emit(EventKind::RepairProposed, Json{{"conflict_id", c.id}, {"candidates", list}, {"awaiting", "resolve"}});
  }

  std::set<std::string> still_resolved(const SessionState& next) const {
    std::set<std::string> present;
    for (const auto& c : detect_all(next, env)) present.insert(c.id);
    std::set<std::string> out;
    for (const auto& [id, c] : s.conflicts) {
      if (!present.count(id)) out.insert(id);
    }
    return out;
  }

  void apply(const RepairCandidate& cand) {
    auto sim = simulate(s, cand.moves, env);
    auto resolved = still_resolved(sim.state);
    Json moves = Json::array();
    for (const auto& m : cand.moves) moves.push_back(to_json(m));
    Json p{{"task_graph", to_json(sim.state.tasks)},
           {"match", to_json(sim.state.match)},
           {"overrides", sim.state.overrides},
           {"evidence", evidence_changes_json(sim.evidence_changes)},
           {"candidate_id", cand.id},
           {"moves", moves},
           {"resolved_conflicts", std::vector<std::string>(resolved.begin(), resolved.end())},
           {"paused", paused_json(sim.state.paused)}};
    if (sim.graph_changed) p["graph"] = graph_to_json(sim.state.goals);
    emit(EventKind::PlanUpdated, std::move(p));
    resume_resolved(resolved);
    for (const auto& g : sim.changed_goals) {
      if (s.evidence.count(g)) verify(g);
    }
    detect_new();
  }

  // --- scheduling ------------------------------------------------------------

  void advance() {
    if (s.phase != Phase::executing) return;
    for (const auto& id : s.tasks.topological_order()) {
      const TaskSpec& t = s.tasks.at(id);
      if (t.state != TaskState::blocked) continue;
      std::optional<std::string> failed_dep;
      bool ready = true;
      for (const auto& d : t.depends_on) {
        if (!s.tasks.contains(d)) continue;
        auto st = s.tasks.at(d).state;
        if (st == TaskState::failed && !failed_dep) failed_dep = d;
        if (st != TaskState::done) ready = false;
      }
      if (failed_dep) {
        emit(EventKind::TaskFailed, Json{{"task_id", id},
                                         {"goal_id", t.goal_id},
                                         {"error", Json{{"error", "dependency-failed"},
                                                        {"message", "dependency " + *failed_dep + " failed"}}},
                                         {"cascade_from", *failed_dep}});
        continue;
      }
      if (!ready) continue;
      if (!guards_hold(t, s)) {
        emit(EventKind::TaskCompleted,
             Json{{"task_id", id}, {"goal_id", t.goal_id}, {"skipped", true}, {"reason", "guard-false"}});
        continue;
      }
      emit(EventKind::TaskStarted, Json{{"task_id", id}, {"goal_id", t.goal_id}, {"agent_id", t.agent_id}});
    }
  }

  void sync_statuses() {
    auto derived = derived_statuses(s);
    for (const auto& id : s.goals.depth_first()) {
      auto it = derived.find(id);
      if (it == derived.end() || s.goals.at(id).status == it->second) continue;
      emit(EventKind::GoalUpdated, Json{{"goal_id", id}, {"status", std::string(to_string(it->second))}});
    }
  }

  void maybe_complete() {
    if (s.phase != Phase::executing || !s.paused.empty() || !s.conflicts.empty() || s.pending) return;
    for (const auto& [id, t] : s.tasks.tasks) {
      if (t.state != TaskState::done && t.state != TaskState::failed) return;
    }
    Json statuses = Json::object();
    for (const auto& [id, n] : s.goals.nodes) statuses[id] = std::string(to_string(n.status));
    emit(EventKind::SessionCompleted,
         Json{{"root_status", std::string(to_string(s.goals.at(s.goals.root).status))}, {"statuses", statuses}});
  }

  void settle() {
    advance();
    sync_statuses();
    maybe_complete();
  }

  // --- commands --------------------------------------------------------------

  void start() {
    if (s.phase != Phase::planning) wrong_phase(s, "start");
    Json p = plan_payload();
    p["phase"] = "executing";
    emit(EventKind::PlanUpdated, std::move(p));
    detect_new();
    settle();
  }

  void task_finished(const Json& p) {
    auto task_id = p.at("task_id").get<std::string>();
    if (!s.tasks.contains(task_id)) invalid("unknown task '" + task_id + "'", Json{{"task_id", task_id}});
    if (effective_state(s, task_id) != TaskState::running) {
      invalid("task '" + task_id + "' is not running", Json{{"task_id", task_id}});
    }
    const auto& goal = s.tasks.at(task_id).goal_id;
    if (p.contains("error")) {
      emit(EventKind::TaskFailed, Json{{"task_id", task_id}, {"goal_id", goal}, {"error", p.at("error")}});
      settle();
      return;
    }
    auto rec = evidence_from_json(p.at("evidence"), "$.payload.evidence");
    if (rec.goal_id != goal) {
      invalid("evidence is for goal '" + rec.goal_id + "', task serves '" + goal + "'", Json{{"task_id", task_id}});
    }
    if (s.branch_of_task(task_id)) {
      emit(EventKind::TaskCompleted, Json{{"task_id", task_id}, {"goal_id", goal}, {"deferred", true}, {"evidence", to_json(rec)}});
      settle();
      return;
    }
    emit(EventKind::TaskCompleted, Json{{"task_id", task_id}, {"goal_id", goal}, {"evidence", to_json(rec)}});
    verify(goal);
    detect_new();
    settle();
  }

  void pause_branch(const Json& p) {
    auto goal = p.at("goal_id").get<std::string>();
    if (!s.goals.contains(goal)) throw Error("unknown-goal", "no goal '" + goal + "'", Json{{"goal_id", goal}});
    if (s.phase == Phase::completed) wrong_phase(s, "pause_branch");
    if (pause(goal, "user")) settle();
  }

  void resume_branch(const Json& p) {
    auto goal = p.at("goal_id").get<std::string>();
    auto it = std::find_if(s.paused.begin(), s.paused.end(), [&](const PausedBranch& b) { return b.goal_id == goal; });
    if (it == s.paused.end()) invalid("branch '" + goal + "' is not paused", Json{{"goal_id", goal}});
    if (it->reason != "user") {
      invalid("branch '" + goal + "' is held by conflict " + it->reason, Json{{"goal_id", goal}, {"conflict_id", it->reason}});
    }
    PausedBranch b = *it;
    resume(b);
    detect_new();
    settle();
  }

  void apply_plan_update(const Json& p) {
    auto cid = p.at("candidate_id").get<std::string>();
    const RepairCandidate* cand = nullptr;
    for (const auto& [conflict, list] : s.proposals) {
      for (const auto& c : list) {
        if (c.id == cid) cand = &c;
      }
    }
    if (!cand) invalid("unknown repair candidate '" + cid + "'", Json{{"candidate_id", cid}});
    RepairCandidate chosen = *cand;
    if (!s.conflicts.count(chosen.conflict_id) || !conflict_present(s, env, chosen.conflict_id)) {
      throw Error("conflict-not-present", "conflict " + chosen.conflict_id + " no longer holds",
                  Json{{"conflict_id", chosen.conflict_id}});
    }
    bool approved = p.value("approve", false);
    if (s.autonomy == Autonomy::manual && !approved) {
      Json list = Json::array();
      for (const auto& c : s.proposals.at(chosen.conflict_id)) list.push_back(to_json(c));
      emit(EventKind::RepairProposed, Json{{"conflict_id", chosen.conflict_id},
                                           {"candidates", list},
                                           {"awaiting", "approval"},
                                           {"selected", cid}});
      settle();
      return;
    }
    apply(chosen);
    settle();
  }

  void set_autonomy(const Json& p) {
    auto to = autonomy_from_string(p.at("level").get<std::string>());
    if (to == s.autonomy) return;
    emit(EventKind::AutonomyChanged,
         Json{{"from", std::string(to_string(s.autonomy))}, {"to", std::string(to_string(to))}});
    if (to == Autonomy::auto_) {
      std::vector<std::string> open;
      for (const auto& [id, c] : s.conflicts) open.push_back(id);
      for (const auto& id : open) {
        if (s.conflicts.count(id)) propose(s.conflicts.at(id));
      }
    }
    settle();
  }

  template <typename Parse>
  static auto parsed_edit(Parse parse) {
    try {
      return parse();
    } catch (const Error& e) {
      throw Error("invalid-command", "unreadable edit: " + std::string(e.what()), e.detail());
    }
  }

  void user_edit(const Json& p) {
    if (s.phase == Phase::completed) wrong_phase(s, "user_edit");
    GoalGraph edited;
    if (p.contains("graph")) {
      edited = parsed_edit([&] { return graph_from_json_unchecked(p.at("graph")); });
    } else {
      auto goal = p.at("goal_id").get<std::string>();
      if (!s.goals.contains(goal)) throw Error("unknown-goal", "no goal '" + goal + "'", Json{{"goal_id", goal}});
      edited = s.goals;
      auto patch = parsed_edit([&] { return patch_from_json(p.at("patch")); });
      edited.at(goal) = apply_patch(edited.at(goal), patch);
    }
    auto rep = reconcile(s.goals, edited, env.ontology);
    if (!rep.rejected.empty()) {
      throw Error("invariant-violation", "edit rejected", to_json(rep));
    }
    const GoalGraph& next = rep.reconciled;
    if (s.phase == Phase::executing) {
      bool structural = next.root != s.goals.root || next.nodes.size() != s.goals.nodes.size();
      for (const auto& [id, n] : next.nodes) {
        auto old = s.goals.nodes.find(id);
        if (old == s.goals.nodes.end() || old->second.parent != n.parent || old->second.relation != n.relation ||
            old->second.condition != n.condition || old->second.ontology_type != n.ontology_type) {
          structural = true;
        }
      }
      if (structural) wrong_phase(s, "a structural edit");
    }
    auto sim = simulate_edit(s, next, env);
    if (sim.changed_goals.empty() && next == s.goals) return;
    std::set<std::string> resolved;
    if (s.phase == Phase::executing) resolved = still_resolved(sim.state);

    Json changes = Json::array();
    for (const auto& c : rep.changes_applied) {
      changes.push_back(Json{{"node_id", c.node_id}, {"field", c.field}, {"before", c.before}, {"after", c.after}});
    }
    std::vector<std::string> cleared;
    for (const auto& [g, r] : s.reports) {
      if (!sim.state.reports.count(g)) cleared.push_back(g);
    }
    emit(EventKind::GoalUpdated, Json{{"graph", graph_to_json(sim.state.goals)},
                                      {"changes", changes},
                                      {"resolved_conflicts", std::vector<std::string>(resolved.begin(), resolved.end())},
                                      {"reports_cleared", cleared}});
    Json plan{{"task_graph", to_json(sim.state.tasks)},
              {"match", to_json(sim.state.match)},
              {"overrides", sim.state.overrides},
              {"evidence", evidence_changes_json(sim.evidence_changes)},
              {"paused", paused_json(sim.state.paused)}};
    emit(EventKind::PlanUpdated, std::move(plan));
    resume_resolved(resolved);
    detect_new();
    settle();
  }
};

}  // namespace

bool guards_hold(const TaskSpec& task, const SessionState& state) {
  auto holds = [](const Predicate& p, const EvidenceRecord& rec) {
    auto f = rec.fields.find(p.subject);
    if (f == rec.fields.end()) return false;
    try {
      return apply_op(p.op, f->second, p.value);
    } catch (const Error&) {
      return false;
    }
  };
  for (const auto& g : task.guards) {
    bool ok = false;
    if (g.goal) {
      auto it = state.evidence.find(*g.goal);
      ok = it != state.evidence.end() && holds(g, it->second);
    } else {
      for (const auto& [goal, rec] : state.evidence) ok = ok || holds(g, rec);
    }
    if (!ok) return false;
  }
  return true;
}

bool awaiting_user(const SessionState& state) {
  if (state.phase != Phase::executing) return false;
  for (const auto& [id, t] : state.tasks.tasks) {
    if (effective_state(state, id) == TaskState::running) return false;
  }
  return true;
}

StepResult begin_session(const SessionInit& init, const Env& env) {
  init.config.validate();
  for (const auto& issue : validate_graph(init.graph, env.ontology)) {
    throw Error("invariant-violation", "goal graph is invalid: " + issue.node_id + "." + issue.field + " " + issue.reason,
                Json{{"node_id", issue.node_id}, {"field", issue.field}, {"reason", issue.reason}});
  }
  Ctx ctx{env, SessionState{}, {}, 0};
  auto [tasks, match] = assign(compile(init.graph, env.ontology), env.registry);
  ctx.emit(EventKind::GoalUpdated, Json{{"session", Json{{"session_id", init.session_id},
                                                        {"scenario", init.scenario},
                                                        {"seed", init.seed},
                                                        {"config", to_json(init.config)},
                                                        {"autonomy", std::string(to_string(init.autonomy))}}},
                                        {"graph", graph_to_json(init.graph)}});
  ctx.emit(EventKind::PlanUpdated, Json{{"task_graph", to_json(tasks)},
                                        {"match", to_json(match)},
                                        {"overrides", AgentOverrides{}},
                                        {"phase", "planning"}});
  return {std::move(ctx.s), std::move(ctx.events)};
}

StepResult step(const SessionState& state, const Command& command, const Env& env) {
  Ctx ctx{env, state, {}, 0};
  const Json& p = command.payload;
  switch (command.kind) {
    case CommandKind::start: ctx.start(); break;
    case CommandKind::task_finished: ctx.task_finished(p); break;
    case CommandKind::pause_branch: ctx.pause_branch(p); break;
    case CommandKind::resume_branch: ctx.resume_branch(p); break;
    case CommandKind::apply_plan_update: ctx.apply_plan_update(p); break;
    case CommandKind::set_autonomy: ctx.set_autonomy(p); break;
    case CommandKind::user_edit: ctx.user_edit(p); break;
  }
  return {std::move(ctx.s), std::move(ctx.events)};
}

// --- driver ----------------------------------------------------------------------

SessionRunner::SessionRunner(const Env& env, SimulatedAgents& agents) : env_(env), agents_(&agents) {}

void SessionRunner::absorb(std::vector<Event> events, SessionState next, std::vector<Event>* out) {
  for (auto& e : events) {
    if (e.kind == EventKind::TaskStarted) {
      auto task = e.payload.at("task_id").get<std::string>();
      started_[task] = e.seq;
      held_.erase(task);
      queue_.push_back(Pending{task, e.seq});
    }
    if (sink_) sink_(e);
    if (out) out->push_back(e);
    events_.push_back(std::move(e));
  }
  state_ = std::move(next);
}

void SessionRunner::begin(const SessionInit& init) {
  auto r = begin_session(init, env_);
  absorb(std::move(r.events), std::move(r.state), nullptr);
}

void SessionRunner::restore(const std::vector<Event>& events) {
  state_ = fold(events);
  events_ = events;
  queue_.clear();
  started_.clear();
  held_.clear();
  std::map<std::string, std::string> agent_of;
  for (const auto& e : events) {
    const auto& p = e.payload;
    if (e.kind == EventKind::TaskStarted) {
      agent_of[p.at("task_id").get<std::string>()] = p.at("agent_id").get<std::string>();
      started_[p.at("task_id").get<std::string>()] = e.seq;
    }
    bool invoked = (e.kind == EventKind::TaskCompleted && !p.value("skipped", false)) ||
                   (e.kind == EventKind::TaskFailed && !p.contains("cascade_from") &&
                    p.at("error").value("error", "") != "type-mismatch");
    if (invoked) {
      auto task = p.at("task_id").get<std::string>();
      if (agent_of.count(task)) agents_->note_call(agent_of[task], p.at("goal_id").get<std::string>());
    }
  }
  std::vector<Pending> running;
  for (const auto& [task, at] : started_) {
    if (state_.tasks.contains(task) && effective_state(state_, task) == TaskState::running) running.push_back({task, at});
  }
  std::sort(running.begin(), running.end(), [](const Pending& a, const Pending& b) { return a.started_at < b.started_at; });
  queue_.assign(running.begin(), running.end());
}

Command SessionRunner::invoke(const std::string& task_id) {
  const TaskSpec& t = state_.tasks.at(task_id);
  Command c;
  c.kind = CommandKind::task_finished;
  c.origin = Origin::agent;
  try {
    auto res = agents_->invoke(t.agent_id, state_.goals.at(t.goal_id), state_.evidence_list());
    c.payload = Json{{"task_id", task_id}, {"evidence", to_json(res.record)}};
    if (res.delay_rounds > 0) held_[task_id] = Held{started_.at(task_id), res.delay_rounds, c};
  } catch (const Error& e) {
    c.payload = Json{{"task_id", task_id}, {"error", Json{{"error", e.code()}, {"message", e.what()}}}};
  }
  return c;
}

std::vector<Event> SessionRunner::submit(const Command& command) {
  std::vector<Event> out;
  auto r = step(state_, command, env_);
  absorb(std::move(r.events), std::move(r.state), &out);
  while (!queue_.empty()) {
    Pending p = queue_.front();
    queue_.pop_front();
    auto latest = started_.find(p.task_id);
    if (latest == started_.end() || latest->second != p.started_at) continue;
    if (!state_.tasks.contains(p.task_id) || effective_state(state_, p.task_id) != TaskState::running) continue;
    Command finished;
    auto h = held_.find(p.task_id);
    if (h != held_.end() && h->second.started_at == p.started_at) {
      if (h->second.rounds > 0) {
        --h->second.rounds;
        queue_.push_back(p);
        continue;
      }
      finished = h->second.finished;
      held_.erase(h);
    } else {
      finished = invoke(p.task_id);
      if (held_.count(p.task_id)) {
        queue_.push_back(p);
        continue;
      }
    }
    auto next = step(state_, finished, env_);
    absorb(std::move(next.events), std::move(next.state), &out);
  }
  return out;
}

void SessionRunner::pump() {
  Command noop;
  noop.kind = CommandKind::set_autonomy;
  noop.payload = Json{{"level", std::string(to_string(state_.autonomy))}};
  noop.origin = Origin::system;
  submit(noop);
}

// --- event log -------------------------------------------------------------------

void append_event(const std::string& path, const Event& e) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw Error("io-error", "cannot append to '" + path + "'");
  out << event_line(e) << '\n';
  out.flush();
  if (!out) throw Error("io-error", "write to '" + path + "' failed");
}

void write_log(const std::string& path, const std::vector<Event>& events) {
  std::string text;
  for (const auto& e : events) text += event_line(e) + "\n";
  jsonu::write_file(path, text);
}

std::vector<Event> parse_log(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  std::vector<Event> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::int64_t expected = static_cast<std::int64_t>(out.size()) + 1;
    Event e;
    try {
      e = event_from_json(Json::parse(lines[i]));
    } catch (const std::exception& ex) {
      if (i + 1 == lines.size()) {
        throw Error("gapless-violation", "gapless-violation at seq " + std::to_string(expected),
                    Json{{"line", i + 1}, {"cause", "truncated final line"}});
      }
      throw Error("corrupt-event", "line " + std::to_string(i + 1) + " is not a valid event: " + ex.what(),
                  Json{{"line", i + 1}});
    }
    if (e.seq != expected) {
      throw Error("gapless-violation", "gapless-violation at seq " + std::to_string(expected),
                  Json{{"line", i + 1}, {"found", e.seq}});
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<Event> read_log(const std::string& path) { return parse_log(jsonu::read_text(path)); }

}  // namespace orchvis
