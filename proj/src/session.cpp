#include "orchvis/session.hpp"

#include <algorithm>

#include "orchvis/goal_dsl.hpp"
#include "orchvis/json_util.hpp"

namespace orchvis {

using namespace jsonu;

namespace {

constexpr std::string_view kAutonomy[] = {"manual", "conflict_gated", "auto"};
constexpr std::string_view kPhase[] = {"planning", "executing", "completed"};
constexpr std::string_view kEvents[] = {"GoalUpdated",     "TaskStarted",      "TaskCompleted",  "TaskFailed",
                                        "VerificationReport", "ConflictDetected", "RepairProposed", "PlanUpdated",
                                        "BranchPaused",    "BranchResumed",    "AutonomyChanged", "SessionCompleted"};
constexpr std::string_view kCommands[] = {"start",         "task_finished",     "pause_branch", "resume_branch",
                                          "apply_plan_update", "set_autonomy", "user_edit"};
constexpr std::string_view kOrigins[] = {"user", "system", "agent"};

template <typename E, std::size_t N>
E lookup(const std::string_view (&names)[N], std::string_view text, const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return static_cast<E>(i);
  }
  throw Error("schema-error", std::string("unknown ") + what + " '" + std::string(text) + "'");
}

[[noreturn]] void invalid(const std::string& message, Json detail = Json::object()) {
  throw Error("invalid-command", message, std::move(detail));
}

}  // namespace

std::string_view to_string(Autonomy a) { return kAutonomy[static_cast<int>(a)]; }
Autonomy autonomy_from_string(std::string_view t) { return lookup<Autonomy>(kAutonomy, t, "autonomy level"); }
std::string_view to_string(Phase p) { return kPhase[static_cast<int>(p)]; }
Phase phase_from_string(std::string_view t) { return lookup<Phase>(kPhase, t, "phase"); }
std::string_view to_string(EventKind k) { return kEvents[static_cast<int>(k)]; }
EventKind event_kind_from_string(std::string_view t) { return lookup<EventKind>(kEvents, t, "event kind"); }
std::string_view to_string(CommandKind k) { return kCommands[static_cast<int>(k)]; }
CommandKind command_kind_from_string(std::string_view t) { return lookup<CommandKind>(kCommands, t, "command kind"); }
std::string_view to_string(Origin o) { return kOrigins[static_cast<int>(o)]; }
Origin origin_from_string(std::string_view t) { return lookup<Origin>(kOrigins, t, "origin"); }

const PausedBranch* SessionState::branch_of_task(const std::string& task_id) const {
  for (const auto& b : paused) {
    if (std::find(b.task_ids.begin(), b.task_ids.end(), task_id) != b.task_ids.end()) return &b;
  }
  return nullptr;
}

std::vector<EvidenceRecord> SessionState::evidence_list() const {
  std::vector<EvidenceRecord> out;
  for (const auto& [goal, rec] : evidence) out.push_back(rec);
  return out;
}

// --- serialization -------------------------------------------------------------

Json to_json(const PausedBranch& b) {
  Json tasks = Json::object();
  for (const auto& [t, s] : b.prior_tasks) tasks[t] = std::string(to_string(s));
  return Json{{"goal_id", b.goal_id}, {"task_ids", b.task_ids}, {"prior_tasks", tasks}, {"reason", b.reason}};
}

PausedBranch branch_from_json(const Json& j) {
  PausedBranch b;
  b.goal_id = j.at("goal_id").get<std::string>();
  b.task_ids = j.at("task_ids").get<std::vector<std::string>>();
  for (const auto& [t, st] : j.at("prior_tasks").items()) b.prior_tasks[t] = task_state_from_string(st.get<std::string>());
  b.reason = j.at("reason").get<std::string>();
  return b;
}

Json state_to_json(const SessionState& s) {
  Json evidence = Json::object(), deferred = Json::object(), reports = Json::object();
  for (const auto& [g, r] : s.evidence) evidence[g] = to_json(r);
  for (const auto& [t, r] : s.deferred) deferred[t] = to_json(r);
  for (const auto& [g, r] : s.reports) reports[g] = to_json(r);
  Json conflicts = Json::array(), resolved = Json::array(), proposals = Json::object(), paused = Json::array();
  for (const auto& [id, c] : s.conflicts) conflicts.push_back(to_json(c));
  for (const auto& c : s.resolved) resolved.push_back(to_json(c));
  for (const auto& [cid, list] : s.proposals) {
    Json arr = Json::array();
    for (const auto& c : list) arr.push_back(to_json(c));
    proposals[cid] = arr;
  }
  for (const auto& b : s.paused) paused.push_back(to_json(b));
  return Json{{"session_id", s.session_id},
              {"scenario", s.scenario},
              {"seed", s.seed},
              {"config", to_json(s.config)},
              {"autonomy", std::string(to_string(s.autonomy))},
              {"phase", std::string(to_string(s.phase))},
              {"goals", graph_to_json(s.goals)},
              {"tasks", to_json(s.tasks)},
              {"match", to_json(s.match)},
              {"overrides", s.overrides},
              {"evidence", evidence},
              {"deferred", deferred},
              {"reports", reports},
              {"conflicts", conflicts},
              {"resolved_conflicts", resolved},
              {"proposals", proposals},
              {"pending_approval", s.pending ? Json{{"conflict_id", s.pending->conflict_id},
                                                    {"candidate_id", s.pending->candidate_id}}
                                             : Json(nullptr)},
              {"paused", paused},
              {"applied_candidates", s.applied_candidates},
              {"seq", s.seq}};
}

Json to_json(const Event& e) {
  return Json{{"seq", e.seq}, {"timestamp", e.timestamp}, {"kind", std::string(to_string(e.kind))}, {"payload", e.payload}};
}

Event event_from_json(const Json& j) {
  expect_object(j, "$", {"seq", "timestamp", "kind", "payload"});
  Event e;
  e.seq = get_integer(j, "seq", "$");
  e.timestamp = get_string(j, "timestamp", "$");
  try {
    e.kind = event_kind_from_string(get_string(j, "kind", "$"));
  } catch (const Error&) {
    schema_error("$.kind", "unknown event kind");
  }
  e.payload = get_object(j, "payload", "$");
  return e;
}

std::string event_line(const Event& e) { return compact(to_json(e)); }

Json to_json(const Command& c) {
  return Json{{"kind", std::string(to_string(c.kind))}, {"payload", c.payload}, {"origin", std::string(to_string(c.origin))}};
}

Command command_from_json(const Json& j) {
  Command c;
  try {
    expect_object(j, "$", {"kind"}, {"payload", "origin"});
    c.kind = command_kind_from_string(get_string(j, "kind", "$"));
    if (j.contains("origin")) c.origin = origin_from_string(get_string(j, "origin", "$"));
    c.payload = j.contains("payload") ? j["payload"] : Json::object();
    const Json& p = c.payload;
    switch (c.kind) {
      case CommandKind::start: expect_object(p, "$.payload", {}); break;
      case CommandKind::task_finished:
        expect_object(p, "$.payload", {"task_id"}, {"evidence", "error"});
        get_string(p, "task_id", "$.payload");
        if (p.contains("evidence") == p.contains("error")) schema_error("$.payload", "expected evidence or error");
        if (p.contains("evidence")) evidence_from_json(p["evidence"], "$.payload.evidence");
        if (p.contains("error")) {
          expect_object(p["error"], "$.payload.error", {"error", "message"}, {});
        }
        break;
      case CommandKind::pause_branch:
      case CommandKind::resume_branch:
        expect_object(p, "$.payload", {"goal_id"});
        get_string(p, "goal_id", "$.payload");
        break;
      case CommandKind::apply_plan_update:
        expect_object(p, "$.payload", {"candidate_id"}, {"approve"});
        get_string(p, "candidate_id", "$.payload");
        if (p.contains("approve")) get_bool(p, "approve", "$.payload");
        break;
      case CommandKind::set_autonomy:
        expect_object(p, "$.payload", {"level"});
        autonomy_from_string(get_string(p, "level", "$.payload"));
        break;
      case CommandKind::user_edit:
        if (p.contains("graph")) {
          expect_object(p, "$.payload", {"graph"});
        } else {
          expect_object(p, "$.payload", {"goal_id", "patch"});
          get_string(p, "goal_id", "$.payload");
          patch_from_json(p["patch"]);
        }
        break;
    }
  } catch (const Error& e) {
    if (e.code() == "invalid-command") throw;
    Json detail = e.detail();
    detail["cause"] = e.code();
    invalid(std::string("malformed command: ") + e.what(), detail);
  }
  return c;
}

// --- reducer -------------------------------------------------------------------

namespace {

void resolve_conflicts(SessionState& s, const Json& payload) {
  if (!payload.contains("resolved_conflicts")) return;
  for (const auto& idj : payload.at("resolved_conflicts")) {
    auto id = idj.get<std::string>();
    auto it = s.conflicts.find(id);
    if (it != s.conflicts.end()) {
      s.resolved.push_back(it->second);
      s.conflicts.erase(it);
    }
    s.proposals.erase(id);
    if (s.pending && s.pending->conflict_id == id) s.pending.reset();
  }
}

PausedBranch* branch_for(SessionState& s, const std::string& task_id) {
  return const_cast<PausedBranch*>(s.branch_of_task(task_id));
}

void set_task_state(SessionState& s, const std::string& task_id, TaskState st) {
  if (auto* b = branch_for(s, task_id)) {
    b->prior_tasks[task_id] = st;
  } else {
    s.tasks.at(task_id).state = st;
  }
}

}  // namespace

void apply_event(SessionState& s, const Event& e) {
  if (e.seq != s.seq + 1) {
    throw Error("gapless-violation", "gapless-violation at seq " + std::to_string(s.seq + 1),
                Json{{"expected", s.seq + 1}, {"found", e.seq}});
  }
  const Json& p = e.payload;
  switch (e.kind) {
    case EventKind::GoalUpdated:
      if (p.contains("session")) {
        const auto& ses = p.at("session");
        s.session_id = ses.at("session_id").get<std::string>();
        s.scenario = ses.at("scenario").get<std::string>();
        s.seed = ses.at("seed").get<std::uint64_t>();
        s.config = verifier_config_from_json(ses.at("config"));
        s.autonomy = autonomy_from_string(ses.at("autonomy").get<std::string>());
        s.phase = Phase::planning;
      }
      if (p.contains("graph")) s.goals = graph_from_json_unchecked(p.at("graph"));
      if (p.contains("goal_id")) {
        s.goals.at(p.at("goal_id").get<std::string>()).status =
            goal_status_from_string(p.at("status").get<std::string>());
      }
      if (p.contains("reports_cleared")) {
        for (const auto& g : p.at("reports_cleared")) s.reports.erase(g.get<std::string>());
      }
      resolve_conflicts(s, p);
      break;
    case EventKind::TaskStarted:
      set_task_state(s, p.at("task_id").get<std::string>(), TaskState::running);
      break;
    case EventKind::TaskCompleted: {
      auto task = p.at("task_id").get<std::string>();
      if (p.value("deferred", false)) {
        s.deferred[task] = evidence_from_json(p.at("evidence"), "$.evidence");
      } else if (p.contains("evidence")) {
        s.evidence[p.at("goal_id").get<std::string>()] = evidence_from_json(p.at("evidence"), "$.evidence");
      }
      set_task_state(s, task, TaskState::done);
      break;
    }
    case EventKind::TaskFailed:
      set_task_state(s, p.at("task_id").get<std::string>(), TaskState::failed);
      break;
    case EventKind::VerificationReport: {
      auto r = verification_report_from_json(p.at("report"));
      s.reports[r.goal_id] = r;
      break;
    }
    case EventKind::ConflictDetected: {
      auto c = conflict_from_json(p.at("conflict"));
      s.conflicts[c.id] = c;
      break;
    }
    case EventKind::RepairProposed: {
      auto cid = p.at("conflict_id").get<std::string>();
      std::vector<RepairCandidate> list;
      for (const auto& c : p.at("candidates")) list.push_back(candidate_from_json(c));
      s.proposals[cid] = std::move(list);
      if (p.at("awaiting") == "approval") s.pending = PendingApproval{cid, p.at("selected").get<std::string>()};
      break;
    }
    case EventKind::PlanUpdated:
      s.tasks = task_graph_from_json(p.at("task_graph"));
      s.match = match_report_from_json(p.at("match"));
      s.overrides = p.at("overrides").get<AgentOverrides>();
      if (p.contains("graph")) s.goals = graph_from_json_unchecked(p.at("graph"));
      if (p.contains("phase")) s.phase = phase_from_string(p.at("phase").get<std::string>());
      if (p.contains("evidence")) {
        for (const auto& [goal, rec] : p.at("evidence").items()) {
          s.deferred.erase(task_id_for(goal));
          if (rec.is_null()) {
            s.evidence.erase(goal);
            s.reports.erase(goal);
          } else {
            s.evidence[goal] = evidence_from_json(rec, "$.evidence");
          }
        }
      }
      if (p.contains("paused")) {
        s.paused.clear();
        for (const auto& b : p.at("paused")) s.paused.push_back(branch_from_json(b));
      }
      if (p.contains("candidate_id")) {
        s.applied_candidates.push_back(p.at("candidate_id").get<std::string>());
        s.pending.reset();
      }
      resolve_conflicts(s, p);
      break;
    case EventKind::BranchPaused: {
      PausedBranch b;
      b.goal_id = p.at("goal_id").get<std::string>();
      b.task_ids = p.at("task_ids").get<std::vector<std::string>>();
      b.reason = p.at("reason").get<std::string>();
      for (const auto& t : b.task_ids) {
        b.prior_tasks[t] = s.tasks.at(t).state;
        s.tasks.at(t).state = TaskState::paused;
      }
      s.paused.push_back(std::move(b));
      break;
    }
    case EventKind::BranchResumed: {
      auto goal = p.at("goal_id").get<std::string>();
      auto it = std::find_if(s.paused.begin(), s.paused.end(), [&](const PausedBranch& b) { return b.goal_id == goal; });
      if (it == s.paused.end()) throw Error("invalid-event", "BranchResumed for a branch that is not paused");
      for (const auto& [t, st] : p.at("restored").items()) {
        if (s.tasks.contains(t)) s.tasks.at(t).state = task_state_from_string(st.get<std::string>());
      }
      for (const auto& t : it->task_ids) {
        auto d = s.deferred.find(t);
        if (d == s.deferred.end()) continue;
        s.evidence[d->second.goal_id] = d->second;
        s.deferred.erase(d);
      }
      s.paused.erase(it);
      break;
    }
    case EventKind::AutonomyChanged:
      s.autonomy = autonomy_from_string(p.at("to").get<std::string>());
      break;
    case EventKind::SessionCompleted:
      s.phase = Phase::completed;
      break;
  }
  s.seq = e.seq;
}

SessionState fold(const std::vector<Event>& events) {
  SessionState s;
  for (const auto& e : events) apply_event(s, e);
  return s;
}

}  // namespace orchvis
