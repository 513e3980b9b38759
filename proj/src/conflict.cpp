#include "orchvis/conflict.hpp"

#include "orchvis/json_util.hpp"

namespace orchvis {

namespace {

constexpr std::string_view kKindNames[] = {"temporal_overlap", "budget_exceeded", "static_contradiction"};
constexpr std::string_view kMoveNames[] = {"choose_option", "relax_soft", "reassign_agent", "drop_goal"};

Json money_json(const Money& m) { return to_json(TypedValue::money(m.minor, m.currency)); }

}  // namespace

std::string_view to_string(ConflictKind kind) { return kKindNames[static_cast<int>(kind)]; }

ConflictKind conflict_kind_from_string(std::string_view text) {
  for (int i = 0; i < 3; ++i) {
    if (kKindNames[i] == text) return static_cast<ConflictKind>(i);
  }
  throw Error("schema-error", "unknown conflict kind '" + std::string(text) + "'");
}

std::string conflict_id(ConflictKind kind, const std::vector<std::string>& sorted_goal_ids) {
  std::string id(to_string(kind));
  id += ":";
  for (std::size_t i = 0; i < sorted_goal_ids.size(); ++i) id += (i ? "," : "") + sorted_goal_ids[i];
  return id;
}

Json to_json(const ConflictRecord& c) {
  return Json{{"id", c.id},
              {"kind", std::string(to_string(c.kind))},
              {"involved_goal_ids", c.involved_goal_ids},
              {"narrative", c.narrative},
              {"evidence_refs", c.evidence_refs},
              {"detected_at", c.detected_at}};
}

ConflictRecord conflict_from_json(const Json& j) {
  ConflictRecord c;
  c.id = j.at("id").get<std::string>();
  c.kind = conflict_kind_from_string(j.at("kind").get<std::string>());
  c.involved_goal_ids = j.at("involved_goal_ids").get<std::vector<std::string>>();
  c.narrative = j.at("narrative").get<std::string>();
  c.evidence_refs = j.at("evidence_refs").get<std::vector<std::string>>();
  c.detected_at = j.at("detected_at").get<std::int64_t>();
  return c;
}

std::string_view to_string(MoveKind kind) { return kMoveNames[static_cast<int>(kind)]; }

MoveKind move_kind_from_string(std::string_view text) {
  for (int i = 0; i < 4; ++i) {
    if (kMoveNames[i] == text) return static_cast<MoveKind>(i);
  }
  throw Error("schema-error", "unknown move kind '" + std::string(text) + "'");
}

std::string move_label(const Move& m) {
  std::string args;
  switch (m.kind) {
    case MoveKind::choose_option: args = m.goal_id + "," + std::to_string(m.option_index); break;
    case MoveKind::relax_soft: args = m.constraint_id; break;
    case MoveKind::reassign_agent: args = m.task_id + "," + m.agent_id; break;
    case MoveKind::drop_goal: args = m.goal_id; break;
  }
  return std::string(to_string(m.kind)) + "(" + args + ")";
}

Json to_json(const Move& m) {
  Json j{{"kind", std::string(to_string(m.kind))}};
  switch (m.kind) {
    case MoveKind::choose_option:
      j["goal_id"] = m.goal_id;
      j["option_index"] = m.option_index;
      break;
    case MoveKind::relax_soft: j["constraint_id"] = m.constraint_id; break;
    case MoveKind::reassign_agent:
      j["task_id"] = m.task_id;
      j["agent_id"] = m.agent_id;
      break;
    case MoveKind::drop_goal: j["goal_id"] = m.goal_id; break;
  }
  return j;
}

Move move_from_json(const Json& j) {
  Move m;
  m.kind = move_kind_from_string(j.at("kind").get<std::string>());
  switch (m.kind) {
    case MoveKind::choose_option:
      m.goal_id = j.at("goal_id").get<std::string>();
      m.option_index = j.at("option_index").get<std::size_t>();
      break;
    case MoveKind::relax_soft: m.constraint_id = j.at("constraint_id").get<std::string>(); break;
    case MoveKind::reassign_agent:
      m.task_id = j.at("task_id").get<std::string>();
      m.agent_id = j.at("agent_id").get<std::string>();
      break;
    case MoveKind::drop_goal: m.goal_id = j.at("goal_id").get<std::string>(); break;
  }
  return m;
}

Json to_json(const Predicted& p) {
  return Json{{"progress", p.progress}, {"risk", p.risk}, {"cost_delta", money_json(p.cost_delta)}};
}

Predicted predicted_from_json(const Json& j) {
  Predicted p;
  p.progress = j.at("progress").get<double>();
  p.risk = j.at("risk").get<double>();
  p.cost_delta = typed_value_from_json(j.at("cost_delta"), "$.cost_delta").as_money();
  return p;
}

Json to_json(const RepairCandidate& c) {
  Json moves = Json::array();
  for (const auto& m : c.moves) moves.push_back(to_json(m));
  return Json{{"id", c.id},
              {"conflict_id", c.conflict_id},
              {"moves", moves},
              {"predicted", to_json(c.predicted)},
              {"rationale", c.rationale}};
}

RepairCandidate candidate_from_json(const Json& j) {
  RepairCandidate c;
  c.id = j.at("id").get<std::string>();
  c.conflict_id = j.at("conflict_id").get<std::string>();
  for (const auto& m : j.at("moves")) c.moves.push_back(move_from_json(m));
  c.predicted = predicted_from_json(j.at("predicted"));
  c.rationale = j.at("rationale").get<std::string>();
  return c;
}

}  // namespace orchvis
