#pragma once

#include <optional>
#include <string>
#include <vector>

#include "orchvis/value.hpp"

namespace orchvis {

enum class ConflictKind { temporal_overlap, budget_exceeded, static_contradiction };

std::string_view to_string(ConflictKind kind);
ConflictKind conflict_kind_from_string(std::string_view text);

struct ConflictRecord {
  std::string id;  // "<kind>:<sorted involved ids>"
  ConflictKind kind = ConflictKind::temporal_overlap;
  std::vector<std::string> involved_goal_ids;  // sorted
  std::string narrative;
  std::vector<std::string> evidence_refs;
  std::int64_t detected_at = 0;  // seq of the ConflictDetected event

  friend bool operator==(const ConflictRecord&, const ConflictRecord&) = default;
};

std::string conflict_id(ConflictKind kind, const std::vector<std::string>& sorted_goal_ids);

Json to_json(const ConflictRecord& c);
ConflictRecord conflict_from_json(const Json& j);

enum class MoveKind { choose_option, relax_soft, reassign_agent, drop_goal };

std::string_view to_string(MoveKind kind);
MoveKind move_kind_from_string(std::string_view text);

// Closed repair move set. Only the fields relevant to `kind` are set.
struct Move {
  MoveKind kind = MoveKind::choose_option;
  std::string goal_id;        // choose_option, drop_goal
  std::size_t option_index = 0;
  std::string constraint_id;  // relax_soft
  std::string task_id;        // reassign_agent
  std::string agent_id;

  friend bool operator==(const Move&, const Move&) = default;
};

// "choose_option(itinerary,0)", "relax_soft(hotel.min_rating)", ...
std::string move_label(const Move& m);
Json to_json(const Move& m);
Move move_from_json(const Json& j);

struct Predicted {
  double progress = 0;
  double risk = 0;
  Money cost_delta{0, "USD"};

  friend bool operator==(const Predicted&, const Predicted&) = default;
};

struct RepairCandidate {
  std::string id;  // "<conflict id>#<move labels joined by +>"
  std::string conflict_id;
  std::vector<Move> moves;
  Predicted predicted;
  std::string rationale;

  friend bool operator==(const RepairCandidate&, const RepairCandidate&) = default;
};

Json to_json(const Predicted& p);
Predicted predicted_from_json(const Json& j);
Json to_json(const RepairCandidate& c);
RepairCandidate candidate_from_json(const Json& j);

}  // namespace orchvis
