#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orchvis/value.hpp"

namespace orchvis {

using FieldMap = std::map<std::string, TypedValue>;

struct EvidenceOption {
  std::string row_id;
  FieldMap fields;

  friend bool operator==(const EvidenceOption&, const EvidenceOption&) = default;
};

// What a sub-agent reports back for one goal.
struct EvidenceRecord {
  std::string id;
  std::string agent_id;
  std::string goal_id;
  std::string ontology_type;
  FieldMap fields;
  bool exclusive_attention = false;
  std::vector<EvidenceOption> options;

  friend bool operator==(const EvidenceRecord&, const EvidenceRecord&) = default;
};

Json to_json(const FieldMap& fields);
FieldMap field_map_from_json(const Json& j, const std::string& path);
Json to_json(const EvidenceRecord& record);
EvidenceRecord evidence_from_json(const Json& j, const std::string& path = "$");

// [start, end) of an exclusive record: depart/arrive or start/end fields.
struct Interval {
  std::int64_t start = 0;
  std::int64_t end = 0;
};
std::optional<Interval> evidence_interval(const FieldMap& fields);

// price.amount when present and money-typed.
std::optional<Money> evidence_price(const FieldMap& fields);

}  // namespace orchvis
