#pragma once

#include <string>
#include <vector>

#include "orchvis/goal_model.hpp"

namespace orchvis {

// Goal document format (version 1): a single JSON object
//   {"clock": <RFC 3339>, "nodes": [...], "root": <id>, "version": 1}
// with node objects holding exactly id, title, parent, relation, condition
// (only when conditional), ontology_type, attributes, constraints, status.
// Canonical text has sorted keys, 2-space indentation and LF line endings;
// nodes appear depth-first with siblings by id.

// Parses and validates. Throws syntax-error (position, expected), schema-error
// (path, reason) or version-unsupported. Unknown fields are rejected.
GoalGraph parse_document(const std::string& document, const Ontology& ontology);
GoalGraph graph_from_json(const Json& j, const Ontology& ontology);

// Throws invalid-graph when the graph fails validation.
std::string serialize_document(const GoalGraph& graph, const Ontology& ontology);
// Structural JSON without validation (used inside events and snapshots).
Json graph_to_json(const GoalGraph& graph);
// Inverse of graph_to_json with the closed-grammar checks but no ontology
// validation.
GoalGraph graph_from_json_unchecked(const Json& j);

Json node_to_json(const GoalNode& node);
GoalNode node_from_json(const Json& j, const std::string& path);
Json constraint_to_json(const Constraint& c);
Constraint constraint_from_json(const Json& j, const std::string& path);
Json predicate_to_json(const Predicate& p);
Predicate predicate_from_json(const Json& j, const std::string& path);

// Patch body: any subset of node fields except id; "attributes" and
// "constraints" are objects keyed by name / constraint id with null = remove.
NodePatch patch_from_json(const Json& j);

Json issues_to_json(const std::vector<ValidationIssue>& issues);

struct FieldChange {
  std::string node_id;
  std::string field;
  Json before;
  Json after;

  friend bool operator==(const FieldChange&, const FieldChange&) = default;
};

struct Rejection {
  std::string node_id;
  std::string field;
  std::string reason;

  friend bool operator==(const Rejection&, const Rejection&) = default;
};

struct RepairLoopReport {
  GoalGraph reconciled;
  std::vector<FieldChange> changes_applied;
  std::vector<Rejection> rejected;
};

Json to_json(const RepairLoopReport& report);

// Merges a user-edited hierarchy into the internal one. Valid user edits win;
// invalid ones are rejected with a reason and the internal value kept.
// Attribute-derived constraints are regenerated from the final attributes.
// Throws root-mismatch.
RepairLoopReport reconcile(const GoalGraph& internal, const GoalGraph& user_edited,
                           const Ontology& ontology);

}  // namespace orchvis
