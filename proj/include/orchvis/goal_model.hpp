#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orchvis/ontology.hpp"
#include "orchvis/value.hpp"

namespace orchvis {

enum class Relation { sequential, parallel, conditional };
enum class GoalStatus { pending, active, achieved, failed, conflicted, paused };

std::string_view to_string(Relation relation);
Relation relation_from_string(std::string_view text);
std::string_view to_string(GoalStatus status);
GoalStatus goal_status_from_string(std::string_view text);

// Machine-checkable success condition over a dotted evidence path.
struct Constraint {
  std::string id;
  Severity severity = Severity::hard;
  std::string subject;
  Op op = Op::eq;
  ConstraintValue value;
  std::string units;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

// Guard for conditional nodes. When `goal` is set the predicate is evaluated
// against that goal's evidence; otherwise against any session evidence.
struct Predicate {
  std::optional<std::string> goal;
  std::string subject;
  Op op = Op::eq;
  ConstraintValue value;

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

struct GoalNode {
  std::string id;
  std::string title;
  std::optional<std::string> parent;
  Relation relation = Relation::parallel;
  std::optional<Predicate> condition;
  std::string ontology_type;
  std::map<std::string, TypedValue> attributes;
  std::vector<Constraint> constraints;
  GoalStatus status = GoalStatus::pending;

  const Constraint* find_constraint(const std::string& cid) const;
  bool has_hard_constraints() const;

  friend bool operator==(const GoalNode&, const GoalNode&) = default;
};

// Sibling order is lexicographic by id; a sequential parent chains its
// children in that order.
struct GoalGraph {
  int version = 1;
  std::string root;
  std::map<std::string, GoalNode> nodes;
  Timestamp clock;

  bool contains(const std::string& id) const { return nodes.count(id) != 0; }
  const GoalNode& at(const std::string& id) const;
  GoalNode& at(const std::string& id);

  std::vector<std::string> children(const std::string& id) const;
  bool is_leaf(const std::string& id) const { return children(id).empty(); }
  // Leaves in depth-first order (children visited by id).
  std::vector<std::string> leaves() const;
  std::vector<std::string> subtree_leaves(const std::string& id) const;
  // Depth-first pre-order from root, children by id. Unreachable nodes omitted.
  std::vector<std::string> depth_first() const;
  // id itself and every node below it.
  std::vector<std::string> subtree(const std::string& id) const;
  bool is_ancestor(const std::string& ancestor, const std::string& id) const;
  std::size_t depth(const std::string& id) const;

  friend bool operator==(const GoalGraph&, const GoalGraph&) = default;
};

struct ValidationIssue {
  std::string node_id;
  std::string field;
  std::string reason;

  friend bool operator==(const ValidationIssue&, const ValidationIssue&) = default;
};

std::vector<ValidationIssue> validate_graph(const GoalGraph& graph, const Ontology& ontology);

// Partial node update. Attribute and constraint maps upsert by key; a null
// entry removes it.
struct NodePatch {
  std::optional<std::string> title;
  std::optional<std::optional<std::string>> parent;
  std::optional<Relation> relation;
  std::optional<std::optional<Predicate>> condition;
  std::optional<std::string> ontology_type;
  std::map<std::string, std::optional<TypedValue>> attributes;
  std::map<std::string, std::optional<Constraint>> constraints;
  std::optional<GoalStatus> status;

  bool empty() const;
};

// Applies patch without validation.
GoalNode apply_patch(GoalNode node, const NodePatch& patch);

// Throws unknown-node, or invariant-violation carrying the issue list.
GoalGraph edit_node(const GoalGraph& graph, const std::string& node_id,
                    const NodePatch& patch, const Ontology& ontology);

// Resolves raw attribute, constraint and condition values against the clock.
// Throws unparseable-value naming the attribute (or constraint) at fault.
GoalNode normalize_attributes(const GoalNode& node, Timestamp clock);
GoalGraph normalize_graph(const GoalGraph& graph);

std::map<std::string, GoalStatus> rollup_status(const GoalGraph& graph);

// Constraint id for an attribute-derived predicate.
std::string derived_constraint_id(const std::string& node_id, const std::string& attribute);
// Constraints mirroring attributes under the type's predicate templates.
// Attributes that are absent or raw yield nothing.
std::vector<Constraint> derive_constraints(const GoalNode& node, const Ontology& ontology);

Constraint make_constraint(std::string id, Severity severity, std::string subject, Op op,
                           ConstraintValue value);

}  // namespace orchvis
