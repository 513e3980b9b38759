#include "orchvis/goal_model.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <set>

#include "orchvis/normalize.hpp"

namespace orchvis {

namespace {

constexpr std::array<std::string_view, 3> kRelationNames = {"sequential", "parallel",
                                                            "conditional"};
constexpr std::array<std::string_view, 6> kStatusNames = {
    "pending", "active", "achieved", "failed", "conflicted", "paused"};

}  // namespace

std::string_view to_string(Relation relation) {
  return kRelationNames[static_cast<std::size_t>(relation)];
}

Relation relation_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kRelationNames.size(); ++i) {
    if (kRelationNames[i] == text) return static_cast<Relation>(i);
  }
  throw Error("schema-error", "unknown relation '" + std::string(text) + "'");
}

std::string_view to_string(GoalStatus status) {
  return kStatusNames[static_cast<std::size_t>(status)];
}

GoalStatus goal_status_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kStatusNames.size(); ++i) {
    if (kStatusNames[i] == text) return static_cast<GoalStatus>(i);
  }
  throw Error("schema-error", "unknown status '" + std::string(text) + "'");
}

const Constraint* GoalNode::find_constraint(const std::string& cid) const {
  for (const auto& c : constraints) {
    if (c.id == cid) return &c;
  }
  return nullptr;
}

bool GoalNode::has_hard_constraints() const {
  return std::any_of(constraints.begin(), constraints.end(),
                     [](const Constraint& c) { return c.severity == Severity::hard; });
}

const GoalNode& GoalGraph::at(const std::string& id) const {
  auto it = nodes.find(id);
  if (it == nodes.end()) {
    throw Error("unknown-node", "unknown goal '" + id + "'", Json{{"goal_id", id}});
  }
  return it->second;
}

GoalNode& GoalGraph::at(const std::string& id) {
  auto it = nodes.find(id);
  if (it == nodes.end()) {
    throw Error("unknown-node", "unknown goal '" + id + "'", Json{{"goal_id", id}});
  }
  return it->second;
}

std::vector<std::string> GoalGraph::children(const std::string& id) const {
  std::vector<std::string> out;
  for (const auto& [nid, node] : nodes) {
    if (node.parent && *node.parent == id && nid != id) out.push_back(nid);
  }
  return out;
}

std::vector<std::string> GoalGraph::depth_first() const {
  std::vector<std::string> out;
  if (!contains(root)) return out;
  std::map<std::string, std::vector<std::string>> kids;
  for (const auto& [nid, node] : nodes) {
    if (node.parent && nid != root) kids[*node.parent].push_back(nid);
  }
  std::set<std::string> seen;
  std::function<void(const std::string&)> visit = [&](const std::string& id) {
    if (!seen.insert(id).second) return;
    out.push_back(id);
    for (const auto& c : kids[id]) visit(c);
  };
  visit(root);
  return out;
}

std::vector<std::string> GoalGraph::subtree(const std::string& id) const {
  std::vector<std::string> out;
  for (const auto& nid : depth_first()) {
    if (nid == id || is_ancestor(id, nid)) out.push_back(nid);
  }
  return out;
}

std::vector<std::string> GoalGraph::leaves() const { return subtree_leaves(root); }

std::vector<std::string> GoalGraph::subtree_leaves(const std::string& id) const {
  std::set<std::string> has_child;
  for (const auto& [nid, node] : nodes) {
    if (node.parent && nid != root) has_child.insert(*node.parent);
  }
  std::vector<std::string> out;
  for (const auto& nid : subtree(id)) {
    if (!has_child.count(nid)) out.push_back(nid);
  }
  return out;
}

bool GoalGraph::is_ancestor(const std::string& ancestor, const std::string& id) const {
  auto it = nodes.find(id);
  std::size_t guard = 0;
  while (it != nodes.end() && it->second.parent && guard++ <= nodes.size()) {
    if (*it->second.parent == ancestor) return true;
    it = nodes.find(*it->second.parent);
  }
  return false;
}

std::size_t GoalGraph::depth(const std::string& id) const {
  std::size_t d = 0;
  auto it = nodes.find(id);
  while (it != nodes.end() && it->second.parent && d <= nodes.size()) {
    ++d;
    it = nodes.find(*it->second.parent);
  }
  return d;
}

// --- validation ------------------------------------------------------------

namespace {

void check_value(const TypedValue& v, std::vector<ValidationIssue>& issues,
                 const std::string& node_id, const std::string& field) {
  if (v.is_raw()) return;
  if (v.kind() == ValueKind::money && !is_currency_code(v.as_money().currency)) {
    issues.push_back({node_id, field, "invalid-value"});
  }
  if (v.kind() == ValueKind::duration && v.as_duration().minutes < 0) {
    issues.push_back({node_id, field, "invalid-value"});
  }
}

}  // namespace

std::vector<ValidationIssue> validate_graph(const GoalGraph& graph, const Ontology& ontology) {
  std::vector<ValidationIssue> issues;
  if (graph.version != 1) issues.push_back({"", "version", "version-unsupported"});
  if (graph.root.empty() || !graph.contains(graph.root)) {
    issues.push_back({graph.root, "root", "dangling-root"});
  }

  std::set<std::string> constraint_ids;
  for (const auto& [key, node] : graph.nodes) {
    const std::string& id = key;
    if (node.id != key) issues.push_back({id, "id", "id-mismatch"});
    if (id.empty()) issues.push_back({id, "id", "empty-id"});
    if (node.title.empty()) issues.push_back({id, "title", "empty-title"});

    if (id == graph.root) {
      if (node.parent) issues.push_back({id, "parent", "root-has-parent"});
    } else if (!node.parent) {
      issues.push_back({id, "parent", "multiple-roots"});
    } else if (!graph.contains(*node.parent)) {
      issues.push_back({id, "parent", "dangling-parent"});
    } else {
      // Walk up; flag only nodes that sit on a cycle so a single bad link
      // yields one issue.
      std::set<std::string> seen{id};
      auto it = graph.nodes.find(*node.parent);
      bool on_cycle = false;
      while (it != graph.nodes.end()) {
        if (it->first == id) {
          on_cycle = true;
          break;
        }
        if (!seen.insert(it->first).second || it->first == graph.root || !it->second.parent) break;
        it = graph.nodes.find(*it->second.parent);
      }
      if (on_cycle) issues.push_back({id, "parent", "cycle"});
    }

    bool conditional = node.relation == Relation::conditional;
    if (conditional && !node.condition) issues.push_back({id, "condition", "condition-missing"});
    if (!conditional && node.condition) issues.push_back({id, "condition", "condition-unexpected"});
    if (node.condition) {
      const auto& cond = *node.condition;
      if (cond.subject.empty()) issues.push_back({id, "condition", "condition-empty-subject"});
      if (check_op_value(cond.op, cond.value)) {
        issues.push_back({id, "condition", "condition-op-value-mismatch"});
      }
      if (cond.goal) {
        if (!graph.contains(*cond.goal)) {
          issues.push_back({id, "condition", "dangling-condition-reference"});
        } else if (*cond.goal == id || graph.is_ancestor(id, *cond.goal) ||
                   graph.is_ancestor(*cond.goal, id)) {
          issues.push_back({id, "condition", "condition-self-reference"});
        }
      }
    }

    if (!ontology.contains(node.ontology_type)) {
      issues.push_back({id, "ontology_type", "unknown-ontology-type"});
    } else {
      auto schema = ontology.attributes(node.ontology_type);
      for (const auto& [name, value] : node.attributes) {
        auto it = schema.find(name);
        std::string field = "attributes." + name;
        if (it == schema.end()) {
          issues.push_back({id, field, "unknown-attribute"});
        } else if (it->second.kind != value.kind()) {
          issues.push_back({id, field, "attribute-kind-mismatch"});
        } else {
          check_value(value, issues, id, field);
        }
      }
      for (const auto& [name, spec] : schema) {
        if (spec.required && !node.attributes.count(name)) {
          issues.push_back({id, "attributes." + name, "missing-required-attribute"});
        }
      }
    }

    for (const auto& c : node.constraints) {
      std::string field = "constraints." + c.id;
      if (c.id.empty()) {
        issues.push_back({id, "constraints", "constraint-empty-id"});
        continue;
      }
      if (!constraint_ids.insert(c.id).second) {
        issues.push_back({id, field, "duplicate-constraint-id"});
      }
      if (c.subject.empty()) issues.push_back({id, field, "constraint-empty-subject"});
      if (auto why = check_op_value(c.op, c.value)) {
        issues.push_back({id, field, *why == "op-value-mismatch" ? "constraint-op-value-mismatch"
                                                                 : *why});
      } else if (c.units != constraint_value_unit(c.value)) {
        issues.push_back({id, field, "units-mismatch"});
      }
    }
  }
  return issues;
}

// --- editing ---------------------------------------------------------------

bool NodePatch::empty() const {
  return !title && !parent && !relation && !condition && !ontology_type && attributes.empty() &&
         constraints.empty() && !status;
}

GoalNode apply_patch(GoalNode node, const NodePatch& patch) {
  if (patch.title) node.title = *patch.title;
  if (patch.parent) node.parent = *patch.parent;
  if (patch.relation) node.relation = *patch.relation;
  if (patch.condition) node.condition = *patch.condition;
  if (patch.ontology_type) node.ontology_type = *patch.ontology_type;
  for (const auto& [name, value] : patch.attributes) {
    if (value) {
      node.attributes[name] = *value;
    } else {
      node.attributes.erase(name);
    }
  }
  for (const auto& [cid, constraint] : patch.constraints) {
    auto it = std::find_if(node.constraints.begin(), node.constraints.end(),
                           [&](const Constraint& c) { return c.id == cid; });
    if (!constraint) {
      if (it != node.constraints.end()) node.constraints.erase(it);
    } else if (it != node.constraints.end()) {
      *it = *constraint;
    } else {
      node.constraints.push_back(*constraint);
    }
  }
  if (patch.status) node.status = *patch.status;
  return node;
}

GoalGraph edit_node(const GoalGraph& graph, const std::string& node_id,
                    const NodePatch& patch, const Ontology& ontology) {
  GoalGraph out = graph;
  GoalNode& node = out.at(node_id);
  node = apply_patch(node, patch);
  auto issues = validate_graph(out, ontology);
  if (!issues.empty()) {
    Json list = Json::array();
    for (const auto& issue : issues) {
      list.push_back(Json{{"node_id", issue.node_id}, {"field", issue.field}, {"reason", issue.reason}});
    }
    throw Error("invariant-violation",
                "edit of '" + node_id + "' breaks invariants: " + issues.front().reason,
                Json{{"issues", list}});
  }
  return out;
}

// --- normalization ---------------------------------------------------------

namespace {

TypedValue normalize_named(const TypedValue& v, Timestamp clock, const std::string& name) {
  try {
    return normalize_value(v, clock);
  } catch (const Error& e) {
    Json detail = e.detail();
    detail["attribute"] = name;
    throw Error("unparseable-value", std::string(e.what()) + " (" + name + ")", detail);
  }
}

ConstraintValue normalize_constraint_value(const ConstraintValue& value, Timestamp clock,
                                           const std::string& name) {
  if (const auto* v = std::get_if<TypedValue>(&value)) return normalize_named(*v, clock, name);
  if (const auto* iv = std::get_if<TypedInterval>(&value)) {
    return TypedInterval{normalize_named(iv->lo, clock, name), normalize_named(iv->hi, clock, name)};
  }
  TypedSet out;
  for (const auto& item : std::get<TypedSet>(value).items) {
    out.items.push_back(normalize_named(item, clock, name));
  }
  return out;
}

}  // namespace

GoalNode normalize_attributes(const GoalNode& node, Timestamp clock) {
  GoalNode out = node;
  for (auto& [name, value] : out.attributes) value = normalize_named(value, clock, name);
  for (auto& c : out.constraints) {
    c.value = normalize_constraint_value(c.value, clock, "constraints." + c.id);
    if (c.units.empty()) c.units = constraint_value_unit(c.value);
  }
  if (out.condition) {
    out.condition->value = normalize_constraint_value(out.condition->value, clock, "condition");
  }
  return out;
}

GoalGraph normalize_graph(const GoalGraph& graph) {
  GoalGraph out = graph;
  for (auto& [_, node] : out.nodes) node = normalize_attributes(node, graph.clock);
  return out;
}

// --- rollup ----------------------------------------------------------------

std::map<std::string, GoalStatus> rollup_status(const GoalGraph& graph) {
  std::map<std::string, GoalStatus> out;
  std::map<std::string, std::vector<std::string>> kids;
  for (const auto& [nid, node] : graph.nodes) {
    if (node.parent && nid != graph.root) kids[*node.parent].push_back(nid);
  }
  std::function<GoalStatus(const std::string&)> visit = [&](const std::string& id) {
    const auto& children = kids[id];
    GoalStatus status;
    if (children.empty()) {
      status = graph.at(id).status;
    } else {
      std::set<GoalStatus> seen;
      for (const auto& c : children) seen.insert(visit(c));
      if (seen.size() == 1 && *seen.begin() == GoalStatus::achieved) {
        status = GoalStatus::achieved;
      } else if (seen.count(GoalStatus::conflicted)) {
        status = GoalStatus::conflicted;
      } else if (seen.count(GoalStatus::failed)) {
        status = GoalStatus::failed;
      } else if (seen.count(GoalStatus::paused)) {
        status = GoalStatus::paused;
      } else if (seen.count(GoalStatus::active)) {
        status = GoalStatus::active;
      } else {
        status = GoalStatus::pending;
      }
    }
    out[id] = status;
    return status;
  };
  if (graph.contains(graph.root)) visit(graph.root);
  return out;
}

// --- derived predicates ----------------------------------------------------

std::string derived_constraint_id(const std::string& node_id, const std::string& attribute) {
  return node_id + "." + attribute;
}

Constraint make_constraint(std::string id, Severity severity, std::string subject, Op op,
                           ConstraintValue value) {
  Constraint c;
  c.id = std::move(id);
  c.severity = severity;
  c.subject = std::move(subject);
  c.op = op;
  c.units = constraint_value_unit(value);
  c.value = std::move(value);
  return c;
}

std::vector<Constraint> derive_constraints(const GoalNode& node, const Ontology& ontology) {
  std::vector<Constraint> out;
  if (!ontology.contains(node.ontology_type)) return out;
  for (const auto& tmpl : ontology.predicates(node.ontology_type)) {
    auto it = node.attributes.find(tmpl.attribute);
    if (it == node.attributes.end() || it->second.is_raw()) continue;
    ConstraintValue value = it->second;
    if (check_op_value(tmpl.op, value)) continue;
    out.push_back(make_constraint(derived_constraint_id(node.id, tmpl.attribute), tmpl.severity,
                                  tmpl.subject, tmpl.op, value));
  }
  return out;
}

}  // namespace orchvis
