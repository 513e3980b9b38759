#include "orchvis/goal_dsl.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "orchvis/json_util.hpp"
#include "orchvis/normalize.hpp"

namespace orchvis {

using namespace jsonu;

// --- JSON mapping ----------------------------------------------------------

Json constraint_to_json(const Constraint& c) {
  return Json{{"id", c.id},
              {"severity", std::string(to_string(c.severity))},
              {"subject", c.subject},
              {"op", std::string(to_string(c.op))},
              {"value", to_json(c.value)},
              {"units", c.units}};
}

Constraint constraint_from_json(const Json& j, const std::string& path) {
  expect_object(j, path, {"id", "severity", "subject", "op", "value", "units"});
  Constraint c;
  c.id = get_string(j, "id", path);
  try {
    c.severity = severity_from_string(get_string(j, "severity", path));
  } catch (const Error&) {
    schema_error(child(path, "severity"), "unknown severity");
  }
  c.subject = get_string(j, "subject", path);
  try {
    c.op = op_from_string(get_string(j, "op", path));
  } catch (const Error&) {
    schema_error(child(path, "op"), "unknown op");
  }
  c.value = constraint_value_from_json(j["value"], child(path, "value"));
  c.units = get_string(j, "units", path);
  return c;
}

Json predicate_to_json(const Predicate& p) {
  return Json{{"goal", p.goal ? Json(*p.goal) : Json(nullptr)},
              {"subject", p.subject},
              {"op", std::string(to_string(p.op))},
              {"value", to_json(p.value)}};
}

Predicate predicate_from_json(const Json& j, const std::string& path) {
  expect_object(j, path, {"goal", "subject", "op", "value"});
  Predicate p;
  if (!j["goal"].is_null()) p.goal = get_string(j, "goal", path);
  p.subject = get_string(j, "subject", path);
  try {
    p.op = op_from_string(get_string(j, "op", path));
  } catch (const Error&) {
    schema_error(child(path, "op"), "unknown op");
  }
  p.value = constraint_value_from_json(j["value"], child(path, "value"));
  return p;
}

Json node_to_json(const GoalNode& node) {
  Json j;
  j["id"] = node.id;
  j["title"] = node.title;
  j["parent"] = node.parent ? Json(*node.parent) : Json(nullptr);
  j["relation"] = std::string(to_string(node.relation));
  if (node.condition) j["condition"] = predicate_to_json(*node.condition);
  j["ontology_type"] = node.ontology_type;
  Json attrs = Json::object();
  for (const auto& [name, value] : node.attributes) attrs[name] = to_json(value);
  j["attributes"] = attrs;
  Json cs = Json::array();
  for (const auto& c : node.constraints) cs.push_back(constraint_to_json(c));
  j["constraints"] = cs;
  j["status"] = std::string(to_string(node.status));
  return j;
}

GoalNode node_from_json(const Json& j, const std::string& path) {
  expect_object(j, path,
                {"id", "title", "parent", "relation", "ontology_type", "attributes", "constraints",
                 "status"},
                {"condition"});
  GoalNode node;
  node.id = get_string(j, "id", path);
  node.title = get_string(j, "title", path);
  if (!j["parent"].is_null()) node.parent = get_string(j, "parent", path);
  try {
    node.relation = relation_from_string(get_string(j, "relation", path));
  } catch (const Error&) {
    schema_error(child(path, "relation"), "unknown relation");
  }
  if (j.contains("condition")) {
    node.condition = predicate_from_json(j["condition"], child(path, "condition"));
  }
  node.ontology_type = get_string(j, "ontology_type", path);
  for (const auto& [name, value] : get_object(j, "attributes", path).items()) {
    node.attributes.emplace(name, typed_value_from_json(value, child(child(path, "attributes"), name)));
  }
  const auto& cs = get_array(j, "constraints", path);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    node.constraints.push_back(constraint_from_json(cs[i], index(child(path, "constraints"), i)));
  }
  try {
    node.status = goal_status_from_string(get_string(j, "status", path));
  } catch (const Error&) {
    schema_error(child(path, "status"), "unknown status");
  }
  return node;
}

Json graph_to_json(const GoalGraph& graph) {
  Json nodes = Json::array();
  std::set<std::string> emitted;
  for (const auto& id : graph.depth_first()) {
    nodes.push_back(node_to_json(graph.at(id)));
    emitted.insert(id);
  }
  for (const auto& [id, node] : graph.nodes) {
    if (!emitted.count(id)) nodes.push_back(node_to_json(node));
  }
  return Json{{"version", graph.version},
              {"root", graph.root},
              {"clock", format_rfc3339(graph.clock)},
              {"nodes", nodes}};
}

GoalGraph graph_from_json_unchecked(const Json& j) {
  const std::string path = "$";
  expect_object(j, path, {"version", "root", "clock", "nodes"});
  GoalGraph g;
  auto version = get_integer(j, "version", path);
  if (version != 1) {
    throw Error("version-unsupported", "unsupported document version " + std::to_string(version),
                Json{{"version", version}});
  }
  g.version = 1;
  g.root = get_string(j, "root", path);
  auto clock = parse_rfc3339(get_string(j, "clock", path));
  if (!clock) schema_error("$.clock", "bad RFC 3339 timestamp");
  g.clock = *clock;
  const auto& nodes = get_array(j, "nodes", path);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    std::string npath = index("$.nodes", i);
    GoalNode node = node_from_json(nodes[i], npath);
    std::string id = node.id;
    if (!g.nodes.emplace(id, std::move(node)).second) {
      schema_error(child(npath, "id"), "duplicate id '" + id + "'");
    }
  }
  return g;
}

GoalGraph graph_from_json(const Json& j, const Ontology& ontology) {
  GoalGraph g = graph_from_json_unchecked(j);
  auto issues = validate_graph(g, ontology);
  if (!issues.empty()) {
    const auto& first = issues.front();
    std::string path = first.node_id.empty() ? "$" : "$.nodes[" + first.node_id + "]";
    if (!first.field.empty()) path += "." + first.field;
    std::string reason = first.reason == "dangling-root" ? "dangling root" : first.reason;
    throw Error("schema-error", path + ": " + reason,
                Json{{"path", path}, {"reason", reason}, {"issues", issues_to_json(issues)}});
  }
  return g;
}

namespace {

std::string expected_token_class(const std::string& message) {
  auto pos = message.find("expected ");
  if (pos == std::string::npos) return "value";
  std::string rest = message.substr(pos + 9);
  auto end = rest.find_first_of(";");
  return rest.substr(0, end);
}

}  // namespace

GoalGraph parse_document(const std::string& document, const Ontology& ontology) {
  Json j;
  try {
    j = Json::parse(document);
  } catch (const Json::parse_error& e) {
    throw Error("syntax-error", std::string("goal document: ") + e.what(),
                Json{{"position", e.byte}, {"expected", expected_token_class(e.what())}});
  }
  try {
    return graph_from_json(j, ontology);
  } catch (const Json::exception& e) {
    throw Error("schema-error", std::string("goal document: ") + e.what(),
                Json{{"path", "$"}, {"reason", e.what()}});
  }
}

std::string serialize_document(const GoalGraph& graph, const Ontology& ontology) {
  auto issues = validate_graph(graph, ontology);
  if (!issues.empty()) {
    throw Error("invalid-graph", "cannot serialize invalid graph: " + issues.front().reason,
                Json{{"issues", issues_to_json(issues)}});
  }
  return canonical(graph_to_json(graph));
}

Json issues_to_json(const std::vector<ValidationIssue>& issues) {
  Json out = Json::array();
  for (const auto& i : issues) {
    out.push_back(Json{{"node_id", i.node_id}, {"field", i.field}, {"reason", i.reason}});
  }
  return out;
}

NodePatch patch_from_json(const Json& j) {
  const std::string path = "$";
  expect_object(j, path, {},
                {"title", "parent", "relation", "condition", "ontology_type", "attributes",
                 "constraints", "status"});
  NodePatch p;
  if (j.contains("title")) p.title = get_string(j, "title", path);
  if (j.contains("parent")) {
    p.parent = j["parent"].is_null() ? std::optional<std::string>{}
                                     : std::optional<std::string>{get_string(j, "parent", path)};
  }
  if (j.contains("relation")) {
    try {
      p.relation = relation_from_string(get_string(j, "relation", path));
    } catch (const Error&) {
      schema_error("$.relation", "unknown relation");
    }
  }
  if (j.contains("condition")) {
    p.condition = j["condition"].is_null()
                      ? std::optional<Predicate>{}
                      : std::optional<Predicate>{predicate_from_json(j["condition"], "$.condition")};
  }
  if (j.contains("ontology_type")) p.ontology_type = get_string(j, "ontology_type", path);
  if (j.contains("attributes")) {
    for (const auto& [name, value] : get_object(j, "attributes", path).items()) {
      p.attributes[name] = value.is_null()
                               ? std::optional<TypedValue>{}
                               : std::optional<TypedValue>{typed_value_from_json(value, "$.attributes." + name)};
    }
  }
  if (j.contains("constraints")) {
    for (const auto& [cid, value] : get_object(j, "constraints", path).items()) {
      if (value.is_null()) {
        p.constraints[cid] = std::nullopt;
      } else {
        Constraint c = constraint_from_json(value, "$.constraints." + cid);
        if (c.id != cid) schema_error("$.constraints." + cid + ".id", "id does not match key");
        p.constraints[cid] = c;
      }
    }
  }
  if (j.contains("status")) {
    try {
      p.status = goal_status_from_string(get_string(j, "status", path));
    } catch (const Error&) {
      schema_error("$.status", "unknown status");
    }
  }
  return p;
}

// --- reconcile -------------------------------------------------------------

Json to_json(const RepairLoopReport& report) {
  Json changes = Json::array();
  for (const auto& c : report.changes_applied) {
    changes.push_back(Json{{"node_id", c.node_id}, {"field", c.field}, {"before", c.before},
                           {"after", c.after}});
  }
  Json rejected = Json::array();
  for (const auto& r : report.rejected) {
    rejected.push_back(Json{{"node_id", r.node_id}, {"field", r.field}, {"reason", r.reason}});
  }
  return Json{{"reconciled", graph_to_json(report.reconciled)},
              {"changes_applied", changes},
              {"rejected", rejected}};
}

namespace {

using IssueKey = std::tuple<std::string, std::string, std::string>;

std::multiset<IssueKey> issue_set(const GoalGraph& g, const Ontology& ontology) {
  std::multiset<IssueKey> out;
  for (const auto& i : validate_graph(g, ontology)) out.emplace(i.node_id, i.field, i.reason);
  return out;
}

// First issue present in `after` but not in `before`.
std::optional<std::string> new_issue(const std::multiset<IssueKey>& before,
                                     const std::multiset<IssueKey>& after) {
  std::multiset<IssueKey> remaining = before;
  for (const auto& issue : after) {
    auto it = remaining.find(issue);
    if (it != remaining.end()) {
      remaining.erase(it);
    } else {
      return std::get<2>(issue);
    }
  }
  return std::nullopt;
}

Json value_or_null(const std::map<std::string, TypedValue>& m, const std::string& key) {
  auto it = m.find(key);
  return it == m.end() ? Json(nullptr) : to_json(it->second);
}

Json constraint_or_null(const GoalNode& node, const std::string& cid) {
  const Constraint* c = node.find_constraint(cid);
  return c ? constraint_to_json(*c) : Json(nullptr);
}

void set_constraint(GoalNode& node, const std::string& cid, const std::optional<Constraint>& c) {
  auto it = std::find_if(node.constraints.begin(), node.constraints.end(),
                         [&](const Constraint& x) { return x.id == cid; });
  if (!c) {
    if (it != node.constraints.end()) node.constraints.erase(it);
  } else if (it != node.constraints.end()) {
    *it = *c;
  } else {
    node.constraints.push_back(*c);
  }
}

class Reconciler {
 public:
  Reconciler(const GoalGraph& internal, const GoalGraph& user, const Ontology& ontology)
      : internal_(internal), user_(user), ontology_(ontology) {
    report_.reconciled = internal;
  }

  // Edits can unblock each other (a type change needs its attributes, a
  // deletion frees a constraint id), so passes repeat until one accepts
  // nothing. Only the rejections that still stand are reported.
  RepairLoopReport run() {
    std::vector<std::string> order = user_.depth_first();
    std::set<std::string> ordered(order.begin(), order.end());
    for (const auto& [id, _] : user_.nodes) {
      if (!ordered.count(id)) order.push_back(id);
    }
    std::size_t before = 0;
    do {
      before = accepted_;
      report_.rejected.clear();
      for (const auto& id : order) {
        if (!result().contains(id)) {
          add_node(user_.at(id));
        } else {
          merge_node(user_.at(id));
        }
      }
      apply_deletions();
    } while (accepted_ != before);
    return std::move(report_);
  }

 private:
  GoalGraph& result() { return report_.reconciled; }

  void record(const std::string& node_id, const std::string& field, Json before, Json after) {
    ++accepted_;
    for (auto& c : report_.changes_applied) {
      if (c.node_id == node_id && c.field == field) {
        c.after = std::move(after);
        if (c.before == c.after) {
          std::erase_if(report_.changes_applied, [&](const FieldChange& x) {
            return x.node_id == node_id && x.field == field;
          });
        }
        return;
      }
    }
    report_.changes_applied.push_back({node_id, field, std::move(before), std::move(after)});
  }

  void reject(const std::string& node_id, const std::string& field, const std::string& reason) {
    report_.rejected.push_back({node_id, field, reason});
  }

  // Runs after merging, so references are checked against what the merged
  // graph actually keeps.
  void apply_deletions() {
    std::set<std::string> accepted;
    for (const auto& [id, _] : internal_.nodes) {
      if (!user_.contains(id) && result().contains(id) && id != internal_.root) accepted.insert(id);
    }
    std::map<std::string, std::string> reasons;
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto it = accepted.begin(); it != accepted.end();) {
        std::string reason;
        for (const auto& [nid, node] : result().nodes) {
          if (accepted.count(nid)) continue;
          if (node.condition && node.condition->goal && *node.condition->goal == *it) {
            reason = "dangling-condition-reference";
            break;
          }
          if (node.parent && *node.parent == *it) reason = "dangling-parent";
        }
        if (!reason.empty()) {
          reasons[*it] = reason;
          it = accepted.erase(it);
          changed = true;
        } else {
          ++it;
        }
      }
    }
    for (const auto& [id, reason] : reasons) reject(id, "node", reason);
    for (const auto& id : accepted) {
      record(id, "node", node_to_json(result().at(id)), nullptr);
    }
    for (const auto& id : accepted) result().nodes.erase(id);
  }

  // Applies mutate() to a node of the result; keeps it only when no new
  // validation issue appears.
  template <typename Mutate>
  bool try_change(const std::string& id, const std::string& field, Json before, Json after,
                  Mutate mutate) {
    auto baseline = issue_set(result(), ontology_);
    GoalGraph candidate = result();
    mutate(candidate);
    if (auto issue = new_issue(baseline, issue_set(candidate, ontology_))) {
      reject(id, field, *issue);
      return false;
    }
    result() = std::move(candidate);
    record(id, field, std::move(before), std::move(after));
    return true;
  }

  void add_node(const GoalNode& user_node) {
    GoalNode node;
    try {
      node = normalize_attributes(user_node, result().clock);
    } catch (const Error& e) {
      reject(user_node.id, "node", e.code());
      return;
    }
    node.status = GoalStatus::pending;
    for (const auto& derived : derive_constraints(node, ontology_)) {
      set_constraint(node, derived.id, derived);
    }
    try_change(node.id, "node", nullptr, node_to_json(node),
               [&](GoalGraph& g) { g.nodes[node.id] = node; });
  }

  void merge_node(const GoalNode& user_node) {
    const std::string id = user_node.id;
    auto node = [&]() -> GoalNode& { return result().at(id); };

    if (user_node.title != node().title) {
      try_change(id, "title", node().title, user_node.title,
                 [&](GoalGraph& g) { g.at(id).title = user_node.title; });
    }
    if (user_node.parent != node().parent) {
      auto to_j = [](const std::optional<std::string>& p) { return p ? Json(*p) : Json(nullptr); };
      try_change(id, "parent", to_j(node().parent), to_j(user_node.parent),
                 [&](GoalGraph& g) { g.at(id).parent = user_node.parent; });
    }
    if (user_node.relation != node().relation || user_node.condition != node().condition) {
      auto rel_j = [](const GoalNode& n) {
        return Json{{"relation", std::string(to_string(n.relation))},
                    {"condition", n.condition ? predicate_to_json(*n.condition) : Json(nullptr)}};
      };
      GoalNode user_norm = user_node;
      bool parsed = true;
      if (user_norm.condition) {
        try {
          user_norm = normalize_attributes(
              GoalNode{id, "-", {}, user_node.relation, user_node.condition, "", {}, {}, {}},
              result().clock);
        } catch (const Error& e) {
          reject(id, "relation", e.code());
          parsed = false;
        }
      }
      if (parsed) {
        try_change(id, "relation", rel_j(node()), rel_j(user_norm), [&](GoalGraph& g) {
          g.at(id).relation = user_norm.relation;
          g.at(id).condition = user_norm.condition;
        });
      }
    }
    if (user_node.ontology_type != node().ontology_type) {
      try_change(id, "ontology_type", node().ontology_type, user_node.ontology_type,
                 [&](GoalGraph& g) { g.at(id).ontology_type = user_node.ontology_type; });
    }

    // Attributes, by name.
    std::set<std::string> names;
    for (const auto& [name, _] : user_node.attributes) names.insert(name);
    for (const auto& [name, _] : node().attributes) names.insert(name);
    for (const auto& name : names) {
      auto uit = user_node.attributes.find(name);
      std::optional<TypedValue> wanted;
      if (uit != user_node.attributes.end()) {
        try {
          wanted = normalize_value(uit->second, result().clock);
        } catch (const Error& e) {
          reject(id, "attributes." + name, e.code());
          continue;
        }
      }
      auto cit = node().attributes.find(name);
      std::optional<TypedValue> current;
      if (cit != node().attributes.end()) current = cit->second;
      if (wanted == current) continue;
      try_change(id, "attributes." + name, value_or_null(node().attributes, name),
                 wanted ? to_json(*wanted) : Json(nullptr), [&](GoalGraph& g) {
                   if (wanted) {
                     g.at(id).attributes[name] = *wanted;
                   } else {
                     g.at(id).attributes.erase(name);
                   }
                 });
    }

    // Derived constraints follow the final attributes.
    std::set<std::string> derived_ids;
    if (ontology_.contains(node().ontology_type)) {
      for (const auto& tmpl : ontology_.predicates(node().ontology_type)) {
        derived_ids.insert(derived_constraint_id(id, tmpl.attribute));
      }
    }
    std::map<std::string, Constraint> regenerated;
    for (auto& c : derive_constraints(node(), ontology_)) regenerated.emplace(c.id, c);
    const GoalNode* internal_node = internal_.contains(id) ? &internal_.at(id) : nullptr;
    for (const auto& cid : derived_ids) {
      const Constraint* mine = node().find_constraint(cid);
      const Constraint* theirs = user_node.find_constraint(cid);
      const Constraint* original = internal_node ? internal_node->find_constraint(cid) : nullptr;
      auto regen = regenerated.find(cid);
      std::optional<Constraint> target;
      if (regen != regenerated.end()) {
        target = regen->second;
      } else if (mine && original && internal_node &&
                 !internal_node->attributes.count(cid.substr(id.size() + 1))) {
        // Attribute never existed: this is an ordinary, user-owned constraint.
        derived_ids.erase(cid);
        continue;
      }
      bool user_touched = theirs && !(original && *theirs == *original) &&
                          !(target && *theirs == *target);
      if (user_touched) reject(id, "constraints." + cid, "derived-constraint");
      bool same = (mine && target && *mine == *target) || (!mine && !target);
      if (!same) {
        try_change(id, "constraints." + cid, constraint_or_null(node(), cid),
                   target ? constraint_to_json(*target) : Json(nullptr),
                   [&](GoalGraph& g) { set_constraint(g.at(id), cid, target); });
      }
    }

    // Remaining constraints, by id.
    std::vector<std::string> cids;
    for (const auto& c : user_node.constraints) cids.push_back(c.id);
    for (const auto& c : node().constraints) {
      if (std::find(cids.begin(), cids.end(), c.id) == cids.end()) cids.push_back(c.id);
    }
    for (const auto& cid : cids) {
      if (derived_ids.count(cid)) continue;
      const Constraint* theirs = user_node.find_constraint(cid);
      std::optional<Constraint> wanted;
      if (theirs) {
        GoalNode holder;
        holder.constraints.push_back(*theirs);
        try {
          wanted = normalize_attributes(holder, result().clock).constraints.front();
        } catch (const Error& e) {
          reject(id, "constraints." + cid, e.code());
          continue;
        }
      }
      const Constraint* mine = node().find_constraint(cid);
      if ((mine && wanted && *mine == *wanted) || (!mine && !wanted)) continue;
      try_change(id, "constraints." + cid, constraint_or_null(node(), cid),
                 wanted ? constraint_to_json(*wanted) : Json(nullptr),
                 [&](GoalGraph& g) { set_constraint(g.at(id), cid, wanted); });
    }
  }

  const GoalGraph& internal_;
  const GoalGraph& user_;
  const Ontology& ontology_;
  RepairLoopReport report_;
  std::size_t accepted_ = 0;
};

}  // namespace

RepairLoopReport reconcile(const GoalGraph& internal, const GoalGraph& user_edited,
                           const Ontology& ontology) {
  if (internal.root != user_edited.root) {
    throw Error("root-mismatch",
                "root '" + user_edited.root + "' does not match '" + internal.root + "'",
                Json{{"internal_root", internal.root}, {"user_root", user_edited.root}});
  }
  return Reconciler(internal, user_edited, ontology).run();
}

}  // namespace orchvis
