#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "orchvis/agent_registry.hpp"
#include "orchvis/goal_dsl.hpp"
#include "orchvis/json_util.hpp"
#include "orchvis/ontology.hpp"
#include "orchvis/scenario.hpp"

namespace orchvis::testing {

inline std::string data_path(const std::string& rel) {
  return std::string(ORCHVIS_DATA_DIR_DEFAULT) + "/" + rel;
}

inline const Ontology& ontology() {
  static const Ontology o = Ontology::load(data_path("ontology.json"));
  return o;
}

inline GoalGraph sf_trip() {
  return graph_from_json(jsonu::read_file(data_path("goals/sf_trip.json")), ontology());
}

inline const AgentRegistry& registry() {
  static const AgentRegistry r = AgentRegistry::load(data_path("agents.json"));
  return r;
}

inline FixtureTable fixture(const std::string& rel) {
  return fixture_table_from_json(jsonu::read_file(data_path("fixtures/" + rel)), "$");
}

inline FixtureSet travel_fixtures() {
  FixtureSet s;
  for (const char* f : {"travel/flights.json", "travel/hotels.json", "travel/events.json", "travel/events_local.json"}) {
    s.add(fixture(f));
  }
  return s;
}

inline const Scenario& scenario(const std::string& name) {
  static std::map<std::string, Scenario> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, load_scenario(data_path("scenarios/" + name + ".json"))).first;
  return it->second;
}

inline Command command(CommandKind kind, Json payload = Json::object(), Origin origin = Origin::user) {
  Command c;
  c.kind = kind;
  c.payload = std::move(payload);
  c.origin = origin;
  return c;
}

inline Timestamp utc(const std::string& text) { return *parse_rfc3339(text); }

inline TypedValue usd(double amount) {
  return TypedValue::money(static_cast<std::int64_t>(amount * 100 + (amount >= 0 ? 0.5 : -0.5)),
                           "USD");
}

// Random valid graphs drawn from the ontology. Attribute values are typed,
// derived constraints are generated, a few extra constraints and
// conditional guards are sprinkled in.
class GraphGenerator {
 public:
  explicit GraphGenerator(std::uint64_t seed) : rng_(seed) {}

  GoalGraph make(std::size_t max_nodes) {
    GoalGraph g;
    g.clock = Timestamp{1736121600 + pick(0, 400) * 86400};
    std::size_t n = static_cast<std::size_t>(pick(1, static_cast<int>(max_nodes)));
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) {
      GoalNode node;
      node.id = "g" + std::to_string(i) + suffix();
      node.title = "Goal " + std::to_string(i) + (pick(0, 3) == 0 ? " \"quoted\" \xc3\xa9" : "");
      if (i > 0) node.parent = ids[static_cast<std::size_t>(pick(0, static_cast<int>(i) - 1))];
      node.relation = static_cast<Relation>(pick(0, 1));
      node.ontology_type = type_names()[static_cast<std::size_t>(pick(0, static_cast<int>(type_names().size()) - 1))];
      fill_attributes(node);
      for (auto& c : derive_constraints(node, ontology())) node.constraints.push_back(c);
      if (pick(0, 2) == 0) node.constraints.push_back(extra_constraint(node.id));
      node.status = static_cast<GoalStatus>(pick(0, 5));
      ids.push_back(node.id);
      g.nodes.emplace(node.id, node);
    }
    g.root = ids.front();
    // Conditional guards referencing goals outside the node's own subtree.
    for (const auto& id : ids) {
      if (id == g.root || pick(0, 3) != 0) continue;
      std::vector<std::string> targets;
      for (const auto& other : ids) {
        if (other != id && !g.is_ancestor(id, other) && !g.is_ancestor(other, id)) {
          targets.push_back(other);
        }
      }
      if (targets.empty()) continue;
      auto& node = g.at(id);
      node.relation = Relation::conditional;
      Predicate p;
      p.goal = targets[static_cast<std::size_t>(pick(0, static_cast<int>(targets.size()) - 1))];
      p.subject = "price.amount";
      p.op = Op::le;
      p.value = TypedValue::money(pick(100, 99999), "USD");
      node.condition = p;
    }
    return g;
  }

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

 private:
  std::string suffix() {
    static const char* parts[] = {"", "a", "-x", "_b", "z9"};
    return parts[pick(0, 4)];
  }

  static const std::vector<std::string>& type_names() {
    static const std::vector<std::string> names = [] {
      std::vector<std::string> out;
      for (const auto& [name, _] : ontology().types()) out.push_back(name);
      return out;
    }();
    return names;
  }

  TypedValue random_value(ValueKind kind) {
    switch (kind) {
      case ValueKind::number: return TypedValue::number(pick(0, 50) / 4.0);
      case ValueKind::money: return TypedValue::money(pick(0, 500000), pick(0, 4) ? "USD" : "EUR");
      case ValueKind::timestamp: return TypedValue::timestamp(1736121600 + pick(0, 100000) * 60);
      case ValueKind::duration: return TypedValue::duration(pick(0, 600));
      case ValueKind::text: return TypedValue::text(pick(0, 1) ? "San Francisco" : "x\\y\n\"z\"");
      case ValueKind::flag: return TypedValue::flag(pick(0, 1) == 1);
    }
    return TypedValue::text("");
  }

  void fill_attributes(GoalNode& node) {
    for (const auto& [name, spec] : ontology().attributes(node.ontology_type)) {
      if (spec.required || pick(0, 1) == 0) node.attributes[name] = random_value(spec.kind);
    }
  }

  Constraint extra_constraint(const std::string& node_id) {
    std::string id = node_id + ".extra" + std::to_string(pick(0, 9));
    switch (pick(0, 3)) {
      case 0:
        return make_constraint(id, Severity::soft, "rating", Op::ge, TypedValue::number(pick(0, 10) / 2.0));
      case 1: {
        auto lo = 1736121600 + pick(0, 1000) * 60;
        return make_constraint(id, Severity::hard, "depart_time", Op::within_interval,
                               TypedInterval{TypedValue::timestamp(lo),
                                             TypedValue::timestamp(lo + pick(0, 5000) * 60)});
      }
      case 2:
        return make_constraint(id, Severity::hard, "city", Op::in_set,
                               TypedSet{{TypedValue::text("SFO"), TypedValue::text("OAK")}});
      default:
        return make_constraint(id, Severity::soft, "length", Op::le, TypedValue::duration(pick(0, 300)));
    }
  }

  std::mt19937_64 rng_;
};

}  // namespace orchvis::testing
