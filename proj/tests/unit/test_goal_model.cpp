#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <ranges>
#include <set>

#include "support.hpp"

using namespace orchvis;
using namespace orchvis::testing;

TEST(Validate, SfTripIsClean) {
  auto g = sf_trip();
  EXPECT_EQ(g.nodes.size(), 4u);
  EXPECT_EQ(g.children("trip"), (std::vector<std::string>{"flight", "hotel", "itinerary"}));
  EXPECT_TRUE(validate_graph(g, ontology()).empty());
}

TEST(Validate, MinimalRoot) {
  GoalGraph g;
  g.root = "r";
  g.nodes["r"] = GoalNode{"r", "Root", {}, Relation::parallel, {}, "project", {}, {}, {}};
  EXPECT_TRUE(validate_graph(g, ontology()).empty());
}

namespace {

struct Corruption {
  const char* name;
  const char* reason;
  std::function<void(GoalGraph&)> apply;
};

Constraint& constraint(GoalGraph& g, const std::string& node, const std::string& cid) {
  auto& cs = g.at(node).constraints;
  return *std::find_if(cs.begin(), cs.end(), [&](const Constraint& c) { return c.id == cid; });
}

std::vector<Corruption> corruptions() {
  return {
      {"version", "version-unsupported", [](GoalGraph& g) { g.version = 2; }},
      {"parent", "dangling-parent", [](GoalGraph& g) { g.at("flight").parent = "nowhere"; }},
      {"hotel parent", "dangling-parent", [](GoalGraph& g) { g.at("hotel").parent = "hotel-x"; }},
      {"parent cleared", "multiple-roots", [](GoalGraph& g) { g.at("hotel").parent.reset(); }},
      {"id", "id-mismatch", [](GoalGraph& g) { g.at("hotel").id = "hotel2"; }},
      {"title", "empty-title", [](GoalGraph& g) { g.at("hotel").title.clear(); }},
      {"relation to parallel", "condition-unexpected",
       [](GoalGraph& g) { g.at("itinerary").relation = Relation::parallel; }},
      {"relation to conditional", "condition-missing",
       [](GoalGraph& g) { g.at("flight").relation = Relation::conditional; }},
      {"condition goal", "dangling-condition-reference",
       [](GoalGraph& g) { g.at("itinerary").condition->goal = "ghost"; }},
      {"condition ancestor", "condition-self-reference",
       [](GoalGraph& g) { g.at("itinerary").condition->goal = "trip"; }},
      {"condition subject", "condition-empty-subject",
       [](GoalGraph& g) { g.at("itinerary").condition->subject.clear(); }},
      {"condition op", "condition-op-value-mismatch",
       [](GoalGraph& g) { g.at("itinerary").condition->op = Op::within_interval; }},
      {"ontology type", "unknown-ontology-type",
       [](GoalGraph& g) { g.at("flight").ontology_type = "travel.train"; }},
      {"attribute kind", "attribute-kind-mismatch",
       [](GoalGraph& g) { g.at("hotel").attributes["city"] = TypedValue::number(1); }},
      {"attribute name", "unknown-attribute",
       [](GoalGraph& g) { g.at("hotel").attributes["colour"] = TypedValue::text("red"); }},
      {"required attribute", "missing-required-attribute",
       [](GoalGraph& g) { g.at("flight").attributes.erase("origin"); }},
      {"currency", "invalid-value",
       [](GoalGraph& g) { g.at("hotel").attributes["budget"] = TypedValue::money(100, "usd"); }},
      {"constraint id", "constraint-empty-id",
       [](GoalGraph& g) { constraint(g, "hotel", "hotel.city").id.clear(); }},
      {"constraint id clash", "duplicate-constraint-id",
       [](GoalGraph& g) { constraint(g, "flight", "flight.origin").id = "hotel.city"; }},
      {"constraint subject", "constraint-empty-subject",
       [](GoalGraph& g) { constraint(g, "hotel", "hotel.city").subject.clear(); }},
      {"constraint op", "constraint-op-value-mismatch",
       [](GoalGraph& g) { constraint(g, "flight", "flight.budget").op = Op::within_interval; }},
      {"constraint interval", "interval-inverted",
       [](GoalGraph& g) {
         auto& iv = std::get<TypedInterval>(constraint(g, "flight", "flight.depart_window").value);
         std::swap(iv.lo, iv.hi);
       }},
      {"constraint raw", "unnormalized-value",
       [](GoalGraph& g) {
         constraint(g, "hotel", "hotel.budget").value = TypedValue::raw(ValueKind::money, "cheap");
       }},
      {"constraint units", "units-mismatch",
       [](GoalGraph& g) { constraint(g, "flight", "flight.budget").units = "EUR"; }},
  };
}

}  // namespace

TEST(Validate, EverySingleFieldCorruptionYieldsExactlyOneIssue) {
  for (const auto& c : corruptions()) {
    auto g = sf_trip();
    c.apply(g);
    auto issues = validate_graph(g, ontology());
    ASSERT_EQ(issues.size(), 1u) << c.name << ": " << issues_to_json(issues).dump();
    EXPECT_EQ(issues.front().reason, c.reason) << c.name;
  }
}

TEST(Validate, DanglingRootAndCycle) {
  auto g = sf_trip();
  g.nodes.clear();
  auto issues = validate_graph(g, ontology());
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues.front().reason, "dangling-root");

  g = sf_trip();
  g.at("hotel").parent = "flight";
  g.at("flight").parent = "hotel";
  issues = validate_graph(g, ontology());
  ASSERT_EQ(issues.size(), 2u);
  EXPECT_EQ(issues[0].reason, "cycle");
  EXPECT_EQ(issues[1].reason, "cycle");
}

TEST(EditNode, TightensFlightBudget) {
  auto g = sf_trip();
  NodePatch patch;
  auto c = *g.at("flight").find_constraint("flight.budget");
  c.value = usd(350);
  patch.constraints["flight.budget"] = c;
  auto edited = edit_node(g, "flight", patch, ontology());
  EXPECT_EQ(std::get<TypedValue>(edited.at("flight").find_constraint("flight.budget")->value),
            usd(350));
  EXPECT_EQ(edited.at("hotel"), g.at("hotel"));
  EXPECT_EQ(edited.at("itinerary"), g.at("itinerary"));
  EXPECT_EQ(edited.at("trip"), g.at("trip"));
  EXPECT_TRUE(validate_graph(edited, ontology()).empty());
}

TEST(EditNode, EmptyPatchIsIdentity) {
  auto g = sf_trip();
  EXPECT_EQ(edit_node(g, "hotel", NodePatch{}, ontology()), g);
}

TEST(EditNode, Errors) {
  auto g = sf_trip();
  NodePatch patch;
  patch.relation = Relation::conditional;
  try {
    edit_node(g, "hotel", patch, ontology());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "invariant-violation");
    EXPECT_EQ(e.detail()["issues"][0]["reason"], "condition-missing");
  }
  try {
    edit_node(g, "nope", NodePatch{}, ontology());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "unknown-node");
  }
}

TEST(EditNode, NullEntriesRemove) {
  auto g = sf_trip();
  NodePatch patch;
  patch.attributes["min_rating"] = std::nullopt;
  patch.constraints["hotel.min_rating"] = std::nullopt;
  auto edited = edit_node(g, "hotel", patch, ontology());
  EXPECT_FALSE(edited.at("hotel").attributes.count("min_rating"));
  EXPECT_EQ(edited.at("hotel").find_constraint("hotel.min_rating"), nullptr);
}

TEST(NormalizeAttributes, ResolvesRawValues) {
  auto g = sf_trip();
  GoalNode node = g.at("flight");
  node.attributes["budget"] = TypedValue::raw(ValueKind::money, "under $400");
  auto norm = normalize_attributes(node, g.clock);
  EXPECT_EQ(norm.attributes.at("budget"), usd(400));
  EXPECT_EQ(normalize_attributes(norm, g.clock), norm);

  GoalNode trip = g.at("trip");
  trip.attributes["start_date"] = TypedValue::raw(ValueKind::timestamp, "next Friday 7pm");
  EXPECT_EQ(format_rfc3339(normalize_attributes(trip, g.clock).attributes.at("start_date").as_timestamp()),
            "2025-01-10T19:00:00Z");
}

TEST(NormalizeAttributes, NamesOffendingAttribute) {
  auto g = sf_trip();
  GoalNode node = g.at("flight");
  node.attributes["budget"] = TypedValue::raw(ValueKind::money, "cheap");
  try {
    normalize_attributes(node, g.clock);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "unparseable-value");
    EXPECT_EQ(e.detail()["attribute"], "budget");
  }
}

TEST(NormalizeAttributes, IdempotentOnRandomGraphs) {
  GraphGenerator gen(7);
  for (int i = 0; i < 100; ++i) {
    auto g = gen.make(20);
    auto once = normalize_graph(g);
    EXPECT_EQ(normalize_graph(once), once);
  }
}

TEST(Derive, MirrorsAttributes) {
  auto g = sf_trip();
  for (const auto& [id, node] : g.nodes) {
    for (const auto& c : derive_constraints(node, ontology())) {
      const Constraint* stored = node.find_constraint(c.id);
      ASSERT_NE(stored, nullptr) << c.id;
      EXPECT_EQ(*stored, c);
    }
  }
  EXPECT_EQ(derived_constraint_id("flight", "budget"), "flight.budget");
}

namespace {

GoalGraph with_leaf_status(GoalGraph g, std::map<std::string, GoalStatus> statuses) {
  for (auto& [id, s] : statuses) g.at(id).status = s;
  return g;
}

}  // namespace

TEST(Rollup, Examples) {
  using S = GoalStatus;
  auto g = sf_trip();
  EXPECT_EQ(rollup_status(with_leaf_status(g, {{"flight", S::achieved}, {"hotel", S::achieved},
                                               {"itinerary", S::achieved}}))
                .at("trip"),
            S::achieved);
  EXPECT_EQ(rollup_status(with_leaf_status(g, {{"flight", S::conflicted}, {"hotel", S::achieved}}))
                .at("trip"),
            S::conflicted);
  EXPECT_EQ(rollup_status(with_leaf_status(g, {{"flight", S::active}, {"hotel", S::pending},
                                               {"itinerary", S::pending}}))
                .at("trip"),
            S::active);
  EXPECT_EQ(rollup_status(with_leaf_status(g, {{"flight", S::failed}, {"hotel", S::paused}}))
                .at("trip"),
            S::failed);
  EXPECT_EQ(rollup_status(with_leaf_status(g, {{"flight", S::achieved}, {"hotel", S::paused}}))
                .at("trip"),
            S::paused);
}

namespace {

// Reference rollup: precedence scan over children, written out directly.
GoalStatus oracle_rollup(const GoalGraph& g, const std::string& id) {
  auto kids = g.children(id);
  if (kids.empty()) return g.at(id).status;
  std::vector<GoalStatus> s;
  for (const auto& k : kids) s.push_back(oracle_rollup(g, k));
  auto any = [&](GoalStatus x) { return std::count(s.begin(), s.end(), x) > 0; };
  if (std::all_of(s.begin(), s.end(), [](GoalStatus x) { return x == GoalStatus::achieved; })) {
    return GoalStatus::achieved;
  }
  for (auto x : {GoalStatus::conflicted, GoalStatus::failed, GoalStatus::paused, GoalStatus::active}) {
    if (any(x)) return x;
  }
  return GoalStatus::pending;
}

}  // namespace

TEST(Rollup, AgreesWithReferenceAndIgnoresIdRenaming) {
  GraphGenerator gen(11);
  for (int i = 0; i < 200; ++i) {
    auto g = gen.make(30);
    auto rolled = rollup_status(g);
    for (const auto& [id, _] : g.nodes) EXPECT_EQ(rolled.at(id), oracle_rollup(g, id));

    // Rename ids so siblings sort in reverse; statuses must not move.
    GoalGraph renamed = g;
    renamed.nodes.clear();
    auto rename = [&](const std::string& id) {
      std::string r;
      for (char c : id) r += static_cast<char>('~' - (c - ' '));
      return "n" + r;
    };
    for (auto node : g.nodes | std::views::values) {
      node.id = rename(node.id);
      if (node.parent) node.parent = rename(*node.parent);
      if (node.condition && node.condition->goal) node.condition->goal = rename(*node.condition->goal);
      renamed.nodes.emplace(node.id, node);
    }
    renamed.root = rename(g.root);
    auto rolled_renamed = rollup_status(renamed);
    for (const auto& [id, s] : rolled) EXPECT_EQ(rolled_renamed.at(rename(id)), s);
  }
}

TEST(Tree, ParentChainsReachRoot) {
  GraphGenerator gen(3);
  for (int i = 0; i < 200; ++i) {
    auto g = gen.make(50);
    ASSERT_TRUE(validate_graph(g, ontology()).empty()) << issues_to_json(validate_graph(g, ontology()));
    for (const auto& [id, node] : g.nodes) {
      std::set<std::string> seen;
      std::string cur = id;
      std::size_t steps = 0;
      while (cur != g.root) {
        ASSERT_TRUE(seen.insert(cur).second);
        cur = *g.at(cur).parent;
        ++steps;
      }
      EXPECT_EQ(steps, g.depth(id));
    }
  }
}
