#include <gtest/gtest.h>

#include "oracles.hpp"
#include "orchvis/agent_registry.hpp"
#include "support.hpp"

using namespace orchvis;
using namespace orchvis::testing;

namespace {

SkillMatrix flight_agent(std::string id) {
  return SkillMatrix{std::move(id), {"search_flights"}, {"travel.flight"}, {"travel.flight"}, 0.9, {40, "USD"}};
}

std::string code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST(Registry, RegisterAndDuplicate) {
  AgentRegistry r;
  r.register_agent(flight_agent("flight-search"));
  EXPECT_TRUE(r.contains("flight-search"));
  EXPECT_EQ(code_of([&] { r.register_agent(flight_agent("flight-search")); }), "duplicate-agent");
  auto bad = flight_agent("x");
  bad.tools.clear();
  EXPECT_EQ(code_of([&] { r.register_agent(bad); }), "invalid-agent");
  bad = flight_agent("y");
  bad.success_rate = 1.5;
  EXPECT_EQ(code_of([&] { r.register_agent(bad); }), "invalid-agent");
  EXPECT_EQ(code_of([&] { r.at("nobody"); }), "unknown-agent");
}

TEST(Registry, LoadsShippedAgentsAndRoundTrips) {
  const auto& r = registry();
  EXPECT_EQ(r.agents().size(), 8u);
  EXPECT_DOUBLE_EQ(r.at("flights-a").success_rate, 0.9);
  auto again = AgentRegistry::from_json(r.to_json());
  EXPECT_EQ(again.agents(), r.agents());
}

TEST(Fixtures, TableParsingErrors) {
  Json base = {{"ontology_type", "travel.hotel"},
               {"columns", {{"city", "text"}, {"price.amount", "money"}}},
               {"rows", Json::array({{{"id", "H1"}, {"city", "Oakland"}, {"price.amount", "300.00 USD"}}})}};
  auto t = fixture_table_from_json(base, "$");
  EXPECT_EQ(t.rows.at(0).fields.at("price.amount"), usd(300));
  EXPECT_EQ(fixture_table_from_json(to_json(t), "$"), t);

  auto undeclared = base;
  undeclared["rows"][0]["stars"] = 3;
  EXPECT_EQ(code_of([&] { fixture_table_from_json(undeclared, "$"); }), "schema-error");
  auto dup = base;
  dup["rows"].push_back(base["rows"][0]);
  EXPECT_EQ(code_of([&] { fixture_table_from_json(dup, "$"); }), "schema-error");
  auto badcell = base;
  badcell["rows"][0]["price.amount"] = "cheap";
  EXPECT_EQ(code_of([&] { fixture_table_from_json(badcell, "$"); }), "schema-error");
  auto nullcell = base;
  nullcell["rows"][0]["city"] = nullptr;
  EXPECT_EQ(fixture_table_from_json(nullcell, "$").rows[0].fields.count("city"), 0u);

  FixtureSet s;
  s.add(t);
  EXPECT_EQ(code_of([&] { s.add(t); }), "duplicate-fixture");
}

TEST(Fixtures, AgentScopedTableShadowsShared) {
  auto s = travel_fixtures();
  EXPECT_EQ(s.table_for("travel.event", "events")->rows.size(), 7u);
  EXPECT_EQ(s.table_for("travel.event", "events-local")->rows.size(), 2u);
  EXPECT_EQ(s.table_for("office.meeting", "scheduler"), nullptr);
}

// Independent scan of the flight table: ATL to SFO, departing on 10 Jan, at
// most 400 USD, preferring nonstop, cheapest first.
TEST(Selection, FlightMatchesBruteForceScan) {
  auto g = sf_trip();
  auto table = fixture("travel/flights.json");
  const FixtureRow* best = nullptr;
  auto lo = utc("2025-01-10T00:00:00Z").seconds, hi = utc("2025-01-11T00:00:00Z").seconds;
  auto rank = [](const FixtureRow& r) {
    return std::pair{r.fields.at("stops").as_number() <= 0 ? 0 : 1, r.fields.at("price.amount").as_money().minor};
  };
  for (const auto& row : table.rows) {
    const auto& f = row.fields;
    auto dep = f.at("depart_time").as_timestamp().seconds;
    bool hard = f.at("origin").as_text() == "ATL" && f.at("destination").as_text() == "SFO" &&
                f.at("price.amount").as_money().minor <= 40000 && dep >= lo && dep <= hi;
    if (hard && (!best || rank(row) < rank(*best))) best = &row;
  }
  ASSERT_NE(best, nullptr);
  auto sel = select_row(g.at("flight"), table);
  EXPECT_EQ(table.rows[sel.chosen].id, best->id);
  EXPECT_EQ(table.rows[sel.chosen].fields.at("price.amount"), usd(356));

  auto rec = make_record("flights-a", g.at("flight"), table, sel.chosen, sel.ranked_rest, ontology());
  EXPECT_EQ(rec.id, "flight:F01");
  EXPECT_TRUE(rec.exclusive_attention);
  std::vector<std::string> opts;
  for (const auto& o : rec.options) opts.push_back(o.row_id);
  EXPECT_EQ(opts, (std::vector<std::string>{"F02", "F09", "F04"}));
}

TEST(Selection, HotelIsNotExclusive) {
  auto g = sf_trip();
  auto table = fixture("travel/hotels.json");
  auto sel = select_row(g.at("hotel"), table);
  auto rec = make_record("hotels", g.at("hotel"), table, sel.chosen, sel.ranked_rest, ontology());
  EXPECT_EQ(rec.id, "hotel:H01");
  EXPECT_FALSE(rec.exclusive_attention);
}

TEST(Selection, EmptyTableHasNoMatch) {
  auto g = sf_trip();
  FixtureTable empty{"travel.flight", std::nullopt, {}, {}};
  EXPECT_EQ(code_of([&] { select_row(g.at("flight"), empty); }), "no-fixture-match");
}

// Every row not chosen violates a hard constraint, satisfies fewer soft
// constraints, or ties and loses on price then id.
TEST(Selection, OptimalAgainstBruteForce) {
  VerifierCaseGenerator gen(11);
  std::mt19937_64 rng(3);
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    auto goal = gen.make().goal;
    FixtureTable table{"travel", std::nullopt, {}, {}};
    int rows = std::uniform_int_distribution<int>(0, 12)(rng);
    for (int r = 0; r < rows; ++r) {
      auto fields = gen.make().fields;
      if (r % 3 == 0) fields["price.amount"] = TypedValue::money(static_cast<std::int64_t>(rng() % 5) * 100, "USD");
      table.rows.push_back({"r" + std::to_string(100 + r), fields});
    }
    std::vector<OracleVerdict> verdicts;
    std::vector<int> hard_fail, soft_ok;
    for (const auto& row : table.rows) {
      auto v = brute_force_verdict(VerifierCase{goal, row.fields}, 0.5);
      int h = 0, s = 0;
      for (const auto& c : goal.constraints) {
        bool sat = std::find(v.satisfied.begin(), v.satisfied.end(), c.id) != v.satisfied.end();
        if (c.severity == Severity::hard && !sat) ++h;
        if (c.severity == Severity::soft && sat) ++s;
      }
      hard_fail.push_back(h);
      soft_ok.push_back(s);
    }
    bool any_feasible = std::find(hard_fail.begin(), hard_fail.end(), 0) != hard_fail.end();
    if (!any_feasible) {
      EXPECT_EQ(code_of([&] { select_row(goal, table); }), "no-fixture-match");
      continue;
    }
    auto sel = select_row(goal, table);
    std::size_t c = sel.chosen;
    ASSERT_EQ(hard_fail[c], 0);
    auto price = [&](std::size_t r) {
      auto it = table.rows[r].fields.find("price.amount");
      return it == table.rows[r].fields.end() ? 1e18 : double(it->second.as_money().minor);
    };
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      if (r == c) continue;
      bool loses = hard_fail[r] > 0 || soft_ok[r] < soft_ok[c] ||
                   (soft_ok[r] == soft_ok[c] &&
                    (price(r) > price(c) || (price(r) == price(c) && table.rows[r].id > table.rows[c].id)));
      ASSERT_TRUE(loses) << "case " << i << " row " << table.rows[r].id;
      ++checked;
    }
    std::size_t feasible = std::count(hard_fail.begin(), hard_fail.end(), 0);
    ASSERT_EQ(sel.ranked_rest.size(), feasible - 1);
  }
  EXPECT_GT(checked, 100);
}

TEST(Selection, OptionsCappedAtFive) {
  FixtureTable t{"travel", std::nullopt, {}, {}};
  for (int i = 0; i < 9; ++i) t.rows.push_back({"r" + std::to_string(i), {{"price.amount", usd(10 + i)}}});
  GoalNode g{"g", "g", std::nullopt, Relation::parallel, std::nullopt, "travel", {}, {}, GoalStatus::pending};
  auto sel = select_row(g, t);
  auto rec = make_record("a", g, t, sel.chosen, sel.ranked_rest, ontology());
  EXPECT_EQ(rec.fields.at("price.amount"), usd(10));
  EXPECT_EQ(rec.options.size(), kMaxOptions);
}

class SimulatedAgentsTest : public ::testing::Test {
 protected:
  FixtureSet fixtures = travel_fixtures();
  GoalGraph g = sf_trip();

  SimulatedAgents agents(FaultSchedule faults = {}, std::uint64_t seed = 0) {
    return SimulatedAgents(registry(), fixtures, std::move(faults), ontology(), seed);
  }
  EvidenceRecord flight_evidence() { return agents().invoke("flights-a", g.at("flight"), {}).record; }
};

TEST_F(SimulatedAgentsTest, DeterministicRecords) {
  auto a = agents(), b = agents();
  for (const char* goal : {"flight", "hotel", "itinerary"}) {
    std::string agent = std::string(goal) == "flight" ? "flights-a" : std::string(goal) == "hotel" ? "hotels" : "events";
    EXPECT_EQ(jsonu::canonical(to_json(a.invoke(agent, g.at(goal), {}).record)),
              jsonu::canonical(to_json(b.invoke(agent, g.at(goal), {}).record)));
  }
  auto clean = agents().invoke("events", g.at("itinerary"), {flight_evidence()}).record;
  EXPECT_EQ(clean.id, "itinerary:E02");
}

TEST_F(SimulatedAgentsTest, ConflictingTimeOverlapsFlight) {
  FaultSchedule faults{{Fault{"events", std::nullopt, "itinerary", FaultEffect::emit_conflicting_time, {}, {}}}};
  auto sim = agents(faults);
  auto flight = flight_evidence();
  auto res = sim.invoke("events", g.at("itinerary"), {flight});
  EXPECT_EQ(res.fault, FaultEffect::emit_conflicting_time);
  auto show = evidence_interval(res.record.fields), trip = evidence_interval(flight.fields);
  ASSERT_TRUE(show && trip);
  EXPECT_LT(std::max(show->start, trip->start), std::min(show->end, trip->end));
  EXPECT_EQ(res.record.id, "itinerary:E01");
  ASSERT_FALSE(res.record.options.empty());
  EXPECT_EQ(res.record.options[0].row_id, "E02");
  // One-shot: the second call for the goal is clean.
  EXPECT_EQ(sim.invoke("events", g.at("itinerary"), {flight}).record.id, "itinerary:E02");
}

TEST_F(SimulatedAgentsTest, ShiftsIntervalWhenNoRowOverlaps) {
  FixtureSet only;
  only.add(fixture("travel/flights.json"));
  only.add(fixture_table_from_json(
      Json{{"ontology_type", "travel.event"},
           {"columns", {{"city", "text"}, {"category", "text"}, {"start_time", "timestamp"}, {"end_time", "timestamp"}, {"price.amount", "money"}}},
           {"rows", Json::array({{{"id", "L1"}, {"city", "San Francisco"}, {"category", "show"},
                                  {"start_time", "2025-01-10T22:00:00Z"}, {"end_time", "2025-01-10T23:00:00Z"},
                                  {"price.amount", "20.00 USD"}}})}},
      "$"));
  SimulatedAgents sim(registry(), only, FaultSchedule{{Fault{"events", 1, std::nullopt, FaultEffect::emit_conflicting_time, {}, {}}}},
                      ontology(), 0);
  auto flight = flight_evidence();
  auto rec = sim.invoke("events", g.at("itinerary"), {flight}).record;
  auto show = *evidence_interval(rec.fields), trip = *evidence_interval(flight.fields);
  EXPECT_EQ(show.start, trip.start + (trip.end - trip.start) / 2);
  EXPECT_EQ(show.end - show.start, 3600);
}

TEST_F(SimulatedAgentsTest, FailOmitDelay) {
  FaultSchedule faults{{Fault{"flights-a", 1, std::nullopt, FaultEffect::fail_call, {}, {}},
                        Fault{"hotels", std::nullopt, "hotel", FaultEffect::omit_field, {}, {}},
                        Fault{"events", 1, std::nullopt, FaultEffect::delay, {}, {}}}};
  auto sim = agents(faults, 4);
  EXPECT_EQ(code_of([&] { sim.invoke("flights-a", g.at("flight"), {}); }), "agent-call-failed");
  EXPECT_EQ(sim.invoke("flights-a", g.at("flight"), {}).record.id, "flight:F01");
  auto hotel = sim.invoke("hotels", g.at("hotel"), {}).record;
  EXPECT_EQ(hotel.fields.count("price.amount"), 0u);  // first hard subject
  auto ev = sim.invoke("events", g.at("itinerary"), {});
  EXPECT_EQ(ev.delay_rounds, 1 + 4 % 3);

  FaultSchedule named{{Fault{"hotels", 1, std::nullopt, FaultEffect::omit_field, "rating", {}}}};
  EXPECT_EQ(agents(named).invoke("hotels", g.at("hotel"), {}).record.fields.count("rating"), 0u);
}

TEST_F(SimulatedAgentsTest, FaultIsolation) {
  FaultSchedule faults{{Fault{"flights-b", 1, std::nullopt, FaultEffect::fail_call, {}, {}},
                        Fault{"events-local", 1, std::nullopt, FaultEffect::omit_field, {}, {}}}};
  auto faulty = agents(faults), clean = agents();
  for (const char* goal : {"flight", "hotel"}) {
    std::string agent = std::string(goal) == "flight" ? "flights-a" : "hotels";
    EXPECT_EQ(faulty.invoke(agent, g.at(goal), {}).record, clean.invoke(agent, g.at(goal), {}).record);
  }
  EXPECT_EQ(faulty.invoke("events", g.at("itinerary"), {}).record,
            clean.invoke("events", g.at("itinerary"), {}).record);
}

TEST_F(SimulatedAgentsTest, NoteCallConsumesFaults) {
  FaultSchedule faults{{Fault{"flights-a", 1, std::nullopt, FaultEffect::fail_call, {}, {}}}};
  auto sim = agents(faults);
  sim.note_call("flights-a", "flight");
  EXPECT_NO_THROW(sim.invoke("flights-a", g.at("flight"), {}));
}

TEST_F(SimulatedAgentsTest, MissingTableOrAgent) {
  auto sim = agents();
  GoalNode meeting{"m", "m", std::nullopt, Relation::parallel, std::nullopt, "office.meeting", {}, {}, GoalStatus::pending};
  EXPECT_EQ(code_of([&] { sim.invoke("scheduler", meeting, {}); }), "no-fixture-match");
  EXPECT_EQ(code_of([&] { sim.invoke("ghost", meeting, {}); }), "unknown-agent");
}

TEST(Faults, ScheduleJson) {
  Json j = Json::array({{{"agent_id", "events"}, {"trigger", {{"goal_id", "itinerary"}}}, {"effect", "emit_conflicting_time"}},
                        {{"agent_id", "hotels"}, {"trigger", {{"ordinal", 2}}}, {"effect", "delay"}, {"rounds", 2}}});
  auto s = fault_schedule_from_json(j, "$.faults");
  ASSERT_EQ(s.faults.size(), 2u);
  EXPECT_EQ(s.faults[1].rounds, 2);
  EXPECT_EQ(to_json(s), j);
  auto bad = j;
  bad[1]["trigger"]["ordinal"] = 0;
  EXPECT_EQ(code_of([&] { fault_schedule_from_json(bad, "$"); }), "schema-error");
  bad = j;
  bad[0]["effect"] = "explode";
  EXPECT_EQ(code_of([&] { fault_schedule_from_json(bad, "$"); }), "schema-error");
}
