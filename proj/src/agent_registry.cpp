#include "orchvis/agent_registry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "orchvis/json_util.hpp"

namespace orchvis {

using namespace jsonu;

namespace {

std::set<std::string> string_set(const Json& j, std::string_view key, const std::string& path) {
  std::set<std::string> out;
  const auto& arr = get_array(j, key, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) schema_error(index(child(path, key), i), "expected string");
    out.insert(arr[i].get<std::string>());
  }
  return out;
}

}  // namespace

Json to_json(const SkillMatrix& m) {
  return Json{{"agent_id", m.agent_id},
              {"tools", m.tools},
              {"input_types", m.input_types},
              {"output_types", m.output_types},
              {"success_rate", m.success_rate},
              {"cost_per_call", to_json(TypedValue::money(m.cost_per_call.minor, m.cost_per_call.currency))}};
}

SkillMatrix skill_matrix_from_json(const Json& j, const std::string& path) {
  expect_object(j, path, {"agent_id", "tools", "input_types", "success_rate", "cost_per_call"},
                {"output_types"});
  SkillMatrix m;
  m.agent_id = get_string(j, "agent_id", path);
  m.tools = string_set(j, "tools", path);
  m.input_types = string_set(j, "input_types", path);
  if (j.contains("output_types")) m.output_types = string_set(j, "output_types", path);
  m.success_rate = get_number(j, "success_rate", path);
  auto cost = typed_value_from_json(j["cost_per_call"], child(path, "cost_per_call"));
  if (cost.is_raw() || cost.kind() != ValueKind::money) {
    schema_error(child(path, "cost_per_call"), "expected money");
  }
  m.cost_per_call = cost.as_money();
  return m;
}

void AgentRegistry::register_agent(SkillMatrix matrix) {
  if (agents_.count(matrix.agent_id)) {
    throw Error("duplicate-agent", "agent '" + matrix.agent_id + "' is already registered",
                Json{{"agent_id", matrix.agent_id}});
  }
  if (matrix.agent_id.empty() || matrix.tools.empty() || !(matrix.success_rate >= 0 && matrix.success_rate <= 1)) {
    throw Error("invalid-agent", "skill matrix needs an id, at least one tool and success_rate in [0, 1]",
                Json{{"agent_id", matrix.agent_id}});
  }
  auto id = matrix.agent_id;
  agents_.emplace(std::move(id), std::move(matrix));
}

const SkillMatrix& AgentRegistry::at(const std::string& agent_id) const {
  auto it = agents_.find(agent_id);
  if (it == agents_.end()) {
    throw Error("unknown-agent", "no agent '" + agent_id + "'", Json{{"agent_id", agent_id}});
  }
  return it->second;
}

AgentRegistry AgentRegistry::from_json(const Json& j) {
  expect_object(j, "$", {"agents"});
  AgentRegistry r;
  const auto& arr = get_array(j, "agents", "$");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    r.register_agent(skill_matrix_from_json(arr[i], index("$.agents", i)));
  }
  return r;
}

AgentRegistry AgentRegistry::load(const std::string& path) { return from_json(read_file(path)); }

Json AgentRegistry::to_json() const {
  Json arr = Json::array();
  for (const auto& [id, m] : agents_) arr.push_back(orchvis::to_json(m));
  return Json{{"agents", arr}};
}

// --- fixtures ----------------------------------------------------------------

FixtureTable fixture_table_from_json(const Json& j, const std::string& path) {
  expect_object(j, path, {"ontology_type", "columns", "rows"}, {"agent_id"});
  FixtureTable t;
  t.ontology_type = get_string(j, "ontology_type", path);
  if (j.contains("agent_id")) t.agent_id = get_string(j, "agent_id", path);
  const auto& cols = get_object(j, "columns", path);
  for (const auto& [name, kind] : cols.items()) {
    if (!kind.is_string()) schema_error(child(child(path, "columns"), name), "expected kind name");
    try {
      t.columns[name] = value_kind_from_string(kind.get<std::string>());
    } catch (const Error&) {
      schema_error(child(child(path, "columns"), name), "unknown kind");
    }
  }
  const auto& rows = get_array(j, "rows", path);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::string rpath = index(child(path, "rows"), i);
    if (!rows[i].is_object()) schema_error(rpath, "expected object");
    FixtureRow row;
    row.id = get_string(rows[i], "id", rpath);
    if (!ids.insert(row.id).second) schema_error(child(rpath, "id"), "duplicate row id");
    for (const auto& [name, cell] : rows[i].items()) {
      if (name == "id") continue;
      auto col = t.columns.find(name);
      if (col == t.columns.end()) schema_error(child(rpath, name), "undeclared column");
      if (cell.is_null()) continue;
      row.fields[name] = typed_value_from_cell(col->second, cell, child(rpath, name));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

namespace {

Json cell_json(const TypedValue& v) {
  switch (v.kind()) {
    case ValueKind::number: return v.as_number();
    case ValueKind::money: return format_money_amount(v.as_money().minor) + " " + v.as_money().currency;
    case ValueKind::timestamp: return format_rfc3339(v.as_timestamp());
    case ValueKind::duration: return v.as_duration().minutes;
    case ValueKind::text: return v.as_text();
    case ValueKind::flag: return v.as_flag();
  }
  return nullptr;
}

}  // namespace

Json to_json(const FixtureTable& table) {
  Json cols = Json::object();
  for (const auto& [name, kind] : table.columns) cols[name] = std::string(to_string(kind));
  Json rows = Json::array();
  for (const auto& row : table.rows) {
    Json r{{"id", row.id}};
    for (const auto& [name, v] : row.fields) r[name] = cell_json(v);
    rows.push_back(r);
  }
  Json out{{"ontology_type", table.ontology_type}, {"columns", cols}, {"rows", rows}};
  if (table.agent_id) out["agent_id"] = *table.agent_id;
  return out;
}

void FixtureSet::add(FixtureTable table) {
  for (const auto& t : tables_) {
    if (t.ontology_type == table.ontology_type && t.agent_id == table.agent_id) {
      throw Error("duplicate-fixture", "two fixture tables for '" + table.ontology_type + "'",
                  Json{{"ontology_type", table.ontology_type}});
    }
  }
  tables_.push_back(std::move(table));
}

const FixtureTable* FixtureSet::table_for(const std::string& ontology_type,
                                          const std::string& agent_id) const {
  const FixtureTable* shared = nullptr;
  for (const auto& t : tables_) {
    if (t.ontology_type != ontology_type) continue;
    if (t.agent_id && *t.agent_id == agent_id) return &t;
    if (!t.agent_id) shared = &t;
  }
  return shared;
}

// --- faults ------------------------------------------------------------------

std::string_view to_string(FaultEffect effect) {
  switch (effect) {
    case FaultEffect::emit_conflicting_time: return "emit_conflicting_time";
    case FaultEffect::omit_field: return "omit_field";
    case FaultEffect::fail_call: return "fail_call";
    case FaultEffect::delay: return "delay";
  }
  return "?";
}

FaultEffect fault_effect_from_string(std::string_view text) {
  for (auto e : {FaultEffect::emit_conflicting_time, FaultEffect::omit_field, FaultEffect::fail_call,
                 FaultEffect::delay}) {
    if (to_string(e) == text) return e;
  }
  throw Error("schema-error", "unknown fault effect '" + std::string(text) + "'");
}

FaultSchedule fault_schedule_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) schema_error(path, "expected array");
  FaultSchedule s;
  for (std::size_t i = 0; i < j.size(); ++i) {
    std::string p = index(path, i);
    expect_object(j[i], p, {"agent_id", "trigger", "effect"}, {"field", "rounds"});
    Fault f;
    f.agent_id = get_string(j[i], "agent_id", p);
    const auto& trig = get_object(j[i], "trigger", p);
    std::string tpath = child(p, "trigger");
    if (trig.size() != 1) schema_error(tpath, "expected exactly one of ordinal, goal_id");
    if (trig.contains("ordinal")) {
      auto n = get_integer(trig, "ordinal", tpath);
      if (n < 1) schema_error(child(tpath, "ordinal"), "ordinal must be positive");
      f.ordinal = static_cast<int>(n);
    } else if (trig.contains("goal_id")) {
      f.goal_id = get_string(trig, "goal_id", tpath);
    } else {
      schema_error(tpath, "expected ordinal or goal_id");
    }
    try {
      f.effect = fault_effect_from_string(get_string(j[i], "effect", p));
    } catch (const Error&) {
      schema_error(child(p, "effect"), "unknown effect");
    }
    if (j[i].contains("field")) f.field = get_string(j[i], "field", p);
    if (j[i].contains("rounds")) {
      auto n = get_integer(j[i], "rounds", p);
      if (n < 0) schema_error(child(p, "rounds"), "rounds must be non-negative");
      f.rounds = static_cast<int>(n);
    }
    s.faults.push_back(std::move(f));
  }
  return s;
}

Json to_json(const FaultSchedule& schedule) {
  Json arr = Json::array();
  for (const auto& f : schedule.faults) {
    Json trig = f.ordinal ? Json{{"ordinal", *f.ordinal}} : Json{{"goal_id", *f.goal_id}};
    Json j{{"agent_id", f.agent_id}, {"trigger", trig}, {"effect", std::string(to_string(f.effect))}};
    if (f.field) j["field"] = *f.field;
    if (f.rounds) j["rounds"] = *f.rounds;
    arr.push_back(j);
  }
  return arr;
}

// --- selection ---------------------------------------------------------------

RowScore score_row(const GoalNode& goal, const FieldMap& fields) {
  RowScore s;
  for (const auto& c : goal.constraints) {
    bool ok = false;
    auto it = fields.find(c.subject);
    if (it != fields.end()) {
      try {
        ok = apply_op(c.op, it->second, c.value);
      } catch (const Error&) {
        ok = false;
      }
    }
    if (c.severity == Severity::hard) {
      s.hard_violations += ok ? 0 : 1;
    } else {
      s.soft_satisfied += ok ? 1 : 0;
    }
  }
  return s;
}

namespace {

double price_key(const FieldMap& fields) {
  auto p = evidence_price(fields);
  return p ? static_cast<double>(p->minor) : std::numeric_limits<double>::infinity();
}

std::vector<std::size_t> ranked_feasible(const GoalNode& goal, const FixtureTable& table) {
  struct Entry {
    std::size_t row;
    std::size_t soft;
    double price;
  };
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    auto s = score_row(goal, table.rows[i].fields);
    if (s.hard_violations == 0) entries.push_back({i, s.soft_satisfied, price_key(table.rows[i].fields)});
  }
  std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
    if (a.soft != b.soft) return a.soft > b.soft;
    if (a.price != b.price) return a.price < b.price;
    return table.rows[a.row].id < table.rows[b.row].id;
  });
  std::vector<std::size_t> out;
  for (const auto& e : entries) out.push_back(e.row);
  return out;
}

[[noreturn]] void no_match(const GoalNode& goal, const std::string& agent_id) {
  throw Error("no-fixture-match", "no fixture row satisfies the hard constraints of '" + goal.id + "'",
              Json{{"goal_id", goal.id}, {"agent_id", agent_id}});
}

bool overlaps(const Interval& a, const Interval& b) {
  return std::max(a.start, b.start) < std::min(a.end, b.end);
}

}  // namespace

RowSelection select_row(const GoalNode& goal, const FixtureTable& table) {
  auto ranked = ranked_feasible(goal, table);
  if (ranked.empty()) no_match(goal, table.agent_id.value_or(""));
  return RowSelection{ranked.front(), std::vector<std::size_t>(ranked.begin() + 1, ranked.end())};
}

EvidenceRecord make_record(const std::string& agent_id, const GoalNode& goal,
                           const FixtureTable& table, std::size_t chosen,
                           const std::vector<std::size_t>& rest, const Ontology& ontology) {
  EvidenceRecord r;
  r.id = goal.id + ":" + table.rows[chosen].id;
  r.agent_id = agent_id;
  r.goal_id = goal.id;
  r.ontology_type = goal.ontology_type;
  r.fields = table.rows[chosen].fields;
  r.exclusive_attention = ontology.exclusive_attention(goal.ontology_type);
  for (std::size_t k = 0; k < rest.size() && k < kMaxOptions; ++k) {
    r.options.push_back({table.rows[rest[k]].id, table.rows[rest[k]].fields});
  }
  return r;
}

SimulatedAgents::SimulatedAgents(const AgentRegistry& registry, const FixtureSet& fixtures,
                                 FaultSchedule faults, const Ontology& ontology, std::uint64_t seed)
    : registry_(&registry), fixtures_(&fixtures), faults_(std::move(faults)), ontology_(&ontology), seed_(seed) {}

std::optional<std::size_t> SimulatedAgents::fault_for(const std::string& agent_id, const std::string& goal_id,
                                                      int ordinal) const {
  bool first_for_goal = !seen_goals_.count({agent_id, goal_id});
  for (std::size_t i = 0; i < faults_.faults.size(); ++i) {
    const auto& f = faults_.faults[i];
    if (consumed_.count(i) || f.agent_id != agent_id) continue;
    if ((f.ordinal && *f.ordinal == ordinal) || (f.goal_id && *f.goal_id == goal_id && first_for_goal)) return i;
  }
  return std::nullopt;
}

void SimulatedAgents::note_call(const std::string& agent_id, const std::string& goal_id) {
  int ordinal = ++calls_[agent_id];
  if (auto f = fault_for(agent_id, goal_id, ordinal)) consumed_.insert(*f);
  seen_goals_.insert({agent_id, goal_id});
}

EvidenceRecord SimulatedAgents::select(const std::string& agent_id, const GoalNode& goal) const {
  registry_->at(agent_id);
  const FixtureTable* table = fixtures_->table_for(goal.ontology_type, agent_id);
  if (!table) no_match(goal, agent_id);
  auto ranked = ranked_feasible(goal, *table);
  if (ranked.empty()) no_match(goal, agent_id);
  return make_record(agent_id, goal, *table, ranked.front(),
                     std::vector<std::size_t>(ranked.begin() + 1, ranked.end()), *ontology_);
}

InvokeResult SimulatedAgents::invoke(const std::string& agent_id, const GoalNode& goal,
                                     const std::vector<EvidenceRecord>& session_evidence) {
  registry_->at(agent_id);
  int ordinal = ++calls_[agent_id];
  auto fault_index = fault_for(agent_id, goal.id, ordinal);
  seen_goals_.insert({agent_id, goal.id});
  if (fault_index) consumed_.insert(*fault_index);
  const Fault* fault = fault_index ? &faults_.faults[*fault_index] : nullptr;

  InvokeResult out;
  if (fault) out.fault = fault->effect;
  if (fault && fault->effect == FaultEffect::fail_call) {
    throw Error("agent-call-failed", "agent '" + agent_id + "' call " + std::to_string(ordinal) + " failed",
                Json{{"agent_id", agent_id}, {"goal_id", goal.id}, {"ordinal", ordinal}});
  }

  const FixtureTable* table = fixtures_->table_for(goal.ontology_type, agent_id);
  if (!table) no_match(goal, agent_id);
  auto ranked = ranked_feasible(goal, *table);
  if (ranked.empty()) no_match(goal, agent_id);

  std::size_t chosen = ranked.front();
  std::optional<Interval> shifted;
  if (fault && fault->effect == FaultEffect::emit_conflicting_time) {
    std::vector<Interval> busy;
    for (const auto& e : session_evidence) {
      if (e.goal_id == goal.id || !e.exclusive_attention) continue;
      if (auto iv = evidence_interval(e.fields)) busy.push_back(*iv);
    }
    bool found = false;
    for (std::size_t row : ranked) {
      auto iv = evidence_interval(table->rows[row].fields);
      if (!iv) continue;
      if (std::any_of(busy.begin(), busy.end(), [&](const Interval& b) { return overlaps(*iv, b); })) {
        chosen = row;
        found = true;
        break;
      }
    }
    auto own = evidence_interval(table->rows[chosen].fields);
    if (!found && own && !busy.empty()) {
      std::int64_t mid = busy.front().start + (busy.front().end - busy.front().start) / 2;
      shifted = Interval{mid, mid + std::max<std::int64_t>(own->end - own->start, 60)};
    }
  }
  std::vector<std::size_t> rest;
  for (std::size_t row : ranked) {
    if (row != chosen) rest.push_back(row);
  }
  out.record = make_record(agent_id, goal, *table, chosen, rest, *ontology_);

  if (shifted) {
    auto& f = out.record.fields;
    const char* from = f.count("depart_time") ? "depart_time" : "start_time";
    const char* to = f.count("depart_time") ? "arrive_time" : "end_time";
    f[from] = TypedValue::timestamp(shifted->start);
    f[to] = TypedValue::timestamp(shifted->end);
  }
  if (fault && fault->effect == FaultEffect::omit_field) {
    std::string field;
    if (fault->field) {
      field = *fault->field;
    } else {
      for (const auto& c : goal.constraints) {
        if (c.severity == Severity::hard) {
          field = c.subject;
          break;
        }
      }
    }
    out.record.fields.erase(field);
  }
  if (fault && fault->effect == FaultEffect::delay) {
    out.delay_rounds = fault->rounds ? *fault->rounds : static_cast<int>(1 + seed_ % 3);
  }
  return out;
}

}  // namespace orchvis
