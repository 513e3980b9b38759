#include "orchvis/evidence.hpp"

#include "orchvis/json_util.hpp"

namespace orchvis {

using namespace jsonu;

Json to_json(const FieldMap& fields) {
  Json j = Json::object();
  for (const auto& [path, value] : fields) j[path] = to_json(value);
  return j;
}

FieldMap field_map_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) schema_error(path, "expected object");
  FieldMap out;
  for (const auto& [key, value] : j.items()) {
    out.emplace(key, typed_value_from_json(value, child(path, key)));
  }
  return out;
}

Json to_json(const EvidenceRecord& record) {
  Json options = Json::array();
  for (const auto& o : record.options) {
    options.push_back(Json{{"row_id", o.row_id}, {"fields", to_json(o.fields)}});
  }
  return Json{{"id", record.id},
              {"agent_id", record.agent_id},
              {"goal_id", record.goal_id},
              {"ontology_type", record.ontology_type},
              {"fields", to_json(record.fields)},
              {"exclusive_attention", record.exclusive_attention},
              {"options", options}};
}

EvidenceRecord evidence_from_json(const Json& j, const std::string& path) {
  expect_object(j, path, {"id", "agent_id", "goal_id", "ontology_type", "fields"},
                {"exclusive_attention", "options"});
  EvidenceRecord r;
  r.id = get_string(j, "id", path);
  r.agent_id = get_string(j, "agent_id", path);
  r.goal_id = get_string(j, "goal_id", path);
  r.ontology_type = get_string(j, "ontology_type", path);
  r.fields = field_map_from_json(j["fields"], child(path, "fields"));
  if (j.contains("exclusive_attention")) {
    r.exclusive_attention = get_bool(j, "exclusive_attention", path);
  }
  if (j.contains("options")) {
    const auto& opts = get_array(j, "options", path);
    for (std::size_t i = 0; i < opts.size(); ++i) {
      std::string opath = index(child(path, "options"), i);
      expect_object(opts[i], opath, {"row_id", "fields"});
      r.options.push_back({get_string(opts[i], "row_id", opath),
                           field_map_from_json(opts[i]["fields"], child(opath, "fields"))});
    }
  }
  return r;
}

namespace {

std::optional<std::int64_t> time_field(const FieldMap& fields, const char* name) {
  auto it = fields.find(name);
  if (it == fields.end() || it->second.is_raw() || it->second.kind() != ValueKind::timestamp) {
    return std::nullopt;
  }
  return it->second.as_timestamp().seconds;
}

}  // namespace

std::optional<Interval> evidence_interval(const FieldMap& fields) {
  for (auto [from, to] : {std::pair{"depart_time", "arrive_time"}, std::pair{"start_time", "end_time"}}) {
    auto a = time_field(fields, from);
    auto b = time_field(fields, to);
    if (a && b) return Interval{*a, *b};
  }
  return std::nullopt;
}

std::optional<Money> evidence_price(const FieldMap& fields) {
  auto it = fields.find("price.amount");
  if (it == fields.end() || it->second.is_raw() || it->second.kind() != ValueKind::money) {
    return std::nullopt;
  }
  return it->second.as_money();
}

}  // namespace orchvis
