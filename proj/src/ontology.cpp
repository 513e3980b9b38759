#include "orchvis/ontology.hpp"

#include <set>

#include "orchvis/json_util.hpp"

namespace orchvis {

std::string_view to_string(Severity severity) {
  return severity == Severity::hard ? "hard" : "soft";
}

Severity severity_from_string(std::string_view text) {
  if (text == "hard") return Severity::hard;
  if (text == "soft") return Severity::soft;
  throw Error("schema-error", "unknown severity '" + std::string(text) + "'");
}

Ontology::Ontology(std::map<std::string, OntologyType> types) : types_(std::move(types)) {
  for (const auto& [name, type] : types_) {
    std::set<std::string> seen{name};
    const OntologyType* cur = &type;
    while (cur->parent) {
      auto it = types_.find(*cur->parent);
      if (it == types_.end()) {
        throw Error("invalid-ontology", "type '" + name + "' has unknown parent '" +
                                            *cur->parent + "'");
      }
      if (!seen.insert(it->first).second) {
        throw Error("invalid-ontology", "parent cycle through '" + name + "'");
      }
      cur = &it->second;
    }
  }
}

const OntologyType& Ontology::at(const std::string& type) const {
  auto it = types_.find(type);
  if (it == types_.end()) {
    throw Error("unknown-ontology-type", "unknown ontology type '" + type + "'",
                Json{{"ontology_type", type}});
  }
  return it->second;
}

std::vector<const OntologyType*> Ontology::chain(const std::string& type) const {
  std::vector<const OntologyType*> out;
  for (const OntologyType* cur = &at(type); cur;) {
    out.push_back(cur);
    cur = cur->parent ? &types_.at(*cur->parent) : nullptr;
  }
  return out;
}

std::map<std::string, AttributeSpec> Ontology::attributes(const std::string& type) const {
  std::map<std::string, AttributeSpec> out;
  for (const auto* t : chain(type)) {
    for (const auto& [name, spec] : t->attributes) out.emplace(name, spec);
  }
  return out;
}

std::vector<std::string> Ontology::tools(const std::string& type) const {
  for (const auto* t : chain(type)) {
    if (!t->tools.empty()) return t->tools;
  }
  return {};
}

bool Ontology::exclusive_attention(const std::string& type) const {
  for (const auto* t : chain(type)) {
    if (t->exclusive_attention) return *t->exclusive_attention;
  }
  return false;
}

std::vector<PredicateTemplate> Ontology::predicates(const std::string& type) const {
  std::vector<PredicateTemplate> out;
  std::set<std::string> seen;
  for (const auto* t : chain(type)) {
    for (const auto& p : t->predicates) {
      if (seen.insert(p.attribute).second) out.push_back(p);
    }
  }
  return out;
}

bool Ontology::is_a(const std::string& type, const std::string& ancestor) const {
  if (!contains(type)) return false;
  for (const auto* t : chain(type)) {
    if (t->name == ancestor) return true;
  }
  return false;
}

Ontology Ontology::from_json(const Json& j) {
  using namespace jsonu;
  expect_object(j, "$", {"types"});
  std::map<std::string, OntologyType> types;
  for (const auto& [name, tj] : get_object(j, "types", "$").items()) {
    std::string path = "$.types." + name;
    expect_object(tj, path, {"attributes"},
                  {"parent", "tools", "exclusive_attention", "predicates"});
    OntologyType t;
    t.name = name;
    if (tj.contains("parent") && !tj["parent"].is_null()) {
      t.parent = get_string(tj, "parent", path);
    }
    for (const auto& [aname, aj] : get_object(tj, "attributes", path).items()) {
      std::string apath = child(child(path, "attributes"), aname);
      expect_object(aj, apath, {"kind"}, {"required"});
      AttributeSpec spec;
      spec.kind = value_kind_from_string(get_string(aj, "kind", apath));
      spec.required = aj.contains("required") && get_bool(aj, "required", apath);
      t.attributes.emplace(aname, spec);
    }
    if (tj.contains("tools")) {
      for (const auto& tool : get_array(tj, "tools", path)) t.tools.push_back(tool.get<std::string>());
    }
    if (tj.contains("exclusive_attention")) {
      t.exclusive_attention = get_bool(tj, "exclusive_attention", path);
    }
    if (tj.contains("predicates")) {
      const auto& preds = get_array(tj, "predicates", path);
      for (std::size_t i = 0; i < preds.size(); ++i) {
        std::string ppath = index(child(path, "predicates"), i);
        expect_object(preds[i], ppath, {"attribute", "subject", "op", "severity"});
        t.predicates.push_back(PredicateTemplate{
            get_string(preds[i], "attribute", ppath), get_string(preds[i], "subject", ppath),
            op_from_string(get_string(preds[i], "op", ppath)),
            severity_from_string(get_string(preds[i], "severity", ppath))});
      }
    }
    types.emplace(name, std::move(t));
  }
  return Ontology(std::move(types));
}

Ontology Ontology::load(const std::string& path) { return from_json(jsonu::read_file(path)); }

Json Ontology::to_json() const {
  Json types = Json::object();
  for (const auto& [name, t] : types_) {
    Json tj;
    tj["parent"] = t.parent ? Json(*t.parent) : Json(nullptr);
    Json attrs = Json::object();
    for (const auto& [aname, spec] : t.attributes) {
      attrs[aname] = Json{{"kind", std::string(orchvis::to_string(spec.kind))},
                          {"required", spec.required}};
    }
    tj["attributes"] = attrs;
    if (!t.tools.empty()) tj["tools"] = t.tools;
    if (t.exclusive_attention) tj["exclusive_attention"] = *t.exclusive_attention;
    if (!t.predicates.empty()) {
      Json preds = Json::array();
      for (const auto& p : t.predicates) {
        preds.push_back(Json{{"attribute", p.attribute},
                             {"subject", p.subject},
                             {"op", std::string(orchvis::to_string(p.op))},
                             {"severity", std::string(orchvis::to_string(p.severity))}});
      }
      tj["predicates"] = preds;
    }
    types[name] = tj;
  }
  return Json{{"types", types}};
}

}  // namespace orchvis
