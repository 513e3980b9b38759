#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orchvis/value.hpp"

namespace orchvis {

enum class Severity { hard, soft };

std::string_view to_string(Severity severity);
Severity severity_from_string(std::string_view text);

struct AttributeSpec {
  ValueKind kind = ValueKind::text;
  bool required = false;
};

// A machine predicate the goal parser derives from an attribute: the attribute
// value becomes the constraint bound on `subject` under `op`.
struct PredicateTemplate {
  std::string attribute;
  std::string subject;
  Op op = Op::eq;
  Severity severity = Severity::hard;
};

struct OntologyType {
  std::string name;
  std::optional<std::string> parent;
  std::map<std::string, AttributeSpec> attributes;
  std::vector<std::string> tools;
  std::optional<bool> exclusive_attention;
  std::vector<PredicateTemplate> predicates;
};

class Ontology {
 public:
  Ontology() = default;
  // Validates parent references (present, acyclic).
  explicit Ontology(std::map<std::string, OntologyType> types);

  static Ontology from_json(const Json& j);
  static Ontology load(const std::string& path);
  Json to_json() const;

  bool contains(const std::string& type) const { return types_.count(type) != 0; }
  const OntologyType& at(const std::string& type) const;
  const std::map<std::string, OntologyType>& types() const { return types_; }

  // Attribute schema including inherited attributes; nearer types win.
  std::map<std::string, AttributeSpec> attributes(const std::string& type) const;
  // Tools of the nearest type in the parent chain that declares any.
  std::vector<std::string> tools(const std::string& type) const;
  bool exclusive_attention(const std::string& type) const;
  std::vector<PredicateTemplate> predicates(const std::string& type) const;
  // type == ancestor or ancestor appears on type's parent chain.
  bool is_a(const std::string& type, const std::string& ancestor) const;

 private:
  std::vector<const OntologyType*> chain(const std::string& type) const;

  std::map<std::string, OntologyType> types_;
};

}  // namespace orchvis
