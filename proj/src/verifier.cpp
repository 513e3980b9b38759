#include "orchvis/verifier.hpp"

#include <cmath>
#include <regex>

#include "orchvis/json_util.hpp"
#include "orchvis/normalize.hpp"

namespace orchvis {

using namespace jsonu;

void VerifierConfig::validate() const {
  if (!std::isfinite(lambda) || lambda < 0) {
    throw Error("invalid-config", "lambda must be a non-negative number", Json{{"lambda", lambda}});
  }
  if (!(risk_margin > 0 && risk_margin < 1)) {
    throw Error("invalid-config", "risk_margin must lie in (0, 1)", Json{{"risk_margin", risk_margin}});
  }
}

Json to_json(const VerifierConfig& config) {
  return Json{{"lambda", config.lambda}, {"risk_margin", config.risk_margin}};
}

VerifierConfig verifier_config_from_json(const Json& j, const std::string& path) {
  expect_object(j, path, {}, {"lambda", "risk_margin"});
  VerifierConfig c;
  if (j.contains("lambda")) c.lambda = get_number(j, "lambda", path);
  if (j.contains("risk_margin")) c.risk_margin = get_number(j, "risk_margin", path);
  c.validate();
  return c;
}

Json to_json(const VerificationReport& report) {
  Json diffs = Json::array();
  for (const auto& d : report.diffs) {
    diffs.push_back(Json{{"constraint_id", d.constraint_id},
                         {"subject", d.subject},
                         {"expected", d.expected},
                         {"observed", d.observed ? to_json(*d.observed) : Json("absent")}});
  }
  return Json{{"goal_id", report.goal_id},     {"achieved", report.achieved},
              {"score", report.score},         {"satisfied", report.satisfied},
              {"violated", report.violated},   {"diffs", diffs}};
}

VerificationReport verification_report_from_json(const Json& j) {
  VerificationReport r;
  r.goal_id = j.at("goal_id").get<std::string>();
  r.achieved = j.at("achieved").get<bool>();
  r.score = j.at("score").get<double>();
  r.satisfied = j.at("satisfied").get<std::vector<std::string>>();
  r.violated = j.at("violated").get<std::vector<std::string>>();
  for (const auto& d : j.at("diffs")) {
    ConstraintDiff diff;
    diff.constraint_id = d.at("constraint_id").get<std::string>();
    diff.subject = d.at("subject").get<std::string>();
    diff.expected = d.at("expected");
    if (!d.at("observed").is_string()) diff.observed = typed_value_from_json(d.at("observed"), "$.observed");
    r.diffs.push_back(std::move(diff));
  }
  return r;
}

VerificationReport evaluate_fields(const GoalNode& goal, const FieldMap& fields,
                                   const VerifierConfig& config) {
  VerificationReport r;
  r.goal_id = goal.id;
  std::size_t hard_total = 0, hard_ok = 0, soft_total = 0, soft_ok = 0;
  for (const auto& c : goal.constraints) {
    bool hard = c.severity == Severity::hard;
    (hard ? hard_total : soft_total)++;
    auto it = fields.find(c.subject);
    std::optional<TypedValue> observed;
    bool ok = false;
    if (it != fields.end()) {
      observed = it->second;
      ok = apply_op(c.op, it->second, c.value);
    }
    if (ok) {
      (hard ? hard_ok : soft_ok)++;
      r.satisfied.push_back(c.id);
    } else {
      r.violated.push_back(c.id);
      r.diffs.push_back({c.id, c.subject,
                         Json{{"op", std::string(to_string(c.op))}, {"value", to_json(c.value)}},
                         observed});
    }
  }
  double hard_fraction = hard_total ? static_cast<double>(hard_ok) / hard_total : 1.0;
  double soft_fraction = soft_total ? static_cast<double>(soft_ok) / soft_total : 1.0;
  r.achieved = hard_ok == hard_total;
  r.score = hard_fraction + config.lambda * soft_fraction;
  return r;
}

VerificationReport evaluate(const GoalNode& goal, const EvidenceRecord& evidence,
                            const VerifierConfig& config) {
  if (evidence.ontology_type != goal.ontology_type) {
    throw Error("type-mismatch",
                "evidence of type '" + evidence.ontology_type + "' for goal of type '" +
                    goal.ontology_type + "'",
                Json{{"goal_id", goal.id}, {"evidence_type", evidence.ontology_type}});
  }
  return evaluate_fields(goal, evidence.fields, config);
}

// --- extraction ------------------------------------------------------------

RawEvidence RawEvidence::from_text(std::string t) {
  RawEvidence r;
  r.kind = Kind::text;
  r.text = std::move(t);
  return r;
}

RawEvidence RawEvidence::from_image(std::string caption) {
  RawEvidence r;
  r.kind = Kind::image;
  r.caption = std::move(caption);
  return r;
}

RawEvidence RawEvidence::from_record(EvidenceRecord rec) {
  RawEvidence r;
  r.kind = Kind::structured;
  r.record = std::move(rec);
  return r;
}

namespace {

bool type_matches(const std::string& rule_type, const std::string& type) {
  return rule_type == type ||
         (type.size() > rule_type.size() && type.compare(0, rule_type.size(), rule_type) == 0 &&
          type[rule_type.size()] == '.');
}

EvidenceRecord empty_record(const ExtractRequest& req) {
  EvidenceRecord r;
  r.id = req.goal_id + ":extracted";
  r.agent_id = req.agent_id;
  r.goal_id = req.goal_id;
  r.ontology_type = req.ontology_type;
  return r;
}

const std::string& source_text(const ExtractRequest& req) {
  return req.raw.kind == RawEvidence::Kind::image ? req.raw.caption : req.raw.text;
}

void require_nonempty(const EvidenceRecord& r, const ExtractRequest& req) {
  if (r.fields.empty()) {
    throw Error("extraction-empty", "no field could be extracted",
                Json{{"ontology_type", req.ontology_type}, {"text", source_text(req)}});
  }
}

}  // namespace

RulesExtractor::RulesExtractor(std::vector<ExtractorRule> rules) : rules_(std::move(rules)) {
  for (const auto& r : rules_) {
    try {
      std::regex re(r.pattern);
      if (re.mark_count() < 1) {
        throw Error("invalid-config", "rule pattern needs a capture group", Json{{"pattern", r.pattern}});
      }
    } catch (const std::regex_error& e) {
      throw Error("invalid-config", std::string("bad rule pattern: ") + e.what(),
                  Json{{"pattern", r.pattern}});
    }
  }
}

RulesExtractor RulesExtractor::load(const std::string& path) {
  Json j = read_file(path);
  expect_object(j, "$", {"rules"});
  std::vector<ExtractorRule> rules;
  const auto& arr = get_array(j, "rules", "$");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    std::string p = index("$.rules", i);
    expect_object(arr[i], p, {"ontology_type", "pattern", "path", "kind"}, {"unit"});
    ExtractorRule r;
    r.ontology_type = get_string(arr[i], "ontology_type", p);
    r.pattern = get_string(arr[i], "pattern", p);
    r.path = get_string(arr[i], "path", p);
    r.kind = value_kind_from_string(get_string(arr[i], "kind", p));
    if (arr[i].contains("unit")) r.unit = get_string(arr[i], "unit", p);
    rules.push_back(std::move(r));
  }
  return RulesExtractor(std::move(rules));
}

EvidenceRecord RulesExtractor::extract(const ExtractRequest& req) const {
  if (req.raw.kind == RawEvidence::Kind::structured) return *req.raw.record;
  EvidenceRecord out = empty_record(req);
  const std::string& text = source_text(req);
  for (const auto& rule : rules_) {
    if (!type_matches(rule.ontology_type, req.ontology_type) || out.fields.count(rule.path)) continue;
    std::smatch m;
    if (!std::regex_search(text, m, std::regex(rule.pattern)) || !m[1].matched) continue;
    std::string captured = m[1];
    if (!rule.unit.empty()) captured += " " + rule.unit;
    try {
      out.fields[rule.path] = normalize_value(TypedValue::raw(rule.kind, captured), req.clock);
    } catch (const Error&) {
      // Unparseable capture: the field stays absent.
    }
  }
  require_nonempty(out, req);
  return out;
}

EndpointExtractor::EndpointExtractor(EndpointConfig config) : client_(std::move(config)) {}

EvidenceRecord EndpointExtractor::extract(const ExtractRequest& req) const {
  if (req.raw.kind == RawEvidence::Kind::structured) return *req.raw.record;
  std::vector<ChatMessage> messages{
      {"system",
       "Extract structured evidence. Reply with exactly one JSON object mapping dotted field "
       "paths to typed values {\"kind\",\"value\",\"unit\"}. Omit fields you cannot find."},
      {"user", "Ontology type: " + req.ontology_type + "\nReference clock: " +
                   format_rfc3339(req.clock) + "\nEvidence: " + source_text(req)}};
  std::string reply = client_.complete(messages);
  EvidenceRecord out = empty_record(req);
  try {
    Json j = Json::parse(reply);
    for (auto& [path, value] : field_map_from_json(j, "$")) {
      out.fields[path] = normalize_value(value, req.clock);
    }
  } catch (const std::exception&) {
    out.fields.clear();
  }
  require_nonempty(out, req);
  return out;
}

}  // namespace orchvis
