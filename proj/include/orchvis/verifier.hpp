#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "orchvis/chat_client.hpp"
#include "orchvis/evidence.hpp"
#include "orchvis/goal_model.hpp"

namespace orchvis {

struct VerifierConfig {
  double lambda = 0.5;
  double risk_margin = 0.1;

  // Throws invalid-config.
  void validate() const;
  friend bool operator==(const VerifierConfig&, const VerifierConfig&) = default;
};

Json to_json(const VerifierConfig& config);
VerifierConfig verifier_config_from_json(const Json& j, const std::string& path = "$");

struct ConstraintDiff {
  std::string constraint_id;
  std::string subject;
  Json expected;                     // {"op", "value"}
  std::optional<TypedValue> observed;  // nullopt = absent

  friend bool operator==(const ConstraintDiff&, const ConstraintDiff&) = default;
};

struct VerificationReport {
  std::string goal_id;
  bool achieved = false;
  double score = 0;
  std::vector<std::string> satisfied;
  std::vector<std::string> violated;
  std::vector<ConstraintDiff> diffs;

  friend bool operator==(const VerificationReport&, const VerificationReport&) = default;
};

Json to_json(const VerificationReport& report);
VerificationReport verification_report_from_json(const Json& j);

// S = hard_satisfied/hard_total + lambda * soft_satisfied/soft_total, with an
// empty set counting as fully satisfied. A missing subject is a violation
// with observed absent. Throws type-mismatch.
VerificationReport evaluate(const GoalNode& goal, const EvidenceRecord& evidence,
                            const VerifierConfig& config);

// Same rule over a bare field map (used when checking fixture rows).
VerificationReport evaluate_fields(const GoalNode& goal, const FieldMap& fields,
                                   const VerifierConfig& config);

// --- extraction ------------------------------------------------------------

// Unstructured agent output. Image evidence is carried as a blob whose
// caption is the textual surrogate the extractor reads.
struct RawEvidence {
  enum class Kind { text, image, structured };
  Kind kind = Kind::text;
  std::string text;
  std::string caption;
  std::optional<EvidenceRecord> record;

  static RawEvidence from_text(std::string t);
  static RawEvidence from_image(std::string caption);
  static RawEvidence from_record(EvidenceRecord r);
};

struct ExtractorRule {
  std::string ontology_type;  // applies to this type and its dotted subtypes
  std::string pattern;        // ECMAScript regex, first capture group is the value
  std::string path;
  ValueKind kind = ValueKind::text;
  std::string unit;           // appended to the capture before normalizing
};

struct ExtractRequest {
  RawEvidence raw;
  std::string ontology_type;
  std::string goal_id;
  std::string agent_id;
  Timestamp clock;  // anchors time-only captures such as "08:05"
};

class ExtractorBackend {
 public:
  virtual ~ExtractorBackend() = default;
  virtual std::string kind() const = 0;
  // Throws extraction-empty when nothing at all could be extracted.
  virtual EvidenceRecord extract(const ExtractRequest& request) const = 0;
};

class RulesExtractor : public ExtractorBackend {
 public:
  explicit RulesExtractor(std::vector<ExtractorRule> rules);
  static RulesExtractor load(const std::string& path);
  std::string kind() const override { return "rules"; }
  EvidenceRecord extract(const ExtractRequest& request) const override;

 private:
  std::vector<ExtractorRule> rules_;
};

// Sends the text to a chat endpoint and expects a JSON object mapping field
// paths to typed values.
class EndpointExtractor : public ExtractorBackend {
 public:
  explicit EndpointExtractor(EndpointConfig config);
  std::string kind() const override { return "external-endpoint"; }
  EvidenceRecord extract(const ExtractRequest& request) const override;

 private:
  ChatClient client_;
};

}  // namespace orchvis
