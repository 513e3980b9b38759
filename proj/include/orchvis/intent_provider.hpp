#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "orchvis/chat_client.hpp"
#include "orchvis/goal_model.hpp"

namespace orchvis {

struct Exemplar {
  std::string input;
  std::string document;  // canonical goal document text
};

// Loads {"exemplars": [{"input", "document": <path relative to the file>}]}.
// Every document must parse against the ontology.
std::vector<Exemplar> load_exemplars(const std::string& path, const Ontology& ontology);

struct IntentRequest {
  std::string task_text;
  std::vector<Exemplar> exemplars;
  std::shared_ptr<const Ontology> ontology;
  int max_repair_rounds = 3;
};

struct TranscriptEntry {
  std::string prompt;
  std::string response;

  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

Json to_json(const std::vector<TranscriptEntry>& transcript);

struct IntentResult {
  GoalGraph graph;
  std::string provider_id;
  int rounds_used = 0;
  std::vector<TranscriptEntry> raw_transcript;
};

// What a backend sees for one round. messages is the full chat so far; the
// scripted backend reads the structured fields instead.
struct PromptRound {
  const IntentRequest* request = nullptr;
  int round = 1;
  std::vector<ChatMessage> messages;
};

class ProviderBackend {
 public:
  virtual ~ProviderBackend() = default;
  virtual std::string id() const = 0;
  virtual std::string respond(const PromptRound& round) = 0;
  // Serial backends are called under a lock by propose_goals.
  virtual bool serial() const { return false; }

  std::mutex& call_lock() { return lock_; }

 private:
  std::mutex lock_;
};

struct ScriptedIntent {
  std::string pattern;  // ECMAScript regex, case-insensitive, searched in the task text
  std::string document;
  int malformed_first = 0;  // rounds answered with a broken document first
};

class ScriptedBackend : public ProviderBackend {
 public:
  ScriptedBackend(std::vector<ScriptedIntent> intents, std::string out_of_scope_reply);
  // {"intents": [{"pattern", "document": <path>, "malformed_first"?}], "out_of_scope_reply"?}
  static std::unique_ptr<ScriptedBackend> load(const std::string& path);

  std::string id() const override { return "scripted"; }
  std::string respond(const PromptRound& round) override;
  std::size_t size() const { return intents_.size(); }

 private:
  std::vector<ScriptedIntent> intents_;
  std::vector<std::regex> compiled_;
  std::string out_of_scope_;
};

class ExternalBackend : public ProviderBackend {
 public:
  explicit ExternalBackend(EndpointConfig config) : client_(std::move(config)) {}
  std::string id() const override { return "external-endpoint"; }
  std::string respond(const PromptRound& round) override { return client_.complete(round.messages); }

 private:
  ChatClient client_;
};

struct BackendDescriptor {
  std::string kind;  // scripted | external-endpoint
  std::string fixture_path;  // scripted only
  EnvLookup env;  // external only; defaults to std::getenv
};

// Throws unknown-backend-kind or missing-config. Sends no traffic.
std::unique_ptr<ProviderBackend> register_backend(const BackendDescriptor& descriptor);

// The external backend when any ORCHVIS_LLM_* variable is set, else the
// scripted table at fixture_path.
std::unique_ptr<ProviderBackend> default_backend(const std::string& fixture_path, const EnvLookup& env);

// Fixed description of the goal document grammar included in every prompt.
const std::string& grammar_description();

// Exemplars in order, then the grammar, then the task text.
std::vector<ChatMessage> initial_messages(const IntentRequest& request);

// Validate-and-reprompt loop. Throws provider-unavailable or
// exhausted-repairs (detail: last_error, transcript).
IntentResult propose_goals(const IntentRequest& request, ProviderBackend& backend);

}  // namespace orchvis
