#include "orchvis/intent_provider.hpp"

#include <cstdlib>
#include <filesystem>

#include "orchvis/goal_dsl.hpp"
#include "orchvis/json_util.hpp"

namespace orchvis {

using namespace jsonu;
namespace fs = std::filesystem;

namespace {

std::string sibling(const std::string& file, const std::string& rel) {
  return (fs::path(file).parent_path() / rel).lexically_normal().string();
}

std::string format_exemplar(const Exemplar& e) {
  return "Task: " + e.input + "\nGoal document:\n" + e.document;
}

// A truncated copy: deterministic and never parseable.
std::string malformed(const std::string& document) {
  auto cut = document.find("\"nodes\"");
  return document.substr(0, cut == std::string::npos ? document.size() / 2 : cut) + "\"nodes\": [";
}

}  // namespace

std::vector<Exemplar> load_exemplars(const std::string& path, const Ontology& ontology) {
  Json j = read_file(path);
  expect_object(j, "$", {"exemplars"});
  std::vector<Exemplar> out;
  const Json& list = get_array(j, "exemplars", "$");
  for (std::size_t i = 0; i < list.size(); ++i) {
    std::string p = index("$.exemplars", i);
    expect_object(list[i], p, {"input", "document"});
    Exemplar e;
    e.input = get_string(list[i], "input", p);
    e.document = read_text(sibling(path, get_string(list[i], "document", p)));
    parse_document(e.document, ontology);
    out.push_back(std::move(e));
  }
  return out;
}

Json to_json(const std::vector<TranscriptEntry>& transcript) {
  Json out = Json::array();
  for (const auto& t : transcript) out.push_back(Json{{"prompt", t.prompt}, {"response", t.response}});
  return out;
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptedIntent> intents, std::string out_of_scope_reply)
    : intents_(std::move(intents)), out_of_scope_(std::move(out_of_scope_reply)) {
  for (const auto& i : intents_) {
    try {
      compiled_.emplace_back(i.pattern, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      throw Error("schema-error", "bad intent pattern '" + i.pattern + "': " + e.what(),
                  Json{{"pattern", i.pattern}});
    }
  }
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::load(const std::string& path) {
  Json j = read_file(path);
  expect_object(j, "$", {"intents"}, {"out_of_scope_reply"});
  std::vector<ScriptedIntent> intents;
  const Json& list = get_array(j, "intents", "$");
  for (std::size_t i = 0; i < list.size(); ++i) {
    std::string p = index("$.intents", i);
    expect_object(list[i], p, {"pattern", "document"}, {"malformed_first"});
    ScriptedIntent s;
    s.pattern = get_string(list[i], "pattern", p);
    s.document = read_text(sibling(path, get_string(list[i], "document", p)));
    if (list[i].contains("malformed_first")) s.malformed_first = static_cast<int>(get_integer(list[i], "malformed_first", p));
    intents.push_back(std::move(s));
  }
  std::string reply = j.contains("out_of_scope_reply") ? get_string(j, "out_of_scope_reply", "$")
                                                       : std::string("No goal document applies to this request.");
  return std::make_unique<ScriptedBackend>(std::move(intents), std::move(reply));
}

std::string ScriptedBackend::respond(const PromptRound& round) {
  const auto& req = *round.request;
  for (const auto& e : req.exemplars) {
    if (e.input == req.task_text) return e.document;
  }
  for (std::size_t i = 0; i < intents_.size(); ++i) {
    if (!std::regex_search(req.task_text, compiled_[i])) continue;
    if (round.round <= intents_[i].malformed_first) return malformed(intents_[i].document);
    return intents_[i].document;
  }
  return out_of_scope_;
}

std::unique_ptr<ProviderBackend> register_backend(const BackendDescriptor& d) {
  if (d.kind == "scripted") {
    if (d.fixture_path.empty()) {
      throw Error("missing-config", "scripted backend needs a fixture path", Json{{"field", "fixture_path"}});
    }
    return ScriptedBackend::load(d.fixture_path);
  }
  if (d.kind == "external-endpoint") {
    EnvLookup env = d.env ? d.env : EnvLookup([](const char* n) { return std::getenv(n); });
    return std::make_unique<ExternalBackend>(endpoint_config_from_env(env));
  }
  throw Error("unknown-backend-kind", "unknown backend kind '" + d.kind + "'", Json{{"kind", d.kind}});
}

std::unique_ptr<ProviderBackend> default_backend(const std::string& fixture_path, const EnvLookup& env) {
  if (endpoint_env_absent(env)) return register_backend({"scripted", fixture_path, {}});
  return register_backend({"external-endpoint", {}, env});
}

const std::string& grammar_description() {
  static const std::string text =
      "Reply with exactly one goal document and nothing else. A goal document is a JSON object with the keys "
      "\"clock\" (RFC 3339 UTC timestamp), \"nodes\" (array), \"root\" (id of the root node) and \"version\" (1). "
      "Each node has exactly: \"id\", \"title\" (non-empty), \"parent\" (id or null for the root), \"relation\" "
      "(sequential | parallel | conditional), \"condition\" (only when relation is conditional: "
      "{\"goal\", \"subject\", \"op\", \"value\"}), \"ontology_type\" (a type from the ontology), \"attributes\" "
      "(object of typed values), \"constraints\" (array of {\"id\", \"subject\", \"op\", \"value\", \"units\", "
      "\"severity\": hard | soft}) and \"status\" (pending). A typed value is {\"kind\", \"value\"} plus \"unit\" for "
      "money (ISO currency, decimal string), timestamp (UTC) and duration (min). Operators: eq ne lt le gt ge in "
      "contains between.";
  return text;
}

std::vector<ChatMessage> initial_messages(const IntentRequest& request) {
  std::string system = "You convert task descriptions into goal documents.\n\n";
  for (const auto& e : request.exemplars) system += format_exemplar(e) + "\n";
  system += grammar_description();
  if (request.ontology) system += "\n\nOntology:\n" + compact(request.ontology->to_json());
  return {{"system", system}, {"user", "Task: " + request.task_text}};
}

IntentResult propose_goals(const IntentRequest& request, ProviderBackend& backend) {
  if (!request.ontology) throw Error("missing-config", "intent request has no ontology", Json::object());
  if (request.max_repair_rounds < 1) {
    throw Error("invalid-command", "max_repair_rounds must be at least 1",
                Json{{"max_repair_rounds", request.max_repair_rounds}});
  }
  std::unique_lock<std::mutex> lock(backend.call_lock(), std::defer_lock);
  if (backend.serial()) lock.lock();

  PromptRound round;
  round.request = &request;
  round.messages = initial_messages(request);
  std::vector<TranscriptEntry> transcript;
  Json last_error;
  for (round.round = 1; round.round <= request.max_repair_rounds; ++round.round) {
    std::string response = backend.respond(round);
    transcript.push_back({round.messages.back().content, response});
    try {
      GoalGraph graph = parse_document(response, *request.ontology);
      return IntentResult{std::move(graph), backend.id(), round.round, std::move(transcript)};
    } catch (const Error& e) {
      last_error = Json{{"error", e.code()}, {"message", e.what()}, {"detail", e.detail()}};
      round.messages.push_back({"assistant", response});
      round.messages.push_back({"user", "The document was rejected (" + std::string(e.code()) + "): " + e.what() +
                                            "\nReply with one corrected goal document only."});
    }
  }
  throw Error("exhausted-repairs",
              "no valid goal document after " + std::to_string(request.max_repair_rounds) + " rounds",
              Json{{"last_error", last_error}, {"transcript", to_json(transcript)}, {"provider_id", backend.id()}});
}

}  // namespace orchvis
