#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <thread>

#include "httplib.h"
#include "orchvis/goal_dsl.hpp"
#include "orchvis/intent_provider.hpp"
#include "orchvis/json_util.hpp"
#include "support.hpp"

using namespace orchvis;
using namespace orchvis::testing;

namespace {

const std::string kData = ORCHVIS_DATA_DIR_DEFAULT;
const std::string kFig2Text = "Plan a 3-day San Francisco trip with flights, hotel, and an evening show";

std::shared_ptr<const Ontology> ontology_ptr() {
  static auto o = std::make_shared<const Ontology>(Ontology::load(kData + "/ontology.json"));
  return o;
}

IntentRequest request(const std::string& text) {
  IntentRequest r;
  r.task_text = text;
  r.exemplars = load_exemplars(kData + "/exemplars.json", *ontology_ptr());
  r.ontology = ontology_ptr();
  return r;
}

std::unique_ptr<ProviderBackend> scripted() { return register_backend({"scripted", kData + "/intents.json", {}}); }

// Writes an intents table next to the data goals so relative paths resolve.
std::string temp_table(const Json& body) {
  auto path = std::filesystem::temp_directory_path() / ("orchvis_intents_" + std::to_string(::getpid()) + ".json");
  Json j = body;
  for (auto& i : j["intents"]) i["document"] = kData + "/" + i["document"].get<std::string>();
  jsonu::write_file(path.string(), j.dump());
  return path.string();
}

EnvLookup env_of(std::map<std::string, std::string> vars) {
  auto shared = std::make_shared<std::map<std::string, std::string>>(std::move(vars));
  return [shared](const char* name) -> const char* {
    auto it = shared->find(name);
    return it == shared->end() ? nullptr : it->second.c_str();
  };
}

}  // namespace

TEST(IntentProvider, ExemplarFixtureCoversSeveralDomains) {
  auto ex = load_exemplars(kData + "/exemplars.json", *ontology_ptr());
  int travel = 0, other = 0;
  for (const auto& e : ex) {
    auto g = parse_document(e.document, *ontology_ptr());
    (ontology_ptr()->is_a(g.at(g.root).ontology_type, "trip") ? travel : other)++;
  }
  EXPECT_GE(travel, 3);
  EXPECT_GE(other, 2);
}

TEST(IntentProvider, Fig2TextGivesTravelHierarchy) {
  auto backend = scripted();
  auto res = propose_goals(request(kFig2Text), *backend);
  EXPECT_EQ(res.provider_id, "scripted");
  EXPECT_EQ(res.rounds_used, 1);
  EXPECT_EQ(res.graph.children("trip"), (std::vector<std::string>{"flight", "hotel", "itinerary"}));
  EXPECT_TRUE(validate_graph(res.graph, *ontology_ptr()).empty());
  EXPECT_EQ(res.graph, scenario("clean").goals);
}

TEST(IntentProvider, ExemplarInputReturnsItsDocument) {
  auto backend = scripted();
  auto req = request("Buy a laptop for work under 1200 dollars");
  auto res = propose_goals(req, *backend);
  EXPECT_EQ(res.rounds_used, 1);
  EXPECT_EQ(res.raw_transcript.at(0).response, req.exemplars.at(4).document);
}

TEST(IntentProvider, MalformedOnceThenRepaired) {
  auto table = temp_table(Json{{"intents", Json::array({Json{{"pattern", "san francisco"},
                                                              {"document", "goals/sf_trip.json"},
                                                              {"malformed_first", 1}}})}});
  auto backend = register_backend({"scripted", table, {}});
  auto res = propose_goals(request(kFig2Text), *backend);
  EXPECT_EQ(res.rounds_used, 2);
  ASSERT_EQ(res.raw_transcript.size(), 2u);
  EXPECT_NE(res.raw_transcript[1].prompt.find("syntax-error"), std::string::npos);
  EXPECT_EQ(res.graph, scenario("clean").goals);
}

TEST(IntentProvider, AlwaysMalformedExhaustsRepairs) {
  auto table = temp_table(Json{{"intents", Json::array({Json{{"pattern", "san francisco"},
                                                              {"document", "goals/sf_trip.json"},
                                                              {"malformed_first", 99}}})}});
  auto backend = register_backend({"scripted", table, {}});
  try {
    propose_goals(request(kFig2Text), *backend);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "exhausted-repairs");
    EXPECT_EQ(e.detail().at("transcript").size(), 3u);
    EXPECT_EQ(e.detail().at("last_error").at("error"), "syntax-error");
  }
}

TEST(IntentProvider, OutOfScopeTextExhaustsRepairs) {
  auto backend = scripted();
  auto req = request("What dose of ibuprofen should I take?");
  req.max_repair_rounds = 2;
  try {
    propose_goals(req, *backend);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "exhausted-repairs");
    EXPECT_EQ(e.detail().at("transcript").size(), 2u);
  }
}

TEST(IntentProvider, ScriptedTranscriptIsDeterministic) {
  auto table = temp_table(Json{{"intents", Json::array({Json{{"pattern", "meeting"},
                                                              {"document", "goals/team_meeting.json"},
                                                              {"malformed_first", 2}}})}});
  auto a = register_backend({"scripted", table, {}});
  auto b = register_backend({"scripted", table, {}});
  auto ra = propose_goals(request("Organize a meeting"), *a);
  auto rb = propose_goals(request("Organize a meeting"), *b);
  EXPECT_EQ(ra.rounds_used, 3);
  EXPECT_EQ(jsonu::compact(to_json(ra.raw_transcript)), jsonu::compact(to_json(rb.raw_transcript)));
}

TEST(IntentProvider, RegisterBackendErrors) {
  auto backend = scripted();
  EXPECT_EQ(dynamic_cast<ScriptedBackend&>(*backend).size(), 5u);
  try {
    register_backend({"oracle", {}, {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "unknown-backend-kind");
  }
  try {
    register_backend({"external-endpoint", {}, env_of({{kEndpointEnv, "http://127.0.0.1:1/v1"}, {kModelEnv, "m"}})});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "missing-config");
    EXPECT_EQ(e.detail().at("variable"), kApiKeyEnv);
  }
  EXPECT_EQ(default_backend(kData + "/intents.json", env_of({}))->id(), "scripted");
}

TEST(IntentProvider, ExternalBackendAgainstStub) {
  httplib::Server server;
  std::string captured_body, captured_auth;
  std::string document = jsonu::read_text(kData + "/goals/sf_trip.json");
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    captured_body = req.body;
    captured_auth = req.get_header_value("Authorization");
    Json reply{{"choices", Json::array({Json{{"message", Json{{"role", "assistant"}, {"content", document}}}}})}};
    res.set_content(reply.dump(), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto env = env_of({{kEndpointEnv, "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions"},
                     {kApiKeyEnv, "secret"},
                     {kModelEnv, "test-model"}});
  auto backend = default_backend(kData + "/intents.json", env);
  auto req = request(kFig2Text);
  auto res = propose_goals(req, *backend);
  server.stop();
  t.join();

  EXPECT_EQ(res.provider_id, "external-endpoint");
  EXPECT_EQ(res.rounds_used, 1);
  EXPECT_EQ(res.graph, scenario("clean").goals);
  EXPECT_EQ(captured_auth, "Bearer secret");
  Json body = Json::parse(captured_body);
  EXPECT_EQ(body.at("model"), "test-model");
  EXPECT_EQ(body.at("temperature"), 0);
  std::string prompt;
  for (const auto& m : body.at("messages")) prompt += m.at("content").get<std::string>();
  EXPECT_NE(prompt.find(grammar_description()), std::string::npos);
  for (const auto& e : req.exemplars) {
    EXPECT_NE(prompt.find(e.input), std::string::npos) << e.input;
    EXPECT_NE(prompt.find(e.document), std::string::npos) << e.input;
  }
  EXPECT_NE(prompt.find(kFig2Text), std::string::npos);
}

TEST(IntentProvider, UnreachableEndpointIsUnavailable) {
  ExternalBackend backend(EndpointConfig{"http://127.0.0.1:1/v1", "k", "m"});
  try {
    propose_goals(request(kFig2Text), backend);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "provider-unavailable");
  }
}
