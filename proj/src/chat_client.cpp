#include "orchvis/chat_client.hpp"

#include <regex>

#include "httplib.h"

namespace orchvis {

Json to_json(const std::vector<ChatMessage>& messages) {
  Json out = Json::array();
  for (const auto& m : messages) out.push_back(Json{{"role", m.role}, {"content", m.content}});
  return out;
}

EndpointConfig endpoint_config_from_env(const EnvLookup& env) {
  auto need = [&](const char* name) {
    const char* v = env(name);
    if (!v || !*v) {
      throw Error("missing-config", std::string("environment variable ") + name + " is not set",
                  Json{{"variable", name}});
    }
    return std::string(v);
  };
  EndpointConfig c;
  c.url = need(kEndpointEnv);
  c.api_key = need(kApiKeyEnv);
  c.model = need(kModelEnv);
  return c;
}

bool endpoint_env_absent(const EnvLookup& env) {
  for (const char* name : {kEndpointEnv, kApiKeyEnv, kModelEnv}) {
    const char* v = env(name);
    if (v && *v) return false;
  }
  return true;
}

ChatClient::ChatClient(EndpointConfig config) : config_(std::move(config)) {
  static const std::regex url_re(R"(^(http://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.url, m, url_re)) {
    throw Error("missing-config", "endpoint URL must look like http://host[:port]/path",
                Json{{"variable", kEndpointEnv}, {"url", config_.url}});
  }
  origin_ = m[1];
  path_ = m[2].matched ? std::string(m[2]) : "/";
}

std::string ChatClient::complete(const std::vector<ChatMessage>& messages) const {
  httplib::Client client(origin_);
  client.set_connection_timeout(5);
  client.set_read_timeout(60);
  httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};
  Json body{{"model", config_.model}, {"messages", to_json(messages)}, {"temperature", 0}};
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw Error("provider-unavailable", "endpoint unreachable: " + httplib::to_string(res.error()),
                Json{{"url", config_.url}});
  }
  if (res->status != 200) {
    throw Error("provider-unavailable", "endpoint returned HTTP " + std::to_string(res->status),
                Json{{"url", config_.url}, {"status", res->status}});
  }
  try {
    auto j = Json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception& e) {
    throw Error("provider-unavailable", std::string("malformed completion response: ") + e.what(),
                Json{{"url", config_.url}});
  }
}

}  // namespace orchvis
