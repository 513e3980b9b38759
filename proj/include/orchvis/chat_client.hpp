#pragma once

#include <functional>
#include <string>
#include <vector>

#include "orchvis/error.hpp"

namespace orchvis {

struct ChatMessage {
  std::string role;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

Json to_json(const std::vector<ChatMessage>& messages);

struct EndpointConfig {
  std::string url;  // http://host[:port]/path
  std::string api_key;
  std::string model;
};

using EnvLookup = std::function<const char*(const char*)>;

inline constexpr const char* kEndpointEnv = "ORCHVIS_LLM_ENDPOINT";
inline constexpr const char* kApiKeyEnv = "ORCHVIS_LLM_API_KEY";
inline constexpr const char* kModelEnv = "ORCHVIS_LLM_MODEL";

// Throws missing-config naming the first absent variable.
EndpointConfig endpoint_config_from_env(const EnvLookup& env);
// True when none of the three variables is set.
bool endpoint_env_absent(const EnvLookup& env);

// Chat-completion style client: POST {model, messages, temperature: 0} and
// return choices[0].message.content. Network and protocol failures raise
// provider-unavailable.
class ChatClient {
 public:
  explicit ChatClient(EndpointConfig config);
  std::string complete(const std::vector<ChatMessage>& messages) const;
  const EndpointConfig& config() const { return config_; }

 private:
  EndpointConfig config_;
  std::string origin_;
  std::string path_;
};

}  // namespace orchvis
