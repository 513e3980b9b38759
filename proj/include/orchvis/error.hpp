#pragma once

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace orchvis {

using Json = nlohmann::json;

// Every failure the engine reports carries a stable, machine-readable code
// (e.g. "unknown-node", "type-mismatch") plus optional structured detail.
class Error : public std::runtime_error {
 public:
  Error(std::string code, std::string message, Json detail = Json::object())
      : std::runtime_error(message),
        code_(std::move(code)),
        detail_(std::move(detail)) {}

  const std::string& code() const noexcept { return code_; }
  const Json& detail() const noexcept { return detail_; }

  Json to_json() const {
    Json out = detail_.is_object() ? detail_ : Json::object();
    out["error"] = code_;
    out["message"] = what();
    return out;
  }

 private:
  std::string code_;
  Json detail_;
};

}  // namespace orchvis
